#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

namespace spc {

using Index = Eigen::Index;
using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

}  // namespace spc
