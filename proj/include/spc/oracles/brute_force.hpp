#pragma once

#include "spc/completion/completion.hpp"

namespace spc {

/// The completion pipeline with every eigensolve done densely; small sizes only.
inline CompletedMatrix brute_force_complete(const SparseMatrix& T, double d, Method method, CompleteOptions opt = {}) {
    require(T.rows() <= 300 && T.cols() <= 300, "brute_force_complete: m, n <= 300");
    opt.backend = dense_backend();
    return complete(T, d, method, opt);
}

}  // namespace spc
