#pragma once

#include <functional>
#include <memory>
#include <utility>

#include "spc/core/errors.hpp"
#include "spc/core/sparse_matrix.hpp"
#include "spc/core/types.hpp"

namespace spc {

/// @brief Matrix-free real operator with its transpose.
///
/// Both real and complex vectors are accepted; a complex vector is
/// mapped in a single pass rather than split into real and imaginary parts.
class LinearOperator {
public:
    using RealMap = std::function<Vec(const Vec&)>;
    using ComplexMap = std::function<CVec(const CVec&)>;

    LinearOperator() = default;

    LinearOperator(Index dim_in, Index dim_out, RealMap apply, RealMap apply_t, ComplexMap capply,
                   ComplexMap capply_t)
        : in_(dim_in),
          out_(dim_out),
          apply_(std::move(apply)),
          apply_t_(std::move(apply_t)),
          capply_(std::move(capply)),
          capply_t_(std::move(capply_t)) {}

    /// Build from two generic callables `f(x)` and `ft(x)` that accept any
    /// Eigen column vector of double or complex<double>.
    template <class F, class FT>
    static LinearOperator from_generic(Index dim_in, Index dim_out, F f, FT ft) {
        return LinearOperator(
            dim_in, dim_out, [f](const Vec& x) -> Vec { return f(x); },
            [ft](const Vec& x) -> Vec { return ft(x); }, [f](const CVec& x) -> CVec { return f(x); },
            [ft](const CVec& x) -> CVec { return ft(x); });
    }

    Index dim_in() const { return in_; }
    Index dim_out() const { return out_; }

    Vec apply(const Vec& v) const {
        check(v.size(), in_, "apply");
        return apply_(v);
    }
    CVec apply(const CVec& v) const {
        check(v.size(), in_, "apply");
        return capply_(v);
    }
    Vec apply_transpose(const Vec& v) const {
        check(v.size(), out_, "apply_transpose");
        return apply_t_(v);
    }
    CVec apply_transpose(const CVec& v) const {
        check(v.size(), out_, "apply_transpose");
        return capply_t_(v);
    }

    LinearOperator transposed() const { return LinearOperator(out_, in_, apply_t_, apply_, capply_t_, capply_); }

    LinearOperator scaled(double c) const {
        auto a = apply_, at = apply_t_;
        auto ca = capply_, cat = capply_t_;
        return LinearOperator(
            in_, out_, [a, c](const Vec& x) -> Vec { return c * a(x); },
            [at, c](const Vec& x) -> Vec { return c * at(x); }, [ca, c](const CVec& x) -> CVec { return c * ca(x); },
            [cat, c](const CVec& x) -> CVec { return c * cat(x); });
    }

    /// Dense matrix of the operator, built column by column (tests only).
    Mat to_dense() const {
        Mat m(out_, in_);
        for (Index j = 0; j < in_; ++j) m.col(j) = apply(Vec(Vec::Unit(in_, j)));
        return m;
    }

private:
    static void check(Index got, Index want, const char* where) {
        if (got != want)
            throw ContractViolation(std::string(where) + ": vector length " + std::to_string(got) +
                                    " != " + std::to_string(want));
    }

    Index in_ = 0;
    Index out_ = 0;
    RealMap apply_, apply_t_;
    ComplexMap capply_, capply_t_;
};

inline LinearOperator as_operator(std::shared_ptr<const SparseMatrix> m) {
    return LinearOperator::from_generic(
        m->cols(), m->rows(), [m](const auto& x) { return m->matvec(x); },
        [m](const auto& x) { return m->matvec_transpose(x); });
}

inline LinearOperator as_operator(const SparseMatrix& m) {
    return as_operator(std::make_shared<const SparseMatrix>(m));
}

inline LinearOperator as_operator(const Mat& m) {
    auto p = std::make_shared<const Mat>(m);
    return LinearOperator::from_generic(
        m.cols(), m.rows(),
        [p](const auto& x) {
            using V = std::decay_t<decltype(x)>;
            return V(p->template cast<typename V::Scalar>() * x);
        },
        [p](const auto& x) {
            using V = std::decay_t<decltype(x)>;
            return V(p->transpose().template cast<typename V::Scalar>() * x);
        });
}

/// b ∘ a, i.e. v ↦ b(a(v)).
inline LinearOperator compose(const LinearOperator& b, const LinearOperator& a) {
    require(a.dim_out() == b.dim_in(), "compose: dimension mismatch");
    return LinearOperator::from_generic(
        a.dim_in(), b.dim_out(), [a, b](const auto& x) { return b.apply(a.apply(x)); },
        [a, b](const auto& x) { return a.apply_transpose(b.apply_transpose(x)); });
}

}  // namespace spc
