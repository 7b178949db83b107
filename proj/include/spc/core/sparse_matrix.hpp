#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "spc/core/errors.hpp"
#include "spc/core/types.hpp"

namespace spc {

struct Triplet {
    Index row;
    Index col;
    double value;
};

/// @brief Immutable real sparse matrix in compressed row form.
///
/// Entries are kept sorted row-major; the triplet view and the CSR arrays
/// describe the same storage order, which is also the summation order of
/// every product.
class SparseMatrix {
public:
    SparseMatrix() = default;

    SparseMatrix(Index nrows, Index ncols, std::vector<Triplet> entries) : nrows_(nrows), ncols_(ncols) {
        require(nrows >= 0 && ncols >= 0, "SparseMatrix: negative dimension");
        std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        row_ptr_.assign(static_cast<std::size_t>(nrows) + 1, 0);
        col_.reserve(entries.size());
        val_.reserve(entries.size());
        for (std::size_t k = 0; k < entries.size(); ++k) {
            const auto& t = entries[k];
            if (t.row < 0 || t.row >= nrows || t.col < 0 || t.col >= ncols)
                throw ContractViolation("SparseMatrix: entry (" + std::to_string(t.row) + "," +
                                        std::to_string(t.col) + ") out of range");
            if (k > 0 && entries[k - 1].row == t.row && entries[k - 1].col == t.col)
                throw ContractViolation("SparseMatrix: duplicate entry (" + std::to_string(t.row) + "," +
                                        std::to_string(t.col) + ")");
            ++row_ptr_[static_cast<std::size_t>(t.row) + 1];
            col_.push_back(t.col);
            val_.push_back(t.value);
        }
        for (Index r = 0; r < nrows; ++r) row_ptr_[r + 1] += row_ptr_[r];
    }

    static SparseMatrix from_dense(const Mat& m) {
        std::vector<Triplet> t;
        for (Index i = 0; i < m.rows(); ++i)
            for (Index j = 0; j < m.cols(); ++j)
                if (m(i, j) != 0.0) t.push_back({i, j, m(i, j)});
        return SparseMatrix(m.rows(), m.cols(), std::move(t));
    }

    Index rows() const { return nrows_; }
    Index cols() const { return ncols_; }
    Index nnz() const { return static_cast<Index>(val_.size()); }

    const std::vector<Index>& row_ptr() const { return row_ptr_; }
    const std::vector<Index>& col_index() const { return col_; }
    const std::vector<double>& values() const { return val_; }

    std::vector<Triplet> triplets() const {
        std::vector<Triplet> t;
        t.reserve(val_.size());
        for (Index r = 0; r < nrows_; ++r)
            for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) t.push_back({r, col_[k], val_[k]});
        return t;
    }

    /// Stored value at (r, c), or 0 when absent.
    double coeff(Index r, Index c) const {
        auto b = col_.begin() + row_ptr_[r], e = col_.begin() + row_ptr_[r + 1];
        auto it = std::lower_bound(b, e, c);
        return (it != e && *it == c) ? val_[static_cast<std::size_t>(it - col_.begin())] : 0.0;
    }

    bool contains(Index r, Index c) const {
        auto b = col_.begin() + row_ptr_[r], e = col_.begin() + row_ptr_[r + 1];
        return std::binary_search(b, e, c);
    }

    template <class Scalar>
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> matvec(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& v) const {
        if (v.size() != ncols_)
            throw ContractViolation("matvec: vector length " + std::to_string(v.size()) + " != ncols " +
                                    std::to_string(ncols_));
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y(nrows_);
        for (Index r = 0; r < nrows_; ++r) {
            Scalar acc(0);
            for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += val_[k] * v[col_[k]];
            y[r] = acc;
        }
        return y;
    }

    template <class Scalar>
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> matvec_transpose(
        const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& v) const {
        if (v.size() != nrows_)
            throw ContractViolation("matvec_transpose: vector length " + std::to_string(v.size()) +
                                    " != nrows " + std::to_string(nrows_));
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(ncols_);
        for (Index r = 0; r < nrows_; ++r) {
            const Scalar vr = v[r];
            for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) y[col_[k]] += val_[k] * vr;
        }
        return y;
    }

    Mat to_dense() const {
        require(nrows_ * ncols_ <= Index(64) * 1024 * 1024, "to_dense: matrix too large");
        Mat m = Mat::Zero(nrows_, ncols_);
        for (Index r = 0; r < nrows_; ++r)
            for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) m(r, col_[k]) = val_[k];
        return m;
    }

    SparseMatrix scaled(double c) const {
        SparseMatrix s = *this;
        for (auto& v : s.val_) v *= c;
        return s;
    }

    SparseMatrix transposed() const {
        std::vector<Triplet> t;
        t.reserve(val_.size());
        for (Index r = 0; r < nrows_; ++r)
            for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) t.push_back({col_[k], r, val_[k]});
        return SparseMatrix(ncols_, nrows_, std::move(t));
    }

    bool is_symmetric_pattern() const {
        if (nrows_ != ncols_) return false;
        for (Index r = 0; r < nrows_; ++r)
            for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
                if (!contains(col_[k], r)) return false;
        return true;
    }

    friend bool operator==(const SparseMatrix& a, const SparseMatrix& b) {
        return a.nrows_ == b.nrows_ && a.ncols_ == b.ncols_ && a.row_ptr_ == b.row_ptr_ && a.col_ == b.col_ &&
               a.val_ == b.val_;
    }

private:
    Index nrows_ = 0;
    Index ncols_ = 0;
    std::vector<Index> row_ptr_{0};
    std::vector<Index> col_;
    std::vector<double> val_;
};

}  // namespace spc
