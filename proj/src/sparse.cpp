#include "lodfem/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "lodfem/errors.hpp"

namespace lodfem {

Vec SparseVec::to_dense(int dim) const {
  Vec out(static_cast<std::size_t>(dim), 0.0);
  for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] = val[k];
  return out;
}

SparseVec SparseVec::from_dense(const Vec& v, double drop_tol) {
  SparseVec out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > drop_tol) {
      out.idx.push_back(static_cast<int>(i));
      out.val.push_back(v[i]);
    }
  }
  return out;
}

double dot(const SparseVec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.idx.size(); ++k) s += a.val[k] * b[a.idx[k]];
  return s;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

SparseMatrix::SparseMatrix(int rows, int cols, std::vector<Triplet> triplets)
    : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw DomainError("negative matrix dimension");
  for (const auto& t : triplets) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw DomainError("triplet index out of range");
  }
  // stable: duplicates are summed in insertion order, keeping assembly
  // bitwise reproducible
  std::stable_sort(triplets.begin(), triplets.end(),
                   [](const Triplet& a, const Triplet& b) {
                     return a.row != b.row ? a.row < b.row : a.col < b.col;
                   });
  row_ptr_.assign(static_cast<std::size_t>(rows) + 1, 0);
  col_idx_.reserve(triplets.size());
  vals_.reserve(triplets.size());
  std::size_t k = 0;
  for (int r = 0; r < rows; ++r) {
    while (k < triplets.size() && triplets[k].row == r) {
      int c = triplets[k].col;
      double v = triplets[k].val;
      ++k;
      while (k < triplets.size() && triplets[k].row == r && triplets[k].col == c) {
        v += triplets[k].val;
        ++k;
      }
      col_idx_.push_back(c);
      vals_.push_back(v);
    }
    row_ptr_[r + 1] = col_idx_.size();
  }
}

SparseMatrix SparseMatrix::identity(int n) {
  std::vector<Triplet> t;
  t.reserve(n);
  for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return SparseMatrix(n, n, std::move(t));
}

std::span<const int> SparseMatrix::row_cols(int r) const {
  return {col_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
}

std::span<const double> SparseMatrix::row_vals(int r) const {
  return {vals_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
}

double SparseMatrix::coeff(int r, int c) const {
  auto cols = row_cols(r);
  auto it = std::lower_bound(cols.begin(), cols.end(), c);
  if (it == cols.end() || *it != c) return 0.0;
  return vals_[row_ptr_[r] + static_cast<std::size_t>(it - cols.begin())];
}

void SparseMatrix::apply(const double* x, double* y) const {
  for (int r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      s += vals_[k] * x[col_idx_[k]];
    y[r] = s;
  }
}

Vec SparseMatrix::apply(const Vec& x) const {
  if (static_cast<int>(x.size()) != cols_) throw DomainError("apply: dimension mismatch");
  Vec y(static_cast<std::size_t>(rows_));
  apply(x.data(), y.data());
  return y;
}

Vec SparseMatrix::apply_transpose(const Vec& x) const {
  if (static_cast<int>(x.size()) != rows_)
    throw DomainError("apply_transpose: dimension mismatch");
  Vec y(static_cast<std::size_t>(cols_), 0.0);
  for (int r = 0; r < rows_; ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      y[col_idx_[k]] += vals_[k] * xr;
  }
  return y;
}

Vec SparseMatrix::diagonal() const {
  Vec d(static_cast<std::size_t>(std::min(rows_, cols_)), 0.0);
  for (int r = 0; r < static_cast<int>(d.size()); ++r) d[r] = coeff(r, r);
  return d;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<Triplet> t;
  t.reserve(nnz());
  for (int r = 0; r < rows_; ++r)
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      t.push_back({col_idx_[k], r, vals_[k]});
  return SparseMatrix(cols_, rows_, std::move(t));
}

bool SparseMatrix::is_symmetric(double tol) const {
  if (rows_ != cols_) return false;
  for (int r = 0; r < rows_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const double a = vals_[k];
      const double b = coeff(col_idx_[k], r);
      if (std::abs(a - b) > tol * std::max(1.0, std::abs(a))) return false;
    }
  }
  return true;
}

SparseMatrix SparseMatrix::submatrix(std::span<const int> keep_rows,
                                     std::span<const int> keep_cols) const {
  std::vector<int> col_map(static_cast<std::size_t>(cols_), -1);
  for (std::size_t j = 0; j < keep_cols.size(); ++j) col_map[keep_cols[j]] = static_cast<int>(j);
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < keep_rows.size(); ++i) {
    const int r = keep_rows[i];
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const int c = col_map[col_idx_[k]];
      if (c >= 0) t.push_back({static_cast<int>(i), c, vals_[k]});
    }
  }
  return SparseMatrix(static_cast<int>(keep_rows.size()),
                      static_cast<int>(keep_cols.size()), std::move(t));
}

SparseMatrix add_scaled(const SparseMatrix& A, const SparseMatrix& B, double alpha) {
  if (A.rows() != B.rows() || A.cols() != B.cols())
    throw DomainError("add_scaled: dimension mismatch");
  std::vector<Triplet> t;
  t.reserve(A.nnz() + B.nnz());
  for (int r = 0; r < A.rows(); ++r) {
    auto ac = A.row_cols(r);
    auto av = A.row_vals(r);
    for (std::size_t k = 0; k < ac.size(); ++k) t.push_back({r, ac[k], av[k]});
    auto bc = B.row_cols(r);
    auto bv = B.row_vals(r);
    for (std::size_t k = 0; k < bc.size(); ++k) t.push_back({r, bc[k], alpha * bv[k]});
  }
  return SparseMatrix(A.rows(), A.cols(), std::move(t));
}

}  // namespace lodfem
