#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lodfem {

using Vec = std::vector<double>;

struct Triplet {
  int row;
  int col;
  double val;
};

/// Sparse vector over a fixed index space; indices strictly increasing.
struct SparseVec {
  std::vector<int> idx;
  std::vector<double> val;

  bool empty() const { return idx.empty(); }
  std::size_t nnz() const { return idx.size(); }

  /// Scatter into a dense vector of the ambient dimension.
  Vec to_dense(int dim) const;
  static SparseVec from_dense(const Vec& v, double drop_tol = 0.0);
};

double dot(const SparseVec& a, const Vec& b);
double dot(const Vec& a, const Vec& b);
void axpy(double alpha, const Vec& x, Vec& y);  // y += alpha*x

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row; duplicate triplets are summed on construction.
class SparseMatrix {
public:
  SparseMatrix() = default;
  SparseMatrix(int rows, int cols, std::vector<Triplet> triplets);

  static SparseMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return vals_.size(); }

  std::span<const int> row_cols(int r) const;
  std::span<const double> row_vals(int r) const;

  /// Entry lookup by binary search; zero if not stored.
  double coeff(int r, int c) const;

  Vec apply(const Vec& x) const;           // A x
  Vec apply_transpose(const Vec& x) const; // A^T x
  void apply(const double* x, double* y) const;

  Vec diagonal() const;
  SparseMatrix transpose() const;

  /// |a_ij - a_ji| <= tol * max(1, |a_ij|) for all stored entries.
  bool is_symmetric(double tol = 1e-12) const;

  /// Keep the given rows/columns (indices into the old numbering, strictly
  /// increasing); the result is reindexed by position.
  SparseMatrix submatrix(std::span<const int> keep_rows,
                         std::span<const int> keep_cols) const;

private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<int> col_idx_;
  std::vector<double> vals_;
};

/// A + alpha * B (dimensions must agree).
SparseMatrix add_scaled(const SparseMatrix& A, const SparseMatrix& B,
                        double alpha);

}  // namespace lodfem
