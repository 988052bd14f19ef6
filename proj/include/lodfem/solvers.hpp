#pragma once

#include <functional>
#include <memory>
#include <utility>

#include "lodfem/sparse.hpp"

namespace lodfem {

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Jacobi-preconditioned conjugate gradients for SPD systems. Returns x with
/// ||b - Ax|| <= tol * ||b||; throws SolveError (carrying the report in the
/// message) if max_iter is exhausted first. max_iter < 0 selects 20*n + 200.
/// on_iterate, when set, observes every iterate (used by property tests).
std::pair<Vec, SolveReport> cg_solve(
    const SparseMatrix& A, const Vec& b, double tol, int max_iter = -1,
    const std::function<void(const Vec&)>& on_iterate = nullptr);

struct SaddleOptions {
  double tol = 1e-10;       // inner/outer relative tolerance
  int dense_threshold = 2000;  // full KKT factorization below this total dim
  int max_iter = -1;
};

/// Solve A w + C^T lambda = b, C w = 0 with A SPD on its index set. Rows of C
/// that are identically zero are pruned; a rank-deficient remainder is an
/// error. Small systems go through a dense KKT factorization, larger ones
/// through a Schur complement on lambda with CG inner solves.
Vec saddle_solve(const SparseMatrix& A, const SparseMatrix& C, const Vec& b,
                 const SaddleOptions& opts = {});

/// Reusable factorization of the saddle system for one patch, shared by all
/// right-hand sides on that patch.
class SaddleContext {
public:
  SaddleContext(const SparseMatrix& A, const SparseMatrix& C, const SaddleOptions& opts);
  ~SaddleContext();
  SaddleContext(SaddleContext&&) noexcept;
  SaddleContext& operator=(SaddleContext&&) noexcept;
  SaddleContext(const SaddleContext&) = delete;
  SaddleContext& operator=(const SaddleContext&) = delete;

  Vec solve(const Vec& b) const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

double l2_norm(const SparseMatrix& M, const Vec& v);
double energy_norm(const SparseMatrix& K, const Vec& v);

}  // namespace lodfem
