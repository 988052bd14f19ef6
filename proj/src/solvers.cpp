#include "lodfem/solvers.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <sstream>

#include "lodfem/errors.hpp"

namespace lodfem {

namespace {

std::string report_str(const SolveReport& r) {
  std::ostringstream os;
  os << "iterations=" << r.iterations << " relative_residual=" << r.relative_residual;
  return os.str();
}

}  // namespace

std::pair<Vec, SolveReport> cg_solve(const SparseMatrix& A, const Vec& b, double tol,
                                     int max_iter,
                                     const std::function<void(const Vec&)>& on_iterate) {
  const int n = A.rows();
  if (A.cols() != n) throw DomainError("cg_solve: matrix not square");
  if (static_cast<int>(b.size()) != n) throw DomainError("cg_solve: rhs dimension mismatch");
  if (!(tol > 0.0)) throw DomainError("cg_solve: tol must be positive");
  if (max_iter < 0) max_iter = 20 * n + 200;

  SolveReport rep;
  Vec x(n, 0.0);
  const double b_norm = std::sqrt(dot(b, b));
  if (b_norm == 0.0) {
    rep.converged = true;
    return {x, rep};
  }

  Vec inv_diag = A.diagonal();
  for (double& d : inv_diag) {
    if (!(d > 0.0)) throw SolveError("cg_solve: nonpositive diagonal entry, matrix not SPD");
    d = 1.0 / d;
  }

  Vec r = b;  // x = 0
  Vec z(n), p(n), Ap(n);
  for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = dot(r, z);
  double res_norm = b_norm;

  for (int it = 1; it <= max_iter; ++it) {
    A.apply(p.data(), Ap.data());
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) throw SolveError("cg_solve: curvature <= 0, matrix not SPD");
    const double alpha = rz / pAp;
    for (int i = 0; i < n; ++i) x[i] += alpha * p[i];
    for (int i = 0; i < n; ++i) r[i] -= alpha * Ap[i];
    if (on_iterate) on_iterate(x);

    res_norm = std::sqrt(dot(r, r));
    rep.iterations = it;
    rep.relative_residual = res_norm / b_norm;
    if (res_norm <= tol * b_norm) {
      rep.converged = true;
      return {x, rep};
    }

    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }

  throw SolveError("cg_solve: no convergence within " + std::to_string(max_iter) +
                   " iterations (" + report_str(rep) + ")");
}

namespace {

// drop all-zero constraint rows; returns kept row indices
SparseMatrix prune_zero_rows(const SparseMatrix& C) {
  std::vector<int> keep;
  for (int r = 0; r < C.rows(); ++r) {
    bool nonzero = false;
    for (double v : C.row_vals(r)) {
      if (v != 0.0) {
        nonzero = true;
        break;
      }
    }
    if (nonzero) keep.push_back(r);
  }
  if (static_cast<int>(keep.size()) == C.rows()) return C;
  std::vector<int> all_cols(C.cols());
  for (int c = 0; c < C.cols(); ++c) all_cols[c] = c;
  return C.submatrix(keep, all_cols);
}

}  // namespace

struct SaddleContext::Impl {
  SparseMatrix A;
  SparseMatrix C;
  SaddleOptions opts;
  int n = 0;
  int m = 0;
  bool dense = false;

  // dense path
  Eigen::PartialPivLU<Eigen::MatrixXd> kkt_lu;

  // Schur path: Y = A^-1 C^T, S = C Y factored
  std::vector<Vec> Y;
  Eigen::LLT<Eigen::MatrixXd> schur_llt;

  Vec solve_kkt_dense(const Vec& rhs_top) const {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
    for (int i = 0; i < n; ++i) rhs[i] = rhs_top[i];
    Eigen::VectorXd sol = kkt_lu.solve(rhs);
    // one refinement pass keeps the constraint residual near roundoff
    Eigen::VectorXd resid = Eigen::VectorXd::Zero(n + m);
    {
      Vec w(sol.data(), sol.data() + n);
      Vec lam(sol.data() + n, sol.data() + n + m);
      Vec Aw = A.apply(w);
      Vec Ctl = C.apply_transpose(lam);
      Vec Cw = C.apply(w);
      for (int i = 0; i < n; ++i) resid[i] = rhs_top[i] - Aw[i] - Ctl[i];
      for (int j = 0; j < m; ++j) resid[n + j] = -Cw[j];
    }
    sol += kkt_lu.solve(resid);
    return Vec(sol.data(), sol.data() + n);
  }

  Vec solve_schur(const Vec& b) const {
    auto [w0, rep0] = cg_solve(A, b, opts.tol, opts.max_iter);
    (void)rep0;
    if (m == 0) return w0;
    Eigen::VectorXd cw0(m);
    {
      Vec t = C.apply(w0);
      for (int j = 0; j < m; ++j) cw0[j] = t[j];
    }
    Eigen::VectorXd lambda = schur_llt.solve(cw0);
    Vec w = w0;
    for (int j = 0; j < m; ++j)
      if (lambda[j] != 0.0) axpy(-lambda[j], Y[j], w);
    return w;
  }
};

SaddleContext::SaddleContext(const SparseMatrix& A, const SparseMatrix& C,
                             const SaddleOptions& opts)
    : impl_(std::make_unique<Impl>()) {
  impl_->A = A;
  impl_->C = prune_zero_rows(C);
  impl_->opts = opts;
  impl_->n = A.rows();
  impl_->m = impl_->C.rows();
  const int n = impl_->n, m = impl_->m;
  if (A.cols() != n) throw DomainError("saddle_solve: A not square");
  if (impl_->C.cols() != n && m > 0)
    throw DomainError("saddle_solve: constraint column count mismatch");

  impl_->dense = (n + m <= opts.dense_threshold);
  if (impl_->dense) {
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
    for (int r = 0; r < n; ++r) {
      auto cols = A.row_cols(r);
      auto vals = A.row_vals(r);
      for (std::size_t k = 0; k < cols.size(); ++k) kkt(r, cols[k]) = vals[k];
    }
    for (int r = 0; r < m; ++r) {
      auto cols = impl_->C.row_cols(r);
      auto vals = impl_->C.row_vals(r);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        kkt(n + r, cols[k]) = vals[k];
        kkt(cols[k], n + r) = vals[k];
      }
    }
    impl_->kkt_lu.compute(kkt);
    // PartialPivLU has no rank query; a singular KKT shows up as a
    // non-finite or wildly infeasible solution, checked per solve
  } else {
    impl_->Y.resize(m);
    Eigen::MatrixXd S(m, m);
    for (int j = 0; j < m; ++j) {
      Vec cj(n, 0.0);
      auto cols = impl_->C.row_cols(j);
      auto vals = impl_->C.row_vals(j);
      for (std::size_t k = 0; k < cols.size(); ++k) cj[cols[k]] = vals[k];
      auto [yj, rep] = cg_solve(impl_->A, cj, opts.tol, opts.max_iter);
      (void)rep;
      impl_->Y[j] = std::move(yj);
    }
    for (int j = 0; j < m; ++j) {
      Vec cy = impl_->C.apply(impl_->Y[j]);
      for (int i = 0; i < m; ++i) S(i, j) = cy[i];
    }
    // symmetrize roundoff before factoring
    Eigen::MatrixXd Ssym = 0.5 * (S + S.transpose());
    impl_->schur_llt.compute(Ssym);
    if (impl_->schur_llt.info() != Eigen::Success)
      throw SolveError("saddle_solve: Schur complement not SPD, constraints rank-deficient");
  }
}

SaddleContext::~SaddleContext() = default;
SaddleContext::SaddleContext(SaddleContext&&) noexcept = default;
SaddleContext& SaddleContext::operator=(SaddleContext&&) noexcept = default;

Vec SaddleContext::solve(const Vec& b) const {
  const Impl& im = *impl_;
  if (static_cast<int>(b.size()) != im.n)
    throw DomainError("saddle_solve: rhs dimension mismatch");
  Vec w = im.dense ? im.solve_kkt_dense(b) : im.solve_schur(b);

  for (double v : w)
    if (!std::isfinite(v)) throw SolveError("saddle_solve: non-finite solution (singular KKT)");

  if (im.m > 0) {
    double winf = 0.0;
    for (double v : w) winf = std::max(winf, std::abs(v));
    Vec cw = im.C.apply(w);
    double cinf = 0.0;
    for (double v : cw) cinf = std::max(cinf, std::abs(v));
    if (cinf > 1e-7 * std::max(winf, 1.0))
      throw SolveError("saddle_solve: constraint residual " + std::to_string(cinf) +
                       " too large (rank-deficient constraints?)");
  }
  return w;
}

Vec saddle_solve(const SparseMatrix& A, const SparseMatrix& C, const Vec& b,
                 const SaddleOptions& opts) {
  return SaddleContext(A, C, opts).solve(b);
}

double l2_norm(const SparseMatrix& M, const Vec& v) {
  if (static_cast<int>(v.size()) != M.rows() || M.rows() != M.cols())
    throw DomainError("l2_norm: dimension mismatch");
  const Vec Mv = M.apply(v);
  const double q = dot(v, Mv);
  return std::sqrt(std::max(q, 0.0));
}

double energy_norm(const SparseMatrix& K, const Vec& v) {
  if (static_cast<int>(v.size()) != K.rows() || K.rows() != K.cols())
    throw DomainError("energy_norm: dimension mismatch");
  const Vec Kv = K.apply(v);
  const double q = dot(v, Kv);
  return std::sqrt(std::max(q, 0.0));
}

}  // namespace lodfem
