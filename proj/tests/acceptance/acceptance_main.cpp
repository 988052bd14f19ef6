// Acceptance suite: one check per criterion, each printing a single
// PASS/FAIL line (plus context rows). Run with a list of criterion numbers,
// or no arguments for all.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lodfem/assembly.hpp"
#include "lodfem/coeff.hpp"
#include "lodfem/harness.hpp"
#include "lodfem/lod.hpp"
#include "lodfem/mesh.hpp"
#include "lodfem/solvers.hpp"
#include "lodfem/timestep.hpp"
#include "../unit/test_util.hpp"

using namespace lodfem;

namespace {

bool check(bool ok, const char* what) {
  if (!ok) std::printf("    failed: %s\n", what);
  return ok;
}

ExperimentConfig quick_config(ExperimentConfig::Problem problem) {
  ExperimentConfig cfg;
  cfg.problem = problem;
  cfg.fine_level = 6;
  cfg.coarse_levels = {2, 3, 4};
  cfg.k_schedule = {1, 2, 2};
  cfg.tau = 0.01;
  cfg.n_steps = 100;
  return cfg;
}

void print_rows(const ConvergenceReport& rep) {
  for (const auto& r : rep.rows)
    std::printf("    level %d k=%d: rel_err_lod=%.4e rel_err_p1=%.4e\n", r.level, r.k,
                r.rel_err_lod, r.rel_err_p1);
  std::printf("    order_lod=%.3f order_p1=%.3f\n", rep.fitted_order_lod, rep.fitted_order_p1);
}

// 1: constant coefficient, both methods at least order 1.8
bool criterion1() {
  ExperimentConfig cfg = quick_config(ExperimentConfig::Problem::Linear);
  cfg.coeff.kind = CoeffSpec::Kind::Constant;
  cfg.coeff.value = 1.0;
  const ConvergenceReport rep = run_experiment(cfg);
  print_rows(rep);
  bool ok = true;
  ok &= check(rep.fitted_order_lod >= 1.8, "fitted_order_lod >= 1.8");
  ok &= check(rep.fitted_order_p1 >= 1.8, "fitted_order_p1 >= 1.8");
  return ok;
}

// 2: multiscale coefficient, LOD order and margin over P1
bool criterion2() {
  ExperimentConfig cfg = quick_config(ExperimentConfig::Problem::Linear);
  cfg.coeff.kind = CoeffSpec::Kind::Random;
  cfg.coeff.grid_level = 4;
  cfg.coeff.lo = 1e-1;
  cfg.coeff.hi = 1e5;
  cfg.coeff.seed = 1234;
  const ConvergenceReport rep = run_experiment(cfg);
  print_rows(rep);
  bool ok = check(rep.fitted_order_lod >= 1.7, "fitted_order_lod >= 1.7");
  for (const auto& r : rep.rows)
    ok &= check(r.rel_err_lod < r.rel_err_p1, "rel_err_lod < rel_err_p1 at every level");
  ok &= check(rep.rows.front().rel_err_lod <= 0.2 * rep.rows.front().rel_err_p1,
              "rel_err_lod <= 0.2 * rel_err_p1 at the coarsest level");
  return ok;
}

// 3: semilinear Allen-Cahn convergence
bool criterion3() {
  ExperimentConfig cfg = quick_config(ExperimentConfig::Problem::Semilinear);
  cfg.coeff.kind = CoeffSpec::Kind::Random;
  cfg.coeff.grid_level = 4;
  cfg.coeff.lo = 1e-3;
  cfg.coeff.hi = 1.0;
  cfg.coeff.seed = 1234;
  const ConvergenceReport rep = run_experiment(cfg);
  print_rows(rep);
  return check(rep.fitted_order_lod >= 1.7, "fitted_order_lod >= 1.7");
}

// 4: corrector exponential decay on pair (3,6), contrast-1e6 field
bool criterion4() {
  const MeshPair pair = build_pair(3, 6);
  const CoeffField field = random_field(4, 1e-1, 1e5, 1234);
  const FemOperators fem = assemble(pair.fine, field);
  const ClementMatrix clem = clement(pair, fem);
  const int node = pair.coarse.node_at(1, 1);  // interior node nearest the corner

  const Vec global = node_corrector(pair, fem, clem, field, node, saturation_k(pair.coarse));
  std::vector<double> err;
  for (int k = 1; k <= 5; ++k) {
    const Vec local = node_corrector(pair, fem, clem, field, node, k);
    Vec diff = global;
    axpy(-1.0, local, diff);
    err.push_back(energy_norm(fem.stiffness, diff));
    if (k == 1)
      std::printf("    k=1 energy_err=%.4e\n", err.back());
    else
      std::printf("    k=%d energy_err=%.4e ratio=%.3f\n", k, err.back(), err[k - 1] / err[k - 2]);
  }
  bool ok = true;
  for (std::size_t i = 1; i < err.size(); ++i)
    ok &= check(err[i] < err[i - 1], "energy error decreases with k");
  for (std::size_t i = 2; i < err.size(); ++i)
    ok &= check(err[i] <= 0.9 * err[i - 1], "per-step decay ratio <= 0.9 for k >= 2");
  return ok;
}

// independently assembled global corrector, solved by the test's own dense
// Gaussian elimination
Vec oracle_global_corrector(const MeshPair& pair, const FemOperators& fem,
                            const ClementMatrix& clem, const CoeffField& field, int element,
                            int vertex) {
  const auto A = testutil::to_dense(fem.stiffness);
  const auto C = testutil::to_dense(clem.matrix);

  Vec rhs(pair.fine.interior_count(), 0.0);
  const SparseMatrix P = prolongation_full(pair);
  const int xc = pair.coarse.elements[element][vertex];
  for (int fe : pair.child_map[element]) {
    const auto& el = pair.fine.elements[fe];
    const auto& p0 = pair.fine.nodes[el[0]];
    const auto& p1 = pair.fine.nodes[el[1]];
    const auto& p2 = pair.fine.nodes[el[2]];
    const double b[3] = {p1[1] - p2[1], p2[1] - p0[1], p0[1] - p1[1]};
    const double cg[3] = {p2[0] - p1[0], p0[0] - p2[0], p1[0] - p0[0]};
    const double area = pair.fine.element_area(fe);
    const auto mid = pair.fine.centroid(fe);
    const double a = value_at(field, mid[0], mid[1]);
    for (int i = 0; i < 3; ++i) {
      const int pos = pair.fine.interior_index[el[i]];
      if (pos < 0) continue;
      for (int j = 0; j < 3; ++j)
        rhs[pos] += a * (b[i] * b[j] + cg[i] * cg[j]) / (4.0 * area) * P.coeff(el[j], xc);
    }
  }
  return testutil::dense_kkt_solve(A, C, rhs);
}

// 5: localized correctors at k >= 8 equal the global ones on pair (2,4)
bool criterion5() {
  const MeshPair pair = build_pair(2, 4);
  const CoeffField field = random_field(2, 1e-1, 1e1, 7);
  const FemOperators fem = assemble(pair.fine, field);
  const ClementMatrix clem = clement(pair, fem);
  const CorrectorSet local = compute_correctors(pair, fem, clem, field, 8);

  bool ok = true;
  double worst = 0.0;
  for (int e = 0; e < pair.coarse.element_count(); ++e) {
    for (int v = 0; v < 3; ++v) {
      if (!pair.coarse.is_interior(pair.coarse.elements[e][v])) continue;
      const Vec oracle = oracle_global_corrector(pair, fem, clem, field, e, v);
      Vec diff = local.element_correctors[e][v].to_dense(pair.fine.interior_count());
      axpy(-1.0, oracle, diff);
      const double gap = energy_norm(fem.stiffness, diff);
      worst = std::max(worst, gap);
      ok &= gap <= 1e-8;
    }
  }
  std::printf("    worst energy gap localized-vs-global: %.3e\n", worst);
  return check(ok, "localized == global correctors to 1e-8 per element and vertex");
}

// 6: H^2 scaling of the saturated projection error for a fixed smooth v
bool criterion6() {
  const TriMesh fine = build_mesh(6);
  const CoeffField field = random_field(3, 1e-1, 1e1, 11);
  const FemOperators fem = assemble(fine, field);
  const Vec v = restrict_interior(
      fine, interpolate(fine, [](double x, double y) { return x * (1 - x) * y * (1 - y); }));

  const Vec Kv = fem.stiffness.apply(v);
  const Vec z = cg_solve(fem.mass, Kv, 1e-12).first;
  const double ahv = std::sqrt(dot(z, Kv));  // L2 norm of the discrete operator image

  double rmin = 1e300, rmax = 0.0;
  for (int level : {2, 3, 4}) {
    const MeshPair pair = build_pair(level, 6);
    const ClementMatrix clem = clement(pair, fem);
    const CorrectorSet set = compute_correctors(pair, fem, clem, field, saturation_k(pair.coarse));
    const MultiscaleSpace space = build_space(set, pair, fem);
    const Vec pv = ms_ritz_project(space, fem, v);
    Vec diff = v;
    axpy(-1.0, pv, diff);
    const double H = std::sqrt(2.0) * std::ldexp(1.0, -level);
    const double ratio = l2_norm(fem.mass, diff) / (H * H * ahv);
    std::printf("    level %d: ratio err/(H^2 |Av|) = %.4e\n", level, ratio);
    rmin = std::min(rmin, ratio);
    rmax = std::max(rmax, ratio);
  }
  std::printf("    spread %.3f\n", rmax / rmin);
  return check(rmax < 4.0 * rmin, "ratio varies by less than a factor of 4");
}

// 7: invariant bundle
bool criterion7() {
  bool ok = true;

  {  // V^f membership of all correctors
    const MeshPair pair = build_pair(2, 4);
    const CoeffField field = random_field(2, 1e-1, 1e5, 42);
    const FemOperators fem = assemble(pair.fine, field);
    const ClementMatrix clem = clement(pair, fem);
    const CorrectorSet set = compute_correctors(pair, fem, clem, field, 1);
    double worst = 0.0;
    for (const auto& slots : set.element_correctors)
      for (const auto& q : slots) {
        if (q.empty()) continue;
        worst = std::max(worst,
                         testutil::max_abs(clem.matrix.apply(q.to_dense(pair.fine.interior_count()))));
      }
    std::printf("    max interpolation residual over correctors: %.3e\n", worst);
    ok &= check(worst <= 1e-9, "kernel membership (residual <= 1e-9)");

    // Galerkin orthogonality of the multiscale Ritz projection
    const CorrectorSet set2 = compute_correctors(pair, fem, clem, field, 2);
    const MultiscaleSpace space = build_space(set2, pair, fem);
    testutil::Rng rng(77);
    const Vec v = testutil::random_vec(rng, space.fine_dim);
    Vec diff = v;
    axpy(-1.0, ms_ritz_project(space, fem, v), diff);
    const Vec gal = restrict_to_space(space, fem.stiffness.apply(diff));
    const double rel = testutil::max_abs(gal) / testutil::max_abs(fem.stiffness.apply(v));
    std::printf("    Galerkin orthogonality residual: %.3e\n", rel);
    ok &= check(rel <= 1e-8, "Galerkin orthogonality (<= 1e-8 relative)");
  }

  {  // M-norm contraction of the homogeneous scheme, three random SPD systems
    testutil::Rng rng(5);
    for (int trial = 0; trial < 3; ++trial) {
      const int n = 7;
      testutil::Dense r(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) r(i, j) = rng.uniform(-1.0, 1.0);
      std::vector<Triplet> kt, mt;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double sk = (i == j) ? n : 0.0, sm = (i == j) ? n : 0.0;
          for (int l = 0; l < n; ++l) {
            sk += r(i, l) * r(j, l);
            sm += r(l, i) * r(l, j);
          }
          kt.push_back({i, j, sk});
          mt.push_back({i, j, sm});
        }
      const SparseMatrix K(n, n, kt), M(n, n, mt);
      StepOptions opts;
      opts.record_stride = 1;
      opts.tol = 1e-12;
      const Trajectory traj =
          backward_euler_linear(K, M, nullptr, testutil::random_vec(rng, n), Schedule{0.1, 15}, opts);
      double prev = 1e300;
      bool mono = true;
      for (const auto& u : traj.states) {
        const double cur = l2_norm(M, u);
        mono &= cur <= prev * (1 + 1e-12);
        prev = cur;
      }
      ok &= check(mono, "M-norm contraction every step");
    }
  }

  {  // Allen-Cahn fixed points on a single degree of freedom
    const auto f = [](double u) { return -(u * u * u - u); };
    SpaceOps id_ops;
    id_ops.lift_nodal = [](const Vec& u) { return u; };
    id_ops.load_from_nodal = [](const Vec& v) { return v; };
    const SparseMatrix one(1, 1, {{0, 0, 1.0}});
    const SparseMatrix zero(1, 1, {});
    const Trajectory t0 =
        backward_euler_semilinear(zero, one, f, Vec{0.0}, Schedule{0.01, 30}, id_ops);
    const Trajectory t1 =
        backward_euler_semilinear(zero, one, f, Vec{1.0}, Schedule{0.01, 30}, id_ops);
    ok &= check(t0.final_coeffs[0] == 0.0, "fixed point 0 preserved exactly");
    ok &= check(t1.final_coeffs[0] == 1.0, "fixed point 1 preserved exactly");

    const Trajectory s =
        backward_euler_linear(one, one, nullptr, Vec{1.0}, Schedule{0.01, 1});
    ok &= check(std::abs(s.final_coeffs[0] - 1.0 / 1.01) <= 1e-15, "scalar step 1/1.01 to 1e-15");
  }
  return ok;
}

// 8: two runs of criterion 2's config write identical bytes
bool criterion8() {
  ExperimentConfig cfg = quick_config(ExperimentConfig::Problem::Linear);
  cfg.coeff.kind = CoeffSpec::Kind::Random;
  cfg.coeff.grid_level = 4;
  cfg.coeff.lo = 1e-1;
  cfg.coeff.hi = 1e5;
  cfg.coeff.seed = 1234;

  const auto run_once = [&](const std::string& path) {
    const ConvergenceReport rep = run_experiment(cfg);
    write_report(rep, path);
    std::ifstream is(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
  };
  const std::string a = run_once("acceptance_run_a.csv");
  const std::string b = run_once("acceptance_run_b.csv");
  std::filesystem::remove("acceptance_run_a.csv");
  std::filesystem::remove("acceptance_run_b.csv");
  std::printf("    %zu bytes per report\n", a.size());
  return check(!a.empty() && a == b, "bitwise identical CSV across runs");
}

}  // namespace

int main(int argc, char** argv) {
  using CriterionFn = bool (*)();
  const CriterionFn criteria[8] = {criterion1, criterion2, criterion3, criterion4,
                                   criterion5, criterion6, criterion7, criterion8};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty())
    for (int i = 1; i <= 8; ++i) selected.push_back(i);

  int failures = 0;
  for (int n : selected) {
    if (n < 1 || n > 8) {
      std::fprintf(stderr, "unknown criterion %d\n", n);
      return 2;
    }
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = criteria[n - 1]();
    } catch (const std::exception& e) {
      std::printf("    exception: %s\n", e.what());
    }
    const double secs =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0)
            .count() /
        1000.0;
    std::printf("criterion %d: %s (%.1f s)\n", n, ok ? "PASS" : "FAIL", secs);
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
