#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "lodfem/assembly.hpp"
#include "lodfem/errors.hpp"
#include "lodfem/harness.hpp"
#include "lodfem/lod.hpp"
#include "lodfem/mesh.hpp"
#include "lodfem/timestep.hpp"
#include "test_util.hpp"

using namespace lodfem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is);
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

ExperimentConfig tiny_linear() {
  ExperimentConfig cfg;
  cfg.problem = ExperimentConfig::Problem::Linear;
  cfg.fine_level = 4;
  cfg.coarse_levels = {1, 2};
  cfg.k_schedule = {2, 3};
  cfg.tau = 0.02;
  cfg.n_steps = 10;
  cfg.coeff.kind = CoeffSpec::Kind::Random;
  cfg.coeff.grid_level = 2;
  cfg.coeff.lo = 1e-1;
  cfg.coeff.hi = 1e2;
  cfg.coeff.seed = 9;
  cfg.output = "tiny_report.csv";
  return cfg;
}

}  // namespace

TEST_CASE("fit_order exact, constant and noisy") {
  CHECK(fit_order({{0.5, 0.25}, {0.25, 0.0625}, {0.125, 0.015625}}) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit_order({{0.5, 0.3}, {0.25, 0.3}, {0.125, 0.3}}) == doctest::Approx(0.0));

  testutil::Rng rng(3);
  std::vector<std::pair<double, double>> pairs;
  for (double h : {0.5, 0.25, 0.125, 0.0625}) {
    const double noise = 1.0 + rng.uniform(-0.01, 0.01);
    pairs.push_back({h, 3.0 * std::pow(h, 1.5) * noise});
  }
  const double slope = fit_order(pairs);
  CHECK(slope >= 1.4);
  CHECK(slope <= 1.6);

  CHECK_THROWS_AS(fit_order({{0.5, 0.1}}), DomainError);
  CHECK_THROWS_AS(fit_order({{0.5, 0.0}, {0.25, 0.1}}), DomainError);
}

TEST_CASE("config round trip") {
  ExperimentConfig cfg = tiny_linear();
  cfg.threads = 3;
  cfg.tol_corrector = 1e-9;
  const std::string path = "roundtrip_config_test.cfg";
  write_config(cfg, path);
  const ExperimentConfig back = read_config(path);
  CHECK(back.problem == cfg.problem);
  CHECK(back.fine_level == cfg.fine_level);
  CHECK(back.coarse_levels == cfg.coarse_levels);
  CHECK(back.k_schedule == cfg.k_schedule);
  CHECK(back.tau == cfg.tau);
  CHECK(back.n_steps == cfg.n_steps);
  CHECK(back.coeff.kind == cfg.coeff.kind);
  CHECK(back.coeff.grid_level == cfg.coeff.grid_level);
  CHECK(back.coeff.lo == cfg.coeff.lo);
  CHECK(back.coeff.hi == cfg.coeff.hi);
  CHECK(back.coeff.seed == cfg.coeff.seed);
  CHECK(back.output == cfg.output);
  CHECK(back.tol_corrector == cfg.tol_corrector);
  CHECK(back.threads == cfg.threads);
  std::filesystem::remove(path);
}

TEST_CASE("config parsing: comments, order, errors") {
  const std::string path = "parse_config_test.cfg";
  {
    std::ofstream os(path);
    os << "# a comment line\n";
    os << "k_schedule = 1,2,2,3,4\n";
    os << "coarse_levels = 2,3,4,5,6\n";
    os << "fine_level = 7   # trailing comment\n";
    os << "problem = linear\n";
    os << "tau = 0.01\n";
    os << "n_steps = 100\n";
    os << "coeff = random\n";
    os << "coeff_grid_level = 6\n";
    os << "coeff_lo = 0.1\n";
    os << "coeff_hi = 1e5\n";
    os << "coeff_seed = 1234\n";
  }
  const ExperimentConfig cfg = read_config(path);
  CHECK(cfg.fine_level == 7);
  CHECK(cfg.coarse_levels == std::vector<int>{2, 3, 4, 5, 6});
  CHECK(cfg.k_schedule == std::vector<int>{1, 2, 2, 3, 4});
  std::filesystem::remove(path);

  {
    std::ofstream os(path);
    os << "problem = linear\n";
    os << "not a key value line\n";
  }
  CHECK_THROWS_AS(read_config(path), ParseError);
  try {
    read_config(path);
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  {
    std::ofstream os(path);
    os << "problem = linear\nmystery = 3\n";
  }
  CHECK_THROWS_AS(read_config(path), ParseError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_config("no_such_config.cfg"), IoError);
}

TEST_CASE("config validation rules") {
  ExperimentConfig cfg = tiny_linear();
  validate(cfg);

  ExperimentConfig bad = cfg;
  bad.k_schedule = {1};
  CHECK_THROWS_AS(validate(bad), ConfigError);

  bad = cfg;
  bad.coarse_levels = {1, 4};
  bad.k_schedule = {1, 1};
  CHECK_THROWS_AS(validate(bad), ConfigError);  // coarse == fine rejected

  bad = cfg;
  bad.coeff.grid_level = 9;
  CHECK_THROWS_AS(validate(bad), ConfigError);

  bad = cfg;
  bad.tau = 0.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("report formatting") {
  ConvergenceReport rep;
  rep.rows.push_back({2, std::sqrt(2.0) / 4, 9, 1, 0.01, 0.02});
  rep.rows.push_back({3, std::sqrt(2.0) / 8, 49, 2, 0.0025, 0.01});
  rep.rows.push_back({4, std::sqrt(2.0) / 16, 225, 2, 0.000625, 0.005});
  rep.fitted_order_lod = 2.0;
  rep.fitted_order_p1 = 1.0;
  const std::string path = "report_format_test.csv";
  write_report(rep, path);
  const std::string text = slurp(path);

  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  CHECK(line == "level,H,dofs,k,rel_err_lod,rel_err_p1");
  int data_rows = 0, comment_rows = 0;
  while (std::getline(is, line)) {
    if (line.rfind("# ", 0) == 0) {
      ++comment_rows;
      CHECK(line.find("order_lod=2") != std::string::npos);
      CHECK(line.find("order_p1=1") != std::string::npos);
    } else if (!line.empty()) {
      ++data_rows;
    }
  }
  CHECK(data_rows == 3);
  CHECK(comment_rows == 1);
  std::filesystem::remove(path);
}

TEST_CASE("tiny experiment: sane errors, deterministic bytes") {
  const ExperimentConfig cfg = tiny_linear();
  const ConvergenceReport rep = run_experiment(cfg);
  REQUIRE(rep.rows.size() == 2);
  for (const auto& row : rep.rows) {
    CHECK(row.rel_err_lod >= 0.0);
    CHECK(row.rel_err_lod < 1.0);
    CHECK(row.rel_err_p1 >= 0.0);
    CHECK(row.dofs == ((1 << row.level) - 1) * ((1 << row.level) - 1));
  }
  // LOD errors shrink with the level
  CHECK(rep.rows[1].rel_err_lod < rep.rows[0].rel_err_lod);

  const ConvergenceReport again = run_experiment(cfg);
  CHECK(format_report(rep) == format_report(again));
}

TEST_CASE("self-consistency: equal levels with saturated patches reproduce the reference") {
  // not reachable through config validation; exercised on the library directly
  const int level = 3;
  const MeshPair pair = build_pair(level, level);
  const CoeffField field = random_field(2, 1e-1, 1e2, 15);
  const FemOperators fem = assemble(pair.fine, field);
  const ClementMatrix clem = clement(pair, fem);
  const CorrectorSet set =
      compute_correctors(pair, fem, clem, field, saturation_k(pair.coarse));
  const MultiscaleSpace space = build_space(set, pair, fem);

  const Vec u0(pair.fine.interior_count(), 1.0);
  const Vec unit = load_vector(pair.fine, fem, [](double, double) { return 1.0; });
  const LoadFn load_fine = [&](int, double t) {
    Vec b = unit;
    for (double& v : b) v *= t;
    return b;
  };
  const LoadFn load_ms = [&](int s, double t) { return restrict_to_space(space, load_fine(s, t)); };
  const Schedule sched{0.01, 20};

  const Trajectory ref = backward_euler_linear(fem.stiffness, fem.mass, load_fine, u0, sched);
  const Vec c0 = ms_initial_projection(space, fem, u0);
  const Trajectory ms =
      backward_euler_linear(space.ms_stiffness, space.ms_mass, load_ms, c0, sched);
  const Vec lifted = lift(space, ms.final_coeffs);

  Vec diff = lifted;
  axpy(-1.0, ref.final_coeffs, diff);
  const double rel = l2_norm(fem.mass, diff) / l2_norm(fem.mass, ref.final_coeffs);
  CHECK(rel <= 1e-7);
}

TEST_CASE("corrector decay study on a small pair") {
  ExperimentConfig cfg = tiny_linear();
  cfg.fine_level = 4;
  cfg.coarse_levels = {2};
  cfg.k_schedule = {1};
  const DecayResult res = corrector_decay(cfg, 3);
  REQUIRE(res.energy_err.size() == 3);
  CHECK(res.ref_energy > 0.0);
  CHECK(res.energy_err[1] <= res.energy_err[0]);
  CHECK(res.energy_err[2] <= res.energy_err[1]);

  const std::string path = "decay_test.csv";
  write_decay(res, path);
  const std::string text = slurp(path);
  CHECK(text.rfind("k,energy_err,ratio\n", 0) == 0);
  CHECK(text.find("# node=") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("make_field covers the three kinds") {
  CoeffSpec spec;
  spec.kind = CoeffSpec::Kind::Constant;
  spec.value = 2.5;
  CHECK(make_field(spec).values == std::vector<double>{2.5});

  spec.kind = CoeffSpec::Kind::Random;
  spec.grid_level = 2;
  spec.lo = 0.5;
  spec.hi = 2.0;
  spec.seed = 4;
  const CoeffField f = make_field(spec);
  CHECK(f.values.size() == 16);

  const std::string path = "make_field_test.txt";
  save_field(f, path);
  spec.kind = CoeffSpec::Kind::File;
  spec.path = path;
  CHECK(make_field(spec).values == f.values);
  std::filesystem::remove(path);
}
