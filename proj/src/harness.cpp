#include "lodfem/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "lodfem/assembly.hpp"
#include "lodfem/errors.hpp"
#include "lodfem/lod.hpp"
#include "lodfem/mesh.hpp"
#include "lodfem/timestep.hpp"

namespace lodfem {

namespace {

std::atomic<bool> g_verbose{false};

std::string fmt_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw IoError("number formatting failed");
  return std::string(buf, end);
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp);
    os << content;
    if (!os) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename to " + path + " failed: " + ec.message());
}

}  // namespace

void set_verbose(bool on) { g_verbose.store(on); }
bool verbose() { return g_verbose.load(); }
void vlog(const std::string& msg) {
  if (verbose()) std::cerr << "[lodfem] " << msg << '\n';
}

CoeffField make_field(const CoeffSpec& spec) {
  switch (spec.kind) {
    case CoeffSpec::Kind::Constant:
      return constant_field(spec.value);
    case CoeffSpec::Kind::Random:
      return random_field(spec.grid_level, spec.lo, spec.hi, spec.seed);
    case CoeffSpec::Kind::File:
      return load_field(spec.path);
  }
  throw ConfigError("make_field: unknown coefficient kind");
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.fine_level < 1 || cfg.fine_level > 10)
    throw ConfigError("config: fine_level must be in [1,10]");
  if (cfg.coarse_levels.empty()) throw ConfigError("config: coarse_levels empty");
  if (cfg.k_schedule.size() != cfg.coarse_levels.size())
    throw ConfigError("config: k_schedule length must match coarse_levels");
  for (int l : cfg.coarse_levels) {
    if (l < 1) throw ConfigError("config: coarse level must be >= 1");
    if (l >= cfg.fine_level)
      throw ConfigError("config: fine_level must exceed every coarse level");
  }
  for (int k : cfg.k_schedule)
    if (k < 0) throw ConfigError("config: k must be nonnegative");
  if (!(cfg.tau > 0.0)) throw ConfigError("config: tau must be positive");
  if (cfg.n_steps < 1) throw ConfigError("config: n_steps must be >= 1");
  if (cfg.coeff.kind == CoeffSpec::Kind::Random && cfg.coeff.grid_level > cfg.fine_level)
    throw ConfigError("config: coefficient grid_level must be <= fine_level");
  if (!(cfg.tol_corrector > 0.0) || !(cfg.tol_timestep > 0.0))
    throw ConfigError("config: tolerances must be positive");
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return {};
  return s.substr(a, b - a + 1);
}

int parse_int(const std::string& s, int line) {
  int v = 0;
  const std::string t = trim(s);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || p != t.data() + t.size())
    throw ParseError("bad integer '" + t + "'", line);
  return v;
}

std::uint64_t parse_u64(const std::string& s, int line) {
  std::uint64_t v = 0;
  const std::string t = trim(s);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || p != t.data() + t.size())
    throw ParseError("bad unsigned integer '" + t + "'", line);
  return v;
}

double parse_double(const std::string& s, int line) {
  double v = 0;
  const std::string t = trim(s);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || p != t.data() + t.size())
    throw ParseError("bad number '" + t + "'", line);
  return v;
}

}  // namespace

ExperimentConfig read_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("read_config: cannot open " + path);

  ExperimentConfig cfg;
  bool seen_problem = false, seen_fine = false, seen_levels = false, seen_k = false;

  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty() || value.empty()) throw ParseError("empty key or value", line_no);

    if (key == "problem") {
      if (value == "linear")
        cfg.problem = ExperimentConfig::Problem::Linear;
      else if (value == "semilinear")
        cfg.problem = ExperimentConfig::Problem::Semilinear;
      else
        throw ParseError("problem must be linear or semilinear", line_no);
      seen_problem = true;
    } else if (key == "fine_level") {
      cfg.fine_level = parse_int(value, line_no);
      seen_fine = true;
    } else if (key == "coarse_levels") {
      cfg.coarse_levels.clear();
      for (const auto& p : split_list(value)) cfg.coarse_levels.push_back(parse_int(p, line_no));
      seen_levels = true;
    } else if (key == "k_schedule") {
      cfg.k_schedule.clear();
      for (const auto& p : split_list(value)) cfg.k_schedule.push_back(parse_int(p, line_no));
      seen_k = true;
    } else if (key == "tau") {
      cfg.tau = parse_double(value, line_no);
    } else if (key == "n_steps") {
      cfg.n_steps = parse_int(value, line_no);
    } else if (key == "coeff") {
      if (value == "constant")
        cfg.coeff.kind = CoeffSpec::Kind::Constant;
      else if (value == "random")
        cfg.coeff.kind = CoeffSpec::Kind::Random;
      else if (value == "file")
        cfg.coeff.kind = CoeffSpec::Kind::File;
      else
        throw ParseError("coeff must be constant, random or file", line_no);
    } else if (key == "coeff_value") {
      cfg.coeff.value = parse_double(value, line_no);
    } else if (key == "coeff_grid_level") {
      cfg.coeff.grid_level = parse_int(value, line_no);
    } else if (key == "coeff_lo") {
      cfg.coeff.lo = parse_double(value, line_no);
    } else if (key == "coeff_hi") {
      cfg.coeff.hi = parse_double(value, line_no);
    } else if (key == "coeff_seed") {
      cfg.coeff.seed = parse_u64(value, line_no);
    } else if (key == "coeff_file") {
      cfg.coeff.path = value;
    } else if (key == "output") {
      cfg.output = value;
    } else if (key == "tol_corrector") {
      cfg.tol_corrector = parse_double(value, line_no);
    } else if (key == "tol_timestep") {
      cfg.tol_timestep = parse_double(value, line_no);
    } else if (key == "threads") {
      cfg.threads = parse_int(value, line_no);
    } else {
      throw ParseError("unknown key '" + key + "'", line_no);
    }
  }

  if (!seen_problem) throw ParseError("read_config: missing key 'problem'");
  if (!seen_fine) throw ParseError("read_config: missing key 'fine_level'");
  if (!seen_levels) throw ParseError("read_config: missing key 'coarse_levels'");
  if (!seen_k) throw ParseError("read_config: missing key 'k_schedule'");
  validate(cfg);
  return cfg;
}

void write_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ostringstream os;
  os << "problem = "
     << (cfg.problem == ExperimentConfig::Problem::Linear ? "linear" : "semilinear") << '\n';
  os << "fine_level = " << cfg.fine_level << '\n';
  os << "coarse_levels = ";
  for (std::size_t i = 0; i < cfg.coarse_levels.size(); ++i)
    os << (i ? "," : "") << cfg.coarse_levels[i];
  os << '\n' << "k_schedule = ";
  for (std::size_t i = 0; i < cfg.k_schedule.size(); ++i) os << (i ? "," : "") << cfg.k_schedule[i];
  os << '\n';
  os << "tau = " << fmt_double(cfg.tau) << '\n';
  os << "n_steps = " << cfg.n_steps << '\n';
  switch (cfg.coeff.kind) {
    case CoeffSpec::Kind::Constant:
      os << "coeff = constant\n";
      os << "coeff_value = " << fmt_double(cfg.coeff.value) << '\n';
      break;
    case CoeffSpec::Kind::Random:
      os << "coeff = random\n";
      os << "coeff_grid_level = " << cfg.coeff.grid_level << '\n';
      os << "coeff_lo = " << fmt_double(cfg.coeff.lo) << '\n';
      os << "coeff_hi = " << fmt_double(cfg.coeff.hi) << '\n';
      os << "coeff_seed = " << cfg.coeff.seed << '\n';
      break;
    case CoeffSpec::Kind::File:
      os << "coeff = file\n";
      os << "coeff_file = " << cfg.coeff.path << '\n';
      break;
  }
  os << "output = " << cfg.output << '\n';
  os << "tol_corrector = " << fmt_double(cfg.tol_corrector) << '\n';
  os << "tol_timestep = " << fmt_double(cfg.tol_timestep) << '\n';
  os << "threads = " << cfg.threads << '\n';
  write_atomic(path, os.str());
}

double fit_order(const std::vector<std::pair<double, double>>& h_err) {
  if (h_err.size() < 2) throw DomainError("fit_order: need at least 2 points");
  double sx = 0, sy = 0;
  for (const auto& [h, e] : h_err) {
    if (!(h > 0.0) || !(e > 0.0)) throw DomainError("fit_order: pairs must be positive");
    sx += std::log(h);
    sy += std::log(e);
  }
  const double mx = sx / h_err.size();
  const double my = sy / h_err.size();
  double num = 0, den = 0;
  for (const auto& [h, e] : h_err) {
    const double dx = std::log(h) - mx;
    num += dx * (std::log(e) - my);
    den += dx * dx;
  }
  if (den == 0.0) throw DomainError("fit_order: all H values equal");
  return num / den;
}

std::string format_report(const ConvergenceReport& report) {
  std::ostringstream os;
  os << "level,H,dofs,k,rel_err_lod,rel_err_p1\n";
  for (const auto& r : report.rows) {
    os << r.level << ',' << fmt_double(r.H) << ',' << r.dofs << ',' << r.k << ','
       << fmt_double(r.rel_err_lod) << ',' << fmt_double(r.rel_err_p1) << '\n';
  }
  os << "# order_lod=" << fmt_double(report.fitted_order_lod)
     << " order_p1=" << fmt_double(report.fitted_order_p1) << '\n';
  return os.str();
}

void write_report(const ConvergenceReport& report, const std::string& path) {
  write_atomic(path, format_report(report));
}

namespace {

struct Problem {
  // fine-space data of the experiment
  std::function<double(double, double)> u0;
  bool linear = true;
};

Problem problem_data(ExperimentConfig::Problem p) {
  Problem out;
  if (p == ExperimentConfig::Problem::Linear) {
    out.linear = true;
    out.u0 = [](double, double) { return 1.0; };
  } else {
    out.linear = false;
    out.u0 = [](double x, double y) { return x * (1.0 - x) * y * (1.0 - y); };
  }
  return out;
}

double allen_cahn(double u) { return -(u * u * u - u); }

}  // namespace

ConvergenceReport run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto t_start = std::chrono::steady_clock::now();
  const CoeffField field = make_field(cfg.coeff);
  const Problem prob = problem_data(cfg.problem);
  const Schedule sched{cfg.tau, cfg.n_steps};

  vlog("assembling fine mesh level " + std::to_string(cfg.fine_level));
  const TriMesh fine = build_mesh(cfg.fine_level);
  const FemOperators fem = assemble(fine, field);
  const Vec u0_fine = restrict_interior(fine, interpolate(fine, prob.u0));

  // unit load profile: (1, phi_i); the linear problem scales it by t
  const Vec unit_load = load_vector(fine, fem, [](double, double) { return 1.0; });

  StepOptions fine_opts;
  fine_opts.tol = cfg.tol_timestep;
  fine_opts.tag = SpaceTag::Fine;

  vlog("computing fine reference trajectory");
  Trajectory reference;
  if (prob.linear) {
    const LoadFn load = [&](int, double t) {
      Vec b = unit_load;
      for (double& v : b) v *= t;
      return b;
    };
    reference = backward_euler_linear(fem.stiffness, fem.mass, load, u0_fine, sched, fine_opts);
  } else {
    SpaceOps ops;
    ops.lift_nodal = [&](const Vec& u) { return extend_zero(fine, u); };
    ops.load_from_nodal = [&](const Vec& nodal) { return load_vector(fine, fem, nodal); };
    reference = backward_euler_semilinear(fem.stiffness, fem.mass, allen_cahn, u0_fine, sched,
                                          ops, fine_opts);
  }
  reference.final_fine = reference.final_coeffs;
  const double ref_norm = l2_norm(fem.mass, reference.final_fine);
  if (!(ref_norm > 0.0))
    throw SolveError("run_experiment: reference solution vanishes at final time");

  ConvergenceReport report;
  for (std::size_t li = 0; li < cfg.coarse_levels.size(); ++li) {
    const int level = cfg.coarse_levels[li];
    const int k = cfg.k_schedule[li];
    vlog("coarse level " + std::to_string(level) + " (k=" + std::to_string(k) + ")");

    const MeshPair pair = build_pair(level, cfg.fine_level);
    const ClementMatrix clem = clement(pair, fem);

    CorrectorOptions copts;
    copts.tol = cfg.tol_corrector;
    copts.threads = cfg.threads;
    const CorrectorSet correctors = compute_correctors(pair, fem, clem, field, k, copts);
    const MultiscaleSpace space = build_space(correctors, pair, fem);

    StepOptions ms_opts;
    ms_opts.tol = cfg.tol_timestep;
    ms_opts.tag = SpaceTag::Multiscale;

    Vec lod_final;
    {
      const Vec c0 = ms_initial_projection(space, fem, u0_fine);
      Trajectory traj;
      if (prob.linear) {
        const Vec unit_ms = restrict_to_space(space, unit_load);
        const LoadFn load = [&](int, double t) {
          Vec b = unit_ms;
          for (double& v : b) v *= t;
          return b;
        };
        traj = backward_euler_linear(space.ms_stiffness, space.ms_mass, load, c0, sched, ms_opts);
      } else {
        SpaceOps ops;
        ops.lift_nodal = [&](const Vec& c) { return extend_zero(fine, lift(space, c)); };
        ops.load_from_nodal = [&](const Vec& nodal) {
          return restrict_to_space(space, load_vector(fine, fem, nodal));
        };
        traj = backward_euler_semilinear(space.ms_stiffness, space.ms_mass, allen_cahn, c0,
                                         sched, ops, ms_opts);
      }
      lod_final = lift(space, traj.final_coeffs);
    }

    // coarse P1 comparator: fine operators projected through the hat embedding
    Vec p1_final;
    {
      const SparseMatrix E = prolongation(pair);
      const SparseMatrix Et = E.transpose();
      const SparseMatrix K_H = multiply(Et, multiply(fem.stiffness, E));
      const SparseMatrix M_H = multiply(Et, multiply(fem.mass, E));

      Vec c0;
      {
        const Vec rhs = Et.apply(fem.mass.apply(u0_fine));
        c0 = cg_solve(M_H, rhs, 1e-12).first;
      }
      StepOptions p1_opts;
      p1_opts.tol = cfg.tol_timestep;
      p1_opts.tag = SpaceTag::CoarseP1;
      Trajectory traj;
      if (prob.linear) {
        const Vec unit_p1 = Et.apply(unit_load);
        const LoadFn load = [&](int, double t) {
          Vec b = unit_p1;
          for (double& v : b) v *= t;
          return b;
        };
        traj = backward_euler_linear(K_H, M_H, load, c0, sched, p1_opts);
      } else {
        SpaceOps ops;
        ops.lift_nodal = [&](const Vec& c) { return extend_zero(fine, E.apply(c)); };
        ops.load_from_nodal = [&](const Vec& nodal) {
          return Et.apply(load_vector(fine, fem, nodal));
        };
        traj = backward_euler_semilinear(K_H, M_H, allen_cahn, c0, sched, ops, p1_opts);
      }
      p1_final = E.apply(traj.final_coeffs);
    }

    LevelResult row;
    row.level = level;
    row.H = std::sqrt(2.0) * std::ldexp(1.0, -level);
    row.dofs = ((1 << level) - 1) * ((1 << level) - 1);
    row.k = k;
    {
      Vec diff = lod_final;
      axpy(-1.0, reference.final_fine, diff);
      row.rel_err_lod = l2_norm(fem.mass, diff) / ref_norm;
    }
    {
      Vec diff = p1_final;
      axpy(-1.0, reference.final_fine, diff);
      row.rel_err_p1 = l2_norm(fem.mass, diff) / ref_norm;
    }
    report.rows.push_back(row);
    vlog("  rel_err_lod=" + fmt_double(row.rel_err_lod) +
         " rel_err_p1=" + fmt_double(row.rel_err_p1));
  }

  std::vector<std::pair<double, double>> lod_pairs, p1_pairs;
  for (const auto& r : report.rows) {
    lod_pairs.push_back({r.H, r.rel_err_lod});
    p1_pairs.push_back({r.H, r.rel_err_p1});
  }
  report.fitted_order_lod = fit_order(lod_pairs);
  report.fitted_order_p1 = fit_order(p1_pairs);

  const auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t_start);
  vlog("experiment finished in " + std::to_string(elapsed.count()) + " ms");
  return report;
}

DecayResult corrector_decay(const ExperimentConfig& cfg, int max_k) {
  validate(cfg);
  if (max_k < 1) throw DomainError("corrector_decay: max_k must be >= 1");
  const CoeffField field = make_field(cfg.coeff);
  const int coarse_level = cfg.coarse_levels.front();
  const MeshPair pair = build_pair(coarse_level, cfg.fine_level);
  const FemOperators fem = assemble(pair.fine, field);
  const ClementMatrix clem = clement(pair, fem);

  CorrectorOptions copts;
  copts.tol = cfg.tol_corrector;
  copts.threads = cfg.threads;

  DecayResult out;
  out.coarse_node = pair.coarse.node_at(1, 1);

  vlog("decay study: global corrector");
  const Vec global =
      node_corrector(pair, fem, clem, field, out.coarse_node, saturation_k(pair.coarse), copts);
  out.ref_energy = energy_norm(fem.stiffness, global);

  for (int k = 1; k <= max_k; ++k) {
    vlog("decay study: k=" + std::to_string(k));
    const Vec local = node_corrector(pair, fem, clem, field, out.coarse_node, k, copts);
    Vec diff = global;
    axpy(-1.0, local, diff);
    out.energy_err.push_back(energy_norm(fem.stiffness, diff));
  }
  return out;
}

void write_decay(const DecayResult& result, const std::string& path) {
  std::ostringstream os;
  os << "k,energy_err,ratio\n";
  for (std::size_t i = 0; i < result.energy_err.size(); ++i) {
    os << (i + 1) << ',' << fmt_double(result.energy_err[i]) << ',';
    if (i == 0)
      os << "nan";
    else if (result.energy_err[i - 1] > 0.0)
      os << fmt_double(result.energy_err[i] / result.energy_err[i - 1]);
    else
      os << "0";
    os << '\n';
  }
  os << "# node=" << result.coarse_node << " ref_energy=" << fmt_double(result.ref_energy)
     << '\n';
  write_atomic(path, os.str());
}

}  // namespace lodfem
