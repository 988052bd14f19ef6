#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lodfem/coeff.hpp"
#include "lodfem/sparse.hpp"

namespace lodfem {

struct CoeffSpec {
  enum class Kind { Constant, Random, File } kind = Kind::Constant;
  double value = 1.0;           // Constant
  int grid_level = 0;           // Random
  double lo = 0.0, hi = 0.0;    // Random
  std::uint64_t seed = 0;       // Random
  std::string path;             // File
};

struct ExperimentConfig {
  enum class Problem { Linear, Semilinear } problem = Problem::Linear;
  int fine_level = 0;
  std::vector<int> coarse_levels;
  std::vector<int> k_schedule;
  double tau = 0.01;
  int n_steps = 100;
  CoeffSpec coeff;
  std::string output = "report.csv";
  double tol_corrector = 1e-10;
  double tol_timestep = 1e-9;
  int threads = 0;
};

/// Flat key-value file, one `key = value` per line, order-insensitive,
/// `#` comments. Keys are documented in the README.
ExperimentConfig read_config(const std::string& path);
void write_config(const ExperimentConfig& cfg, const std::string& path);
void validate(const ExperimentConfig& cfg);

CoeffField make_field(const CoeffSpec& spec);

struct LevelResult {
  int level = 0;
  double H = 0.0;
  int dofs = 0;
  int k = 0;
  double rel_err_lod = 0.0;
  double rel_err_p1 = 0.0;
};

struct ConvergenceReport {
  std::vector<LevelResult> rows;
  double fitted_order_lod = 0.0;
  double fitted_order_p1 = 0.0;
};

ConvergenceReport run_experiment(const ExperimentConfig& cfg);

/// Least-squares slope of log(err) against log(H); needs >= 2 positive pairs.
double fit_order(const std::vector<std::pair<double, double>>& h_err);

/// CSV: header `level,H,dofs,k,rel_err_lod,rel_err_p1`, one row per coarse
/// level, then a `# order_lod=... order_p1=...` comment line. Written
/// atomically (temp file + rename).
void write_report(const ConvergenceReport& report, const std::string& path);
std::string format_report(const ConvergenceReport& report);

/// Corrector decay study on (coarse_levels[0], fine_level): energy error of
/// the localized against the global corrector of one coarse node, k = 1..max_k.
struct DecayResult {
  int coarse_node = -1;
  double ref_energy = 0.0;           // energy norm of the global corrector
  std::vector<double> energy_err;    // index 0 is k=1
};

DecayResult corrector_decay(const ExperimentConfig& cfg, int max_k);
void write_decay(const DecayResult& result, const std::string& path);

void set_verbose(bool on);
bool verbose();
void vlog(const std::string& msg);

}  // namespace lodfem
