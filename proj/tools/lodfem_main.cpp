// lodfem command line: convergence experiments, coefficient generation and
// the corrector decay study.

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>

#include "lodfem/coeff.hpp"
#include "lodfem/errors.hpp"
#include "lodfem/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Multiscale generalized FEM for parabolic problems"};
  app.require_subcommand(1);

  bool verbose = false;
  int threads = 0;
  app.add_flag("--verbose", verbose, "Progress output on stderr");
  app.add_option("--threads", threads, "Worker threads (0 = all cores)");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run a convergence experiment from a config file");
  run->add_option("config", config_path, "Config file")->required();

  int gc_level = 0;
  double gc_lo = 0.0, gc_hi = 0.0;
  std::uint64_t gc_seed = 0;
  std::string gc_path;
  auto* gen = app.add_subcommand("gen-coeff", "Generate a random coefficient file");
  gen->add_option("grid_level", gc_level)->required();
  gen->add_option("lo", gc_lo)->required();
  gen->add_option("hi", gc_hi)->required();
  gen->add_option("seed", gc_seed)->required();
  gen->add_option("path", gc_path)->required();

  std::string decay_config;
  int decay_max_k = 5;
  std::string decay_output = "decay.csv";
  auto* decay = app.add_subcommand("decay", "Corrector decay study");
  decay->add_option("config", decay_config, "Config file")->required();
  decay->add_option("--max-k", decay_max_k, "Largest patch size");
  decay->add_option("--output", decay_output, "Output CSV");

  CLI11_PARSE(app, argc, argv);
  lodfem::set_verbose(verbose);

  try {
    if (*run) {
      lodfem::ExperimentConfig cfg = lodfem::read_config(config_path);
      if (threads > 0) cfg.threads = threads;
      const lodfem::ConvergenceReport report = lodfem::run_experiment(cfg);
      lodfem::write_report(report, cfg.output);
      std::cout << lodfem::format_report(report);
    } else if (*gen) {
      const lodfem::CoeffField field = lodfem::random_field(gc_level, gc_lo, gc_hi, gc_seed);
      lodfem::save_field(field, gc_path);
      std::cout << "wrote " << gc_path << " (contrast " << field.contrast() << ")\n";
    } else if (*decay) {
      lodfem::ExperimentConfig cfg = lodfem::read_config(decay_config);
      if (threads > 0) cfg.threads = threads;
      const lodfem::DecayResult result = lodfem::corrector_decay(cfg, decay_max_k);
      lodfem::write_decay(result, decay_output);
      std::cout << "wrote " << decay_output << '\n';
    }
  } catch (const lodfem::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
