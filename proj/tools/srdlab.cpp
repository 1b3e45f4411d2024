// Command line front end.  Every subcommand reads one config file, runs the
// matching driver, and writes results.csv, report.json and run.log into the
// output directory.  Outputs are a pure function of (config, seed); worker
// count and wall clock never reach them, so reruns diff clean.
//
// Exit codes: 0 done, 1 bad config or arguments, 2 numerical failure
// (trajectory blow-up), 3 a bound or coupling check did not hold.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "srdlab/experiments.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot read config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return std::move(ss).str();
}

void write_text(const std::filesystem::path& p, std::string_view text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + p.string());
  f.write(text.data(), std::streamsize(text.size()));
  if (!f) throw std::runtime_error("short write: " + p.string());
}

int run_command(const std::string& cmd, const std::string& config_text, std::uint64_t seed,
                unsigned workers, const std::string& out_dir) {
  const srdlab::ExperimentConfig cfg = srdlab::load_experiment_config(config_text);

  srdlab::DriverResult res;
  if (cmd == "verify-model") {
    res = srdlab::verify_model_driver(cfg).out;
  } else if (cmd == "simulate") {
    res = srdlab::simulate_driver(cfg, seed, workers).out;
  } else if (cmd == "converge-tau") {
    res = srdlab::converge_tau_driver(cfg, seed, workers).out;
  } else if (cmd == "converge-N") {
    res = srdlab::converge_modes_driver(cfg, seed, workers).out;
  } else if (cmd == "eps-scaling") {
    res = srdlab::eps_scaling_driver(cfg, seed, workers).out;
  } else if (cmd == "harnack") {
    res = srdlab::harnack_driver(cfg, seed, workers).out;
  } else if (cmd == "taming-demo") {
    res = srdlab::taming_demo_driver(cfg, seed).out;
  } else {
    throw std::invalid_argument("unknown subcommand: " + cmd);
  }

  const std::uint64_t hash = srdlab::fnv1a(config_text);
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  write_text(dir / "results.csv", srdlab::csv_text(res.table));
  write_text(dir / "report.json", srdlab::make_report(cmd, hash, seed, res).dump(2) + "\n");
  write_text(dir / "run.log", srdlab::run_log_text(cmd, hash, seed, res));

  for (const auto& line : res.log) std::printf("%s\n", line.c_str());
  std::printf("wrote %s\n", (dir / "results.csv").string().c_str());
  return res.passed ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral laboratory for a stochastic reaction-diffusion equation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 2024;
  unsigned workers = 1;

  const char* names[] = {"verify-model", "simulate",     "converge-tau", "converge-N",
                         "eps-scaling",  "harnack",      "taming-demo"};
  const char* descs[] = {
      "check drift and noise hypotheses, report derived constants",
      "Monte Carlo moment track of the squared state norms",
      "weak and strong error against a common-noise fine-step reference",
      "weak error of the mode truncation against a wider reference",
      "weak error growth as the reaction scale epsilon shrinks",
      "coupling contraction, control cost, gradient and entropy bounds",
      "one stiff trajectory under the damped and undamped schemes"};
  for (std::size_t i = 0; i < std::size(names); ++i) {
    CLI::App* sub = app.add_subcommand(names[i], descs[i]);
    sub->add_option("--config", config_path, "experiment config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (default .)");
    sub->add_option("--seed", seed, "base seed for all noise streams");
    sub->add_option("--workers", workers, "sample-level threads; never changes results")
        ->check(CLI::Range(1u, 256u));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  const auto t0 = std::chrono::steady_clock::now();
  int rc = 0;
  try {
    rc = run_command(cmd, read_file(config_path), seed, workers, out_dir);
  } catch (const srdlab::BlowUpError& e) {
    std::fprintf(stderr, "srdlab %s: %s\n", cmd.c_str(), e.what());
    return 2;
  } catch (const srdlab::NumericalFailure& e) {
    std::fprintf(stderr, "srdlab %s: %s\n", cmd.c_str(), e.what());
    return 2;
  } catch (const std::logic_error& e) {
    std::fprintf(stderr, "srdlab %s: %s\n", cmd.c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "srdlab %s: %s\n", cmd.c_str(), e.what());
    return 1;
  }
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  std::fprintf(stderr, "elapsed %.1fs\n", dt.count());
  return rc;
}
