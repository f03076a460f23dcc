// diffpos: command-line front end for the diffraction positioning library.
//
//   diffpos peb   --config configs/reference.json --out out/peb
//   diffpos mc    --samples 2000 --snr-db 3,9,15 --out out/mc
//   diffpos ratio --out out/ratio
//   diffpos check
//
// Exit status: 0 success, 1 self-check failure, 2 configuration or usage
// error, 3 geometry/identifiability failure, 4 I/O error.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "diffpos/errors.hpp"
#include "diffpos/scenario.hpp"
#include "diffpos/selfcheck.hpp"
#include "diffpos/simulation.hpp"
#include "diffpos/version.hpp"

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitGeometry = 3;
constexpr int kExitIo = 4;

constexpr std::size_t kFullScaleSamples = 100'000;

struct CommonFlags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::string out = "diffpos_out";
  std::vector<double> snr_db;
  bool full_scale = false;
  unsigned threads = 0;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Scenario JSON file (defaults to the built-in reference scenario)");
  cmd->add_option("--seed", f.seed, "Master RNG seed (overrides the file)");
  cmd->add_option("--samples", f.samples, "Number of node samples (overrides the file)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
  cmd->add_option("--snr-db", f.snr_db, "Comma-separated SNR list in dB")->delimiter(',');
  cmd->add_flag("--full-scale", f.full_scale, "Use 100000 node samples");
  cmd->add_option("--threads", f.threads, "Worker threads (0 = all cores)")->capture_default_str();
}

diffpos::Scenario build_scenario(const CommonFlags& f, diffpos::RunMode mode) {
  diffpos::Scenario s = f.config ? diffpos::load_scenario(*f.config) : diffpos::reference_scenario();
  s.mode = mode;
  if (f.seed) s.seed = *f.seed;
  if (f.full_scale) s.n_samples = kFullScaleSamples;
  if (f.samples) s.n_samples = *f.samples;
  if (!f.snr_db.empty()) s.snr_db_list = f.snr_db;
  s.validate();
  return s;
}

void print_table(const diffpos::ResultTable& t) {
  std::cout << t.name() << ":\n";
  t.write_csv(std::cout);
}

int run_mode(const CommonFlags& f, diffpos::RunMode mode) {
  const diffpos::Scenario scenario = build_scenario(f, mode);
  const auto start = std::chrono::steady_clock::now();
  const diffpos::sim::RunResult result = diffpos::sim::run(scenario, {f.threads});
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto files = diffpos::sim::write_run(result, scenario, f.out, wall);

  for (const auto& t : result.tables) {
    if (t.name().find("summary") != std::string::npos) print_table(t);
  }
  std::cout << "wrote " << files.size() << " files to " << f.out << " in " << std::fixed
            << std::setprecision(2) << wall << " s\n";
  return 0;
}

int run_check(const CommonFlags& f) {
  const std::uint64_t seed = f.seed.value_or(1);
  const std::size_t scenes = f.samples.value_or(1000);
  bool all = true;
  for (const auto& r : diffpos::run_self_check(seed, scenes)) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    all = all && r.passed;
  }
  return all ? 0 : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffraction-aided outdoor-to-indoor positioning: bounds, estimators, power ratios"};
  app.set_version_flag("--version", std::string(diffpos::kVersion));
  app.require_subcommand(1);

  CommonFlags flags;
  CLI::App* peb = app.add_subcommand("peb", "Position error bound map over sampled nodes");
  CLI::App* mc = app.add_subcommand("mc", "Monte Carlo comparison of the diffraction NLS and LLS estimators");
  CLI::App* ratio = app.add_subcommand("ratio", "Upper/lower window power ratio sweep over elevation");
  CLI::App* check = app.add_subcommand("check", "Run the oracle and property self-check");
  for (CLI::App* cmd : {peb, mc, ratio, check}) add_common_flags(cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*peb) return run_mode(flags, diffpos::RunMode::kPebMap);
    if (*mc) return run_mode(flags, diffpos::RunMode::kEstimatorMc);
    if (*ratio) return run_mode(flags, diffpos::RunMode::kPowerRatioSweep);
    return run_check(flags);
  } catch (const diffpos::Error& e) {
    std::cerr << "diffpos: " << e.what() << "\n";
    switch (e.code()) {
      case diffpos::ErrorCode::kConfig:
        return kExitConfig;
      case diffpos::ErrorCode::kIo:
        return kExitIo;
      default:
        return kExitGeometry;
    }
  } catch (const std::exception& e) {
    std::cerr << "diffpos: " << e.what() << "\n";
    return kExitIo;
  }
}
