#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <thread>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "dcfit/config.hpp"
#include "dcfit/dataset.hpp"
#include "dcfit/dgm.hpp"
#include "dcfit/errors.hpp"
#include "dcfit/simharness.hpp"
#include "dcfit/version.hpp"

namespace {

using namespace dcfit;

constexpr int kExitOk = 0;
constexpr int kExitEstimation = 1;
constexpr int kExitInput = 2;

struct BoundsFlag {
  std::string text;
  void apply_pi(Bounds& b) const { apply(b.pi_lo, b.pi_hi); }
  void apply_m(Bounds& b) const { apply(b.m_lo, b.m_hi); }
  void apply(double& lo, double& hi) const {
    if (text.empty()) return;
    const auto comma = text.find(',');
    if (comma == std::string::npos) {
      throw ConfigError("bounds flag expects 'lo,hi'");
    }
    try {
      lo = std::stod(text.substr(0, comma));
      hi = std::stod(text.substr(comma + 1));
    } catch (const std::exception&) {
      throw ConfigError("bounds flag expects numeric 'lo,hi'");
    }
    if (!(0.0 <= lo && lo < hi && hi <= 1.0)) {
      throw ConfigError("bounds must satisfy 0 <= lo < hi <= 1");
    }
  }
};

int run_dgm(std::size_t n, std::uint64_t seed, bool oracle_view,
            const std::string& out_path) {
  const GeneratedSample sample = generate_sample(n, seed);
  write_sample_csv(sample, out_path, oracle_view);
  return kExitOk;
}

int run_analyze(const std::string& data_path, const std::string& method,
                const std::string& nuisance, std::uint64_t seed,
                const AnalyzeOptions& options, const NuisanceSpec& spec) {
  const Dataset data = read_dataset_csv(data_path);
  const EstimatorKind kind = estimator_from_name(method);

  const auto start = std::chrono::steady_clock::now();
  const AceEstimate est = analyze_dataset(data, kind, spec, seed, options);
  const double runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  nlohmann::json j;
  j["method"] = method;
  j["nuisance"] = nuisance;
  j["psi"] = est.psi;
  j["se"] = est.se;
  j["ci_lower"] = est.ci_lower;
  j["ci_upper"] = est.ci_upper;
  j["n"] = data.n();
  j["clip_count"] = est.clip_count;
  j["runtime_s"] = runtime_s;
  std::cout << j.dump() << std::endl;
  return kExitOk;
}

int run_simulate(const std::string& config_path, const std::string& out_dir,
                 int threads_override, bool seed_set, std::uint64_t seed) {
  SimConfig config = read_config_file(config_path, !seed_set);
  if (seed_set) {
    config.seed = seed;
    config.has_seed = true;
  }
  if (threads_override > 0) config.threads = threads_override;
  std::filesystem::create_directories(out_dir);

  const CampaignResult result = run_campaign(config);
  const std::string csv_path =
      (std::filesystem::path(out_dir) / "results.csv").string();
  const std::string manifest_path =
      (std::filesystem::path(out_dir) / "manifest.json").string();
  write_metrics_csv(result.rows, csv_path);
  write_manifest(result, manifest_path);
  std::cerr << "wrote " << csv_path << " and " << manifest_path << "\n";
  return kExitOk;
}

int run_stability(const std::string& data_path, const std::string& dr,
                  const NuisanceSpec& spec, const std::vector<int>& p_values,
                  int reruns, std::uint64_t seed, int threads,
                  const std::string& out_path) {
  const Dataset data = read_dataset_csv(data_path);
  EstimatorKind kind = estimator_from_name(dr);
  if (kind != EstimatorKind::kAipw && kind != EstimatorKind::kTmle &&
      kind != EstimatorKind::kDcAipw && kind != EstimatorKind::kDcTmle) {
    throw ConfigError("stability: --dr-estimator must be aipw or tmle");
  }
  const auto rows =
      stability_study(data, kind, spec, p_values, reruns, seed, threads);
  if (out_path.empty()) {
    std::printf("p,reruns,min,q1,median,q3,max\n");
    for (const auto& r : rows) {
      std::printf("%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.p, r.reruns,
                  r.min, r.q1, r.median, r.q3, r.max);
    }
  } else {
    write_stability_csv(rows, out_path);
  }
  return kExitOk;
}

int hardware_default(int threads) {
  if (threads > 0) return threads;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Doubly-robust ACE estimation with double cross-fitting"};
  app.set_version_flag("--version", std::string(dcfit::kVersion));
  app.require_subcommand(1);

  // dgm
  auto* dgm_cmd = app.add_subcommand(
      "dgm", "Generate a synthetic statins/ASCVD cohort as CSV");
  std::size_t dgm_n = 3000;
  std::uint64_t dgm_seed = 0;
  bool dgm_oracle = false;
  std::string dgm_out;
  dgm_cmd->add_option("--n", dgm_n, "Rows to generate")
      ->required()
      ->check(CLI::PositiveNumber);
  dgm_cmd->add_option("--seed", dgm_seed, "RNG seed")->required();
  dgm_cmd->add_flag("--oracle-view", dgm_oracle,
                    "Include latent frailty and potential outcomes");
  dgm_cmd->add_option("--out", dgm_out, "Output CSV path")->required();

  // analyze
  auto* an_cmd = app.add_subcommand(
      "analyze", "Estimate the average causal effect on a dataset");
  std::string an_data, an_method, an_nuisance = "correct";
  std::uint64_t an_seed = 0;
  int an_boot = 250, an_partitions = 100, an_threads = 0, an_folds = 10;
  std::string an_agg = "median", an_library, an_dump;
  bool an_hajek = false;
  BoundsFlag an_pi_bounds, an_m_bounds;
  an_cmd->add_option("--data", an_data, "Input CSV (columns A,L,D,R,X,Y)")
      ->required();
  an_cmd->add_option("--method", an_method,
                     "gcomp | ipw | aipw | tmle | dc-aipw | dc-tmle")
      ->required();
  an_cmd->add_option("--nuisance", an_nuisance,
                     "correct | main-effects | ml | null-stub");
  an_cmd->add_option("--seed", an_seed, "RNG seed for stochastic steps");
  an_cmd->add_option("--bootstrap", an_boot, "Bootstrap resamples for gcomp")
      ->check(CLI::Range(2, 1000000));
  an_cmd->add_option("--partitions", an_partitions,
                     "Cross-fit partitions for dc-* methods")
      ->check(CLI::PositiveNumber);
  an_cmd->add_option("--aggregation", an_agg, "median | mean")
      ->check(CLI::IsMember({"median", "mean"}));
  an_cmd->add_flag("--hajek", an_hajek, "Normalized (Hajek) IPW weights");
  an_cmd->add_option("--threads", an_threads, "Worker threads (0 = auto)");
  an_cmd->add_option("--sl-folds", an_folds, "Super-learner CV folds");
  an_cmd->add_option("--sl-library", an_library,
                     "Super-learner library, e.g. 'mean, logistic, "
                     "gam(4,0.6), forest(100,20), net(4,500,0.05)'");
  an_cmd->add_option("--partition-dump", an_dump,
                     "CSV path for per-partition estimates (dc-* only)");
  an_cmd->add_option("--pi-bounds", an_pi_bounds.text,
                     "Propensity clip bounds 'lo,hi'");
  an_cmd->add_option("--m-bounds", an_m_bounds.text,
                     "Outcome-prediction clip bounds 'lo,hi'");

  // simulate
  auto* sim_cmd = app.add_subcommand(
      "simulate", "Run a Monte Carlo campaign from a config file");
  std::string sim_config, sim_out_dir = ".";
  int sim_threads = 0;
  std::uint64_t sim_seed = 0;
  bool sim_seed_set = false;
  sim_cmd->add_option("--config", sim_config, "Campaign config file")
      ->required();
  sim_cmd->add_option("--seed", sim_seed, "Master seed (overrides the config)")
      ->each([&sim_seed_set](const std::string&) { sim_seed_set = true; });
  sim_cmd->add_option("--out-dir", sim_out_dir,
                      "Directory for results.csv and manifest.json");
  sim_cmd->add_option("--threads", sim_threads,
                      "Override worker threads (0 = config value)");

  // stability
  auto* st_cmd = app.add_subcommand(
      "stability", "Partition-count stability of the cross-fit estimate");
  std::string st_data, st_dr = "aipw", st_nuisance = "correct", st_out;
  std::string st_library;
  std::vector<int> st_p{5, 10, 25, 50, 75, 100};
  int st_reruns = 100, st_threads = 0, st_folds = 10;
  std::uint64_t st_seed = 0;
  bool st_seed_set = false;
  st_cmd->add_option("--data", st_data, "Input CSV")->required();
  st_cmd->add_option("--dr-estimator", st_dr, "aipw | tmle");
  st_cmd->add_option("--nuisance", st_nuisance,
                     "correct | main-effects | ml");
  st_cmd->add_option("--p-values", st_p, "Partition counts to compare");
  st_cmd->add_option("--reruns", st_reruns, "Re-runs per partition count")
      ->check(CLI::PositiveNumber);
  st_cmd->add_option("--seed", st_seed, "RNG seed")
      ->each([&st_seed_set](const std::string&) { st_seed_set = true; });
  st_cmd->add_option("--threads", st_threads, "Worker threads (0 = auto)");
  st_cmd->add_option("--sl-folds", st_folds, "Super-learner CV folds");
  st_cmd->add_option("--sl-library", st_library, "Super-learner library");
  st_cmd->add_option("--out", st_out, "Output CSV (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help / --version
    }
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*dgm_cmd) {
      return run_dgm(dgm_n, dgm_seed, dgm_oracle, dgm_out);
    }
    if (*an_cmd) {
      NuisanceSpec spec;
      spec.kind = nuisance_from_name(an_nuisance);
      spec.sl_folds = an_folds;
      spec.sl_library =
          an_library.empty() ? desk_sl_library() : parse_library(an_library);
      an_pi_bounds.apply_pi(spec.bounds);
      an_m_bounds.apply_m(spec.bounds);
      AnalyzeOptions options;
      options.bootstrap_b = an_boot;
      options.partitions = an_partitions;
      options.aggregation =
          an_agg == "mean" ? Aggregation::kMean : Aggregation::kMedian;
      options.hajek = an_hajek;
      options.threads = hardware_default(an_threads);
      if (!an_dump.empty()) options.partition_dump = an_dump;
      return run_analyze(an_data, an_method, an_nuisance, an_seed, options,
                         spec);
    }
    if (*sim_cmd) {
      return run_simulate(sim_config, sim_out_dir, sim_threads,
                          sim_seed_set, sim_seed);
    }
    if (*st_cmd) {
      if (!st_seed_set) {
        throw ConfigError("stability: --seed is required");
      }
      NuisanceSpec spec;
      spec.kind = nuisance_from_name(st_nuisance);
      spec.sl_folds = st_folds;
      spec.sl_library =
          st_library.empty() ? desk_sl_library() : parse_library(st_library);
      return run_stability(st_data, st_dr, spec, st_p, st_reruns, st_seed,
                           hardware_default(st_threads), st_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: invalid configuration:\n";
    for (const auto& v : e.violations()) std::cerr << "  - " << v << "\n";
    return kExitInput;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEstimation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEstimation;
  }
  return kExitInput;
}
