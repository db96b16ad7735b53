#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dcfit/crossfit.hpp"
#include "dcfit/dgm.hpp"
#include "dcfit/dataset.hpp"
#include "dcfit/estimators.hpp"
#include "dcfit/nuisance.hpp"

namespace dcfit {

struct SimConfig {
  std::size_t n = 3000;
  int replicates = 2000;
  std::size_t oracle_size = 10'000'000;
  std::vector<EstimatorKind> estimators{
      EstimatorKind::kGComp, EstimatorKind::kIpw,    EstimatorKind::kAipw,
      EstimatorKind::kTmle,  EstimatorKind::kDcAipw, EstimatorKind::kDcTmle};
  std::vector<NuisanceKind> nuisances{NuisanceKind::kCorrect,
                                      NuisanceKind::kMainEffects,
                                      NuisanceKind::kSuperLearner};
  LearnerLibrary sl_library;
  int sl_folds = 10;
  int partitions = 100;
  int bootstrap_b = 250;
  Aggregation aggregation = Aggregation::kMedian;
  Bounds bounds;
  std::uint64_t seed = 0;
  bool has_seed = false;
  int threads = 0;  // 0 = hardware concurrency
  // Programmatic mechanism switches (not part of the config file schema);
  // used by null-effect self-consistency checks.
  DgmOptions dgm;
};

// Full-scale settings matching the published study sizes.
SimConfig paper_preset();
// Workstation-scale settings: fewer replicates and partitions, a smaller
// bootstrap, 5-fold stacking and lighter forest/net members.
SimConfig desk_preset();

LearnerLibrary paper_sl_library();
LearnerLibrary desk_sl_library();

struct MetricsRow {
  std::string estimator;
  std::string nuisance;
  double bias = 0.0;
  double ese = 0.0;   // (n-1)-denominator SD of the point estimates
  double rmse = 0.0;  // sqrt(bias^2 + ese^2)
  double ase = 0.0;   // mean estimated standard error
  double cld = 0.0;   // mean CI width
  double coverage = 0.0;
  int n_used = 0;
  int failures = 0;
};

MetricsRow compute_metrics(const std::vector<AceEstimate>& estimates,
                           double truth, const std::string& estimator,
                           const std::string& nuisance, int failures = 0);

struct CampaignResult {
  std::vector<MetricsRow> rows;
  double oracle_psi = 0.0;
  std::uint64_t oracle_seed = 0;
  SimConfig config;
};

// Monte Carlo campaign: per replicate one generated sample is analyzed by
// every grid cell (estimator x nuisance), paired across cells, with the
// cached brute-force oracle as the shared truth. Deterministic in the
// master seed, regardless of thread count.
CampaignResult run_campaign(const SimConfig& config);

void write_metrics_csv(const std::vector<MetricsRow>& rows,
                       const std::string& path);
void write_manifest(const CampaignResult& result, const std::string& path);
std::string config_to_text(const SimConfig& config);

// Options for single-dataset analysis (the CLI `analyze` path).
struct AnalyzeOptions {
  int bootstrap_b = 250;
  int partitions = 100;
  Aggregation aggregation = Aggregation::kMedian;
  bool hajek = false;
  int threads = 1;
  // When set, per-partition estimates of a cross-fit run are written here.
  std::optional<std::string> partition_dump;
};

AceEstimate analyze_dataset(const Dataset& data, EstimatorKind estimator,
                            const NuisanceSpec& spec, std::uint64_t seed,
                            const AnalyzeOptions& options);

struct StabilityRow {
  int p = 0;
  int reruns = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

// Re-runs the cross-fit procedure `reruns` times per partition count with
// fresh partition seeds and summarizes the spread of the aggregated point
// estimate.
std::vector<StabilityRow> stability_study(const Dataset& data,
                                          EstimatorKind dr_estimator,
                                          const NuisanceSpec& spec,
                                          const std::vector<int>& p_values,
                                          int reruns, std::uint64_t seed,
                                          int threads = 1);

void write_stability_csv(const std::vector<StabilityRow>& rows,
                         const std::string& path);

}  // namespace dcfit
