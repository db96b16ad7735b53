#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "dcfit/dataset.hpp"
#include "dcfit/estimators.hpp"
#include "dcfit/nuisance.hpp"

namespace dcfit {

// A 3-way disjoint cover of row indices plus the fixed rotation that routes
// each split's treatment predictions (gamma) and outcome predictions (eta)
// to models fit on two different other splits.
struct PartitionScheme {
  std::vector<std::uint8_t> split;          // per-row split id in {0, 1, 2}
  std::array<std::vector<int>, 3> rows;     // row indices per split
  // Rotation: split s is scored with the treatment model fit on
  // gamma_source[s] and the outcome model fit on eta_source[s]. Fixed to
  // {1, 2, 0} / {2, 0, 1}: a derangement with gamma and eta always drawn
  // from distinct splits.
  std::array<int, 3> gamma_source{1, 2, 0};
  std::array<int, 3> eta_source{2, 0, 1};
};

PartitionScheme make_partition(std::size_t n, Rng& rng);

enum class Aggregation { kMedian, kMean };

struct PartitionEstimate {
  double ace = 0.0;      // mean of the 3 split point estimates
  double var_unit = 0.0; // mean of the 3 split IC variances
  int clip_count = 0;
};

// Fitter interfaces so tests can substitute instrumented models.
using TreatmentFitter = std::function<TreatmentModel(
    const Dataset& split_data, std::uint64_t seed)>;
using OutcomeFitter = std::function<OutcomeModel(const Dataset& split_data,
                                                 std::uint64_t seed)>;

// One partition: six nuisance fits (treatment + outcome per split), each
// split scored by its rotation-discordant models, the chosen doubly-robust
// estimator applied within each split (including the targeting step for
// TMLE), then split estimates and variances averaged.
PartitionEstimate crossfit_once(const Dataset& data,
                                const TreatmentFitter& fit_treatment,
                                const OutcomeFitter& fit_outcome,
                                EstimatorKind dr_estimator, const Bounds& bounds,
                                const PartitionScheme& scheme,
                                std::uint64_t seed);

// Same partition evaluated by several doubly-robust estimators from one set
// of six nuisance fits; element k corresponds to dr_estimators[k]. With
// equal seeds this is bitwise-identical to separate crossfit_once calls,
// because estimation after the fits consumes no randomness.
std::vector<PartitionEstimate> crossfit_once_multi(
    const Dataset& data, const TreatmentFitter& fit_treatment,
    const OutcomeFitter& fit_outcome,
    const std::vector<EstimatorKind>& dr_estimators, const Bounds& bounds,
    const PartitionScheme& scheme, std::uint64_t seed);

struct CrossfitResult {
  std::string method;
  std::string nuisance;
  std::vector<double> partition_aces;  // successful partitions only
  std::vector<double> partition_vars;
  double psi = 0.0;
  double var_unit = 0.0;  // combined per-observation variance
  double se = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  int partitions_requested = 0;
  int failures = 0;
  int clip_count = 0;

  AceEstimate to_estimate() const;
};

struct CrossfitOptions {
  int partitions = 100;
  Aggregation aggregation = Aggregation::kMedian;
  int threads = 1;
};

// Repeats crossfit_once over p independent partitions and aggregates:
// psi = median(ACE_p), combined variance = median(Var_p + (ACE_p - psi)^2).
// Partitions whose fits fail are skipped and counted; more than 10% failed
// partitions is an error. `mean` aggregation replaces both medians.
CrossfitResult run_crossfit(const Dataset& data, const NuisanceSpec& spec,
                            EstimatorKind dr_estimator, std::uint64_t seed,
                            const CrossfitOptions& options);

// Runs several doubly-robust estimators over the same p partitions and
// nuisance fits; equal to separate run_crossfit calls at the same seed.
std::vector<CrossfitResult> run_crossfit_multi(
    const Dataset& data, const NuisanceSpec& spec,
    const std::vector<EstimatorKind>& dr_estimators, std::uint64_t seed,
    const CrossfitOptions& options);

// Sample median: midpoint of the two central order statistics for even
// counts.
double median(std::vector<double> values);

}  // namespace dcfit
