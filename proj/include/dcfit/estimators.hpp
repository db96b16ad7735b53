#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dcfit {

struct Dataset;
struct NuisanceSpec;

enum class EstimatorKind {
  kGComp,
  kIpw,
  kAipw,
  kTmle,
  kDcAipw,
  kDcTmle,
};

std::string estimator_name(EstimatorKind kind);
EstimatorKind estimator_from_name(const std::string& name);

// Probability bounds applied to nuisance predictions before estimation.
// Mild symmetric clipping keeps inverse weights finite under random
// positivity violations; every clipped entry is counted.
struct Bounds {
  double pi_lo = 0.001;
  double pi_hi = 0.999;
  double m_lo = 1e-6;
  double m_hi = 1.0 - 1e-6;
};

struct NuisanceScores {
  Eigen::ArrayXd pi;  // treatment probabilities
  Eigen::ArrayXd m1;  // outcome predictions under x = 1
  Eigen::ArrayXd m0;  // outcome predictions under x = 0
  std::string provenance;
  int clip_count = 0;

  std::size_t n() const { return static_cast<std::size_t>(pi.size()); }

  // Clips into the bounds and counts clipped entries.
  static NuisanceScores bounded(Eigen::ArrayXd pi, Eigen::ArrayXd m1,
                                Eigen::ArrayXd m0, const Bounds& bounds,
                                std::string provenance);

  // No clipping; used where exact pass-through is required.
  static NuisanceScores raw(Eigen::ArrayXd pi, Eigen::ArrayXd m1,
                            Eigen::ArrayXd m0, std::string provenance);
};

struct AceEstimate {
  std::string method;
  std::string nuisance;
  double psi = 0.0;
  double se = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  // (n-1)-denominator variance of the per-observation contributions; the
  // reported se is sqrt(ic_var / n).
  double ic_var = 0.0;
  std::optional<Eigen::ArrayXd> ic;
  int clip_count = 0;
};

// Plug-in risk difference: mean(m1) - mean(m0).
double g_computation(const Eigen::ArrayXd& m1, const Eigen::ArrayXd& m0);

// Horvitz-Thompson inverse-probability-weighted estimator with the
// weights-treated-as-known variance. `hajek` switches to the normalized
// (ratio) form.
AceEstimate ipw(const std::vector<int>& x, const std::vector<int>& y,
                const Eigen::ArrayXd& pi, bool hajek = false,
                bool keep_ic = false);

// H(x, z) = x/pi - (1-x)/(1-pi).
Eigen::ArrayXd clever_covariate(const std::vector<int>& x,
                                const Eigen::ArrayXd& pi);

AceEstimate aipw(const std::vector<int>& x, const std::vector<int>& y,
                 const NuisanceScores& scores, bool keep_ic = false);

struct TargetingResult {
  double epsilon = 0.0;
  Eigen::ArrayXd m1_star;
  Eigen::ArrayXd m0_star;
  int iterations = 0;
};

// One-parameter logistic fluctuation of the outcome predictions along the
// clever covariate (offset = logit of the bounded predictions, no
// intercept), followed by the influence-curve variance computed from the
// targeted predictions.
std::pair<TargetingResult, AceEstimate> tmle(const std::vector<int>& x,
                                             const std::vector<int>& y,
                                             const NuisanceScores& scores,
                                             bool keep_ic = false);

// Standard deviation of B re-estimates, each refitting the nuisance models
// required by `estimator` on a with-replacement resample of size n.
// Individual resample failures are skipped and counted; more than 10%
// failures is an error.
double bootstrap_se(const Dataset& data, const NuisanceSpec& spec,
                    EstimatorKind estimator, int b, std::uint64_t seed,
                    int threads = 1, int* failures_out = nullptr);

}  // namespace dcfit
