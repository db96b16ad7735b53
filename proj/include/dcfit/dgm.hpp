#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dcfit/math.hpp"
#include "dcfit/rng.hpp"

namespace dcfit {

// One individual's confounders. `frailty` is latent: it feeds the risk score
// but is never exposed to estimators. `v` is the intermediate uniform draw
// behind the age transform, kept for inspection and never serialized by
// estimator-facing writers.
struct CovariateRow {
  double age = 0.0;        // years, roughly [40, 75)
  double log_ldl = 0.0;    // natural-log LDL
  int diabetes = 0;        // {0, 1}
  double frailty = 0.0;    // (0, 1), latent
  double risk_score = 0.0; // (0, 1)
  double v = 0.0;          // transient
};

struct SampleRow {
  CovariateRow z;
  int x = 0;   // treatment
  int y0 = 0;  // potential outcome under x = 0
  int y1 = 0;  // potential outcome under x = 1
  int y = 0;   // observed outcome, y = x*y1 + (1-x)*y0
};

struct GeneratedSample {
  std::vector<SampleRow> rows;
  std::uint64_t seed = 0;
};

// Optional mechanism switches used by tests and null-effect studies.
struct DgmOptions {
  // Zeroes every treatment term in the outcome model, making the true
  // average causal effect exactly 0.
  bool null_treatment_effect = false;
};

// Draws covariates row by row in the order age -> log-LDL -> diabetes ->
// frailty -> risk score.
std::vector<CovariateRow> draw_covariates(std::size_t n, Rng& rng);

// Deterministic treatment assignment probability given covariates.
double treatment_prob(const CovariateRow& row);

// Deterministic outcome probability under treatment level x in {0, 1}.
// Ages below 39 are impossible under the covariate mechanism; they indicate
// a corrupted row and raise std::domain_error rather than being patched.
double outcome_prob(int x, const CovariateRow& row,
                    const DgmOptions& opts = {});

// Full cohort: covariates, treatment, both potential outcomes drawn
// independently, observed outcome by composition. Bit-identical for equal
// (n, seed).
GeneratedSample generate_sample(std::size_t n, std::uint64_t seed,
                                const DgmOptions& opts = {});

// Brute-force population average of y1 - y0. Streams the population in
// fixed-size chunks with per-chunk derived seeds, so the result does not
// depend on the thread count.
double true_ace(std::size_t population_size, std::uint64_t seed,
                int threads = 1, const DgmOptions& opts = {});

}  // namespace dcfit
