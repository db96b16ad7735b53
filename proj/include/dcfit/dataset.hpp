#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dcfit/dgm.hpp"

namespace dcfit {

// Estimator-facing view of a cohort: confounders (age, log-LDL, diabetes,
// risk score), treatment and outcome. Latent frailty and the potential
// outcomes never enter this type.
struct Dataset {
  std::vector<double> age;
  std::vector<double> log_ldl;
  std::vector<int> diabetes;
  std::vector<double> risk_score;
  std::vector<int> x;
  std::vector<int> y;

  std::size_t n() const { return x.size(); }

  static Dataset from_sample(const GeneratedSample& sample);

  // Row subset (with repetition allowed, e.g. bootstrap resamples).
  Dataset subset(const std::vector<int>& rows) const;
};

// Reads a dataset CSV. Requires columns A,L,D,R,X,Y by header name; extra
// columns (e.g. the oracle view's F,Y0,Y1) are ignored.
Dataset read_dataset_csv(const std::string& path);

// Writes the estimator view (A,L,D,R,X,Y) or, when oracle_view is set, the
// full mechanism view (A,L,D,F,R,X,Y0,Y1,Y). Floats carry 17 significant
// digits so files round-trip bit-exactly.
void write_sample_csv(const GeneratedSample& sample, const std::string& path,
                      bool oracle_view);

}  // namespace dcfit
