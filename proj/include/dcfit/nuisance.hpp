#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "dcfit/dataset.hpp"
#include "dcfit/estimators.hpp"
#include "dcfit/superlearner.hpp"

namespace dcfit {

enum class NuisanceKind {
  kCorrect,      // mechanism's functional form, coefficients estimated
  kMainEffects,  // linear main effects only
  kSuperLearner, // stacked library on raw main-effects features
  kNullStub,     // constants; testing hook
};

std::string nuisance_kind_name(NuisanceKind kind);
NuisanceKind nuisance_from_name(const std::string& name);

struct NuisanceSpec {
  NuisanceKind kind = NuisanceKind::kCorrect;
  LearnerLibrary sl_library;  // used when kind == kSuperLearner
  int sl_folds = 10;
  Bounds bounds;
};

// Raw main-effects features for the treatment side: L, A, R, D.
FeatureMatrix treatment_features_raw(const Dataset& data);
// L, A, R, D plus the correct transforms of the assignment mechanism.
FeatureMatrix treatment_features_correct(const Dataset& data);
// X, L, A, R, D; x_override in {0, 1} replaces the treatment column,
// -1 keeps the observed one.
FeatureMatrix outcome_features_raw(const Dataset& data, int x_override);
FeatureMatrix outcome_features_correct(const Dataset& data, int x_override);

struct TreatmentModel {
  NuisanceKind kind = NuisanceKind::kCorrect;
  std::variant<FittedLearner, SuperLearnerModel, double> impl;

  Eigen::ArrayXd predict(const Dataset& data) const;
};

struct OutcomeModel {
  NuisanceKind kind = NuisanceKind::kCorrect;
  std::variant<FittedLearner, SuperLearnerModel, double> impl;

  // Counterfactual outcome predictions with the treatment column forced
  // to x.
  Eigen::ArrayXd predict(const Dataset& data, int x) const;
};

TreatmentModel fit_treatment_model(const NuisanceSpec& spec,
                                   const Dataset& data, std::uint64_t seed);
OutcomeModel fit_outcome_model(const NuisanceSpec& spec, const Dataset& data,
                               std::uint64_t seed);

// Fits both models on `fit_data` and scores `score_data`, applying the
// spec's bounds.
NuisanceScores make_scores(const NuisanceSpec& spec, const Dataset& fit_data,
                           const Dataset& score_data, std::uint64_t seed);

}  // namespace dcfit
