#include "dcfit/nuisance.hpp"

#include <cmath>

#include "dcfit/errors.hpp"

namespace dcfit {

std::string nuisance_kind_name(NuisanceKind kind) {
  switch (kind) {
    case NuisanceKind::kCorrect: return "correct";
    case NuisanceKind::kMainEffects: return "main-effects";
    case NuisanceKind::kSuperLearner: return "ml";
    case NuisanceKind::kNullStub: return "null-stub";
  }
  throw Error("unknown nuisance kind");
}

NuisanceKind nuisance_from_name(const std::string& name) {
  if (name == "correct") return NuisanceKind::kCorrect;
  if (name == "main-effects") return NuisanceKind::kMainEffects;
  if (name == "ml") return NuisanceKind::kSuperLearner;
  if (name == "null-stub") return NuisanceKind::kNullStub;
  throw ConfigError("unknown nuisance specification '" + name +
                    "' (expected correct, main-effects, ml, or null-stub)");
}

namespace {

Eigen::VectorXd to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

Eigen::VectorXd to_vec(const std::vector<int>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

}  // namespace

FeatureMatrix treatment_features_raw(const Dataset& data) {
  const Eigen::Index n = static_cast<Eigen::Index>(data.n());
  Eigen::MatrixXd m(n, 4);
  m.col(0) = to_vec(data.log_ldl);
  m.col(1) = to_vec(data.age);
  m.col(2) = to_vec(data.risk_score);
  m.col(3) = to_vec(data.diabetes);
  return FeatureMatrix::make(std::move(m), {"L", "A", "R", "D"});
}

FeatureMatrix treatment_features_correct(const Dataset& data) {
  const Eigen::Index n = static_cast<Eigen::Index>(data.n());
  const double ldl_cut = std::log(160.0);
  Eigen::MatrixXd m(n, 8);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double l = data.log_ldl[static_cast<std::size_t>(i)];
    const double a = data.age[static_cast<std::size_t>(i)];
    const double r = data.risk_score[static_cast<std::size_t>(i)];
    m(i, 0) = data.diabetes[static_cast<std::size_t>(i)];
    m(i, 1) = l;
    m(i, 2) = l > ldl_cut ? 1.0 : 0.0;
    m(i, 3) = a - 30.0;
    m(i, 4) = (a - 30.0) * (a - 30.0);
    m(i, 5) = (r >= 0.05 && r < 0.075) ? 1.0 : 0.0;
    m(i, 6) = (r >= 0.075 && r < 0.2) ? 1.0 : 0.0;
    m(i, 7) = r >= 0.2 ? 1.0 : 0.0;
  }
  return FeatureMatrix::make(
      std::move(m),
      {"D", "L", "L_high", "A30", "A30_sq", "R_mid1", "R_mid2", "R_high"});
}

FeatureMatrix outcome_features_raw(const Dataset& data, int x_override) {
  const Eigen::Index n = static_cast<Eigen::Index>(data.n());
  Eigen::MatrixXd m(n, 5);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, 0) = x_override >= 0 ? x_override : data.x[static_cast<std::size_t>(i)];
  }
  m.col(1) = to_vec(data.log_ldl);
  m.col(2) = to_vec(data.age);
  m.col(3) = to_vec(data.risk_score);
  m.col(4) = to_vec(data.diabetes);
  return FeatureMatrix::make(std::move(m), {"X", "L", "A", "R", "D"});
}

FeatureMatrix outcome_features_correct(const Dataset& data, int x_override) {
  const Eigen::Index n = static_cast<Eigen::Index>(data.n());
  const double mod_cut = std::log(130.0);
  const double high_cut = std::log(120.0);
  Eigen::MatrixXd m(n, 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double l = data.log_ldl[static_cast<std::size_t>(i)];
    const double a = data.age[static_cast<std::size_t>(i)];
    const double r = data.risk_score[static_cast<std::size_t>(i)];
    const double x =
        x_override >= 0 ? x_override : data.x[static_cast<std::size_t>(i)];
    m(i, 0) = x;
    m(i, 1) = l < mod_cut ? x * (5.0 - l) : 0.0;
    m(i, 2) = std::sqrt(a - 39.0);
    m(i, 3) = data.diabetes[static_cast<std::size_t>(i)];
    m(i, 4) = std::exp(r + 1.0);
    m(i, 5) = l > high_cut ? l * l : 0.0;
  }
  return FeatureMatrix::make(
      std::move(m), {"X", "X_ldl_mod", "sqrt_A39", "D", "exp_R1", "L2_high"});
}

Eigen::ArrayXd TreatmentModel::predict(const Dataset& data) const {
  if (std::holds_alternative<double>(impl)) {
    return Eigen::ArrayXd::Constant(static_cast<Eigen::Index>(data.n()),
                                    std::get<double>(impl));
  }
  const FeatureMatrix feats = kind == NuisanceKind::kCorrect
                                  ? treatment_features_correct(data)
                                  : treatment_features_raw(data);
  if (std::holds_alternative<SuperLearnerModel>(impl)) {
    return predict_superlearner(std::get<SuperLearnerModel>(impl), feats)
        .array();
  }
  return predict_prob(std::get<FittedLearner>(impl), feats).array();
}

Eigen::ArrayXd OutcomeModel::predict(const Dataset& data, int x) const {
  if (x != 0 && x != 1) throw Error("OutcomeModel::predict: x must be 0 or 1");
  if (std::holds_alternative<double>(impl)) {
    return Eigen::ArrayXd::Constant(static_cast<Eigen::Index>(data.n()),
                                    std::get<double>(impl));
  }
  const FeatureMatrix feats = kind == NuisanceKind::kCorrect
                                  ? outcome_features_correct(data, x)
                                  : outcome_features_raw(data, x);
  if (std::holds_alternative<SuperLearnerModel>(impl)) {
    return predict_superlearner(std::get<SuperLearnerModel>(impl), feats)
        .array();
  }
  return predict_prob(std::get<FittedLearner>(impl), feats).array();
}

TreatmentModel fit_treatment_model(const NuisanceSpec& spec,
                                   const Dataset& data, std::uint64_t seed) {
  TreatmentModel model;
  model.kind = spec.kind;
  const Eigen::VectorXd yx = [&] {
    Eigen::VectorXd v(static_cast<Eigen::Index>(data.n()));
    for (std::size_t i = 0; i < data.n(); ++i) v[static_cast<Eigen::Index>(i)] = data.x[i];
    return v;
  }();
  switch (spec.kind) {
    case NuisanceKind::kNullStub:
      model.impl = yx.mean();
      break;
    case NuisanceKind::kCorrect:
      model.impl = fit_logistic_firth(treatment_features_correct(data), yx);
      break;
    case NuisanceKind::kMainEffects:
      model.impl = fit_logistic_firth(treatment_features_raw(data), yx);
      break;
    case NuisanceKind::kSuperLearner: {
      Rng rng(seed);
      model.impl = fit_superlearner(spec.sl_library,
                                    treatment_features_raw(data), yx,
                                    spec.sl_folds, rng);
      break;
    }
  }
  return model;
}

OutcomeModel fit_outcome_model(const NuisanceSpec& spec, const Dataset& data,
                               std::uint64_t seed) {
  OutcomeModel model;
  model.kind = spec.kind;
  const Eigen::VectorXd yy = [&] {
    Eigen::VectorXd v(static_cast<Eigen::Index>(data.n()));
    for (std::size_t i = 0; i < data.n(); ++i) v[static_cast<Eigen::Index>(i)] = data.y[i];
    return v;
  }();
  switch (spec.kind) {
    case NuisanceKind::kNullStub:
      model.impl = yy.mean();
      break;
    case NuisanceKind::kCorrect:
      model.impl = fit_logistic_firth(outcome_features_correct(data, -1), yy);
      break;
    case NuisanceKind::kMainEffects:
      model.impl = fit_logistic_firth(outcome_features_raw(data, -1), yy);
      break;
    case NuisanceKind::kSuperLearner: {
      Rng rng(seed);
      model.impl = fit_superlearner(spec.sl_library,
                                    outcome_features_raw(data, -1), yy,
                                    spec.sl_folds, rng);
      break;
    }
  }
  return model;
}

NuisanceScores make_scores(const NuisanceSpec& spec, const Dataset& fit_data,
                           const Dataset& score_data, std::uint64_t seed) {
  const TreatmentModel tm =
      fit_treatment_model(spec, fit_data, derive_seed(seed, stream::kNuisance, 0));
  const OutcomeModel om =
      fit_outcome_model(spec, fit_data, derive_seed(seed, stream::kNuisance, 1));
  return NuisanceScores::bounded(tm.predict(score_data),
                                 om.predict(score_data, 1),
                                 om.predict(score_data, 0), spec.bounds,
                                 nuisance_kind_name(spec.kind));
}

}  // namespace dcfit
