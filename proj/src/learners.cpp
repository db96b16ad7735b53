#include "dcfit/learners.hpp"

#include <cmath>
#include <stdexcept>

#include "dcfit/errors.hpp"
#include "dcfit/math.hpp"

namespace dcfit {

FeatureMatrix FeatureMatrix::make(Eigen::MatrixXd values,
                                  std::vector<std::string> names) {
  if (values.rows() < 1) throw Error("FeatureMatrix: at least one row required");
  if (static_cast<std::size_t>(values.cols()) != names.size()) {
    throw Error("FeatureMatrix: column/name count mismatch");
  }
  if (!values.allFinite()) {
    throw Error("FeatureMatrix: non-finite entries are not allowed");
  }
  FeatureMatrix fm;
  fm.is_binary.resize(names.size(), 1);
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      const double v = values(i, j);
      if (v != 0.0 && v != 1.0) {
        fm.is_binary[static_cast<std::size_t>(j)] = 0;
        break;
      }
    }
  }
  fm.values = std::move(values);
  fm.names = std::move(names);
  return fm;
}

std::string learner_kind(const LearnerSpec& spec) {
  struct Visitor {
    std::string operator()(const MeanSpec&) const { return "mean"; }
    std::string operator()(const LogisticSpec&) const { return "logistic"; }
    std::string operator()(const GamSpec&) const { return "gam"; }
    std::string operator()(const ForestSpec&) const { return "forest"; }
    std::string operator()(const NetSpec&) const { return "net"; }
  };
  return std::visit(Visitor{}, spec);
}

namespace {

void check_binary_response(const FeatureMatrix& X, const Eigen::VectorXd& y) {
  if (y.size() != X.values.rows()) {
    throw Error("response length does not match feature rows");
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw Error("response must be binary 0/1");
    }
  }
}

}  // namespace

FittedLearner fit_empirical_mean(const FeatureMatrix& X,
                                 const Eigen::VectorXd& y) {
  check_binary_response(X, y);
  FittedLearner out;
  out.kind = "mean";
  out.schema = X.names;
  out.model = MeanModel{y.mean()};
  return out;
}

FittedLearner fit_learner(const LearnerSpec& spec, const FeatureMatrix& X,
                          const Eigen::VectorXd& y, Rng& rng) {
  struct Visitor {
    const FeatureMatrix& X;
    const Eigen::VectorXd& y;
    Rng& rng;
    FittedLearner operator()(const MeanSpec&) const {
      return fit_empirical_mean(X, y);
    }
    FittedLearner operator()(const LogisticSpec& s) const {
      return fit_logistic(X, y, s.max_iter, s.tol);
    }
    FittedLearner operator()(const GamSpec& s) const {
      return fit_gam(X, y, s.n_splines, s.ridge, s.max_iter, s.tol);
    }
    FittedLearner operator()(const ForestSpec& s) const {
      return fit_random_forest(X, y, s.n_trees, s.min_leaf, rng);
    }
    FittedLearner operator()(const NetSpec& s) const {
      return fit_neural_net(X, y, s.hidden, rng, s.epochs, s.learning_rate);
    }
  };
  return std::visit(Visitor{X, y, rng}, spec);
}

namespace detail {
Eigen::VectorXd predict_gam(const GamModel& m, const FeatureMatrix& X);
Eigen::VectorXd predict_forest(const ForestModel& m, const FeatureMatrix& X);
Eigen::VectorXd predict_net(const NetModel& m, const FeatureMatrix& X);
}  // namespace detail

Eigen::VectorXd predict_prob(const FittedLearner& model,
                             const FeatureMatrix& X) {
  if (!X.schema_matches(model.schema)) {
    std::string msg = "schema mismatch: model trained on [";
    for (std::size_t j = 0; j < model.schema.size(); ++j) {
      if (j) msg += ",";
      msg += model.schema[j];
    }
    msg += "], got [";
    for (std::size_t j = 0; j < X.names.size(); ++j) {
      if (j) msg += ",";
      msg += X.names[j];
    }
    msg += "]";
    throw SchemaError(msg);
  }

  struct Visitor {
    const FeatureMatrix& X;
    Eigen::VectorXd operator()(const MeanModel& m) const {
      return Eigen::VectorXd::Constant(X.values.rows(), m.mean);
    }
    Eigen::VectorXd operator()(const LogisticModel& m) const {
      Eigen::VectorXd eta =
          Eigen::VectorXd::Constant(X.values.rows(), m.beta[0]);
      eta.noalias() += X.values * m.beta.tail(m.beta.size() - 1);
      Eigen::VectorXd p(eta.size());
      for (Eigen::Index i = 0; i < eta.size(); ++i) p[i] = expit(eta[i]);
      return p;
    }
    Eigen::VectorXd operator()(const GamModel& m) const {
      return detail::predict_gam(m, X);
    }
    Eigen::VectorXd operator()(const ForestModel& m) const {
      return detail::predict_forest(m, X);
    }
    Eigen::VectorXd operator()(const NetModel& m) const {
      return detail::predict_net(m, X);
    }
  };
  return std::visit(Visitor{X}, model.model);
}

}  // namespace dcfit
