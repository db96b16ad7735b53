#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "dcfit/rng.hpp"

namespace dcfit {

// Dense feature matrix with a recorded column schema. Columns whose observed
// values are all in {0, 1} are flagged binary; spline-based learners expand
// only the non-binary columns.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> names;
  std::vector<std::uint8_t> is_binary;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }

  // Validates finiteness and at least one row, detects binary columns.
  static FeatureMatrix make(Eigen::MatrixXd values,
                            std::vector<std::string> names);

  bool schema_matches(const std::vector<std::string>& other) const {
    return names == other;
  }
};

// --- Hyperparameter specs ---------------------------------------------------

struct MeanSpec {};

struct LogisticSpec {
  int max_iter = 200;
  double tol = 1e-8;  // max-norm of the score at convergence
};

struct GamSpec {
  int n_splines = 4;    // basis columns per continuous feature
  double ridge = 0.6;   // penalty on spline coefficients
  int max_iter = 200;
  double tol = 1e-8;
};

struct ForestSpec {
  int n_trees = 500;
  int min_leaf = 20;
};

struct NetSpec {
  int hidden = 4;
  int epochs = 2000;
  double learning_rate = 0.05;
};

using LearnerSpec =
    std::variant<MeanSpec, LogisticSpec, GamSpec, ForestSpec, NetSpec>;

std::string learner_kind(const LearnerSpec& spec);

// --- Fitted models ----------------------------------------------------------

struct MeanModel {
  double mean = 0.0;
};

struct LogisticModel {
  Eigen::VectorXd beta;  // intercept first
};

struct GamModel {
  // Knot sequences per original column; empty for binary columns, which
  // enter the design linearly.
  std::vector<std::vector<double>> knots;
  // Standardization of the expanded design (intercept excluded).
  Eigen::VectorXd center;
  Eigen::VectorXd scale;
  Eigen::VectorXd beta;  // intercept first, then expanded columns
  int n_splines = 0;
};

struct TreeNode {
  int feature = -1;      // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double prob = 0.0;     // leaf class-1 proportion
  int count = 0;         // training rows (with multiplicity) in this node
};

struct Tree {
  std::vector<TreeNode> nodes;
};

struct ForestModel {
  std::vector<Tree> trees;
  int min_leaf = 0;
};

struct NetModel {
  Eigen::VectorXd center;
  Eigen::VectorXd scale;
  Eigen::MatrixXd w1;  // inputs x hidden
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;  // hidden
  double b2 = 0.0;
};

struct FittedLearner {
  std::string kind;
  std::vector<std::string> schema;  // training column names
  std::variant<MeanModel, LogisticModel, GamModel, ForestModel, NetModel>
      model;
};

// --- Fitting ----------------------------------------------------------------

FittedLearner fit_empirical_mean(const FeatureMatrix& X,
                                 const Eigen::VectorXd& y);

FittedLearner fit_logistic(const FeatureMatrix& X, const Eigen::VectorXd& y,
                           int max_iter = 200, double tol = 1e-8);

// Firth bias-reduced logistic regression (Jeffreys-prior penalty). The
// penalized likelihood has a finite maximizer even under separation, so
// small-sample fits cannot send predictions to the probability boundary;
// asymptotically it targets the same coefficients as plain ML.
FittedLearner fit_logistic_firth(const FeatureMatrix& X,
                                 const Eigen::VectorXd& y, int max_iter = 200,
                                 double tol = 1e-8);

FittedLearner fit_gam(const FeatureMatrix& X, const Eigen::VectorXd& y,
                      int n_splines, double ridge_penalty,
                      int max_iter = 200, double tol = 1e-8);

FittedLearner fit_random_forest(const FeatureMatrix& X,
                                const Eigen::VectorXd& y, int n_trees,
                                int min_leaf, Rng& rng);

FittedLearner fit_neural_net(const FeatureMatrix& X, const Eigen::VectorXd& y,
                             int hidden, Rng& rng, int epochs,
                             double learning_rate);

// Dispatch on a spec; stochastic learners draw from `rng`.
FittedLearner fit_learner(const LearnerSpec& spec, const FeatureMatrix& X,
                          const Eigen::VectorXd& y, Rng& rng);

// Predicted class-1 probabilities; throws SchemaError when the columns of X
// do not match the training schema.
Eigen::VectorXd predict_prob(const FittedLearner& model,
                             const FeatureMatrix& X);

// --- Neural-net internals exposed for gradient verification ------------------

namespace detail {

struct NetParams {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;
  double b2 = 0.0;
};

double net_loss(const NetParams& p, const Eigen::MatrixXd& X,
                const Eigen::VectorXd& y);

NetParams net_gradient(const NetParams& p, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y);

}  // namespace detail

}  // namespace dcfit
