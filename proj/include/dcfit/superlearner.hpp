#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dcfit/learners.hpp"

namespace dcfit {

struct LibraryEntry {
  std::string name;
  LearnerSpec spec;
};

// Ordered learner library; names must be unique and, for meaningful
// stacking, at least two entries are expected (a singleton degenerates to
// weight 1 on its only member).
using LearnerLibrary = std::vector<LibraryEntry>;

struct SuperLearnerModel {
  std::vector<LibraryEntry> library;
  std::vector<FittedLearner> full_fits;   // empty slot for dropped learners
  std::vector<std::uint8_t> dropped;      // 1 when a learner failed somewhere
  Eigen::VectorXd weights;                // simplex; exactly 0 for dropped
  std::vector<int> fold_of;               // validation fold per training row
  Eigen::VectorXd cv_risk;                // per-learner CV log-loss (NaN if dropped)
  double cv_risk_ensemble = 0.0;          // CV log-loss of the convex combination
  std::vector<std::string> warnings;
  std::vector<std::string> schema;
};

// K-fold stacking: out-of-fold prediction columns per learner, convex
// meta-weights minimizing cross-validated log-loss, then per-learner refits
// on the full data for deployment. Learners that fail on any fold (or the
// full-data refit) are dropped with weight 0 and a recorded warning; if all
// learners drop, throws FitError.
SuperLearnerModel fit_superlearner(const LearnerLibrary& library,
                                   const FeatureMatrix& X,
                                   const Eigen::VectorXd& y, int k,
                                   Rng& rng);

Eigen::VectorXd predict_superlearner(const SuperLearnerModel& model,
                                     const FeatureMatrix& X);

// Mean Bernoulli log-loss with predictions clipped to [1e-6, 1 - 1e-6].
double log_loss(const Eigen::VectorXd& y, const Eigen::VectorXd& p);

namespace detail {

// Minimizes mean log-loss of Z*w over the probability simplex; returns the
// weight vector. Z columns are assumed already clipped away from {0, 1}.
Eigen::VectorXd solve_simplex_logloss(const Eigen::MatrixXd& Z,
                                      const Eigen::VectorXd& y,
                                      double tol = 1e-10, int max_iter = 500);

}  // namespace detail

}  // namespace dcfit
