#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "dcfit/errors.hpp"
#include "dcfit/learners.hpp"
#include "dcfit/math.hpp"

namespace dcfit {

namespace {

double deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& p) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    dev -= 2.0 * (y[i] == 1.0 ? std::log(p[i]) : std::log(1.0 - p[i]));
  }
  return dev;
}

std::string column_name(const std::vector<std::string>& names, Eigen::Index j) {
  return j == 0 ? std::string("(intercept)") : names[j - 1];
}

}  // namespace

FittedLearner fit_logistic(const FeatureMatrix& X, const Eigen::VectorXd& y,
                           int max_iter, double tol) {
  const Eigen::Index n = X.values.rows();
  const Eigen::Index p = X.values.cols() + 1;
  if (y.size() != n) throw Error("fit_logistic: response length mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw Error("fit_logistic: response must be binary 0/1");
    }
  }

  Eigen::MatrixXd design(n, p);
  design.col(0).setOnes();
  design.rightCols(p - 1) = X.values;

  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < p) {
      const auto perm = qr.colsPermutation().indices();
      std::string cols;
      for (Eigen::Index k = qr.rank(); k < p; ++k) {
        if (!cols.empty()) cols += ", ";
        cols += column_name(X.names, perm[k]);
      }
      throw FitError("fit_logistic: design matrix is rank deficient after "
                     "intercept augmentation; dependent columns: " + cols);
    }
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd prob(n);
  auto probs_for = [&](const Eigen::VectorXd& b, Eigen::VectorXd& out) {
    Eigen::VectorXd eta = design * b;
    for (Eigen::Index i = 0; i < n; ++i) out[i] = expit(eta[i]);
  };
  probs_for(beta, prob);
  double dev = deviance(y, prob);

  // Complete separation flattens the likelihood for every observation and
  // leaves no usable maximum; it is reported as an error. Quasi-separation
  // (a few saturated cells, the rest interior) converges to a boundary fit
  // whose predictions remain usable after downstream probability bounding,
  // matching standard GLM behavior.
  auto completely_separated = [&](const Eigen::VectorXd& p) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double resid = std::abs(y[i] - p[i]);
      if (resid > 1e-6) return false;
    }
    return true;
  };

  auto finish = [&]() {
    if (completely_separated(prob)) {
      Eigen::Index jmax = 0;
      beta.cwiseAbs().maxCoeff(&jmax);
      throw ConvergenceError(
          "fit_logistic: complete separation (every observation "
          "perfectly classified); largest coefficient on column " +
          column_name(X.names, jmax));
    }
    FittedLearner out;
    out.kind = "logistic";
    out.schema = X.names;
    out.model = LogisticModel{beta};
    return out;
  };

  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::VectorXd score = design.transpose() * (y - prob);
    if (score.cwiseAbs().maxCoeff() <= tol) return finish();

    Eigen::VectorXd w = (prob.array() * (1.0 - prob.array())).cwiseMax(1e-10);
    Eigen::MatrixXd hess =
        design.transpose() * w.asDiagonal() * design;
    Eigen::VectorXd delta = hess.ldlt().solve(score);

    double step = 1.0;
    Eigen::VectorXd cand(p), cand_prob(n);
    double cand_dev = 0.0;
    for (int h = 0; h < 30; ++h) {
      cand = beta + step * delta;
      probs_for(cand, cand_prob);
      cand_dev = deviance(y, cand_prob);
      if (cand_dev <= dev + 1e-10) break;
      step *= 0.5;
    }
    beta = cand;
    prob = cand_prob;
    const double dev_change = dev - cand_dev;
    dev = cand_dev;

    // A deviance stall at machine precision with a nonzero score marks a
    // boundary maximum (quasi-separation); the fit is still usable.
    if (dev_change >= 0.0 && dev_change <= 1e-11 * (0.1 + std::abs(dev))) {
      return finish();
    }

    if (beta.cwiseAbs().maxCoeff() > 1e3) {
      Eigen::Index jmax = 0;
      beta.cwiseAbs().maxCoeff(&jmax);
      throw ConvergenceError(
          "fit_logistic: coefficients diverging (likely separation); "
          "largest coefficient on column " + column_name(X.names, jmax));
    }
  }

  Eigen::Index jmax = 0;
  beta.cwiseAbs().maxCoeff(&jmax);
  throw ConvergenceError(
      "fit_logistic: no convergence after " + std::to_string(max_iter) +
      " iterations; coefficients still moving, largest on column " +
      column_name(X.names, jmax));
}

FittedLearner fit_logistic_firth(const FeatureMatrix& X,
                                 const Eigen::VectorXd& y, int max_iter,
                                 double tol) {
  const Eigen::Index n = X.values.rows();
  const Eigen::Index p = X.values.cols() + 1;
  if (y.size() != n) throw Error("fit_logistic_firth: response length mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw Error("fit_logistic_firth: response must be binary 0/1");
    }
  }

  Eigen::MatrixXd design(n, p);
  design.col(0).setOnes();
  design.rightCols(p - 1) = X.values;
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < p) {
      const auto perm = qr.colsPermutation().indices();
      std::string cols;
      for (Eigen::Index k = qr.rank(); k < p; ++k) {
        if (!cols.empty()) cols += ", ";
        cols += column_name(X.names, perm[k]);
      }
      throw FitError("fit_logistic_firth: design matrix is rank deficient; "
                     "dependent columns: " + cols);
    }
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd prob(n), hat(n);

  // Penalized log-likelihood: l(beta) + 0.5 * logdet(X'WX).
  auto penalized = [&](const Eigen::VectorXd& b, Eigen::VectorXd& pr) {
    Eigen::VectorXd eta = design * b;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      pr[i] = expit(eta[i]);
      ll += y[i] == 1.0 ? std::log(pr[i]) : std::log(1.0 - pr[i]);
    }
    const Eigen::VectorXd w =
        (pr.array() * (1.0 - pr.array())).cwiseMax(1e-10);
    const Eigen::MatrixXd info = design.transpose() * w.asDiagonal() * design;
    return ll + 0.5 * std::log(info.ldlt().vectorD().cwiseMax(1e-300).prod());
  };

  double obj = penalized(beta, prob);
  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::VectorXd w =
        (prob.array() * (1.0 - prob.array())).cwiseMax(1e-10);
    const Eigen::MatrixXd info = design.transpose() * w.asDiagonal() * design;
    const auto solver = info.ldlt();
    // Hat-matrix diagonal h_i = w_i * x_i' (X'WX)^-1 x_i.
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd xi = design.row(i);
      hat[i] = w[i] * xi.dot(solver.solve(xi));
    }
    Eigen::VectorXd resid(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      resid[i] = y[i] - prob[i] + hat[i] * (0.5 - prob[i]);
    }
    const Eigen::VectorXd score = design.transpose() * resid;
    if (score.cwiseAbs().maxCoeff() <= tol) break;
    const Eigen::VectorXd delta = solver.solve(score);

    double step = 1.0;
    Eigen::VectorXd cand(p), cand_prob(n);
    double cand_obj = 0.0;
    bool moved = false;
    for (int h = 0; h < 40; ++h) {
      cand = beta + step * delta;
      cand_obj = penalized(cand, cand_prob);
      if (cand_obj >= obj - 1e-12) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;  // stalled at numerical precision
    const double gain = cand_obj - obj;
    beta = cand;
    prob = cand_prob;
    obj = cand_obj;
    if (gain <= 1e-11 * (0.1 + std::abs(obj))) break;
  }

  FittedLearner out;
  out.kind = "logistic-firth";
  out.schema = X.names;
  out.model = LogisticModel{beta};
  return out;
}

}  // namespace dcfit
