#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dcfit/errors.hpp"
#include "dcfit/learners.hpp"
#include "dcfit/math.hpp"

namespace dcfit {

namespace {

// Type-7 quantile of a sorted vector.
double quantile_sorted(const std::vector<double>& v, double q) {
  const double h = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

inline double cube_pos(double t) { return t > 0.0 ? t * t * t : 0.0; }

// Natural cubic spline basis with s+1 knots: the linear term plus s-1
// curvature terms that are linear beyond the boundary knots.
void fill_basis(double x, const std::vector<double>& kn, double* out) {
  const std::size_t s = kn.size() - 1;
  out[0] = x;
  if (s < 2) return;
  auto d = [&](std::size_t k) {
    return (cube_pos(x - kn[k]) - cube_pos(x - kn[s])) / (kn[s] - kn[k]);
  };
  const double d_last = d(s - 1);
  for (std::size_t k = 0; k + 1 < s; ++k) {
    out[k + 1] = d(k) - d_last;
  }
}

// Expands a feature matrix against precomputed knot sequences. Binary
// columns pass through untouched; continuous columns get n_splines basis
// columns each.
Eigen::MatrixXd expand_design(const FeatureMatrix& X,
                              const std::vector<std::vector<double>>& knots,
                              int n_splines) {
  Eigen::Index total = 0;
  for (const auto& kn : knots) {
    total += kn.empty() ? 1 : n_splines;
  }
  Eigen::MatrixXd out(X.values.rows(), total);
  std::vector<double> buf(static_cast<std::size_t>(n_splines));
  Eigen::Index col = 0;
  for (std::size_t j = 0; j < knots.size(); ++j) {
    if (knots[j].empty()) {
      out.col(col++) = X.values.col(static_cast<Eigen::Index>(j));
    } else {
      for (Eigen::Index i = 0; i < X.values.rows(); ++i) {
        fill_basis(X.values(i, static_cast<Eigen::Index>(j)), knots[j],
                   buf.data());
        for (int k = 0; k < n_splines; ++k) out(i, col + k) = buf[k];
      }
      col += n_splines;
    }
  }
  return out;
}

double penalized_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& p,
                          double ridge, const Eigen::VectorXd& pen_mask,
                          const Eigen::VectorXd& beta) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    dev -= 2.0 * (y[i] == 1.0 ? std::log(p[i]) : std::log(1.0 - p[i]));
  }
  return dev + ridge * (pen_mask.array() * beta.array().square()).sum();
}

}  // namespace

FittedLearner fit_gam(const FeatureMatrix& X, const Eigen::VectorXd& y,
                      int n_splines, double ridge_penalty, int max_iter,
                      double tol) {
  if (n_splines < 1) throw Error("fit_gam: n_splines must be >= 1");
  if (ridge_penalty < 0.0) throw Error("fit_gam: ridge penalty must be >= 0");
  const Eigen::Index n = X.values.rows();
  if (y.size() != n) throw Error("fit_gam: response length mismatch");

  GamModel model;
  model.n_splines = n_splines;
  model.knots.resize(X.names.size());
  for (std::size_t j = 0; j < X.names.size(); ++j) {
    if (X.is_binary[j]) continue;  // enters linearly
    std::vector<double> vals(X.values.col(static_cast<Eigen::Index>(j)).data(),
                             X.values.col(static_cast<Eigen::Index>(j)).data() +
                                 n);
    std::sort(vals.begin(), vals.end());
    const auto distinct =
        std::unique(vals.begin(), vals.end()) - vals.begin();
    if (distinct < n_splines) {
      throw FitError("fit_gam: column " + X.names[j] +
                     " has fewer distinct values than the spline basis size");
    }
    std::vector<double> kn(static_cast<std::size_t>(n_splines) + 1);
    for (int t = 0; t <= n_splines; ++t) {
      kn[static_cast<std::size_t>(t)] = quantile_sorted(
          vals, static_cast<double>(t) / static_cast<double>(n_splines));
    }
    for (std::size_t k = 0; k + 1 < kn.size(); ++k) {
      if (!(kn[k] < kn[k + 1])) {
        throw FitError("fit_gam: degenerate quantile knots for column " +
                       X.names[j]);
      }
    }
    model.knots[j] = std::move(kn);
  }

  Eigen::MatrixXd basis = expand_design(X, model.knots, n_splines);
  const Eigen::Index pb = basis.cols();

  // Standardize the expanded design so the ridge penalty is scale-free.
  model.center = basis.colwise().mean();
  model.scale.resize(pb);
  for (Eigen::Index j = 0; j < pb; ++j) {
    const double sd = std::sqrt(
        (basis.col(j).array() - model.center[j]).square().sum() /
        std::max<Eigen::Index>(1, n - 1));
    model.scale[j] = sd > 0.0 ? sd : 1.0;
    basis.col(j) = (basis.col(j).array() - model.center[j]) / model.scale[j];
  }

  Eigen::MatrixXd design(n, pb + 1);
  design.col(0).setOnes();
  design.rightCols(pb) = basis;

  // Penalty mask: spline-basis coefficients only.
  Eigen::VectorXd pen_mask = Eigen::VectorXd::Zero(pb + 1);
  {
    Eigen::Index col = 1;
    for (std::size_t j = 0; j < model.knots.size(); ++j) {
      if (model.knots[j].empty()) {
        col += 1;
      } else {
        for (int k = 0; k < n_splines; ++k) pen_mask[col + k] = 1.0;
        col += n_splines;
      }
    }
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(pb + 1);
  Eigen::VectorXd prob(n);
  auto probs_for = [&](const Eigen::VectorXd& b, Eigen::VectorXd& out) {
    Eigen::VectorXd eta = design * b;
    for (Eigen::Index i = 0; i < n; ++i) out[i] = expit(eta[i]);
  };
  probs_for(beta, prob);
  double obj = penalized_deviance(y, prob, ridge_penalty, pen_mask, beta);

  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::VectorXd score = design.transpose() * (y - prob) -
                            ridge_penalty * pen_mask.cwiseProduct(beta);
    if (score.cwiseAbs().maxCoeff() <= tol) {
      model.beta = beta;
      FittedLearner out;
      out.kind = "gam";
      out.schema = X.names;
      out.model = std::move(model);
      return out;
    }
    Eigen::VectorXd w = (prob.array() * (1.0 - prob.array())).cwiseMax(1e-10);
    Eigen::MatrixXd hess = design.transpose() * w.asDiagonal() * design;
    hess.diagonal() += ridge_penalty * pen_mask;
    Eigen::VectorXd delta = hess.ldlt().solve(score);

    double step = 1.0;
    Eigen::VectorXd cand(pb + 1), cand_prob(n);
    double cand_obj = 0.0;
    for (int h = 0; h < 30; ++h) {
      cand = beta + step * delta;
      probs_for(cand, cand_prob);
      cand_obj = penalized_deviance(y, cand_prob, ridge_penalty, pen_mask, cand);
      if (cand_obj <= obj + 1e-10) break;
      step *= 0.5;
    }
    beta = cand;
    prob = cand_prob;
    const double obj_change = obj - cand_obj;
    obj = cand_obj;

    // Objective stall at machine precision: boundary maximum along an
    // unpenalized direction; the fit is usable after clipping downstream.
    if (obj_change >= 0.0 && obj_change <= 1e-11 * (0.1 + std::abs(obj))) {
      model.beta = beta;
      FittedLearner out;
      out.kind = "gam";
      out.schema = X.names;
      out.model = std::move(model);
      return out;
    }

    // The truncated-power basis is nearly collinear, so boundary fits can
    // carry large opposing coefficients; only runaway growth is an error.
    if (beta.cwiseAbs().maxCoeff() > 1e8) {
      throw ConvergenceError("fit_gam: coefficients diverging "
                             "(likely separation on the spline basis)");
    }
  }
  throw ConvergenceError("fit_gam: no convergence after " +
                         std::to_string(max_iter) + " iterations");
}

namespace detail {

Eigen::VectorXd predict_gam(const GamModel& m, const FeatureMatrix& X) {
  Eigen::MatrixXd basis = expand_design(X, m.knots, m.n_splines);
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    basis.col(j) = (basis.col(j).array() - m.center[j]) / m.scale[j];
  }
  Eigen::VectorXd eta =
      Eigen::VectorXd::Constant(basis.rows(), m.beta[0]);
  eta.noalias() += basis * m.beta.tail(m.beta.size() - 1);
  Eigen::VectorXd p(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) p[i] = expit(eta[i]);
  return p;
}

}  // namespace detail

}  // namespace dcfit
