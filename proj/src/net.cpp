#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "dcfit/errors.hpp"
#include "dcfit/learners.hpp"
#include "dcfit/math.hpp"

namespace dcfit {

namespace {

// Vectorized logistic; pre-activations are clamped so the exponential never
// overflows and probabilities stay strictly inside (0, 1).
Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return (1.0 + (-z.array().min(40.0).max(-40.0)).exp()).inverse().matrix();
}

Eigen::MatrixXd standardize(const Eigen::MatrixXd& X,
                            const Eigen::VectorXd& center,
                            const Eigen::VectorXd& scale) {
  Eigen::MatrixXd out = X;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    out.col(j) = (X.col(j).array() - center[j]) / scale[j];
  }
  return out;
}

}  // namespace

namespace detail {

double net_loss(const NetParams& p, const Eigen::MatrixXd& X,
                const Eigen::VectorXd& y) {
  const Eigen::MatrixXd hidden =
      sigmoid((X * p.w1).rowwise() + p.b1.transpose());
  const Eigen::VectorXd out = sigmoid(hidden * p.w2 + Eigen::VectorXd::Constant(
                                                          X.rows(), p.b2));
  double loss = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    loss -= y[i] == 1.0 ? std::log(out[i]) : std::log(1.0 - out[i]);
  }
  return loss / static_cast<double>(y.size());
}

NetParams net_gradient(const NetParams& p, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y) {
  const double n = static_cast<double>(X.rows());
  const Eigen::MatrixXd hidden =
      sigmoid((X * p.w1).rowwise() + p.b1.transpose());
  const Eigen::VectorXd out = sigmoid(hidden * p.w2 + Eigen::VectorXd::Constant(
                                                          X.rows(), p.b2));
  const Eigen::VectorXd delta_out = (out - y) / n;
  NetParams g;
  g.w2 = hidden.transpose() * delta_out;
  g.b2 = delta_out.sum();
  const Eigen::MatrixXd delta_hidden =
      (delta_out * p.w2.transpose()).cwiseProduct(
          hidden.cwiseProduct((1.0 - hidden.array()).matrix()));
  g.w1 = X.transpose() * delta_hidden;
  g.b1 = delta_hidden.colwise().sum();
  return g;
}

Eigen::VectorXd predict_net(const NetModel& m, const FeatureMatrix& X) {
  const Eigen::MatrixXd Xs = standardize(X.values, m.center, m.scale);
  const Eigen::MatrixXd hidden =
      sigmoid((Xs * m.w1).rowwise() + m.b1.transpose());
  return sigmoid(hidden * m.w2 +
                 Eigen::VectorXd::Constant(Xs.rows(), m.b2));
}

}  // namespace detail

FittedLearner fit_neural_net(const FeatureMatrix& X, const Eigen::VectorXd& y,
                             int hidden, Rng& rng, int epochs,
                             double learning_rate) {
  const Eigen::Index n = X.values.rows();
  const Eigen::Index p = X.values.cols();
  if (hidden < 1) throw Error("fit_neural_net: hidden units must be >= 1");
  if (epochs < 1) throw Error("fit_neural_net: epochs must be >= 1");
  if (y.size() != n) throw Error("fit_neural_net: response length mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw Error("fit_neural_net: response must be binary 0/1");
    }
  }

  NetModel model;
  model.center = X.values.colwise().mean();
  model.scale.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double sd =
        std::sqrt((X.values.col(j).array() - model.center[j]).square().sum() /
                  std::max<Eigen::Index>(1, n - 1));
    model.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  const Eigen::MatrixXd Xs = standardize(X.values, model.center, model.scale);

  // Weight initialization is drawn in a fixed order so fits reproduce
  // exactly under a fixed seed.
  detail::NetParams params;
  params.w1.resize(p, hidden);
  params.b1.resize(hidden);
  params.w2.resize(hidden);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (int k = 0; k < hidden; ++k) {
      params.w1(j, k) = rng.uniform() - 0.5;
    }
  }
  for (int k = 0; k < hidden; ++k) params.b1[k] = rng.uniform() - 0.5;
  for (int k = 0; k < hidden; ++k) params.w2[k] = rng.uniform() - 0.5;
  params.b2 = rng.uniform() - 0.5;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    const detail::NetParams grad = detail::net_gradient(params, Xs, y);
    params.w1 -= learning_rate * grad.w1;
    params.b1 -= learning_rate * grad.b1;
    params.w2 -= learning_rate * grad.w2;
    params.b2 -= learning_rate * grad.b2;
    if (!params.w1.allFinite() || !params.b1.allFinite() ||
        !params.w2.allFinite() || !std::isfinite(params.b2)) {
      throw FitError("fit_neural_net: non-finite parameters at epoch " +
                     std::to_string(epoch));
    }
  }

  model.w1 = std::move(params.w1);
  model.b1 = std::move(params.b1);
  model.w2 = std::move(params.w2);
  model.b2 = params.b2;

  FittedLearner out;
  out.kind = "net";
  out.schema = X.names;
  out.model = std::move(model);
  return out;
}

}  // namespace dcfit
