#include "dcfit/superlearner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dcfit/errors.hpp"

namespace dcfit {

namespace {

constexpr double kClipLo = 1e-6;
constexpr double kClipHi = 1.0 - 1e-6;

double clip01(double p) { return std::min(kClipHi, std::max(kClipLo, p)); }

FeatureMatrix rows_of(const FeatureMatrix& X, const std::vector<int>& rows) {
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), X.values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    sub.row(static_cast<Eigen::Index>(i)) = X.values.row(rows[i]);
  }
  FeatureMatrix out;
  out.values = std::move(sub);
  out.names = X.names;
  out.is_binary = X.is_binary;  // keep the training-time column roles
  return out;
}

Eigen::VectorXd rows_of(const Eigen::VectorXd& y, const std::vector<int>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = y[rows[i]];
  return out;
}

}  // namespace

double log_loss(const Eigen::VectorXd& y, const Eigen::VectorXd& p) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double q = clip01(p[i]);
    loss -= y[i] == 1.0 ? std::log(q) : std::log(1.0 - q);
  }
  return loss / static_cast<double>(y.size());
}

namespace detail {

namespace {
double objective_face(const Eigen::MatrixXd& Zf, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& wf) {
  const Eigen::VectorXd q = Zf * wf;
  double f = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    f -= y[i] == 1.0 ? std::log(q[i]) : std::log(1.0 - q[i]);
  }
  return f / static_cast<double>(y.size());
}
}  // namespace

Eigen::VectorXd solve_simplex_logloss(const Eigen::MatrixXd& Z,
                                      const Eigen::VectorXd& y, double tol,
                                      int max_iter) {
  const Eigen::Index n = Z.rows();
  const Eigen::Index m = Z.cols();
  if (m == 1) return Eigen::VectorXd::Ones(1);

  auto objective = [&](const Eigen::VectorXd& wv) {
    const Eigen::VectorXd q = Z * wv;
    double f = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      f -= y[i] == 1.0 ? std::log(q[i]) : std::log(1.0 - q[i]);
    }
    return f / static_cast<double>(n);
  };
  auto gradient = [&](const Eigen::VectorXd& wv) {
    const Eigen::VectorXd q = Z * wv;
    Eigen::VectorXd d(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      d[i] = (q[i] - y[i]) / (q[i] * (1.0 - q[i]));
    }
    return Eigen::VectorXd(Z.transpose() * d / static_cast<double>(n));
  };

  // Phase 1: exponentiated gradient with backtracking locates the support.
  Eigen::VectorXd w = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  double f = objective(w);
  double eta = 1.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::VectorXd g = gradient(w);
    Eigen::VectorXd cand(m);
    double fc = 0.0;
    int back = 0;
    for (; back < 50; ++back) {
      const Eigen::ArrayXd logw =
          w.array().max(1e-300).log() - eta * g.array();
      const Eigen::ArrayXd shifted = (logw - logw.maxCoeff()).exp();
      cand = (shifted / shifted.sum()).matrix();
      fc = objective(cand);
      if (fc <= f + 1e-12) break;
      eta *= 0.5;
    }
    if (back == 50) break;
    const double change = (cand - w).cwiseAbs().maxCoeff();
    w = cand;
    f = fc;
    eta = std::min(eta * 1.5, 1e4);
    if (change < 1e-10) break;
  }

  // Phase 2/3: Newton on the current face; grow or shrink the face until
  // the KKT conditions hold.
  std::vector<std::uint8_t> in_face(static_cast<std::size_t>(m), 0);
  for (Eigen::Index j = 0; j < m; ++j) {
    in_face[static_cast<std::size_t>(j)] = w[j] > 1e-10 ? 1 : 0;
  }

  for (int outer = 0; outer < 4 * static_cast<int>(m); ++outer) {
    std::vector<Eigen::Index> face;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (in_face[static_cast<std::size_t>(j)]) face.push_back(j);
    }
    const Eigen::Index nf = static_cast<Eigen::Index>(face.size());

    // Restrict to the face and renormalize.
    Eigen::VectorXd wf(nf);
    double mass = 0.0;
    for (Eigen::Index k = 0; k < nf; ++k) mass += std::max(w[face[k]], 0.0);
    for (Eigen::Index k = 0; k < nf; ++k) {
      wf[k] = mass > 0.0 ? std::max(w[face[k]], 0.0) / mass
                         : 1.0 / static_cast<double>(nf);
    }
    Eigen::MatrixXd Zf(n, nf);
    for (Eigen::Index k = 0; k < nf; ++k) Zf.col(k) = Z.col(face[k]);

    // Equality-constrained Newton to high precision on this face.
    bool shrank = false;
    for (int iter = 0; iter < 100; ++iter) {
      const Eigen::VectorXd qf = Zf * wf;
      Eigen::VectorXd d(n), h(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        d[i] = (qf[i] - y[i]) / (qf[i] * (1.0 - qf[i]));
        h[i] = y[i] / (qf[i] * qf[i]) +
               (1.0 - y[i]) / ((1.0 - qf[i]) * (1.0 - qf[i]));
      }
      const Eigen::VectorXd gf =
          Zf.transpose() * d / static_cast<double>(n);
      // Reduced gradient w.r.t. the sum-to-one constraint.
      const double mu = gf.mean();
      if ((gf.array() - mu).abs().maxCoeff() <= tol) break;

      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nf + 1, nf + 1);
      kkt.topLeftCorner(nf, nf) =
          Zf.transpose() * h.asDiagonal() * Zf / static_cast<double>(n);
      kkt.topLeftCorner(nf, nf).diagonal().array() +=
          1e-14 * (1.0 + kkt.topLeftCorner(nf, nf).diagonal().maxCoeff());
      kkt.block(0, nf, nf, 1).setOnes();
      kkt.block(nf, 0, 1, nf).setOnes();
      Eigen::VectorXd rhs(nf + 1);
      rhs.head(nf) = -gf;
      rhs[nf] = 0.0;
      const Eigen::VectorXd sol = kkt.partialPivLu().solve(rhs);
      Eigen::VectorXd step = sol.head(nf);

      // Backtrack on the objective; cap the step at the boundary.
      double alpha = 1.0;
      for (Eigen::Index k = 0; k < nf; ++k) {
        if (step[k] < 0.0 && wf[k] + step[k] < 0.0) {
          alpha = std::min(alpha, -wf[k] / step[k]);
        }
      }
      Eigen::VectorXd wn = wf + alpha * step;
      double fw = objective_face(Zf, y, wf);
      for (int back = 0; back < 60; ++back) {
        if (objective_face(Zf, y, wn) <= fw + 1e-12) break;
        alpha *= 0.5;
        wn = wf + alpha * step;
      }
      wf = wn.cwiseMax(0.0);
      const double s = wf.sum();
      wf /= s;
      // A face coordinate pinned at zero leaves the face.
      for (Eigen::Index k = 0; k < nf; ++k) {
        if (wf[k] <= 1e-14) {
          in_face[static_cast<std::size_t>(face[k])] = 0;
          shrank = true;
        }
      }
      if (shrank) break;
    }

    // Write back.
    w.setZero();
    for (Eigen::Index k = 0; k < nf; ++k) w[face[k]] = wf[k];
    if (shrank) continue;

    // KKT over the full coordinate set: off-face gradients must not be
    // profitable directions.
    const Eigen::VectorXd g = gradient(w);
    double mu = 0.0;
    int cnt = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (in_face[static_cast<std::size_t>(j)]) {
        mu += g[j];
        ++cnt;
      }
    }
    mu /= static_cast<double>(cnt);
    Eigen::Index worst = -1;
    double worst_slack = -1e-10;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (in_face[static_cast<std::size_t>(j)]) continue;
      const double slack = g[j] - mu;
      if (slack < worst_slack) {
        worst_slack = slack;
        worst = j;
      }
    }
    if (worst < 0) return w;
    in_face[static_cast<std::size_t>(worst)] = 1;  // grow the face
  }
  throw ConvergenceError("solve_simplex_logloss: no convergence");
}

}  // namespace detail

SuperLearnerModel fit_superlearner(const LearnerLibrary& library,
                                   const FeatureMatrix& X,
                                   const Eigen::VectorXd& y, int k, Rng& rng) {
  const Eigen::Index n = X.values.rows();
  const std::size_t m = library.size();
  if (m < 1) throw Error("fit_superlearner: empty library");
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      if (library[a].name == library[b].name) {
        throw Error("fit_superlearner: duplicate learner name " +
                    library[a].name);
      }
    }
  }
  if (k < 2) throw Error("fit_superlearner: k must be >= 2");
  if (n < 2 * k) throw FitError("fit_superlearner: need at least 2k rows");

  SuperLearnerModel model;
  model.library = library;
  model.schema = X.names;
  model.dropped.assign(m, 0);
  model.full_fits.resize(m);
  model.cv_risk =
      Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m),
                                std::numeric_limits<double>::quiet_NaN());

  // Seeded fold assignment, recorded on the model: fold sizes differ by at
  // most one.
  const std::uint64_t base_seed = rng.raw();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order.begin(), order.end());
  model.fold_of.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    model.fold_of[static_cast<std::size_t>(order[i])] =
        static_cast<int>(i % static_cast<std::size_t>(k));
  }
  std::vector<std::vector<int>> fold_rows(static_cast<std::size_t>(k));
  std::vector<std::vector<int>> train_rows(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int f = model.fold_of[static_cast<std::size_t>(i)];
    fold_rows[static_cast<std::size_t>(f)].push_back(static_cast<int>(i));
    for (int g = 0; g < k; ++g) {
      if (g != f) train_rows[static_cast<std::size_t>(g)].push_back(
          static_cast<int>(i));
    }
  }

  // Out-of-fold prediction columns.
  Eigen::MatrixXd oof = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    bool ok = true;
    for (int f = 0; f < k && ok; ++f) {
      try {
        const auto train_X = rows_of(X, train_rows[static_cast<std::size_t>(f)]);
        const auto train_y = rows_of(y, train_rows[static_cast<std::size_t>(f)]);
        Rng sub(derive_seed(base_seed, stream::kLearner,
                            j * 1000 + static_cast<std::size_t>(f)));
        const FittedLearner fit =
            fit_learner(library[j].spec, train_X, train_y, sub);
        const auto valid_X = rows_of(X, fold_rows[static_cast<std::size_t>(f)]);
        const Eigen::VectorXd pred = predict_prob(fit, valid_X);
        const auto& vr = fold_rows[static_cast<std::size_t>(f)];
        for (std::size_t i = 0; i < vr.size(); ++i) {
          oof(vr[i], static_cast<Eigen::Index>(j)) = pred[static_cast<Eigen::Index>(i)];
        }
      } catch (const Error& e) {
        model.warnings.push_back("learner " + library[j].name +
                                 " dropped: fold " + std::to_string(f) +
                                 " fit failed: " + e.what());
        ok = false;
      }
    }
    if (!ok) {
      model.dropped[j] = 1;
      continue;
    }
    model.cv_risk[static_cast<Eigen::Index>(j)] =
        log_loss(y, oof.col(static_cast<Eigen::Index>(j)));
    // Full-data refit for deployment.
    try {
      Rng sub(derive_seed(base_seed, stream::kLearner, j * 1000 + 999));
      model.full_fits[j] = fit_learner(library[j].spec, X, y, sub);
    } catch (const Error& e) {
      model.warnings.push_back("learner " + library[j].name +
                               " dropped: full-data refit failed: " + e.what());
      model.dropped[j] = 1;
      model.cv_risk[static_cast<Eigen::Index>(j)] =
          std::numeric_limits<double>::quiet_NaN();
    }
  }

  std::vector<Eigen::Index> kept;
  for (std::size_t j = 0; j < m; ++j) {
    if (!model.dropped[j]) kept.push_back(static_cast<Eigen::Index>(j));
  }
  if (kept.empty()) {
    std::string msg = "fit_superlearner: every library member failed";
    for (const auto& wmsg : model.warnings) msg += "\n  " + wmsg;
    throw FitError(msg);
  }

  Eigen::MatrixXd Zc(n, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) {
    Zc.col(static_cast<Eigen::Index>(c)) =
        oof.col(kept[c]).unaryExpr([](double p) { return clip01(p); });
  }
  const Eigen::VectorXd wk = detail::solve_simplex_logloss(Zc, y);

  model.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t c = 0; c < kept.size(); ++c) {
    model.weights[kept[c]] = wk[static_cast<Eigen::Index>(c)];
  }
  model.cv_risk_ensemble = log_loss(y, Zc * wk);
  return model;
}

Eigen::VectorXd predict_superlearner(const SuperLearnerModel& model,
                                     const FeatureMatrix& X) {
  if (!X.schema_matches(model.schema)) {
    throw SchemaError("predict_superlearner: feature schema mismatch");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.values.rows());
  for (std::size_t j = 0; j < model.library.size(); ++j) {
    if (model.dropped[j] || model.weights[static_cast<Eigen::Index>(j)] == 0.0) {
      continue;
    }
    out += model.weights[static_cast<Eigen::Index>(j)] *
           predict_prob(model.full_fits[j], X);
  }
  return out;
}

}  // namespace dcfit
