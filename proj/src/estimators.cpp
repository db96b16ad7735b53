#include "dcfit/estimators.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "dcfit/dataset.hpp"
#include "dcfit/errors.hpp"
#include "dcfit/math.hpp"
#include "dcfit/nuisance.hpp"
#include "dcfit/rng.hpp"

namespace dcfit {

namespace {

constexpr double kZ95 = 1.96;

void check_binary(const std::vector<int>& v, const char* what) {
  for (int b : v) {
    if (b != 0 && b != 1) {
      throw Error(std::string(what) + " must be binary 0/1");
    }
  }
}

void check_positivity(const Eigen::ArrayXd& pi) {
  for (Eigen::Index i = 0; i < pi.size(); ++i) {
    if (!(pi[i] > 0.0 && pi[i] < 1.0)) {
      throw PositivityError(
          "propensity score of exactly 0 or 1 at row " + std::to_string(i) +
          "; inverse weighting is undefined");
    }
  }
}

// Finalizes an estimate from per-observation contributions whose mean is
// the point estimate.
AceEstimate from_contributions(const Eigen::ArrayXd& delta,
                               const std::string& method, bool keep_ic) {
  const Eigen::Index n = delta.size();
  if (n < 1) throw Error(method + ": empty input");
  AceEstimate est;
  est.method = method;
  est.psi = delta.mean();
  const Eigen::ArrayXd centered = delta - est.psi;
  est.ic_var =
      n > 1 ? centered.square().sum() / static_cast<double>(n - 1) : 0.0;
  est.se = std::sqrt(est.ic_var / static_cast<double>(n));
  est.ci_lower = est.psi - kZ95 * est.se;
  est.ci_upper = est.psi + kZ95 * est.se;
  if (keep_ic) est.ic = centered;
  return est;
}

}  // namespace

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kGComp: return "gcomp";
    case EstimatorKind::kIpw: return "ipw";
    case EstimatorKind::kAipw: return "aipw";
    case EstimatorKind::kTmle: return "tmle";
    case EstimatorKind::kDcAipw: return "dc-aipw";
    case EstimatorKind::kDcTmle: return "dc-tmle";
  }
  throw Error("unknown estimator kind");
}

EstimatorKind estimator_from_name(const std::string& name) {
  if (name == "gcomp") return EstimatorKind::kGComp;
  if (name == "ipw") return EstimatorKind::kIpw;
  if (name == "aipw") return EstimatorKind::kAipw;
  if (name == "tmle") return EstimatorKind::kTmle;
  if (name == "dc-aipw") return EstimatorKind::kDcAipw;
  if (name == "dc-tmle") return EstimatorKind::kDcTmle;
  throw ConfigError("unknown estimator '" + name +
                    "' (expected gcomp, ipw, aipw, tmle, dc-aipw, dc-tmle)");
}

NuisanceScores NuisanceScores::bounded(Eigen::ArrayXd pi, Eigen::ArrayXd m1,
                                       Eigen::ArrayXd m0, const Bounds& bounds,
                                       std::string provenance) {
  if (pi.size() != m1.size() || pi.size() != m0.size()) {
    throw Error("NuisanceScores: length mismatch");
  }
  NuisanceScores s;
  int clipped = 0;
  auto clip = [&clipped](Eigen::ArrayXd& v, double lo, double hi) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (v[i] < lo) {
        v[i] = lo;
        ++clipped;
      } else if (v[i] > hi) {
        v[i] = hi;
        ++clipped;
      }
    }
  };
  clip(pi, bounds.pi_lo, bounds.pi_hi);
  clip(m1, bounds.m_lo, bounds.m_hi);
  clip(m0, bounds.m_lo, bounds.m_hi);
  s.pi = std::move(pi);
  s.m1 = std::move(m1);
  s.m0 = std::move(m0);
  s.clip_count = clipped;
  s.provenance = std::move(provenance);
  return s;
}

NuisanceScores NuisanceScores::raw(Eigen::ArrayXd pi, Eigen::ArrayXd m1,
                                   Eigen::ArrayXd m0, std::string provenance) {
  if (pi.size() != m1.size() || pi.size() != m0.size()) {
    throw Error("NuisanceScores: length mismatch");
  }
  NuisanceScores s;
  s.pi = std::move(pi);
  s.m1 = std::move(m1);
  s.m0 = std::move(m0);
  s.provenance = std::move(provenance);
  return s;
}

double g_computation(const Eigen::ArrayXd& m1, const Eigen::ArrayXd& m0) {
  if (m1.size() == 0 || m1.size() != m0.size()) {
    throw Error("g_computation: inputs must be non-empty and equal length");
  }
  return m1.mean() - m0.mean();
}

AceEstimate ipw(const std::vector<int>& x, const std::vector<int>& y,
                const Eigen::ArrayXd& pi, bool hajek, bool keep_ic) {
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  if (n == 0 || y.size() != x.size() || pi.size() != n) {
    throw Error("ipw: inputs must be non-empty and equal length");
  }
  check_binary(x, "ipw: treatment");
  check_binary(y, "ipw: outcome");
  check_positivity(pi);

  if (!hajek) {
    Eigen::ArrayXd delta(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      delta[i] = y[i] * x[i] / pi[i] - y[i] * (1 - x[i]) / (1.0 - pi[i]);
    }
    return from_contributions(delta, "ipw", keep_ic);
  }

  // Hajek (normalized) form with its linearized variance.
  double sw1 = 0.0, sw0 = 0.0, sy1 = 0.0, sy0 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w1 = x[i] / pi[i];
    const double w0 = (1 - x[i]) / (1.0 - pi[i]);
    sw1 += w1;
    sw0 += w0;
    sy1 += w1 * y[i];
    sy0 += w0 * y[i];
  }
  const double mu1 = sy1 / sw1;
  const double mu0 = sy0 / sw0;
  Eigen::ArrayXd delta(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    delta[i] = x[i] * (y[i] - mu1) / pi[i] -
               (1 - x[i]) * (y[i] - mu0) / (1.0 - pi[i]);
  }
  AceEstimate est;
  est.method = "ipw-hajek";
  est.psi = mu1 - mu0;
  est.ic_var = n > 1 ? (delta - delta.mean()).square().sum() /
                           static_cast<double>(n - 1)
                     : 0.0;
  est.se = std::sqrt(est.ic_var / static_cast<double>(n));
  est.ci_lower = est.psi - kZ95 * est.se;
  est.ci_upper = est.psi + kZ95 * est.se;
  if (keep_ic) est.ic = delta - delta.mean();
  return est;
}

Eigen::ArrayXd clever_covariate(const std::vector<int>& x,
                                const Eigen::ArrayXd& pi) {
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  if (pi.size() != n) throw Error("clever_covariate: length mismatch");
  check_positivity(pi);
  Eigen::ArrayXd h(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    h[i] = x[i] / pi[i] - (1 - x[i]) / (1.0 - pi[i]);
  }
  return h;
}

namespace {

Eigen::ArrayXd aipw_contributions(const std::vector<int>& x,
                                  const std::vector<int>& y,
                                  const Eigen::ArrayXd& pi,
                                  const Eigen::ArrayXd& m1,
                                  const Eigen::ArrayXd& m0) {
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  Eigen::ArrayXd delta(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double arm1 =
        y[i] * x[i] / pi[i] + m1[i] * (pi[i] - x[i]) / pi[i];
    const double arm0 = y[i] * (1 - x[i]) / (1.0 - pi[i]) +
                        m0[i] * (x[i] - pi[i]) / (1.0 - pi[i]);
    delta[i] = arm1 - arm0;
  }
  return delta;
}

}  // namespace

AceEstimate aipw(const std::vector<int>& x, const std::vector<int>& y,
                 const NuisanceScores& scores, bool keep_ic) {
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  if (n == 0 || y.size() != x.size() ||
      scores.pi.size() != n) {
    throw Error("aipw: inputs must be non-empty and equal length");
  }
  check_binary(x, "aipw: treatment");
  check_binary(y, "aipw: outcome");
  check_positivity(scores.pi);
  AceEstimate est = from_contributions(
      aipw_contributions(x, y, scores.pi, scores.m1, scores.m0), "aipw",
      keep_ic);
  est.nuisance = scores.provenance;
  est.clip_count = scores.clip_count;
  return est;
}

std::pair<TargetingResult, AceEstimate> tmle(const std::vector<int>& x,
                                             const std::vector<int>& y,
                                             const NuisanceScores& scores,
                                             bool keep_ic) {
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  if (n == 0 || y.size() != x.size() || scores.pi.size() != n) {
    throw Error("tmle: inputs must be non-empty and equal length");
  }
  check_binary(x, "tmle: treatment");
  check_binary(y, "tmle: outcome");
  check_positivity(scores.pi);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(scores.m1[i] > 0.0 && scores.m1[i] < 1.0 && scores.m0[i] > 0.0 &&
          scores.m0[i] < 1.0)) {
      throw Error("tmle: outcome predictions must lie strictly in (0, 1)");
    }
  }

  const Eigen::ArrayXd h = clever_covariate(x, scores.pi);
  Eigen::ArrayXd offset(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    offset[i] = logit(x[i] == 1 ? scores.m1[i] : scores.m0[i]);
  }

  // Damped Newton on the one-parameter working model: the Bernoulli
  // log-likelihood is concave in epsilon, so halving the step until the
  // likelihood does not decrease converges globally even when clipped
  // propensities make the clever covariate extreme. The score's float
  // noise floor scales with n * max|H| * eps_machine, so a machine-
  // precision stall below 1e-7 counts as converged.
  auto loglik = [&](double eps) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = expit(offset[i] + eps * h[i]);
      ll += y[i] == 1 ? std::log(p) : std::log(1.0 - p);
    }
    return ll;
  };
  auto score_info = [&](double eps, double& score, double& info) {
    score = 0.0;
    info = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = expit(offset[i] + eps * h[i]);
      score += h[i] * (y[i] - p);
      info += h[i] * h[i] * p * (1.0 - p);
    }
  };

  double eps_hat = 0.0;
  double ll = loglik(0.0);
  int iterations = 0;
  std::string trace;
  const double tol = 1e-10;
  bool converged = false;
  for (int iter = 0; iter < 100; ++iter) {
    iterations = iter + 1;
    double score = 0.0, info = 0.0;
    score_info(eps_hat, score, info);
    if (std::abs(score) <= tol) {
      converged = true;
      break;
    }
    double step = score / std::max(info, 1e-300);
    trace += "iter " + std::to_string(iter) + ": score=" +
             std::to_string(score) + " step=" + std::to_string(step) + "\n";
    double cand = eps_hat;
    double cand_ll = ll;
    bool improved = false;
    for (int halving = 0; halving < 60; ++halving) {
      cand = eps_hat + step;
      cand_ll = loglik(cand);
      if (cand_ll >= ll - 1e-13 * (1.0 + std::abs(ll))) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved || std::abs(step) < 1e-15 * (1.0 + std::abs(eps_hat))) {
      converged = std::abs(score) <= 1e-7;
      break;
    }
    eps_hat = cand;
    ll = cand_ll;
  }
  if (!converged) {
    double score = 0.0, info = 0.0;
    score_info(eps_hat, score, info);
    if (std::abs(score) <= 1e-7) {
      converged = true;
    }
  }
  if (!converged) {
    throw ConvergenceError("tmle: targeting did not converge:\n" + trace);
  }

  TargetingResult tr;
  tr.epsilon = eps_hat;
  tr.iterations = iterations;
  tr.m1_star.resize(n);
  tr.m0_star.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    tr.m1_star[i] = expit(logit(scores.m1[i]) + eps_hat / scores.pi[i]);
    tr.m0_star[i] =
        expit(logit(scores.m0[i]) - eps_hat / (1.0 - scores.pi[i]));
  }

  AceEstimate est = from_contributions(
      aipw_contributions(x, y, scores.pi, tr.m1_star, tr.m0_star), "tmle",
      keep_ic);
  est.nuisance = scores.provenance;
  est.clip_count = scores.clip_count;
  return {std::move(tr), std::move(est)};
}

double bootstrap_se(const Dataset& data, const NuisanceSpec& spec,
                    EstimatorKind estimator, int b, std::uint64_t seed,
                    int threads, int* failures_out) {
  if (b < 2) throw Error("bootstrap_se: B must be >= 2");
  if (estimator == EstimatorKind::kDcAipw ||
      estimator == EstimatorKind::kDcTmle) {
    throw Error("bootstrap_se: not defined for cross-fit estimators");
  }
  const int n = static_cast<int>(data.n());

  std::vector<double> estimates(static_cast<std::size_t>(b),
                                std::numeric_limits<double>::quiet_NaN());
  std::atomic<int> next{0};

  auto one_replicate = [&](int rep) -> double {
    Rng rng(derive_seed(seed, stream::kBootstrap, static_cast<std::uint64_t>(rep)));
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      idx[static_cast<std::size_t>(i)] =
          static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    }
    const Dataset resample = data.subset(idx);
    const std::uint64_t fit_seed =
        derive_seed(seed, stream::kBootstrap, 1000003ULL + static_cast<std::uint64_t>(rep));
    switch (estimator) {
      case EstimatorKind::kGComp: {
        const OutcomeModel om = fit_outcome_model(spec, resample, fit_seed);
        Eigen::ArrayXd m1 = om.predict(resample, 1);
        Eigen::ArrayXd m0 = om.predict(resample, 0);
        const NuisanceScores s = NuisanceScores::bounded(
            Eigen::ArrayXd::Constant(n, 0.5), std::move(m1), std::move(m0),
            spec.bounds, nuisance_kind_name(spec.kind));
        return g_computation(s.m1, s.m0);
      }
      case EstimatorKind::kIpw: {
        const TreatmentModel tm = fit_treatment_model(spec, resample, fit_seed);
        const NuisanceScores s = NuisanceScores::bounded(
            tm.predict(resample), Eigen::ArrayXd::Constant(n, 0.5),
            Eigen::ArrayXd::Constant(n, 0.5), spec.bounds,
            nuisance_kind_name(spec.kind));
        return ipw(resample.x, resample.y, s.pi).psi;
      }
      case EstimatorKind::kAipw: {
        const NuisanceScores s = make_scores(spec, resample, resample, fit_seed);
        return aipw(resample.x, resample.y, s).psi;
      }
      case EstimatorKind::kTmle: {
        const NuisanceScores s = make_scores(spec, resample, resample, fit_seed);
        return tmle(resample.x, resample.y, s).second.psi;
      }
      default:
        throw Error("bootstrap_se: unsupported estimator");
    }
  };

  auto worker = [&] {
    for (int rep = next.fetch_add(1); rep < b; rep = next.fetch_add(1)) {
      try {
        estimates[static_cast<std::size_t>(rep)] = one_replicate(rep);
      } catch (const Error&) {
        // leave NaN; counted below
      }
    }
  };

  const int workers = std::max(1, std::min(threads, b));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<double> ok;
  ok.reserve(static_cast<std::size_t>(b));
  for (double v : estimates) {
    if (std::isfinite(v)) ok.push_back(v);
  }
  const int failures = b - static_cast<int>(ok.size());
  if (failures_out) *failures_out = failures;
  if (failures * 10 > b) {
    throw FitError("bootstrap_se: " + std::to_string(failures) + " of " +
                   std::to_string(b) + " resample fits failed");
  }
  double mean = 0.0;
  for (double v : ok) mean += v;
  mean /= static_cast<double>(ok.size());
  double ss = 0.0;
  for (double v : ok) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(ok.size() - 1));
}

}  // namespace dcfit
