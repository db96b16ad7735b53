// Acceptance suite: end-to-end checks of the estimators, the cross-fit
// machinery, and the Monte Carlo harness at workstation scale. Run with a
// list of criterion numbers (default: all nine). One pass/fail line per
// criterion; nonzero exit when any fail.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dcfit/crossfit.hpp"
#include "dcfit/dataset.hpp"
#include "dcfit/dgm.hpp"
#include "dcfit/errors.hpp"
#include "dcfit/estimators.hpp"
#include "dcfit/learners.hpp"
#include "dcfit/math.hpp"
#include "dcfit/nuisance.hpp"
#include "dcfit/simharness.hpp"
#include "dcfit/superlearner.hpp"

using namespace dcfit;

namespace {

int threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

struct Checker {
  bool pass = true;
  std::ostringstream detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (ok ? "[ok] " : "[FAIL] ") << what << "; ";
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

const MetricsRow& row_of(const CampaignResult& result,
                         const std::string& estimator,
                         const std::string& nuisance) {
  for (const auto& row : result.rows) {
    if (row.estimator == estimator && row.nuisance == nuisance) return row;
  }
  throw Error("missing campaign row " + estimator + "/" + nuisance);
}

// ----- criteria 1 & 2 share one parametric campaign -----------------------

const CampaignResult& parametric_campaign() {
  static const CampaignResult result = [] {
    SimConfig config = desk_preset();
    config.n = 3000;
    config.replicates = 500;
    config.nuisances = {NuisanceKind::kCorrect, NuisanceKind::kMainEffects};
    config.seed = 202608100;
    config.has_seed = true;
    config.threads = threads();
    return run_campaign(config);
  }();
  return result;
}

Checker criterion1() {
  Checker c;
  const auto& result = parametric_campaign();
  c.detail << "oracle psi=" << fmt(result.oracle_psi) << "; ";
  for (const char* est : {"gcomp", "aipw", "tmle"}) {
    const auto& row = row_of(result, est, "correct");
    c.expect(std::abs(row.bias) <= 0.005,
             std::string(est) + " |bias|=" + fmt(std::abs(row.bias)) +
                 " <= 0.005");
  }
  const auto& ipw_row = row_of(result, "ipw", "correct");
  c.expect(ipw_row.bias >= 0.001 && ipw_row.bias <= 0.013,
           "ipw bias=" + fmt(ipw_row.bias) + " in [0.001, 0.013]");
  const auto& g_row = row_of(result, "gcomp", "correct");
  c.expect(g_row.ese >= 0.014 && g_row.ese <= 0.020,
           "gcomp ESE=" + fmt(g_row.ese) + " in [0.014, 0.020]");
  for (const char* est :
       {"gcomp", "ipw", "aipw", "tmle", "dc-aipw", "dc-tmle"}) {
    const auto& row = row_of(result, est, "correct");
    c.expect(row.coverage >= 0.91 && row.coverage <= 0.98,
             std::string(est) + " coverage=" + fmt(row.coverage) +
                 " in [0.91, 0.98]");
  }
  return c;
}

Checker criterion2() {
  Checker c;
  const auto& result = parametric_campaign();
  for (const char* est :
       {"gcomp", "ipw", "aipw", "tmle", "dc-aipw", "dc-tmle"}) {
    const auto& row = row_of(result, est, "main-effects");
    c.expect(row.bias < 0.0 && std::abs(row.bias) >= 0.010,
             std::string(est) + " bias=" + fmt(row.bias) +
                 " negative with magnitude >= 0.010");
  }
  const auto& g_row = row_of(result, "gcomp", "main-effects");
  c.expect(g_row.coverage < 0.85,
           "gcomp coverage=" + fmt(g_row.coverage) + " < 0.85");
  return c;
}

// ----- criterion 3: machine-learning nuisances with cross-fitting ---------

Checker criterion3() {
  Checker c;
  SimConfig config = desk_preset();
  config.n = 3000;
  config.replicates = 300;
  config.nuisances = {NuisanceKind::kSuperLearner};
  // Only the g-computation bias is gated here; a light bootstrap keeps its
  // SE column populated without dominating the runtime.
  config.bootstrap_b = 20;
  config.seed = 202608103;
  config.has_seed = true;
  config.threads = threads();
  const CampaignResult result = run_campaign(config);
  c.detail << "oracle psi=" << fmt(result.oracle_psi) << "; ";

  const auto& dc_aipw = row_of(result, "dc-aipw", "ml");
  const auto& dc_tmle = row_of(result, "dc-tmle", "ml");
  const auto& plain_aipw = row_of(result, "aipw", "ml");
  const auto& plain_tmle = row_of(result, "tmle", "ml");
  const auto& gcomp = row_of(result, "gcomp", "ml");

  c.expect(std::abs(dc_aipw.bias) <= 0.006,
           "dc-aipw |bias|=" + fmt(std::abs(dc_aipw.bias)) + " <= 0.006");
  c.expect(std::abs(dc_tmle.bias) <= 0.006,
           "dc-tmle |bias|=" + fmt(std::abs(dc_tmle.bias)) + " <= 0.006");
  c.expect(dc_aipw.coverage >= plain_aipw.coverage,
           "dc-aipw coverage=" + fmt(dc_aipw.coverage) +
               " >= aipw coverage=" + fmt(plain_aipw.coverage));
  c.expect(dc_tmle.coverage >= plain_tmle.coverage,
           "dc-tmle coverage=" + fmt(dc_tmle.coverage) +
               " >= tmle coverage=" + fmt(plain_tmle.coverage));
  c.expect(dc_aipw.coverage >= 0.92,
           "dc-aipw coverage=" + fmt(dc_aipw.coverage) + " >= 0.92");
  c.expect(dc_tmle.coverage >= 0.92,
           "dc-tmle coverage=" + fmt(dc_tmle.coverage) + " >= 0.92");
  c.expect(std::abs(gcomp.bias) >= 3.0 * std::abs(dc_aipw.bias),
           "gcomp-ml |bias|=" + fmt(std::abs(gcomp.bias)) +
               " >= 3x dc-aipw |bias|=" + fmt(std::abs(dc_aipw.bias)));
  return c;
}

// ----- criterion 4: saturated-data oracle equivalence ----------------------

struct BinaryConfounderData {
  std::vector<int> x, y, z;
};

BinaryConfounderData draw_binary_confounder(int n, Rng& rng) {
  for (int attempt = 0; attempt < 500; ++attempt) {
    BinaryConfounderData d;
    int cell_n[2][2] = {{0, 0}, {0, 0}};
    int cell_y[2][2] = {{0, 0}, {0, 0}};
    for (int i = 0; i < n; ++i) {
      const int z = rng.bernoulli(0.5) ? 1 : 0;
      const int x = rng.bernoulli(0.3 + 0.35 * z) ? 1 : 0;
      const int y =
          rng.bernoulli(0.25 + 0.2 * x + 0.25 * z - 0.1 * x * z) ? 1 : 0;
      d.x.push_back(x);
      d.y.push_back(y);
      d.z.push_back(z);
      cell_n[x][z]++;
      cell_y[x][z] += y;
    }
    bool interior = true;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        if (cell_n[a][b] < 2 || cell_y[a][b] == 0 ||
            cell_y[a][b] == cell_n[a][b]) {
          interior = false;
        }
      }
    }
    if (interior) return d;
  }
  throw Error("could not draw interior cells");
}

double standardized_rd(const BinaryConfounderData& d) {
  double out = 0.0;
  const int n = static_cast<int>(d.x.size());
  for (int z = 0; z < 2; ++z) {
    int nz = 0, n1 = 0, n0 = 0, y1 = 0, y0 = 0;
    for (int i = 0; i < n; ++i) {
      if (d.z[i] != z) continue;
      ++nz;
      if (d.x[i] == 1) {
        ++n1;
        y1 += d.y[i];
      } else {
        ++n0;
        y0 += d.y[i];
      }
    }
    out += (static_cast<double>(nz) / n) *
           (static_cast<double>(y1) / n1 - static_cast<double>(y0) / n0);
  }
  return out;
}

NuisanceScores saturated_scores(const BinaryConfounderData& d) {
  const int n = static_cast<int>(d.x.size());
  Eigen::MatrixXd zmat(n, 1), xz(n, 3);
  Eigen::VectorXd xvec(n), yvec(n);
  for (int i = 0; i < n; ++i) {
    zmat(i, 0) = d.z[i];
    xvec[i] = d.x[i];
    yvec[i] = d.y[i];
    xz(i, 0) = d.x[i];
    xz(i, 1) = d.z[i];
    xz(i, 2) = d.x[i] * d.z[i];
  }
  const auto pi_fit =
      fit_logistic(FeatureMatrix::make(zmat, {"z"}), xvec, 200, 1e-12);
  const auto m_fit =
      fit_logistic(FeatureMatrix::make(xz, {"x", "z", "xz"}), yvec, 200, 1e-12);
  const Eigen::ArrayXd pi =
      predict_prob(pi_fit, FeatureMatrix::make(zmat, {"z"})).array();
  Eigen::MatrixXd xz1 = xz, xz0 = xz;
  for (int i = 0; i < n; ++i) {
    xz1(i, 0) = 1.0;
    xz1(i, 2) = zmat(i, 0);
    xz0(i, 0) = 0.0;
    xz0(i, 2) = 0.0;
  }
  const Eigen::ArrayXd m1 =
      predict_prob(m_fit, FeatureMatrix::make(xz1, {"x", "z", "xz"})).array();
  const Eigen::ArrayXd m0 =
      predict_prob(m_fit, FeatureMatrix::make(xz0, {"x", "z", "xz"})).array();
  return NuisanceScores::raw(pi, m1, m0, "saturated");
}

Checker criterion4() {
  Checker c;
  Rng rng(20260804);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const auto d = draw_binary_confounder(200, rng);
    const double truth = standardized_rd(d);
    const auto scores = saturated_scores(d);
    const double e1 = std::abs(g_computation(scores.m1, scores.m0) - truth);
    const double e2 = std::abs(ipw(d.x, d.y, scores.pi).psi - truth);
    const double e3 = std::abs(aipw(d.x, d.y, scores).psi - truth);
    const double e4 = std::abs(tmle(d.x, d.y, scores).second.psi - truth);
    worst = std::max({worst, e1, e2, e3, e4});
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2e", worst);
  c.expect(worst <= 1e-10,
           "max |estimator - brute force| over 50 datasets = " +
               std::string(buf) + " <= 1e-10");
  return c;
}

// ----- criterion 5: influence-curve algebra --------------------------------

Checker criterion5() {
  Checker c;
  for (const std::uint64_t seed : {11ull, 12ull, 13ull}) {
    const Dataset data =
        Dataset::from_sample(generate_sample(seed == 11 ? 3000 : 700, seed));
    for (const NuisanceKind kind :
         {NuisanceKind::kCorrect, NuisanceKind::kMainEffects}) {
      NuisanceSpec spec;
      spec.kind = kind;
      const NuisanceScores scores = make_scores(spec, data, data, seed);

      const auto est = aipw(data.x, data.y, scores, true);
      const double ic_sum = std::abs(est.ic->sum());
      c.expect(ic_sum <= 1e-10 * static_cast<double>(data.n()),
               "aipw IC sum ~ 0 (n=" + std::to_string(data.n()) + ", " +
                   nuisance_kind_name(kind) + ")");

      const auto targeted = tmle(data.x, data.y, scores);
      double score = 0.0;
      for (std::size_t i = 0; i < data.n(); ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        const double h = data.x[i] == 1 ? 1.0 / scores.pi[idx]
                                        : -1.0 / (1.0 - scores.pi[idx]);
        score += h * (data.y[i] - (data.x[i] == 1
                                       ? targeted.first.m1_star[idx]
                                       : targeted.first.m0_star[idx]));
      }
      c.expect(std::abs(score) <= 1e-6,
               "tmle post-targeting score <= 1e-6 (got " +
                   std::to_string(score) + ")");

      const NuisanceScores zeroed = NuisanceScores::raw(
          scores.pi, Eigen::ArrayXd::Zero(scores.pi.size()),
          Eigen::ArrayXd::Zero(scores.pi.size()), "zeroed");
      const double gap = std::abs(aipw(data.x, data.y, zeroed).psi -
                                  ipw(data.x, data.y, scores.pi).psi);
      c.expect(gap <= 1e-12, "aipw with zero outcome predictions equals ipw");
    }
  }
  return c;
}

// ----- criterion 6: cross-fit structural property suite --------------------

Checker criterion6() {
  Checker c;
  Rng meta(20260806);
  bool exactness = true, derangement = true;
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 3 + meta.below(9998);
    Rng rng(derive_seed(1, 7, static_cast<std::uint64_t>(rep)));
    const auto scheme = make_partition(n, rng);
    std::array<std::size_t, 3> counts{0, 0, 0};
    std::set<int> seen;
    for (int s = 0; s < 3; ++s) {
      for (int i : scheme.rows[static_cast<std::size_t>(s)]) {
        seen.insert(i);
        if (scheme.split[static_cast<std::size_t>(i)] != s) exactness = false;
      }
      counts[static_cast<std::size_t>(s)] =
          scheme.rows[static_cast<std::size_t>(s)].size();
    }
    if (seen.size() != n) exactness = false;
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    if (*hi - *lo > 1) exactness = false;
    for (int s = 0; s < 3; ++s) {
      const auto us = static_cast<std::size_t>(s);
      if (scheme.gamma_source[us] == s || scheme.eta_source[us] == s ||
          scheme.gamma_source[us] == scheme.eta_source[us]) {
        derangement = false;
      }
    }
  }
  c.expect(exactness, "partition exactness over 300 random n in [3, 1e4]");
  c.expect(derangement, "rotation derangement with distinct sources");

  // No own-split predictions: instrumented constant models encode their
  // training split in the prediction value.
  const Dataset data = Dataset::from_sample(generate_sample(120, 5));
  Rng rng(6);
  const auto scheme = make_partition(data.n(), rng);
  bool provenance = true;
  std::array<TreatmentModel, 3> tms;
  std::array<OutcomeModel, 3> oms;
  for (int s = 0; s < 3; ++s) {
    const auto us = static_cast<std::size_t>(s);
    TreatmentModel tm;
    tm.kind = NuisanceKind::kNullStub;
    tm.impl = 0.1 + 0.1 * s;
    tms[us] = tm;
    OutcomeModel om;
    om.kind = NuisanceKind::kNullStub;
    om.impl = 0.55 + 0.1 * s;
    oms[us] = om;
  }
  for (int s = 0; s < 3; ++s) {
    const auto us = static_cast<std::size_t>(s);
    const Dataset sub = data.subset(scheme.rows[us]);
    const double pi_marker =
        tms[static_cast<std::size_t>(scheme.gamma_source[us])].predict(sub)[0];
    const double m_marker =
        oms[static_cast<std::size_t>(scheme.eta_source[us])].predict(sub, 1)[0];
    if (pi_marker == 0.1 + 0.1 * s) provenance = false;
    if (m_marker == 0.55 + 0.1 * s) provenance = false;
    const int g = scheme.gamma_source[us];
    const int e = scheme.eta_source[us];
    if (std::abs((0.1 + 0.1 * g) - pi_marker) > 1e-12) provenance = false;
    if (std::abs((0.55 + 0.1 * e) - m_marker) > 1e-12) provenance = false;
  }
  c.expect(provenance, "no own-split predictions (instrumented models)");

  const Dataset big = Dataset::from_sample(generate_sample(900, 7));
  NuisanceSpec spec;
  spec.kind = NuisanceKind::kMainEffects;
  CrossfitOptions opts;
  opts.partitions = 9;
  opts.threads = threads();
  const auto res = run_crossfit(big, spec, EstimatorKind::kAipw, 77, opts);
  const auto [lo, hi] = std::minmax_element(res.partition_aces.begin(),
                                            res.partition_aces.end());
  c.expect(res.psi >= *lo && res.psi <= *hi,
           "aggregated psi within per-partition range");

  opts.partitions = 1;
  const auto single = run_crossfit(big, spec, EstimatorKind::kAipw, 78, opts);
  c.expect(single.psi == single.partition_aces[0] &&
               single.var_unit == single.partition_vars[0],
           "p=1 degeneracy");

  opts.partitions = 6;
  opts.threads = 1;
  const auto a = run_crossfit(big, spec, EstimatorKind::kTmle, 79, opts);
  opts.threads = threads();
  const auto b = run_crossfit(big, spec, EstimatorKind::kTmle, 79, opts);
  c.expect(a.psi == b.psi && a.se == b.se,
           "determinism under fixed seed across thread counts");
  return c;
}

// ----- criterion 7: partition-count stability trend ------------------------

Checker criterion7() {
  Checker c;
  const Dataset data = Dataset::from_sample(generate_sample(3000, 20260807));
  NuisanceSpec spec;
  spec.kind = NuisanceKind::kCorrect;
  const auto rows = stability_study(data, EstimatorKind::kDcAipw, spec,
                                    {5, 100}, 30, 424242, threads());
  const double iqr5 = rows[0].q3 - rows[0].q1;
  const double iqr100 = rows[1].q3 - rows[1].q1;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "IQR(p=100)=%.2e < IQR(p=5)=%.2e", iqr100,
                iqr5);
  c.expect(iqr100 < iqr5, buf);
  return c;
}

// ----- criterion 8: numerical learner checks -------------------------------

Checker criterion8() {
  Checker c;
  // Backprop vs central finite differences.
  {
    Rng rng(61);
    const int n = 10, p = 3, h = 4;
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
      y[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    }
    detail::NetParams params;
    params.w1.resize(p, h);
    params.b1.resize(h);
    params.w2.resize(h);
    for (int j = 0; j < p; ++j)
      for (int k = 0; k < h; ++k) params.w1(j, k) = rng.uniform() - 0.5;
    for (int k = 0; k < h; ++k) params.b1[k] = rng.uniform() - 0.5;
    for (int k = 0; k < h; ++k) params.w2[k] = rng.uniform() - 0.5;
    params.b2 = rng.uniform() - 0.5;
    const auto grad = detail::net_gradient(params, X, y);
    const double step = 1e-5;
    double max_err = 0.0, max_grad = std::abs(grad.b2);
    auto probe = [&](auto pick, double analytic) {
      detail::NetParams plus = params, minus = params;
      pick(plus) += step;
      pick(minus) -= step;
      const double numeric =
          (detail::net_loss(plus, X, y) - detail::net_loss(minus, X, y)) /
          (2.0 * step);
      max_err = std::max(max_err, std::abs(numeric - analytic));
      max_grad = std::max(max_grad, std::abs(analytic));
    };
    for (int j = 0; j < p; ++j)
      for (int k = 0; k < h; ++k)
        probe([j, k](detail::NetParams& q) -> double& { return q.w1(j, k); },
              grad.w1(j, k));
    for (int k = 0; k < h; ++k) {
      probe([k](detail::NetParams& q) -> double& { return q.b1[k]; },
            grad.b1[k]);
      probe([k](detail::NetParams& q) -> double& { return q.w2[k]; },
            grad.w2[k]);
    }
    probe([](detail::NetParams& q) -> double& { return q.b2; }, grad.b2);
    const double rel = max_err / std::max(max_grad, 1e-6);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "net gradient rel err %.2e <= 1e-5", rel);
    c.expect(rel <= 1e-5, buf);
  }
  // Intercept-only closed form.
  {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(5, 0);
    Eigen::VectorXd y(5);
    y << 1, 1, 0, 0, 0;
    const auto fit = fit_logistic(FeatureMatrix::make(m, {}), y);
    const double b0 = std::get<LogisticModel>(fit.model).beta[0];
    c.expect(std::abs(b0 - logit(0.4)) <= 1e-8,
             "intercept-only IRLS matches logit(0.4) to 1e-8");
  }
  // Super-learner simplex and risk dominance.
  {
    const Dataset data = Dataset::from_sample(generate_sample(800, 20260808));
    Eigen::VectorXd y(static_cast<Eigen::Index>(data.n()));
    for (std::size_t i = 0; i < data.n(); ++i) {
      y[static_cast<Eigen::Index>(i)] = data.x[i];
    }
    const auto X = treatment_features_raw(data);
    Rng rng(20260809);
    const auto model = fit_superlearner(desk_sl_library(), X, y, 5, rng);
    const double sum_gap = std::abs(model.weights.sum() - 1.0);
    c.expect(model.weights.minCoeff() >= 0.0 && sum_gap <= 1e-8,
             "weights on the simplex to 1e-8");
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < model.cv_risk.size(); ++j) {
      if (std::isfinite(model.cv_risk[j])) {
        best = std::min(best, model.cv_risk[j]);
      }
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf),
                  "ensemble CV log-loss %.6f <= best single %.6f + 1e-8",
                  model.cv_risk_ensemble, best);
    c.expect(model.cv_risk_ensemble <= best + 1e-8, buf);
  }
  return c;
}

// ----- criterion 9: mechanism fidelity --------------------------------------

Checker criterion9() {
  Checker c;
  long long treated = 0, total = 0;
  long long diab_treated = 0, diab_untreated = 0, untreated = 0;
  for (int s = 0; s < 100; ++s) {
    const auto sample =
        generate_sample(3000, 900 + static_cast<std::uint64_t>(s));
    for (const auto& r : sample.rows) {
      ++total;
      if (r.x == 1) {
        ++treated;
        diab_treated += r.z.diabetes;
      } else {
        ++untreated;
        diab_untreated += r.z.diabetes;
      }
    }
  }
  const double frac = static_cast<double>(treated) / total;
  const double diab_t = static_cast<double>(diab_treated) / treated;
  const double diab_u = static_cast<double>(diab_untreated) / untreated;
  c.expect(std::abs(frac - 0.259) <= 0.015,
           "treated fraction " + fmt(frac) + " within 0.259 +/- 0.015");
  c.expect(std::abs(diab_t - 0.31) <= 0.04,
           "diabetes among treated " + fmt(diab_t) + " within 0.31 +/- 0.04");
  c.expect(std::abs(diab_u - 0.01) <= 0.01,
           "diabetes among untreated " + fmt(diab_u) +
               " within 0.01 +/- 0.01");
  return c;
}

struct Criterion {
  int id;
  const char* name;
  Checker (*run)();
};

const Criterion kCriteria[] = {
    {1, "correct-specification unbiasedness (500 replicates, n=3000)",
     criterion1},
    {2, "misspecification bias direction (main-effects block)", criterion2},
    {3, "cross-fitting repairs machine-learning inference (300 replicates)",
     criterion3},
    {4, "saturated-data estimator equivalence", criterion4},
    {5, "influence-curve algebra", criterion5},
    {6, "double cross-fit structural suite", criterion6},
    {7, "partition-count stability trend", criterion7},
    {8, "numerical learner checks", criterion8},
    {9, "data-generating mechanism fidelity", criterion9},
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) {
    wanted.insert(std::atoi(argv[i]));
  }
  bool all_pass = true;
  for (const auto& criterion : kCriteria) {
    if (!wanted.empty() && !wanted.count(criterion.id)) continue;
    Checker result;
    try {
      result = criterion.run();
    } catch (const std::exception& e) {
      result.pass = false;
      result.detail << "exception: " << e.what();
    }
    all_pass = all_pass && result.pass;
    std::printf("criterion %d: %s — %s (%s)\n", criterion.id,
                result.pass ? "PASS" : "FAIL", criterion.name,
                result.detail.str().c_str());
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
