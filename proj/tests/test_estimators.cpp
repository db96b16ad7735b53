#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dcfit/dataset.hpp"
#include "dcfit/dgm.hpp"
#include "dcfit/errors.hpp"
#include "dcfit/estimators.hpp"
#include "dcfit/math.hpp"
#include "dcfit/nuisance.hpp"

using namespace dcfit;

namespace {

// One binary confounder z; all four (x, z) cells populated with interior
// outcome means so saturated logistic fits are exact.
struct BinaryConfounderData {
  std::vector<int> x, y, z;
};

BinaryConfounderData draw_binary_confounder(int n, Rng& rng) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    BinaryConfounderData d;
    int cell_n[2][2] = {{0, 0}, {0, 0}};
    int cell_y[2][2] = {{0, 0}, {0, 0}};
    for (int i = 0; i < n; ++i) {
      const int z = rng.bernoulli(0.5) ? 1 : 0;
      const int x = rng.bernoulli(0.3 + 0.35 * z) ? 1 : 0;
      const int y = rng.bernoulli(0.25 + 0.2 * x + 0.25 * z - 0.1 * x * z) ? 1 : 0;
      d.x.push_back(x);
      d.y.push_back(y);
      d.z.push_back(z);
      cell_n[x][z]++;
      cell_y[x][z] += y;
    }
    bool interior = true;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        if (cell_y[a][b] == 0 || cell_y[a][b] == cell_n[a][b]) interior = false;
      }
    }
    if (interior) return d;
  }
  throw std::runtime_error("could not draw interior cells");
}

// Brute-force nonparametric standardized risk difference.
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

// Saturated nuisance scores via exact logistic fits (tight tolerance).
NuisanceScores saturated_scores(const BinaryConfounderData& d) {
  const int n = static_cast<int>(d.x.size());
  Eigen::MatrixXd zmat(n, 1);
  Eigen::VectorXd xvec(n), yvec(n);
  Eigen::MatrixXd xz(n, 3);
  for (int i = 0; i < n; ++i) {
    zmat(i, 0) = d.z[i];
    xvec[i] = d.x[i];
    yvec[i] = d.y[i];
    xz(i, 0) = d.x[i];
    xz(i, 1) = d.z[i];
    xz(i, 2) = d.x[i] * d.z[i];
  }
  const auto pi_fit = fit_logistic(FeatureMatrix::make(zmat, {"z"}), xvec,
                                   200, 1e-12);
  const auto m_fit = fit_logistic(
      FeatureMatrix::make(xz, {"x", "z", "xz"}), yvec, 200, 1e-12);
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

}  // namespace

TEST_CASE("g_computation basics") {
  Eigen::ArrayXd m1 = Eigen::ArrayXd::Constant(10, 0.37);
  Eigen::ArrayXd m0 = Eigen::ArrayXd::Constant(10, 0.29);
  CHECK(g_computation(m1, m0) == doctest::Approx(0.08).epsilon(1e-12));
  CHECK(g_computation(m1, m1) == 0.0);
  Eigen::ArrayXd empty;
  CHECK_THROWS(g_computation(empty, empty));
}

TEST_CASE("ipw hand computation and structure") {
  // pi = 0.5 on {(X=1,Y=1),(X=0,Y=0)}: psi = (1/0.5)/2 - 0 = 1.
  const std::vector<int> x{1, 0};
  const std::vector<int> y{1, 0};
  Eigen::ArrayXd pi = Eigen::ArrayXd::Constant(2, 0.5);
  const auto est = ipw(x, y, pi);
  CHECK(est.psi == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(est.ci_upper - est.ci_lower ==
        doctest::Approx(2 * 1.96 * est.se).epsilon(1e-12));

  Eigen::ArrayXd degenerate = pi;
  degenerate[0] = 1.0;
  CHECK_THROWS_AS(ipw(x, y, degenerate), PositivityError);
}

TEST_CASE("clever covariate values") {
  const std::vector<int> x{1, 0, 1};
  Eigen::ArrayXd pi(3);
  pi << 0.5, 0.5, 0.25;
  const auto h = clever_covariate(x, pi);
  CHECK(h[0] == doctest::Approx(2.0));
  CHECK(h[1] == doctest::Approx(-2.0));
  CHECK(h[2] == doctest::Approx(4.0));
}

TEST_CASE("aipw reduces to ipw when outcome predictions vanish") {
  const Dataset data = Dataset::from_sample(generate_sample(400, 77));
  NuisanceSpec spec;
  spec.kind = NuisanceKind::kMainEffects;
  const NuisanceScores scores = make_scores(spec, data, data, 1);
  NuisanceScores zeroed = NuisanceScores::raw(
      scores.pi, Eigen::ArrayXd::Zero(scores.pi.size()),
      Eigen::ArrayXd::Zero(scores.pi.size()), "zeroed");
  const auto a = aipw(data.x, data.y, zeroed);
  const auto b = ipw(data.x, data.y, scores.pi);
  CHECK(a.psi == doctest::Approx(b.psi).epsilon(1e-12));
  CHECK(a.se == doctest::Approx(b.se).epsilon(1e-12));
}

TEST_CASE("aipw influence values sum to zero") {
  const Dataset data = Dataset::from_sample(generate_sample(600, 88));
  NuisanceSpec spec;
  spec.kind = NuisanceKind::kMainEffects;
  const NuisanceScores scores = make_scores(spec, data, data, 2);
  const auto est = aipw(data.x, data.y, scores, true);
  REQUIRE(est.ic.has_value());
  CHECK(std::abs(est.ic->sum()) <= 1e-10 * static_cast<double>(data.n()));
}

TEST_CASE("saturated data: all four estimators equal the brute force") {
  Rng rng(3001);
  for (int rep = 0; rep < 5; ++rep) {
    const auto d = draw_binary_confounder(200, rng);
    const double truth = standardized_rd(d);
    const auto scores = saturated_scores(d);

    CHECK(g_computation(scores.m1, scores.m0) ==
          doctest::Approx(truth).epsilon(1e-10));
    CHECK(ipw(d.x, d.y, scores.pi).psi ==
          doctest::Approx(truth).epsilon(1e-10));
    CHECK(aipw(d.x, d.y, scores).psi ==
          doctest::Approx(truth).epsilon(1e-10));
    const auto [tr, est] = tmle(d.x, d.y, scores);
    CHECK(std::abs(tr.epsilon) < 1e-8);
    CHECK(est.psi == doctest::Approx(truth).epsilon(1e-10));
  }
}

TEST_CASE("tmle: targeting solves the score equation") {
  const Dataset data = Dataset::from_sample(generate_sample(800, 99));
  NuisanceSpec spec;
  spec.kind = NuisanceKind::kMainEffects;
  const NuisanceScores scores = make_scores(spec, data, data, 3);
  const auto [tr, est] = tmle(data.x, data.y, scores);

  // Post-targeting score equation: sum H * (Y - m*_X) ~ 0.
  double score = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    const double h = data.x[i] == 1 ? 1.0 / scores.pi[idx]
                                    : -1.0 / (1.0 - scores.pi[idx]);
    const double mstar = data.x[i] == 1 ? tr.m1_star[idx] : tr.m0_star[idx];
    score += h * (data.y[i] - mstar);
  }
  CHECK(std::abs(score) <= 1e-6);

  // Targeted predictions stay strictly inside (0, 1).
  CHECK(tr.m1_star.minCoeff() > 0.0);
  CHECK(tr.m1_star.maxCoeff() < 1.0);
  CHECK(tr.m0_star.minCoeff() > 0.0);
  CHECK(tr.m0_star.maxCoeff() < 1.0);

  // psi equals the targeted g-computation by construction.
  CHECK(est.psi ==
        doctest::Approx(g_computation(tr.m1_star, tr.m0_star)).epsilon(1e-12));
}

TEST_CASE("estimators are invariant to row permutation") {
  const Dataset data = Dataset::from_sample(generate_sample(300, 42));
  NuisanceSpec spec;
  spec.kind = NuisanceKind::kCorrect;
  const NuisanceScores scores = make_scores(spec, data, data, 4);

  std::vector<int> perm(data.n());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(5);
  rng.shuffle(perm.begin(), perm.end());
  const Dataset shuffled = data.subset(perm);
  Eigen::ArrayXd pi_s(data.n()), m1_s(data.n()), m0_s(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    pi_s[idx] = scores.pi[perm[i]];
    m1_s[idx] = scores.m1[perm[i]];
    m0_s[idx] = scores.m0[perm[i]];
  }
  const NuisanceScores scores_s = NuisanceScores::raw(pi_s, m1_s, m0_s, "");

  CHECK(aipw(data.x, data.y, scores).psi ==
        doctest::Approx(aipw(shuffled.x, shuffled.y, scores_s).psi)
            .epsilon(1e-12));
  CHECK(tmle(data.x, data.y, scores).second.psi ==
        doctest::Approx(tmle(shuffled.x, shuffled.y, scores_s).second.psi)
            .epsilon(1e-10));
  CHECK(ipw(data.x, data.y, scores.pi).psi ==
        doctest::Approx(ipw(shuffled.x, shuffled.y, pi_s).psi).epsilon(1e-12));
}

TEST_CASE("score bounding counts clips") {
  Eigen::ArrayXd pi(3), m(3);
  pi << 0.0005, 0.5, 0.9995;
  m << 0.5, 0.5, 0.5;
  Bounds bounds;
  const auto s = NuisanceScores::bounded(pi, m, m, bounds, "t");
  CHECK(s.clip_count == 2);
  CHECK(s.pi[0] == 0.001);
  CHECK(s.pi[2] == 0.999);
}

TEST_CASE("bootstrap: degenerate estimator has zero spread") {
  const Dataset data = Dataset::from_sample(generate_sample(200, 11));
  NuisanceSpec spec;
  spec.kind = NuisanceKind::kNullStub;  // constant predictions
  const double se =
      bootstrap_se(data, spec, EstimatorKind::kGComp, 50, 123);
  CHECK(se == 0.0);
}

TEST_CASE("bootstrap: main-effects g-computation SE near the benchmark") {
  // Single-sample bootstrap SE ~ 0.016 (tolerance +/- 0.004 across seeds).
  const Dataset data = Dataset::from_sample(generate_sample(3000, 314159));
  NuisanceSpec spec;
  spec.kind = NuisanceKind::kMainEffects;
  const double se =
      bootstrap_se(data, spec, EstimatorKind::kGComp, 250, 2718, 2);
  CHECK(se > 0.012);
  CHECK(se < 0.020);

  // Doubling B changes the estimate by less than 15%.
  const double se2 =
      bootstrap_se(data, spec, EstimatorKind::kGComp, 500, 2718, 2);
  CHECK(std::abs(se2 - se) / se < 0.15);
}

TEST_CASE("bootstrap input validation") {
  const Dataset data = Dataset::from_sample(generate_sample(100, 1));
  NuisanceSpec spec;
  spec.kind = NuisanceKind::kNullStub;
  CHECK_THROWS(bootstrap_se(data, spec, EstimatorKind::kGComp, 1, 5));
  CHECK_THROWS(bootstrap_se(data, spec, EstimatorKind::kDcAipw, 50, 5));
}

TEST_CASE("ci width identity") {
  const Dataset data = Dataset::from_sample(generate_sample(500, 21));
  NuisanceSpec spec;
  spec.kind = NuisanceKind::kCorrect;
  const NuisanceScores scores = make_scores(spec, data, data, 6);
  for (const AceEstimate& est :
       {aipw(data.x, data.y, scores), ipw(data.x, data.y, scores.pi),
        tmle(data.x, data.y, scores).second}) {
    CHECK(est.ci_upper - est.ci_lower ==
          doctest::Approx(2 * 1.96 * est.se).epsilon(1e-12));
    CHECK(est.ci_lower <= est.psi);
    CHECK(est.psi <= est.ci_upper);
  }
}
