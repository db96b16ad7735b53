#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <limits>

#include "dcfit/dataset.hpp"
#include "dcfit/dgm.hpp"
#include "dcfit/math.hpp"

using namespace dcfit;

TEST_CASE("expit basics") {
  CHECK(expit(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  // Saturation stays strictly inside (0,1) without overflow.
  const double hi = expit(40.0);
  CHECK(hi < 1.0);
  CHECK(1.0 - hi < 1e-15);
  const double lo = expit(-700.0);
  CHECK(lo > 0.0);
  CHECK(lo < 1e-300);
  CHECK(expit(logit(0.3)) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK_THROWS_AS(expit(std::numeric_limits<double>::infinity()),
                  std::domain_error);
  CHECK_THROWS_AS(expit(std::nan("")), std::domain_error);
  CHECK_THROWS_AS(logit(0.0), std::domain_error);
  CHECK_THROWS_AS(logit(1.0), std::domain_error);
}

TEST_CASE("age transform: piecewise boundary and fold") {
  // v = 60 sits exactly on the boundary of the piecewise map.
  CovariateRow row;
  Rng rng(1);
  // Drawing can't hit v = 60 exactly; exercise the formula directly instead.
  const double v = 60.0;
  const double a = v > 60.0 ? 75.0 - std::sqrt(30.0 * (v - 60.0)) : v;
  CHECK(a == 60.0);

  // The square-root fold compresses the upper tail: max < 75 and the mass
  // above 60 matches the v-density integral P(60 < v < 67.5) = 7.5/27.5.
  Rng rng2(99);
  const auto rows = draw_covariates(1'000'000, rng2);
  double amax = 0.0;
  int above60 = 0;
  for (const auto& r : rows) {
    amax = std::max(amax, r.age);
    if (r.age > 60.0) ++above60;
    CHECK(r.age >= 39.0);
  }
  CHECK(amax <= 75.0);
  const double p_above = above60 / 1e6;
  const double expected = 7.5 / 27.5;  // direct integral of the uniform v density
  CHECK(std::abs(p_above - expected) < 3.0 * std::sqrt(expected * (1 - expected) / 1e6) + 1e-4);
  (void)row;
}

TEST_CASE("covariate invariants") {
  Rng rng(7);
  const auto rows = draw_covariates(5000, rng);
  REQUIRE(rows.size() == 5000);
  for (const auto& r : rows) {
    CHECK((r.diabetes == 0 || r.diabetes == 1));
    CHECK(r.frailty > 0.0);
    CHECK(r.frailty < 1.0);
    CHECK(r.risk_score > 0.0);
    CHECK(r.risk_score < 1.0);
    CHECK(std::isfinite(r.age));
    CHECK(std::isfinite(r.log_ldl));
  }
  CHECK_THROWS(draw_covariates(0, rng));
}

TEST_CASE("treatment_prob fixed points") {
  CovariateRow row;
  row.diabetes = 0;
  row.log_ldl = 0.0;
  row.age = 30.0;
  row.risk_score = 1e-9;
  // All optional terms vanish (log-LDL of 0 sits below the cutoff).
  CHECK(treatment_prob(row) == doctest::Approx(expit(-3.471)).epsilon(1e-12));

  // Half-open band boundary: R = 0.075 fires the middle band only.
  CovariateRow base = row;
  base.risk_score = 0.075;
  CovariateRow low = row;
  low.risk_score = 0.075 - 1e-9;
  CHECK(std::log(treatment_prob(base) / (1 - treatment_prob(base))) -
            std::log(treatment_prob(low) / (1 - treatment_prob(low))) ==
        doctest::Approx(1.592 - 0.273).epsilon(1e-6));
}

TEST_CASE("outcome_prob structure") {
  CovariateRow row;
  row.age = 50.0;
  row.diabetes = 0;
  row.risk_score = 0.1;
  // x = 0 zeroes every treatment term: probability is x-free.
  row.log_ldl = std::log(150.0);  // above the 130 cutoff
  const double p0 = outcome_prob(0, row);
  row.log_ldl = std::log(150.0);
  const double p1 = outcome_prob(1, row);
  // With L >= log(130) only the main -0.75 effect differs.
  CHECK(std::log(p1 / (1 - p1)) - std::log(p0 / (1 - p0)) ==
        doctest::Approx(-0.75).epsilon(1e-9));

  row.age = 38.0;
  CHECK_THROWS_AS(outcome_prob(0, row), std::domain_error);
  row.age = 50.0;
  CHECK_THROWS_AS(outcome_prob(2, row), std::domain_error);

  // Null-effect switch removes all treatment terms.
  DgmOptions null_opts;
  null_opts.null_treatment_effect = true;
  row.log_ldl = 4.5;
  CHECK(outcome_prob(1, row, null_opts) ==
        doctest::Approx(outcome_prob(0, row, null_opts)).epsilon(1e-15));
}

TEST_CASE("generate_sample composition and determinism") {
  const auto a = generate_sample(500, 12345);
  const auto b = generate_sample(500, 12345);
  REQUIRE(a.rows.size() == 500);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const auto& r = a.rows[i];
    CHECK(r.y == r.x * r.y1 + (1 - r.x) * r.y0);
    CHECK((r.x == 0 || r.x == 1));
    CHECK((r.y0 == 0 || r.y0 == 1));
    CHECK((r.y1 == 0 || r.y1 == 1));
    CHECK(a.rows[i].z.age == b.rows[i].z.age);
    CHECK(a.rows[i].x == b.rows[i].x);
    CHECK(a.rows[i].y == b.rows[i].y);
  }
  const auto single = generate_sample(1, 9);
  REQUIRE(single.rows.size() == 1);
  const auto& r = single.rows[0];
  CHECK(r.y == (r.x == 1 ? r.y1 : r.y0));
}

TEST_CASE("treated fraction near the cohort benchmark") {
  // 25.9% +/- 3 Monte Carlo standard errors across seeds.
  int treated = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    const auto sample = generate_sample(3000, 1000 + s);
    for (const auto& r : sample.rows) treated += r.x;
  }
  const double frac = treated / (3000.0 * seeds);
  CHECK(frac > 0.259 - 0.02);
  CHECK(frac < 0.259 + 0.02);
}

TEST_CASE("true_ace oracle") {
  // Frozen value from the 1e7-person oracle at seed 20260810; independent
  // seeds agree within the Monte Carlo error bound.
  const double psi = true_ace(4'000'000, 20260810, 2);
  CHECK(psi == doctest::Approx(-0.1082).epsilon(0.02));
  const double psi_b = true_ace(4'000'000, 777, 2);
  CHECK(std::abs(psi - psi_b) < 8e-4);

  // Null-effect mechanism: psi = 0 within Monte Carlo error.
  DgmOptions null_opts;
  null_opts.null_treatment_effect = true;
  const double psi_null = true_ace(500'000, 5, 1, null_opts);
  CHECK(std::abs(psi_null) < 2e-3);

  // Thread count does not change the result.
  CHECK(true_ace(200'000, 31, 1) == true_ace(200'000, 31, 2));
}

TEST_CASE("dataset csv round trip") {
  const auto sample = generate_sample(50, 321);
  const std::string path = "test_dgm_roundtrip.csv";
  write_sample_csv(sample, path, false);
  const Dataset ds = read_dataset_csv(path);
  REQUIRE(ds.n() == 50);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    CHECK(ds.age[i] == sample.rows[i].z.age);  // 17 digits: bit-exact
    CHECK(ds.log_ldl[i] == sample.rows[i].z.log_ldl);
    CHECK(ds.x[i] == sample.rows[i].x);
    CHECK(ds.y[i] == sample.rows[i].y);
  }
  write_sample_csv(sample, path, true);
  const Dataset oracle_view = read_dataset_csv(path);  // extra columns ignored
  CHECK(oracle_view.n() == 50);
  std::remove(path.c_str());
}
