#include "dcfit/crossfit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "dcfit/errors.hpp"

namespace dcfit {

namespace {
constexpr double kZ95 = 1.96;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

PartitionScheme make_partition(std::size_t n, Rng& rng) {
  if (n < 3) throw Error("make_partition: need at least 3 rows");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order.begin(), order.end());

  PartitionScheme scheme;
  scheme.split.assign(n, 0);
  // Split sizes differ by at most one: the first n % 3 splits absorb the
  // remainder.
  const std::size_t base = n / 3;
  const std::size_t rem = n % 3;
  std::size_t pos = 0;
  for (int s = 0; s < 3; ++s) {
    const std::size_t size = base + (static_cast<std::size_t>(s) < rem ? 1 : 0);
    scheme.rows[static_cast<std::size_t>(s)].reserve(size);
    for (std::size_t i = 0; i < size; ++i, ++pos) {
      scheme.split[static_cast<std::size_t>(order[pos])] =
          static_cast<std::uint8_t>(s);
      scheme.rows[static_cast<std::size_t>(s)].push_back(order[pos]);
    }
  }
  return scheme;
}

std::vector<PartitionEstimate> crossfit_once_multi(
    const Dataset& data, const TreatmentFitter& fit_treatment,
    const OutcomeFitter& fit_outcome,
    const std::vector<EstimatorKind>& dr_estimators, const Bounds& bounds,
    const PartitionScheme& scheme, std::uint64_t seed) {
  for (EstimatorKind kind : dr_estimators) {
    if (kind != EstimatorKind::kAipw && kind != EstimatorKind::kTmle) {
      throw Error("crossfit: doubly-robust estimator must be aipw or tmle");
    }
  }
  if (scheme.split.size() != data.n()) {
    throw Error("crossfit: scheme does not match dataset size");
  }

  std::array<TreatmentModel, 3> tmodels;
  std::array<OutcomeModel, 3> omodels;
  std::array<Dataset, 3> split_data;
  for (int s = 0; s < 3; ++s) {
    split_data[static_cast<std::size_t>(s)] =
        data.subset(scheme.rows[static_cast<std::size_t>(s)]);
    tmodels[static_cast<std::size_t>(s)] = fit_treatment(
        split_data[static_cast<std::size_t>(s)],
        derive_seed(seed, stream::kNuisance, 10 + static_cast<std::uint64_t>(s)));
    omodels[static_cast<std::size_t>(s)] = fit_outcome(
        split_data[static_cast<std::size_t>(s)],
        derive_seed(seed, stream::kNuisance, 20 + static_cast<std::uint64_t>(s)));
  }

  std::vector<PartitionEstimate> out(dr_estimators.size());
  for (int s = 0; s < 3; ++s) {
    const Dataset& here = split_data[static_cast<std::size_t>(s)];
    const int g = scheme.gamma_source[static_cast<std::size_t>(s)];
    const int e = scheme.eta_source[static_cast<std::size_t>(s)];
    const NuisanceScores scores = NuisanceScores::bounded(
        tmodels[static_cast<std::size_t>(g)].predict(here),
        omodels[static_cast<std::size_t>(e)].predict(here, 1),
        omodels[static_cast<std::size_t>(e)].predict(here, 0), bounds, "");
    for (std::size_t k = 0; k < dr_estimators.size(); ++k) {
      AceEstimate est;
      if (dr_estimators[k] == EstimatorKind::kAipw) {
        est = aipw(here.x, here.y, scores);
      } else {
        est = tmle(here.x, here.y, scores).second;
      }
      out[k].ace += est.psi / 3.0;
      out[k].var_unit += est.ic_var / 3.0;
      out[k].clip_count += scores.clip_count;
    }
  }
  return out;
}

PartitionEstimate crossfit_once(const Dataset& data,
                                const TreatmentFitter& fit_treatment,
                                const OutcomeFitter& fit_outcome,
                                EstimatorKind dr_estimator,
                                const Bounds& bounds,
                                const PartitionScheme& scheme,
                                std::uint64_t seed) {
  return crossfit_once_multi(data, fit_treatment, fit_outcome, {dr_estimator},
                             bounds, scheme, seed)[0];
}

AceEstimate CrossfitResult::to_estimate() const {
  AceEstimate est;
  est.method = method;
  est.nuisance = nuisance;
  est.psi = psi;
  est.ic_var = var_unit;
  est.se = se;
  est.ci_lower = ci_lower;
  est.ci_upper = ci_upper;
  est.clip_count = clip_count;
  return est;
}

namespace {

CrossfitResult aggregate(const std::vector<PartitionEstimate>& results,
                         const std::vector<std::uint8_t>& ok,
                         EstimatorKind dr_estimator, const std::string& nuisance,
                         std::size_t n, const CrossfitOptions& options) {
  const int p = static_cast<int>(results.size());
  CrossfitResult res;
  res.method = dr_estimator == EstimatorKind::kAipw ? "dc-aipw" : "dc-tmle";
  res.nuisance = nuisance;
  res.partitions_requested = p;
  for (int j = 0; j < p; ++j) {
    if (!ok[static_cast<std::size_t>(j)]) continue;
    res.partition_aces.push_back(results[static_cast<std::size_t>(j)].ace);
    res.partition_vars.push_back(results[static_cast<std::size_t>(j)].var_unit);
    res.clip_count += results[static_cast<std::size_t>(j)].clip_count;
  }
  res.failures = p - static_cast<int>(res.partition_aces.size());
  if (res.failures * 10 > p) {
    throw FitError("run_crossfit: " + std::to_string(res.failures) + " of " +
                   std::to_string(p) + " partitions failed");
  }

  const auto& aces = res.partition_aces;
  if (options.aggregation == Aggregation::kMedian) {
    res.psi = median(aces);
    std::vector<double> combined(aces.size());
    for (std::size_t j = 0; j < aces.size(); ++j) {
      const double dev = aces[j] - res.psi;
      combined[j] = res.partition_vars[j] + dev * dev;
    }
    res.var_unit = median(std::move(combined));
  } else {
    double mean_ace = 0.0;
    for (double a : aces) mean_ace += a;
    mean_ace /= static_cast<double>(aces.size());
    res.psi = mean_ace;
    double mean_combined = 0.0;
    for (std::size_t j = 0; j < aces.size(); ++j) {
      const double dev = aces[j] - res.psi;
      mean_combined += res.partition_vars[j] + dev * dev;
    }
    res.var_unit = mean_combined / static_cast<double>(aces.size());
  }
  res.se = std::sqrt(res.var_unit / static_cast<double>(n));
  res.ci_lower = res.psi - kZ95 * res.se;
  res.ci_upper = res.psi + kZ95 * res.se;
  return res;
}

}  // namespace

std::vector<CrossfitResult> run_crossfit_multi(
    const Dataset& data, const NuisanceSpec& spec,
    const std::vector<EstimatorKind>& dr_estimators, std::uint64_t seed,
    const CrossfitOptions& options) {
  if (options.partitions < 1) {
    throw Error("run_crossfit: need at least one partition");
  }
  if (dr_estimators.empty()) {
    throw Error("run_crossfit: no estimators requested");
  }
  const TreatmentFitter tfit = [&spec](const Dataset& d, std::uint64_t s) {
    return fit_treatment_model(spec, d, s);
  };
  const OutcomeFitter ofit = [&spec](const Dataset& d, std::uint64_t s) {
    return fit_outcome_model(spec, d, s);
  };

  const int p = options.partitions;
  const std::size_t k = dr_estimators.size();
  std::vector<std::vector<PartitionEstimate>> results(
      k, std::vector<PartitionEstimate>(static_cast<std::size_t>(p)));
  std::vector<std::uint8_t> ok(static_cast<std::size_t>(p), 0);

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int j = next.fetch_add(1); j < p; j = next.fetch_add(1)) {
      const std::uint64_t pseed =
          derive_seed(seed, stream::kPartition, static_cast<std::uint64_t>(j));
      try {
        Rng rng(pseed);
        const PartitionScheme scheme = make_partition(data.n(), rng);
        const auto ests = crossfit_once_multi(data, tfit, ofit, dr_estimators,
                                              spec.bounds, scheme, pseed);
        for (std::size_t e = 0; e < k; ++e) {
          results[e][static_cast<std::size_t>(j)] = ests[e];
        }
        ok[static_cast<std::size_t>(j)] = 1;
      } catch (const Error&) {
        // failed partition; counted in aggregate()
      }
    }
  };
  const int workers = std::max(1, std::min(options.threads, p));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<CrossfitResult> out;
  out.reserve(k);
  for (std::size_t e = 0; e < k; ++e) {
    out.push_back(aggregate(results[e], ok, dr_estimators[e],
                            nuisance_kind_name(spec.kind), data.n(), options));
  }
  return out;
}

CrossfitResult run_crossfit(const Dataset& data, const NuisanceSpec& spec,
                            EstimatorKind dr_estimator, std::uint64_t seed,
                            const CrossfitOptions& options) {
  return run_crossfit_multi(data, spec, {dr_estimator}, seed, options)[0];
}

}  // namespace dcfit
