#include "dcfit/simharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "dcfit/dgm.hpp"
#include "dcfit/errors.hpp"
#include "dcfit/version.hpp"

namespace dcfit {

namespace {

constexpr double kZ95 = 1.96;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int hardware_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Type-7 quantile of a sorted vector.
double quantile_sorted(const std::vector<double>& v, double q) {
  const double h = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::uint64_t cell_seed(std::uint64_t master, std::uint64_t stream_tag,
                        std::uint64_t replicate, std::uint64_t variant) {
  return derive_seed(derive_seed(master, stream_tag, replicate), stream_tag,
                     variant);
}

}  // namespace

LearnerLibrary paper_sl_library() {
  return {
      {"mean", MeanSpec{}},
      {"logistic", LogisticSpec{}},
      {"gam(4,0.6)", GamSpec{4, 0.6}},
      {"gam(6,0)", GamSpec{6, 0.0}},
      {"forest(500,20)", ForestSpec{500, 20}},
      {"net(4,2000,0.05)", NetSpec{4, 2000, 0.05}},
  };
}

LearnerLibrary desk_sl_library() {
  return {
      {"mean", MeanSpec{}},
      {"logistic", LogisticSpec{}},
      {"gam(4,0.6)", GamSpec{4, 0.6}},
      {"gam(6,0)", GamSpec{6, 0.0}},
      {"forest(100,20)", ForestSpec{100, 20}},
      {"net(4,500,0.05)", NetSpec{4, 500, 0.05}},
  };
}

SimConfig paper_preset() {
  SimConfig c;
  c.replicates = 2000;
  c.partitions = 100;
  c.bootstrap_b = 250;
  c.sl_folds = 10;
  c.sl_library = paper_sl_library();
  return c;
}

SimConfig desk_preset() {
  SimConfig c;
  c.replicates = 500;
  c.partitions = 20;
  c.bootstrap_b = 100;
  c.sl_folds = 5;
  c.sl_library = desk_sl_library();
  return c;
}

MetricsRow compute_metrics(const std::vector<AceEstimate>& estimates,
                           double truth, const std::string& estimator,
                           const std::string& nuisance, int failures) {
  if (estimates.size() < 2) {
    throw Error("compute_metrics: need at least 2 estimates");
  }
  MetricsRow row;
  row.estimator = estimator;
  row.nuisance = nuisance;
  row.n_used = static_cast<int>(estimates.size());
  row.failures = failures;

  double mean_psi = 0.0, mean_se = 0.0, mean_cld = 0.0;
  int covered = 0;
  for (const auto& est : estimates) {
    mean_psi += est.psi;
    mean_se += est.se;
    mean_cld += est.ci_upper - est.ci_lower;
    if (est.ci_lower <= truth && truth <= est.ci_upper) ++covered;
  }
  const double m = static_cast<double>(estimates.size());
  mean_psi /= m;
  row.bias = mean_psi - truth;
  double ss = 0.0;
  for (const auto& est : estimates) {
    ss += (est.psi - mean_psi) * (est.psi - mean_psi);
  }
  row.ese = std::sqrt(ss / (m - 1.0));
  row.rmse = std::sqrt(row.bias * row.bias + row.ese * row.ese);
  row.ase = mean_se / m;
  row.cld = mean_cld / m;
  row.coverage = static_cast<double>(covered) / m;
  return row;
}

namespace {

struct ReplicateOutcome {
  // Indexed as estimates[nuisance_index][estimator_index].
  std::vector<std::vector<std::optional<AceEstimate>>> estimates;
};

NuisanceSpec spec_for(const SimConfig& config, NuisanceKind kind) {
  NuisanceSpec spec;
  spec.kind = kind;
  spec.sl_library = config.sl_library;
  spec.sl_folds = config.sl_folds;
  spec.bounds = config.bounds;
  return spec;
}

ReplicateOutcome run_replicate(const SimConfig& config, int replicate) {
  const std::uint64_t master = config.seed;
  const Dataset data = Dataset::from_sample(generate_sample(
      config.n,
      derive_seed(master, stream::kSample, static_cast<std::uint64_t>(replicate)),
      config.dgm));

  ReplicateOutcome out;
  out.estimates.resize(config.nuisances.size());
  for (auto& per_est : out.estimates) {
    per_est.resize(config.estimators.size());
  }

  for (std::size_t v = 0; v < config.nuisances.size(); ++v) {
    const NuisanceSpec spec = spec_for(config, config.nuisances[v]);
    const std::string nuis_name = nuisance_kind_name(spec.kind);

    const bool any_plain = std::any_of(
        config.estimators.begin(), config.estimators.end(), [](EstimatorKind e) {
          return e != EstimatorKind::kDcAipw && e != EstimatorKind::kDcTmle;
        });

    // Full-data nuisance fits shared by every non-cross-fit cell with this
    // specification: the paired design fixes the sample, and the fits are
    // deterministic in the derived seed.
    std::optional<NuisanceScores> scores;
    if (any_plain) {
      try {
        scores = make_scores(
            spec, data, data,
            cell_seed(master, stream::kNuisance,
                      static_cast<std::uint64_t>(replicate), v));
      } catch (const Error&) {
        scores.reset();
      }
    }

    for (std::size_t e = 0; e < config.estimators.size(); ++e) {
      const EstimatorKind kind = config.estimators[e];
      if (kind == EstimatorKind::kDcAipw || kind == EstimatorKind::kDcTmle) {
        continue;  // handled jointly below
      }
      if (!scores) continue;  // nuisance fit failed; cell failure
      try {
        AceEstimate est;
        switch (kind) {
          case EstimatorKind::kGComp: {
            est.method = "gcomp";
            est.nuisance = nuis_name;
            est.psi = g_computation(scores->m1, scores->m0);
            est.se = bootstrap_se(
                data, spec, EstimatorKind::kGComp, config.bootstrap_b,
                cell_seed(master, stream::kBootstrap,
                          static_cast<std::uint64_t>(replicate), v));
            est.ci_lower = est.psi - kZ95 * est.se;
            est.ci_upper = est.psi + kZ95 * est.se;
            est.clip_count = scores->clip_count;
            break;
          }
          case EstimatorKind::kIpw:
            est = ipw(data.x, data.y, scores->pi);
            est.nuisance = nuis_name;
            est.clip_count = scores->clip_count;
            break;
          case EstimatorKind::kAipw:
            est = aipw(data.x, data.y, *scores);
            break;
          case EstimatorKind::kTmle:
            est = tmle(data.x, data.y, *scores).second;
            break;
          default:
            break;
        }
        out.estimates[v][e] = std::move(est);
      } catch (const Error&) {
        // cell failure recorded as missing
      }
    }

    // Cross-fit cells share partitions and nuisance fits; results are
    // identical to independent runs at the same derived seed.
    std::vector<EstimatorKind> dc_kinds;
    std::vector<std::size_t> dc_slots;
    for (std::size_t e = 0; e < config.estimators.size(); ++e) {
      if (config.estimators[e] == EstimatorKind::kDcAipw) {
        dc_kinds.push_back(EstimatorKind::kAipw);
        dc_slots.push_back(e);
      } else if (config.estimators[e] == EstimatorKind::kDcTmle) {
        dc_kinds.push_back(EstimatorKind::kTmle);
        dc_slots.push_back(e);
      }
    }
    if (!dc_kinds.empty()) {
      CrossfitOptions opts;
      opts.partitions = config.partitions;
      opts.aggregation = config.aggregation;
      opts.threads = 1;  // replicates parallelize above
      try {
        const auto results = run_crossfit_multi(
            data, spec, dc_kinds,
            cell_seed(master, stream::kPartition,
                      static_cast<std::uint64_t>(replicate), v),
            opts);
        for (std::size_t k = 0; k < dc_slots.size(); ++k) {
          out.estimates[v][dc_slots[k]] = results[k].to_estimate();
        }
      } catch (const Error&) {
        // all cross-fit cells for this spec fail together
      }
    }
  }
  return out;
}

}  // namespace

CampaignResult run_campaign(const SimConfig& config) {
  if (!config.has_seed) {
    throw ConfigError("run_campaign: a master seed is required");
  }
  if (config.replicates < 2) {
    throw ConfigError("run_campaign: need at least 2 replicates");
  }
  if (config.estimators.empty() || config.nuisances.empty()) {
    throw ConfigError("run_campaign: empty estimator or nuisance grid");
  }

  CampaignResult result;
  result.config = config;
  result.oracle_seed = derive_seed(config.seed, stream::kOracle, 0);
  const int threads = hardware_threads(config.threads);
  result.oracle_psi =
      true_ace(config.oracle_size, result.oracle_seed, threads, config.dgm);

  std::vector<ReplicateOutcome> outcomes(
      static_cast<std::size_t>(config.replicates));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next.fetch_add(1); r < config.replicates;
         r = next.fetch_add(1)) {
      outcomes[static_cast<std::size_t>(r)] = run_replicate(config, r);
    }
  };
  const int workers = std::max(1, std::min(threads, config.replicates));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t v = 0; v < config.nuisances.size(); ++v) {
    for (std::size_t e = 0; e < config.estimators.size(); ++e) {
      std::vector<AceEstimate> estimates;
      estimates.reserve(outcomes.size());
      for (const auto& rep : outcomes) {
        if (rep.estimates[v][e]) estimates.push_back(*rep.estimates[v][e]);
      }
      const int failures =
          config.replicates - static_cast<int>(estimates.size());
      const std::string est_name = estimator_name(config.estimators[e]);
      const std::string nuis_name = nuisance_kind_name(config.nuisances[v]);
      if (failures * 20 > config.replicates) {
        std::fprintf(stderr,
                     "warning: cell %s/%s failed in %d of %d replicates\n",
                     est_name.c_str(), nuis_name.c_str(), failures,
                     config.replicates);
      }
      result.rows.push_back(compute_metrics(estimates, result.oracle_psi,
                                            est_name, nuis_name, failures));
    }
  }
  return result;
}

void write_metrics_csv(const std::vector<MetricsRow>& rows,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "estimator,nuisance,bias,rmse,ase,ese,cld,coverage,n_used,failures\n";
  for (const auto& r : rows) {
    out << r.estimator << ',' << r.nuisance << ',' << fmt17(r.bias) << ','
        << fmt17(r.rmse) << ',' << fmt17(r.ase) << ',' << fmt17(r.ese) << ','
        << fmt17(r.cld) << ',' << fmt17(r.coverage) << ',' << r.n_used << ','
        << r.failures << '\n';
  }
  if (!out.good()) throw IoError("write failed for " + path);
}

void write_manifest(const CampaignResult& result, const std::string& path) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["rng_algorithm"] = std::string(kRngAlgorithm);
  j["seed"] = result.config.seed;
  j["oracle"] = {{"size", result.config.oracle_size},
                 {"seed", result.oracle_seed},
                 {"psi", result.oracle_psi}};
  j["config_text"] = config_to_text(result.config);
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out.good()) throw IoError("write failed for " + path);
}

AceEstimate analyze_dataset(const Dataset& data, EstimatorKind estimator,
                            const NuisanceSpec& spec, std::uint64_t seed,
                            const AnalyzeOptions& options) {
  switch (estimator) {
    case EstimatorKind::kGComp: {
      const NuisanceScores scores =
          make_scores(spec, data, data, derive_seed(seed, stream::kNuisance, 0));
      AceEstimate est;
      est.method = "gcomp";
      est.nuisance = nuisance_kind_name(spec.kind);
      est.psi = g_computation(scores.m1, scores.m0);
      est.se = bootstrap_se(data, spec, EstimatorKind::kGComp,
                            options.bootstrap_b,
                            derive_seed(seed, stream::kBootstrap, 0),
                            options.threads);
      est.ci_lower = est.psi - kZ95 * est.se;
      est.ci_upper = est.psi + kZ95 * est.se;
      est.clip_count = scores.clip_count;
      return est;
    }
    case EstimatorKind::kIpw: {
      const NuisanceScores scores =
          make_scores(spec, data, data, derive_seed(seed, stream::kNuisance, 0));
      AceEstimate est = ipw(data.x, data.y, scores.pi, options.hajek);
      est.nuisance = nuisance_kind_name(spec.kind);
      est.clip_count = scores.clip_count;
      return est;
    }
    case EstimatorKind::kAipw: {
      const NuisanceScores scores =
          make_scores(spec, data, data, derive_seed(seed, stream::kNuisance, 0));
      return aipw(data.x, data.y, scores);
    }
    case EstimatorKind::kTmle: {
      const NuisanceScores scores =
          make_scores(spec, data, data, derive_seed(seed, stream::kNuisance, 0));
      return tmle(data.x, data.y, scores).second;
    }
    case EstimatorKind::kDcAipw:
    case EstimatorKind::kDcTmle: {
      CrossfitOptions opts;
      opts.partitions = options.partitions;
      opts.aggregation = options.aggregation;
      opts.threads = options.threads;
      const EstimatorKind dr = estimator == EstimatorKind::kDcAipw
                                   ? EstimatorKind::kAipw
                                   : EstimatorKind::kTmle;
      const CrossfitResult res = run_crossfit(data, spec, dr, seed, opts);
      if (options.partition_dump) {
        std::ofstream dump(*options.partition_dump);
        if (!dump) {
          throw IoError("cannot open " + *options.partition_dump +
                        " for writing");
        }
        dump << "partition,ace,var\n";
        for (std::size_t j = 0; j < res.partition_aces.size(); ++j) {
          dump << j << ',' << fmt17(res.partition_aces[j]) << ','
               << fmt17(res.partition_vars[j]) << '\n';
        }
      }
      return res.to_estimate();
    }
  }
  throw Error("analyze_dataset: unknown estimator");
}

std::vector<StabilityRow> stability_study(const Dataset& data,
                                          EstimatorKind dr_estimator,
                                          const NuisanceSpec& spec,
                                          const std::vector<int>& p_values,
                                          int reruns, std::uint64_t seed,
                                          int threads) {
  if (p_values.empty()) throw Error("stability_study: empty p list");
  if (reruns < 1) throw Error("stability_study: reruns must be >= 1");
  const EstimatorKind dr = dr_estimator == EstimatorKind::kDcTmle ||
                                   dr_estimator == EstimatorKind::kTmle
                               ? EstimatorKind::kTmle
                               : EstimatorKind::kAipw;

  std::vector<StabilityRow> rows;
  for (std::size_t pi = 0; pi < p_values.size(); ++pi) {
    const int p = p_values[pi];
    if (p < 1) throw Error("stability_study: partition counts must be >= 1");
    std::vector<double> psis(static_cast<std::size_t>(reruns));
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int r = next.fetch_add(1); r < reruns; r = next.fetch_add(1)) {
        CrossfitOptions opts;
        opts.partitions = p;
        opts.threads = 1;
        const std::uint64_t rerun_seed = derive_seed(
            derive_seed(seed, stream::kStability, pi),
            stream::kStability, static_cast<std::uint64_t>(r));
        psis[static_cast<std::size_t>(r)] =
            run_crossfit(data, spec, dr, rerun_seed, opts).psi;
      }
    };
    const int workers = std::max(1, std::min(threads, reruns));
    if (workers == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    std::sort(psis.begin(), psis.end());
    StabilityRow row;
    row.p = p;
    row.reruns = reruns;
    row.min = psis.front();
    row.q1 = quantile_sorted(psis, 0.25);
    row.median = quantile_sorted(psis, 0.5);
    row.q3 = quantile_sorted(psis, 0.75);
    row.max = psis.back();
    rows.push_back(row);
  }
  return rows;
}

void write_stability_csv(const std::vector<StabilityRow>& rows,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "p,reruns,min,q1,median,q3,max\n";
  for (const auto& r : rows) {
    out << r.p << ',' << r.reruns << ',' << fmt17(r.min) << ',' << fmt17(r.q1)
        << ',' << fmt17(r.median) << ',' << fmt17(r.q3) << ',' << fmt17(r.max)
        << '\n';
  }
  if (!out.good()) throw IoError("write failed for " + path);
}

}  // namespace dcfit
