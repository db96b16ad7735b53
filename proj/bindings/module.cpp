#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dcfit/config.hpp"
#include "dcfit/crossfit.hpp"
#include "dcfit/dataset.hpp"
#include "dcfit/dgm.hpp"
#include "dcfit/errors.hpp"
#include "dcfit/estimators.hpp"
#include "dcfit/math.hpp"
#include "dcfit/nuisance.hpp"
#include "dcfit/simharness.hpp"
#include "dcfit/version.hpp"

namespace py = pybind11;
using namespace dcfit;

namespace {

Eigen::ArrayXd to_array(const py::array_t<double>& a) {
  const auto buf = a.request();
  if (buf.ndim != 1) throw Error("expected a 1-d array");
  Eigen::ArrayXd out(buf.shape[0]);
  const double* ptr = static_cast<const double*>(buf.ptr);
  for (py::ssize_t i = 0; i < buf.shape[0]; ++i) out[i] = ptr[i];
  return out;
}

std::vector<int> to_binary_vector(const py::array_t<double>& a,
                                  const char* what) {
  const Eigen::ArrayXd arr = to_array(a);
  std::vector<int> out(static_cast<std::size_t>(arr.size()));
  for (Eigen::Index i = 0; i < arr.size(); ++i) {
    if (arr[i] != 0.0 && arr[i] != 1.0) {
      throw Error(std::string(what) + " must be binary 0/1");
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(arr[i]);
  }
  return out;
}

py::array_t<double> from_array(const Eigen::ArrayXd& v) {
  py::array_t<double> out(
      std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  auto ref = out.mutable_unchecked<1>();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    ref(static_cast<py::ssize_t>(i)) = v[i];
  }
  return out;
}

py::dict estimate_to_dict(const AceEstimate& est) {
  py::dict d;
  d["method"] = est.method;
  d["psi"] = est.psi;
  d["se"] = est.se;
  d["ci_lower"] = est.ci_lower;
  d["ci_upper"] = est.ci_upper;
  d["clip_count"] = est.clip_count;
  return d;
}

Dataset dataset_from_arrays(const py::array_t<double>& age,
                            const py::array_t<double>& log_ldl,
                            const py::array_t<double>& diabetes,
                            const py::array_t<double>& risk_score,
                            const py::array_t<double>& x,
                            const py::array_t<double>& y) {
  Dataset ds;
  const Eigen::ArrayXd a = to_array(age);
  const Eigen::ArrayXd l = to_array(log_ldl);
  const Eigen::ArrayXd r = to_array(risk_score);
  const std::vector<int> d = to_binary_vector(diabetes, "diabetes");
  ds.x = to_binary_vector(x, "treatment");
  ds.y = to_binary_vector(y, "outcome");
  const std::size_t n = ds.x.size();
  if (static_cast<std::size_t>(a.size()) != n ||
      static_cast<std::size_t>(l.size()) != n ||
      static_cast<std::size_t>(r.size()) != n || d.size() != n ||
      ds.y.size() != n) {
    throw Error("all columns must share one length");
  }
  ds.age.assign(a.data(), a.data() + a.size());
  ds.log_ldl.assign(l.data(), l.data() + l.size());
  ds.risk_score.assign(r.data(), r.data() + r.size());
  ds.diabetes = d;
  return ds;
}

NuisanceSpec spec_from_args(const std::string& nuisance,
                            const std::string& sl_library, int sl_folds) {
  NuisanceSpec spec;
  spec.kind = nuisance_from_name(nuisance);
  spec.sl_folds = sl_folds;
  spec.sl_library =
      sl_library.empty() ? desk_sl_library() : parse_library(sl_library);
  return spec;
}

}  // namespace

PYBIND11_MODULE(_dcfit, m) {
  m.doc() = "Doubly-robust ACE estimation with double cross-fitting";
  m.attr("__version__") = kVersion;
  m.attr("rng_algorithm") = std::string(kRngAlgorithm);

  py::register_exception<Error>(m, "DcfitError");

  m.def("expit", py::vectorize([](double x) { return expit(x); }),
        "Numerically stable logistic function");

  m.def(
      "generate_sample",
      [](std::size_t n, std::uint64_t seed, bool oracle_view) {
        const GeneratedSample sample = generate_sample(n, seed);
        const std::size_t rows = sample.rows.size();
        Eigen::ArrayXd a(rows), l(rows), f(rows), r(rows);
        Eigen::ArrayXd d(rows), x(rows), y0(rows), y1(rows), y(rows);
        for (std::size_t i = 0; i < rows; ++i) {
          const auto& row = sample.rows[i];
          const auto idx = static_cast<Eigen::Index>(i);
          a[idx] = row.z.age;
          l[idx] = row.z.log_ldl;
          d[idx] = row.z.diabetes;
          f[idx] = row.z.frailty;
          r[idx] = row.z.risk_score;
          x[idx] = row.x;
          y0[idx] = row.y0;
          y1[idx] = row.y1;
          y[idx] = row.y;
        }
        py::dict out;
        out["A"] = from_array(a);
        out["L"] = from_array(l);
        out["D"] = from_array(d);
        out["R"] = from_array(r);
        out["X"] = from_array(x);
        out["Y"] = from_array(y);
        if (oracle_view) {
          out["F"] = from_array(f);
          out["Y0"] = from_array(y0);
          out["Y1"] = from_array(y1);
        }
        return out;
      },
      py::arg("n"), py::arg("seed"), py::arg("oracle_view") = false,
      "Draw a synthetic cohort; returns a dict of numpy columns");

  py::class_<DgmOptions>(m, "DgmOptions")
      .def(py::init<>())
      .def_readwrite("null_treatment_effect",
                     &DgmOptions::null_treatment_effect);

  m.def("true_ace", &true_ace, py::arg("population_size"), py::arg("seed"),
        py::arg("threads") = 1, py::arg("options") = DgmOptions{},
        "Brute-force population average of Y1 - Y0");

  m.def(
      "g_computation",
      [](const py::array_t<double>& m1, const py::array_t<double>& m0) {
        return g_computation(to_array(m1), to_array(m0));
      },
      py::arg("m1"), py::arg("m0"));

  m.def(
      "ipw",
      [](const py::array_t<double>& x, const py::array_t<double>& y,
         const py::array_t<double>& pi, bool hajek) {
        return estimate_to_dict(ipw(to_binary_vector(x, "treatment"),
                                    to_binary_vector(y, "outcome"),
                                    to_array(pi), hajek));
      },
      py::arg("x"), py::arg("y"), py::arg("pi"), py::arg("hajek") = false);

  m.def(
      "clever_covariate",
      [](const py::array_t<double>& x, const py::array_t<double>& pi) {
        return from_array(
            clever_covariate(to_binary_vector(x, "treatment"), to_array(pi)));
      },
      py::arg("x"), py::arg("pi"));

  m.def(
      "aipw",
      [](const py::array_t<double>& x, const py::array_t<double>& y,
         const py::array_t<double>& pi, const py::array_t<double>& m1,
         const py::array_t<double>& m0, bool bounded) {
        const auto xv = to_binary_vector(x, "treatment");
        const auto yv = to_binary_vector(y, "outcome");
        const NuisanceScores scores =
            bounded ? NuisanceScores::bounded(to_array(pi), to_array(m1),
                                              to_array(m0), Bounds{}, "arrays")
                    : NuisanceScores::raw(to_array(pi), to_array(m1),
                                          to_array(m0), "arrays");
        return estimate_to_dict(aipw(xv, yv, scores));
      },
      py::arg("x"), py::arg("y"), py::arg("pi"), py::arg("m1"), py::arg("m0"),
      py::arg("bounded") = true);

  m.def(
      "tmle",
      [](const py::array_t<double>& x, const py::array_t<double>& y,
         const py::array_t<double>& pi, const py::array_t<double>& m1,
         const py::array_t<double>& m0, bool bounded) {
        const auto xv = to_binary_vector(x, "treatment");
        const auto yv = to_binary_vector(y, "outcome");
        const NuisanceScores scores =
            bounded ? NuisanceScores::bounded(to_array(pi), to_array(m1),
                                              to_array(m0), Bounds{}, "arrays")
                    : NuisanceScores::raw(to_array(pi), to_array(m1),
                                          to_array(m0), "arrays");
        const auto [tr, est] = tmle(xv, yv, scores);
        py::dict d = estimate_to_dict(est);
        d["epsilon"] = tr.epsilon;
        d["m1_star"] = from_array(tr.m1_star);
        d["m0_star"] = from_array(tr.m0_star);
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("pi"), py::arg("m1"), py::arg("m0"),
      py::arg("bounded") = true);

  m.def(
      "analyze",
      [](const py::array_t<double>& age, const py::array_t<double>& log_ldl,
         const py::array_t<double>& diabetes,
         const py::array_t<double>& risk_score, const py::array_t<double>& x,
         const py::array_t<double>& y, const std::string& method,
         const std::string& nuisance, std::uint64_t seed, int partitions,
         int bootstrap, const std::string& sl_library, int sl_folds,
         int threads) {
        const Dataset data =
            dataset_from_arrays(age, log_ldl, diabetes, risk_score, x, y);
        const NuisanceSpec spec =
            spec_from_args(nuisance, sl_library, sl_folds);
        AnalyzeOptions options;
        options.partitions = partitions;
        options.bootstrap_b = bootstrap;
        options.threads = threads;
        const AceEstimate est = analyze_dataset(
            data, estimator_from_name(method), spec, seed, options);
        py::dict d = estimate_to_dict(est);
        d["method"] = method;
        d["nuisance"] = nuisance;
        d["n"] = data.n();
        return d;
      },
      py::arg("age"), py::arg("log_ldl"), py::arg("diabetes"),
      py::arg("risk_score"), py::arg("x"), py::arg("y"), py::arg("method"),
      py::arg("nuisance") = "correct", py::arg("seed") = 0,
      py::arg("partitions") = 100, py::arg("bootstrap") = 250,
      py::arg("sl_library") = "", py::arg("sl_folds") = 10,
      py::arg("threads") = 1,
      "Full estimation pipeline on column arrays; returns a dict");

  m.def(
      "run_crossfit",
      [](const py::array_t<double>& age, const py::array_t<double>& log_ldl,
         const py::array_t<double>& diabetes,
         const py::array_t<double>& risk_score, const py::array_t<double>& x,
         const py::array_t<double>& y, const std::string& dr_estimator,
         const std::string& nuisance, int partitions, std::uint64_t seed,
         const std::string& aggregation, const std::string& sl_library,
         int sl_folds, int threads) {
        const Dataset data =
            dataset_from_arrays(age, log_ldl, diabetes, risk_score, x, y);
        const NuisanceSpec spec =
            spec_from_args(nuisance, sl_library, sl_folds);
        CrossfitOptions options;
        options.partitions = partitions;
        options.aggregation = aggregation == "mean" ? Aggregation::kMean
                                                    : Aggregation::kMedian;
        options.threads = threads;
        const CrossfitResult res =
            run_crossfit(data, spec, estimator_from_name(dr_estimator), seed,
                         options);
        py::dict d;
        d["method"] = res.method;
        d["psi"] = res.psi;
        d["se"] = res.se;
        d["ci_lower"] = res.ci_lower;
        d["ci_upper"] = res.ci_upper;
        d["failures"] = res.failures;
        d["partition_aces"] = res.partition_aces;
        d["partition_vars"] = res.partition_vars;
        return d;
      },
      py::arg("age"), py::arg("log_ldl"), py::arg("diabetes"),
      py::arg("risk_score"), py::arg("x"), py::arg("y"),
      py::arg("dr_estimator") = "aipw", py::arg("nuisance") = "correct",
      py::arg("partitions") = 100, py::arg("seed") = 0,
      py::arg("aggregation") = "median", py::arg("sl_library") = "",
      py::arg("sl_folds") = 10, py::arg("threads") = 1,
      "Double cross-fit estimation; returns aggregate and per-partition "
      "results");
}
