#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "itedist/benchmark.hpp"
#include "itedist/bootstrap.hpp"
#include "itedist/cli.hpp"
#include "itedist/counterfactual.hpp"
#include "itedist/data_model.hpp"
#include "itedist/empirical_dist.hpp"
#include "itedist/error.hpp"

namespace py = pybind11;
using namespace itedist;

namespace {

Sample make_sample(std::vector<double> y, std::vector<int> d, std::vector<int> z,
                   std::optional<std::vector<std::vector<std::int64_t>>> x,
                   std::vector<std::string> names) {
  if (!x) return Sample::without_covariates(std::move(y), std::move(d), std::move(z));
  std::vector<std::int64_t> flat;
  for (const auto& row : *x) {
    if (row.size() != names.size()) throw ConfigError("covariate row width does not match names");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return Sample(std::move(y), std::move(d), std::move(z), std::move(flat), std::move(names));
}

BootstrapConfig config(std::size_t B, std::uint64_t seed, std::size_t max_redraws,
                       std::size_t threads) {
  BootstrapConfig cfg;
  cfg.B = B;
  cfg.seed = seed;
  cfg.max_redraws = max_redraws;
  cfg.threads = threads;
  return cfg;
}

BandKind band_kind(const std::string& kind) {
  if (kind == "constant") return BandKind::kConstant;
  if (kind == "variable") return BandKind::kVariable;
  throw ConfigError("band kind must be 'constant' or 'variable'");
}

Hypothesis hypothesis(const std::string& name) {
  if (name == "equality") return Hypothesis::kEquality;
  if (name == "location_shift") return Hypothesis::kLocationShift;
  if (name == "dominance") return Hypothesis::kDominance;
  throw ConfigError("hypothesis must be equality, location_shift or dominance");
}

py::tuple run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "itedist");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_itedist, m) {
  m.doc() = "Bootstrap inference on the distribution of individual treatment effects";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<IngestError>(m, "IngestError", base.ptr());
  py::register_exception<EstimabilityError>(m, "EstimabilityError", base.ptr());
  py::register_exception<ReplicationError>(m, "ReplicationError", base.ptr());

  py::class_<Sample>(m, "Sample")
      .def(py::init(&make_sample), py::arg("y"), py::arg("d"), py::arg("z"),
           py::arg("x") = std::nullopt, py::arg("names") = std::vector<std::string>{})
      .def("__len__", &Sample::size)
      .def_property_readonly("y", [](const Sample& s) {
        return std::vector<double>(s.outcomes().begin(), s.outcomes().end());
      })
      .def_property_readonly("covariate_names", &Sample::covariate_names)
      .def("select", [](const Sample& s, const std::string& expr) {
        return select_group(s, GroupSelector::parse(expr, s.covariate_names()));
      }, py::arg("expression"))
      .def("affine", &Sample::with_affine_outcome, py::arg("a"), py::arg("b"));

  m.def("read_csv", [](const std::string& path, const std::string& outcome,
                       const std::string& treatment, const std::string& instrument,
                       std::vector<std::string> covariates) {
    ColumnMap columns{outcome, treatment, instrument, std::move(covariates)};
    IngestResult r = ingest_csv(path, columns);
    return py::make_tuple(std::move(r.sample), r.labels);
  }, py::arg("path"), py::arg("outcome") = "y", py::arg("treatment") = "d",
        py::arg("instrument") = "z", py::arg("covariates") = std::vector<std::string>{});

  m.def("is_estimable", &is_estimable, py::arg("sample"));

  m.def("pseudo_ites", [](const Sample& s) { return pseudo_ite_values(s, estimate_bounds(s)); },
        py::arg("sample"), "Leave-one-out pseudo ITEs in row order.");

  py::class_<IntervalResult>(m, "Interval")
      .def_property_readonly("target", [](const IntervalResult& r) { return to_string(r.target); })
      .def_readonly("at", &IntervalResult::at)
      .def_readonly("estimate", &IntervalResult::estimate)
      .def_readonly("lower", &IntervalResult::lower)
      .def_readonly("upper", &IntervalResult::upper)
      .def_readonly("alpha", &IntervalResult::alpha)
      .def("__repr__", [](const IntervalResult& r) {
        std::ostringstream s;
        s << "Interval(" << to_string(r.target) << ", estimate=" << r.estimate << ", [" << r.lower
          << ", " << r.upper << "])";
        return s.str();
      });

  py::class_<BandResult>(m, "Band")
      .def_property_readonly("kind", [](const BandResult& b) { return to_string(b.kind); })
      .def_property_readonly("grid", [](const BandResult& b) { return b.grid.points; })
      .def_readonly("center", &BandResult::center)
      .def_readonly("half_width", &BandResult::half_width)
      .def_readonly("critical_value", &BandResult::critical_value)
      .def_property_readonly("lower", [](const BandResult& b) {
        std::vector<double> v;
        for (std::size_t k = 0; k < b.center.size(); ++k) v.push_back(b.lower(k));
        return v;
      })
      .def_property_readonly("upper", [](const BandResult& b) {
        std::vector<double> v;
        for (std::size_t k = 0; k < b.center.size(); ++k) v.push_back(b.upper(k));
        return v;
      })
      .def("average_width", &BandResult::average_width);

  py::class_<TestResult>(m, "TestResult")
      .def_property_readonly("hypothesis", [](const TestResult& t) { return to_string(t.hypothesis); })
      .def_readonly("statistic", &TestResult::statistic)
      .def_readonly("critical_value", &TestResult::critical_value)
      .def_readonly("reject", &TestResult::reject)
      .def_readonly("alpha", &TestResult::alpha);

  py::class_<BootstrapDistribution>(m, "Bootstrap")
      .def(py::init([](const Sample& s, std::size_t B, std::uint64_t seed, std::size_t max_redraws,
                       std::size_t threads) {
             py::gil_scoped_release release;
             return BootstrapDistribution::run(s, estimate_bounds(s),
                                               config(B, seed, max_redraws, threads));
           }),
           py::arg("sample"), py::arg("B") = 500, py::arg("seed") = 0,
           py::arg("max_redraws") = 100, py::arg("threads") = 1)
      .def_property_readonly("B", &BootstrapDistribution::B)
      .def_property_readonly("redraws", &BootstrapDistribution::redraws)
      .def_property_readonly("estimate", [](const BootstrapDistribution& d) {
        return std::vector<double>(d.estimate().sorted().begin(), d.estimate().sorted().end());
      })
      .def("quantile", [](const BootstrapDistribution& d, double tau) { return d.estimate().quantile(tau); })
      .def("cdf", [](const BootstrapDistribution& d, double v) { return d.estimate().cdf(v); })
      .def("ci_cdf", py::overload_cast<const BootstrapDistribution&, double, double>(&ci_cdf),
           py::arg("v"), py::arg("alpha") = 0.05)
      .def("ci_quantile", py::overload_cast<const BootstrapDistribution&, double, double>(&ci_quantile),
           py::arg("tau"), py::arg("alpha") = 0.05)
      .def("ci_iqr", &ci_iqr, py::arg("alpha") = 0.05)
      .def("ci_prob_positive", &ci_prob_positive, py::arg("alpha") = 0.05)
      .def("ucb_quantile", [](const BootstrapDistribution& d, double alpha, const std::string& kind,
                              double lo, double hi, std::size_t T) {
             return ucb_quantile(d, make_grid(GridKind::kLevels, lo, hi, T), alpha, band_kind(kind));
           },
           py::arg("alpha") = 0.05, py::arg("kind") = "constant", py::arg("lo") = kDefaultLevelLower,
           py::arg("hi") = kDefaultLevelUpper, py::arg("T") = kDefaultGridSize)
      .def("ucb_cdf", [](const BootstrapDistribution& d, double alpha, const std::string& kind,
                         std::size_t T) {
             return ucb_cdf(d, default_value_grid(d.estimate(), T), alpha, band_kind(kind));
           },
           py::arg("alpha") = 0.05, py::arg("kind") = "constant", py::arg("T") = kDefaultGridSize);

  py::class_<QuantileDifference>(m, "Comparison")
      .def(py::init([](const Sample& s0, const Sample& s1, std::size_t B, std::uint64_t seed,
                       std::size_t max_redraws, std::size_t threads) {
             py::gil_scoped_release release;
             return QuantileDifference::run(s0, s1, estimate_bounds(s0), estimate_bounds(s1),
                                            config(B, seed, max_redraws, threads));
           }),
           py::arg("group0"), py::arg("group1"), py::arg("B") = 500, py::arg("seed") = 0,
           py::arg("max_redraws") = 100, py::arg("threads") = 1)
      .def("difference", &QuantileDifference::estimate, py::arg("tau"))
      .def("ci_difference", &ci_quantile_difference, py::arg("tau"), py::arg("alpha") = 0.05)
      .def("test", [](const QuantileDifference& q, const std::string& h, double alpha, double lo,
                      double hi, std::size_t T) {
             return test_distributions(q, make_grid(GridKind::kLevels, lo, hi, T), alpha, hypothesis(h));
           },
           py::arg("hypothesis"), py::arg("alpha") = 0.05, py::arg("lo") = kDefaultLevelLower,
           py::arg("hi") = kDefaultLevelUpper, py::arg("T") = kDefaultGridSize);

  m.def("simulate", [](std::size_t n, std::uint64_t seed, bool split_covariate) {
    Stream stream(derive_key(seed, {static_cast<std::uint64_t>(StreamTag::kGenerate), 0}));
    return bench::generate(n, stream, {}, split_covariate).sample;
  }, py::arg("n"), py::arg("seed") = 0, py::arg("split_covariate") = false,
        "Draw a sample from the benchmark design.");

  auto truth = m.def_submodule("truth", "Closed forms of the benchmark design");
  truth.def("quantile", &bench::oracle::quantile, py::arg("tau"));
  truth.def("cdf", &bench::oracle::cdf, py::arg("v"));
  truth.def("density", &bench::oracle::density, py::arg("v"));
  truth.def("counterfactual", &bench::oracle::phi, py::arg("d"), py::arg("y"));
  truth.def("theory_variance", [](double tau) {
    const auto tv = bench::theory_variance(tau);
    return py::make_tuple(tv.v1_tilde, tv.v2_tilde);
  }, py::arg("tau"));

  m.def("main", &run_cli, py::arg("args"),
        "Run the command line in-process; returns (exit code, stdout, stderr).");
}
