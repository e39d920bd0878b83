#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <stdexcept>
#include <string>
#include <vector>

#include "tlml/csv.hpp"
#include "tlml/estimator.hpp"
#include "tlml/glim.hpp"
#include "tlml/inference.hpp"
#include "tlml/montecarlo.hpp"
#include "tlml/rng.hpp"
#include "tlml/sis.hpp"
#include "tlml/weights.hpp"

namespace py = pybind11;

namespace {

using namespace tlml;

py::tuple vec2_tuple(const Vec<2>& v) { return py::make_tuple(v[0], v[1]); }

py::list mat2_list(const Mat<2>& m) {
  py::list rows;
  for (int i = 0; i < 2; ++i) {
    py::list row;
    for (int j = 0; j < 2; ++j) row.append(m(i, j));
    rows.append(row);
  }
  return rows;
}

RegressionFrame make_frame(std::vector<double> counts, double population) {
  return RegressionFrame::from_counts(std::move(counts), population);
}

FunctionalEstimate<2> estimate_path(const std::vector<double>& counts,
                                    double population,
                                    const WeightScheme& scheme, int t_min,
                                    int t_max, bool warm_start,
                                    const std::string& family,
                                    const FitOptions& options) {
  const RegressionFrame frame = make_frame(counts, population);
  const int last = t_max >= 0 ? t_max : frame.last_date();
  if (family == "poisson") {
    PoissonGlim model{&frame};
    return functional_estimate(model, scheme, t_min, last, warm_start,
                               options);
  }
  if (family == "poisson_gaussian") {
    PoissonGaussianGlim model{&frame};
    return functional_estimate(model, scheme, t_min, last, warm_start,
                               options);
  }
  throw std::invalid_argument("family must be poisson or poisson_gaussian");
}

TlmlFit fit_date(const std::vector<double>& counts, double population,
                 const WeightScheme& scheme, int date,
                 const std::string& family, const Vec<2>& init,
                 const FitOptions& options) {
  const RegressionFrame frame = make_frame(counts, population);
  if (family == "poisson") {
    PoissonGlim model{&frame};
    return tlml_fit(model, scheme, date, init, options);
  }
  if (family == "poisson_gaussian") {
    PoissonGaussianGlim model{&frame};
    return tlml_fit(model, scheme, date, init, options);
  }
  throw std::invalid_argument("family must be poisson or poisson_gaussian");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Locally weighted likelihood estimation for epidemic counts";

  // --- weight schemes ------------------------------------------------------
  py::enum_<KernelShape>(m, "KernelShape")
      .value("uniform", KernelShape::uniform)
      .value("triangular", KernelShape::triangular)
      .value("epanechnikov", KernelShape::epanechnikov);

  py::class_<Uniform>(m, "Uniform").def(py::init<>());
  py::class_<Rolling>(m, "Rolling")
      .def(py::init<int>(), py::arg("window"))
      .def_readwrite("window", &Rolling::window);
  py::class_<Geometric>(m, "Geometric")
      .def(py::init<double>(), py::arg("rho"))
      .def_readwrite("rho", &Geometric::rho);
  py::class_<Hyperbolic>(m, "Hyperbolic")
      .def(py::init<double>(), py::arg("exponent"))
      .def_readwrite("exponent", &Hyperbolic::exponent);
  py::class_<KernelScaled>(m, "KernelScaled")
      .def(py::init<KernelShape, double, int>(), py::arg("kernel"),
           py::arg("c_frac"), py::arg("t_ref"))
      .def_readwrite("kernel", &KernelScaled::kernel)
      .def_readwrite("c_frac", &KernelScaled::c_frac)
      .def_readwrite("t_ref", &KernelScaled::t_ref);

  m.def("weight", &weight, py::arg("scheme"), py::arg("h"),
        "Lag weight w(h) of a scheme");
  m.def("kernel_value", &kernel_value, py::arg("shape"), py::arg("u"));
  m.def("scheme_label", &scheme_label, py::arg("scheme"));
  m.def("consistency_ratio", &consistency_ratio, py::arg("scheme"),
        py::arg("horizon"), py::arg("mixing") = 0.0);

  py::class_<WeightSums>(m, "WeightSums")
      .def_readonly("w_sum", &WeightSums::w_sum)
      .def_readonly("w2_sum", &WeightSums::w2_sum)
      .def_readonly("w2_mixed", &WeightSums::w2_mixed)
      .def_readonly("horizon", &WeightSums::horizon)
      .def_readonly("mixing", &WeightSums::mixing);
  m.def("cumulated_sums", &cumulated_sums, py::arg("scheme"),
        py::arg("horizon"), py::arg("mixing") = 0.0);

  // --- simulation ----------------------------------------------------------
  py::class_<ConstantDyn>(m, "ConstantDyn")
      .def(py::init<double, double>(), py::arg("a") = 0.2,
           py::arg("c") = 0.196)
      .def_readwrite("a", &ConstantDyn::a)
      .def_readwrite("c", &ConstantDyn::c);
  py::class_<LogAr1Dyn>(m, "LogAr1Dyn")
      .def(py::init<double, double, double, double, double>(),
           py::arg("a_star") = 0.2, py::arg("rho") = 0.99,
           py::arg("sigma") = 0.01, py::arg("c") = 0.196,
           py::arg("a_0") = 0.2)
      .def_readwrite("a_star", &LogAr1Dyn::a_star)
      .def_readwrite("rho", &LogAr1Dyn::rho)
      .def_readwrite("sigma", &LogAr1Dyn::sigma)
      .def_readwrite("c", &LogAr1Dyn::c)
      .def_readwrite("a_0", &LogAr1Dyn::a_0);
  py::class_<UlrOuDyn>(m, "UlrOuDyn")
      .def(py::init<double, double, double, int, double,
                    std::optional<double>>(),
           py::arg("mu") = 0.2, py::arg("k") = 1.0, py::arg("eta") = 0.05,
           py::arg("horizon") = 0, py::arg("c") = 0.196,
           py::arg("a_0") = std::nullopt)
      .def_readwrite("mu", &UlrOuDyn::mu)
      .def_readwrite("k", &UlrOuDyn::k)
      .def_readwrite("eta", &UlrOuDyn::eta)
      .def_readwrite("horizon", &UlrOuDyn::horizon)
      .def_readwrite("c", &UlrOuDyn::c)
      .def_readwrite("a_0", &UlrOuDyn::a_0);

  py::enum_<CountLaw>(m, "CountLaw")
      .value("binomial", CountLaw::binomial)
      .value("poisson", CountLaw::poisson)
      .value("poisson_positive", CountLaw::poisson_positive);

  py::class_<ParamPath>(m, "ParamPath")
      .def_readonly("a", &ParamPath::a)
      .def_readonly("c", &ParamPath::c)
      .def_readonly("clip_events", &ParamPath::clip_events);
  py::class_<EpidemicPath>(m, "EpidemicPath")
      .def_readonly("n1", &EpidemicPath::n1)
      .def_readonly("n2", &EpidemicPath::n2)
      .def_readonly("new_infections", &EpidemicPath::new_infections)
      .def_readonly("new_recoveries", &EpidemicPath::new_recoveries)
      .def_readonly("population", &EpidemicPath::population)
      .def_readonly("seed", &EpidemicPath::seed)
      .def_readonly("clamp_events", &EpidemicPath::clamp_events);
  py::class_<SimResult>(m, "SimResult")
      .def_readonly("path", &SimResult::path)
      .def_readonly("params", &SimResult::params);

  m.def("logistic_solution", &logistic_solution, py::arg("p2_0"),
        py::arg("a"), py::arg("alpha"), py::arg("t"));
  m.def("simulate_epidemic", &simulate_epidemic, py::arg("dynamics"),
        py::arg("population"), py::arg("initial_infected"),
        py::arg("horizon"), py::arg("law"), py::arg("seed"));
  m.def("derive_seed", &derive_seed, py::arg("master"), py::arg("index"),
        py::arg("purpose"));

  // --- estimation ----------------------------------------------------------
  py::class_<FitOptions>(m, "FitOptions")
      .def(py::init<>())
      .def_readwrite("tol", &FitOptions::tol)
      .def_readwrite("max_iter", &FitOptions::max_iter)
      .def_readwrite("lower", &FitOptions::lower)
      .def_readwrite("upper", &FitOptions::upper);

  py::class_<TlmlFit>(m, "Fit")
      .def_property_readonly(
          "theta", [](const TlmlFit& f) { return vec2_tuple(f.theta); })
      .def_readonly("loglik", &TlmlFit::loglik)
      .def_readonly("converged", &TlmlFit::converged)
      .def_property_readonly(
          "bound_hit",
          [](const TlmlFit& f) {
            return py::make_tuple(f.bound_hit[0], f.bound_hit[1]);
          })
      .def_readonly("iterations", &TlmlFit::iterations)
      .def_readonly("foc_norm", &TlmlFit::foc_norm)
      .def_property_readonly(
          "info", [](const TlmlFit& f) { return mat2_list(f.info); })
      .def_property_readonly(
          "info_eigenvalues",
          [](const TlmlFit& f) { return vec2_tuple(f.info_eigenvalues); })
      .def_readonly("date", &TlmlFit::date)
      .def_readonly("n_terms", &TlmlFit::n_terms)
      .def_readonly("horizon", &TlmlFit::horizon)
      .def_readonly("used_gradient_fallback", &TlmlFit::used_gradient_fallback)
      .def_readonly("ok", &TlmlFit::ok)
      .def_readonly("error", &TlmlFit::error);

  py::class_<FunctionalEstimate<2>>(m, "FunctionalEstimate")
      .def_readonly("t_min", &FunctionalEstimate<2>::t_min)
      .def_readonly("scheme", &FunctionalEstimate<2>::scheme)
      .def_readonly("family", &FunctionalEstimate<2>::family)
      .def_readonly("fits", &FunctionalEstimate<2>::fits);

  m.def("estimate_path", &estimate_path, py::arg("counts"),
        py::arg("population"), py::arg("scheme"), py::arg("t_min"),
        py::arg("t_max") = -1, py::arg("warm_start") = true,
        py::arg("family") = "poisson", py::arg("options") = FitOptions{},
        "Per-date fits on an infected-count series");
  m.def(
      "fit_date",
      [](const std::vector<double>& counts, double population,
         const WeightScheme& scheme, int date, const std::string& family,
         std::pair<double, double> init, const FitOptions& options) {
        return fit_date(counts, population, scheme, date, family,
                        Vec<2>{{init.first, init.second}}, options);
      },
      py::arg("counts"), py::arg("population"), py::arg("scheme"),
      py::arg("date"), py::arg("family") = "poisson",
      py::arg("init") = std::pair<double, double>(0.5, 0.5),
      py::arg("options") = FitOptions{},
      "Single-date fit of (a, 1-c)");
  m.def(
      "gaussian_closed_form",
      [](const std::vector<double>& y, const WeightScheme& scheme,
         int count) {
        return count >= 0 ? gaussian_closed_form(y, scheme, count)
                          : gaussian_closed_form(y, scheme);
      },
      py::arg("y"), py::arg("scheme"), py::arg("count") = -1,
      "Weighted average matching the scalar Gaussian optimum");

  // --- inference -----------------------------------------------------------
  m.def("reproductive_number", [](double a_coef, double one_minus_c) {
    return reproductive_number(Theta{a_coef, one_minus_c});
  });
  m.def("ulr_limit_functional", &ulr_limit_functional, py::arg("theta_grid"),
        py::arg("kernel"), py::arg("c_frac"));

  py::class_<OuFit>(m, "OuFit")
      .def_readonly("mu", &OuFit::mu)
      .def_readonly("k", &OuFit::k)
      .def_readonly("eta", &OuFit::eta)
      .def_readonly("se_mu", &OuFit::se_mu)
      .def_readonly("se_k", &OuFit::se_k)
      .def_readonly("se_eta", &OuFit::se_eta)
      .def_readonly("rho", &OuFit::rho)
      .def_readonly("delta", &OuFit::delta)
      .def_readonly("loglik", &OuFit::loglik)
      .def_readonly("converged", &OuFit::converged)
      .def_readonly("degenerate", &OuFit::degenerate);
  m.def(
      "ou_fit",
      [](const std::vector<double>& values, double delta) {
        return ou_fit(values, delta);
      },
      py::arg("values"), py::arg("delta"));
  m.def(
      "kernel_theta_path",
      [](const std::vector<double>& y, KernelShape kernel,
         const std::vector<double>& c_grid) {
        return kernel_theta_path(y, kernel, c_grid);
      },
      py::arg("y"), py::arg("kernel"), py::arg("c_grid"));

  // --- scenario ------------------------------------------------------------
  py::class_<TrimRule>(m, "TrimRule")
      .def(py::init<>())
      .def_readwrite("lower_q", &TrimRule::lower_q)
      .def_readwrite("upper_q", &TrimRule::upper_q)
      .def_readwrite("drop_bound_hits", &TrimRule::drop_bound_hits);
  py::class_<DeviationStats>(m, "DeviationStats")
      .def_readonly("mean", &DeviationStats::mean)
      .def_readonly("sd", &DeviationStats::sd)
      .def_readonly("skewness", &DeviationStats::skewness)
      .def_readonly("kurtosis", &DeviationStats::kurtosis)
      .def_readonly("retained", &DeviationStats::retained)
      .def_readonly("trimmed", &DeviationStats::trimmed)
      .def_readonly("failed", &DeviationStats::failed)
      .def_readonly("total", &DeviationStats::total)
      .def_readonly("degenerate", &DeviationStats::degenerate);
  m.def(
      "deviation_stats",
      [](const std::vector<double>& series, const std::vector<int>& flags,
         const TrimRule& rule) {
        return flags.empty() ? deviation_stats(series, rule)
                             : deviation_stats(series, flags, rule);
      },
      py::arg("series"), py::arg("flags") = std::vector<int>{},
      py::arg("rule") = TrimRule{});

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init<>())
      .def_readwrite("dynamics", &ScenarioConfig::dynamics)
      .def_readwrite("population", &ScenarioConfig::population)
      .def_readwrite("initial_infected", &ScenarioConfig::initial_infected)
      .def_readwrite("horizon", &ScenarioConfig::horizon)
      .def_readwrite("law", &ScenarioConfig::law)
      .def_readwrite("schemes", &ScenarioConfig::schemes)
      .def_readwrite("t_min", &ScenarioConfig::t_min)
      .def_readwrite("replications", &ScenarioConfig::replications)
      .def_readwrite("master_seed", &ScenarioConfig::master_seed)
      .def_readwrite("threads", &ScenarioConfig::threads)
      .def_readwrite("warm_start", &ScenarioConfig::warm_start)
      .def_readwrite("fit_options", &ScenarioConfig::fit_options);
  py::class_<SchemeResult>(m, "SchemeResult")
      .def_readonly("label", &SchemeResult::label)
      .def_readonly("scheme", &SchemeResult::scheme)
      .def_readonly("estimates", &SchemeResult::estimates)
      .def_readonly("a_dev", &SchemeResult::a_dev)
      .def_readonly("r0_dev", &SchemeResult::r0_dev)
      .def_readonly("flags", &SchemeResult::flags)
      .def_readonly("a_stats", &SchemeResult::a_stats)
      .def_readonly("r0_stats", &SchemeResult::r0_stats);
  py::class_<ReplicationResult>(m, "ReplicationResult")
      .def_readonly("seed", &ReplicationResult::seed)
      .def_readonly("sim", &ReplicationResult::sim)
      .def_readonly("schemes", &ReplicationResult::schemes);
  py::class_<ScenarioResult>(m, "ScenarioResult")
      .def_readonly("config", &ScenarioResult::config)
      .def_readonly("reps", &ScenarioResult::reps);

  m.def("run_scenario", &run_scenario, py::arg("config"),
        py::call_guard<py::gil_scoped_release>(),
        "Simulate and estimate a full study");
  m.def("write_scenario", &csv::write_scenario, py::arg("result"),
        py::arg("directory"), "Write a scenario result as a CSV bundle");
}
