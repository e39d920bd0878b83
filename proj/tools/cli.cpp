#include "cli.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tlml/csv.hpp"
#include "tlml/estimator.hpp"
#include "tlml/glim.hpp"
#include "tlml/inference.hpp"
#include "tlml/montecarlo.hpp"
#include "tlml/sis.hpp"
#include "tlml/weights.hpp"

namespace tlml::cli {

namespace {

using nlohmann::json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Configuration problems exit with code 2; runtime failures with 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string key_path(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// Typed field extraction from one JSON object; finish() rejects unknown
// keys, naming them by path.
class ObjReader {
 public:
  ObjReader(const json& obj, std::string prefix)
      : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj.is_object())
      throw ConfigError((prefix_.empty() ? std::string("config") : prefix_) +
                        " must be a JSON object");
  }

  bool has(const char* key) {
    allowed_.insert(key);
    return obj_.contains(key);
  }

  void opt_double(const char* key, double& out) {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_number())
      throw ConfigError(key_path(prefix_, key) + " must be a number");
    out = v.get<double>();
  }

  void opt_int(const char* key, int& out) {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_number_integer())
      throw ConfigError(key_path(prefix_, key) + " must be an integer");
    out = v.get<int>();
  }

  void opt_ll(const char* key, long long& out) {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_number_integer())
      throw ConfigError(key_path(prefix_, key) + " must be an integer");
    out = v.get<long long>();
  }

  void opt_u64(const char* key, std::optional<std::uint64_t>& out) {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_number_integer() ||
        (!v.is_number_unsigned() && v.get<long long>() < 0))
      throw ConfigError(key_path(prefix_, key) +
                        " must be a non-negative integer");
    out = v.get<std::uint64_t>();
  }

  void opt_bool(const char* key, bool& out) {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_boolean())
      throw ConfigError(key_path(prefix_, key) + " must be true or false");
    out = v.get<bool>();
  }

  void opt_string(const char* key, std::string& out) {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_string())
      throw ConfigError(key_path(prefix_, key) + " must be a string");
    out = v.get<std::string>();
  }

  const json* opt_node(const char* key) {
    if (!has(key)) return nullptr;
    return &obj_.at(key);
  }

  void finish() const {
    for (const auto& item : obj_.items())
      if (!allowed_.count(item.key()))
        throw ConfigError("unknown key \"" + key_path(prefix_, item.key()) +
                          "\"");
  }

  const std::string& prefix() const { return prefix_; }

 private:
  const json& obj_;
  std::string prefix_;
  std::set<std::string> allowed_;
};

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

CountLaw parse_law(const std::string& name, const std::string& path) {
  if (name == "binomial") return CountLaw::binomial;
  if (name == "poisson") return CountLaw::poisson;
  if (name == "poisson_positive") return CountLaw::poisson_positive;
  throw ConfigError(path +
                    ": expected binomial, poisson, or poisson_positive");
}

enum class Family { poisson, poisson_gaussian };

Family parse_family(const std::string& name, const std::string& path) {
  if (name == "poisson") return Family::poisson;
  if (name == "poisson_gaussian") return Family::poisson_gaussian;
  throw ConfigError(path + ": expected poisson or poisson_gaussian");
}

KernelShape parse_kernel_shape(const std::string& name,
                               const std::string& path) {
  if (name == "uniform") return KernelShape::uniform;
  if (name == "triangular") return KernelShape::triangular;
  if (name == "epanechnikov") return KernelShape::epanechnikov;
  throw ConfigError(path +
                    ": expected uniform, triangular, or epanechnikov");
}

// Named designs carry the study's default dynamics parameters.
ParamDynamics design_defaults(const std::string& name,
                              const std::string& path) {
  if (name == "constant") return ConstantDyn{0.2, 0.196};
  if (name == "log_ar1") return LogAr1Dyn{0.2, 0.99, 0.01, 0.196, 0.2};
  if (name == "ulr_ou") return UlrOuDyn{0.2, 1.0, 0.05, 0, 0.196, std::nullopt};
  throw ConfigError(path + ": expected constant, log_ar1, or ulr_ou");
}

ParamDynamics parse_dynamics(const json& node, const std::string& prefix) {
  ObjReader rd(node, prefix);
  std::string kind;
  rd.opt_string("kind", kind);
  if (kind.empty())
    throw ConfigError(key_path(prefix, "kind") + " is required");
  if (kind == "constant") {
    ConstantDyn d;
    rd.opt_double("a", d.a);
    rd.opt_double("c", d.c);
    rd.finish();
    return d;
  }
  if (kind == "log_ar1") {
    LogAr1Dyn d;
    rd.opt_double("a_star", d.a_star);
    rd.opt_double("rho", d.rho);
    rd.opt_double("sigma", d.sigma);
    rd.opt_double("c", d.c);
    d.a_0 = d.a_star;
    const bool had_a0 = node.contains("a_0");
    rd.opt_double("a_0", d.a_0);
    if (!had_a0) d.a_0 = d.a_star;
    rd.finish();
    return d;
  }
  if (kind == "ulr_ou") {
    UlrOuDyn d;
    rd.opt_double("mu", d.mu);
    rd.opt_double("k", d.k);
    rd.opt_double("eta", d.eta);
    rd.opt_int("horizon", d.horizon);
    rd.opt_double("c", d.c);
    if (rd.has("a_0")) {
      double a0 = 0.0;
      rd.opt_double("a_0", a0);
      d.a_0 = a0;
    }
    rd.finish();
    return d;
  }
  throw ConfigError(key_path(prefix, "kind") +
                    ": expected constant, log_ar1, or ulr_ou");
}

WeightScheme parse_scheme_json(const json& node, const std::string& prefix) {
  // A bare number is shorthand for a geometric scheme with that rho.
  if (node.is_number()) {
    WeightScheme s = Geometric{node.get<double>()};
    try {
      validate_scheme(s);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(prefix + ": " + e.what());
    }
    return s;
  }
  ObjReader rd(node, prefix);
  std::string kind;
  rd.opt_string("kind", kind);
  if (kind.empty())
    throw ConfigError(key_path(prefix, "kind") + " is required");
  WeightScheme scheme;
  if (kind == "uniform") {
    scheme = Uniform{};
  } else if (kind == "rolling") {
    Rolling s;
    rd.opt_int("window", s.window);
    scheme = s;
  } else if (kind == "geometric") {
    Geometric s;
    rd.opt_double("rho", s.rho);
    scheme = s;
  } else if (kind == "hyperbolic") {
    Hyperbolic s;
    rd.opt_double("exponent", s.exponent);
    scheme = s;
  } else if (kind == "kernel") {
    KernelScaled s;
    std::string shape = "uniform";
    rd.opt_string("shape", shape);
    s.kernel = parse_kernel_shape(shape, key_path(prefix, "shape"));
    rd.opt_double("c_frac", s.c_frac);
    rd.opt_int("t_ref", s.t_ref);
    scheme = s;
  } else {
    throw ConfigError(key_path(prefix, "kind") +
                      ": expected uniform, rolling, geometric, hyperbolic, "
                      "or kernel");
  }
  rd.finish();
  try {
    validate_scheme(scheme);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(prefix + ": " + e.what());
  }
  return scheme;
}

// Compact flag syntax: uniform | rolling:W | geometric:R | hyperbolic:E |
// kernel:SHAPE:C:TREF.
WeightScheme parse_scheme_string(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t colon = text.find(':', start);
    parts.push_back(text.substr(start, colon - start));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  const auto num = [&](std::size_t i) {
    try {
      return std::stod(parts.at(i));
    } catch (const std::exception&) {
      throw ConfigError("bad number in scheme \"" + text + "\"");
    }
  };
  const auto integer = [&](std::size_t i) {
    try {
      return std::stoi(parts.at(i));
    } catch (const std::exception&) {
      throw ConfigError("bad integer in scheme \"" + text + "\"");
    }
  };
  WeightScheme scheme;
  const std::string& kind = parts[0];
  const std::size_t n = parts.size();
  if (kind == "uniform" && n == 1) {
    scheme = Uniform{};
  } else if (kind == "rolling" && n == 2) {
    scheme = Rolling{integer(1)};
  } else if (kind == "geometric" && n == 2) {
    scheme = Geometric{num(1)};
  } else if (kind == "hyperbolic" && n == 2) {
    scheme = Hyperbolic{num(1)};
  } else if (kind == "kernel" && n == 4) {
    scheme = KernelScaled{parse_kernel_shape(parts[1], "scheme shape"),
                          num(2), integer(3)};
  } else {
    throw ConfigError(
        "bad scheme \"" + text +
        "\" (expected uniform, rolling:W, geometric:R, hyperbolic:E, or "
        "kernel:SHAPE:C:TREF)");
  }
  try {
    validate_scheme(scheme);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("scheme \"" + text + "\": " + e.what());
  }
  return scheme;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateFlags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  long long population = 0;
  long long initial_infected = 0;
  int horizon = 0;
  std::string law;
  std::string design;
};

int run_simulate(const SimulateFlags& flags) {
  long long population = 5000;
  long long initial_infected = 85;
  int horizon = 600;
  CountLaw law = CountLaw::binomial;
  ParamDynamics dynamics = ConstantDyn{0.2, 0.196};
  std::optional<std::uint64_t> seed;
  std::string out = flags.out;

  if (!flags.config.empty()) {
    const json cfg = load_config(flags.config);
    ObjReader rd(cfg, "");
    rd.opt_u64("seed", seed);
    rd.opt_ll("population", population);
    rd.opt_ll("initial_infected", initial_infected);
    rd.opt_int("horizon", horizon);
    std::string law_name;
    rd.opt_string("law", law_name);
    if (!law_name.empty()) law = parse_law(law_name, "law");
    std::string design;
    rd.opt_string("design", design);
    const json* dyn_node = rd.opt_node("dynamics");
    if (!design.empty() && dyn_node)
      throw ConfigError("give either design or dynamics, not both");
    if (!design.empty()) dynamics = design_defaults(design, "design");
    if (dyn_node) dynamics = parse_dynamics(*dyn_node, "dynamics");
    rd.opt_string("output", out);
    rd.finish();
  }

  if (flags.seed_set) seed = flags.seed;
  if (flags.population > 0) population = flags.population;
  if (flags.initial_infected > 0) initial_infected = flags.initial_infected;
  if (flags.horizon > 0) horizon = flags.horizon;
  if (!flags.law.empty()) law = parse_law(flags.law, "--law");
  if (!flags.design.empty()) dynamics = design_defaults(flags.design, "--design");
  if (!flags.out.empty()) out = flags.out;

  if (!seed) throw ConfigError("seed is required for simulation");
  if (out.empty()) throw ConfigError("output path is required");

  const SimResult sim = simulate_epidemic(dynamics, population,
                                          initial_infected, horizon, law,
                                          *seed);
  csv::write_file(out, csv::path_csv(sim));
  std::cout << "wrote " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateFlags {
  std::string config;
  std::string input;
  std::string out;
  std::string scheme;
  std::string family;
  int t_min = 0;
  int t_max = 0;
  int warm_start = -1;  // -1 unset, else 0/1
  double tol = 0.0;
  int max_iter = 0;
};

struct EstimateSettings {
  std::string input;
  std::string out;
  WeightScheme scheme = Geometric{0.5};
  Family family = Family::poisson;
  int t_min = 100;
  int t_max = -1;  // default: last date
  bool warm_start = true;
  FitOptions options{};
};

// level_mult/max_lag are diagnose-only config keys; estimate passes null
// pointers so they are rejected there as unknown.
EstimateSettings estimate_settings(const EstimateFlags& flags,
                                   const char* out_key_hint,
                                   double* level_mult = nullptr,
                                   int* max_lag = nullptr) {
  EstimateSettings s;
  if (!flags.config.empty()) {
    const json cfg = load_config(flags.config);
    ObjReader rd(cfg, "");
    rd.opt_string("input", s.input);
    rd.opt_string("output", s.out);
    if (const json* node = rd.opt_node("scheme"))
      s.scheme = parse_scheme_json(*node, "scheme");
    std::string family_name;
    rd.opt_string("family", family_name);
    if (!family_name.empty()) s.family = parse_family(family_name, "family");
    rd.opt_int("t_min", s.t_min);
    rd.opt_int("t_max", s.t_max);
    rd.opt_bool("warm_start", s.warm_start);
    rd.opt_double("tol", s.options.tol);
    rd.opt_int("max_iter", s.options.max_iter);
    if (level_mult) rd.opt_double("level_mult", *level_mult);
    if (max_lag) rd.opt_int("max_lag", *max_lag);
    rd.finish();
  }
  if (!flags.input.empty()) s.input = flags.input;
  if (!flags.out.empty()) s.out = flags.out;
  if (!flags.scheme.empty()) s.scheme = parse_scheme_string(flags.scheme);
  if (!flags.family.empty()) s.family = parse_family(flags.family, "--family");
  if (flags.t_min > 0) s.t_min = flags.t_min;
  if (flags.t_max > 0) s.t_max = flags.t_max;
  if (flags.warm_start >= 0) s.warm_start = flags.warm_start != 0;
  if (flags.tol > 0.0) s.options.tol = flags.tol;
  if (flags.max_iter > 0) s.options.max_iter = flags.max_iter;

  if (s.input.empty()) throw ConfigError("input path CSV is required");
  if (s.out.empty())
    throw ConfigError(std::string("output ") + out_key_hint + " is required");
  return s;
}

// Loads the counts; list-format errors and empty files are config errors.
csv::PathCsv load_counts(const std::string& input) {
  try {
    return csv::read_path_csv_file(input);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
}

FunctionalEstimate<2> run_functional(const RegressionFrame& frame,
                                     const EstimateSettings& s, int t_max) {
  if (s.family == Family::poisson) {
    PoissonGlim model{&frame};
    return functional_estimate(model, s.scheme, s.t_min, t_max, s.warm_start,
                               s.options);
  }
  PoissonGaussianGlim model{&frame};
  return functional_estimate(model, s.scheme, s.t_min, t_max, s.warm_start,
                             s.options);
}

int run_estimate(const EstimateFlags& flags) {
  const EstimateSettings s = estimate_settings(flags, "file");
  const csv::PathCsv data = load_counts(s.input);
  std::vector<double> counts(data.n2.begin(), data.n2.end());
  const RegressionFrame frame = RegressionFrame::from_counts(
      std::move(counts), static_cast<double>(data.population));
  const int t_max = s.t_max > 0 ? s.t_max : frame.last_date();
  const FunctionalEstimate<2> fe = run_functional(frame, s, t_max);
  csv::write_file(s.out, csv::estimates_csv(fe));
  std::cout << "wrote " << s.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// scenario

struct ScenarioFlags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string design;
  long long population = 0;
  long long initial_infected = 0;
  int horizon = 0;
  std::string law;
  std::vector<std::string> schemes;
  int t_min = 0;
  int replications = 0;
  int threads = 0;
  int warm_start = -1;
};

int run_scenario_cmd(const ScenarioFlags& flags) {
  ScenarioConfig config;
  std::optional<std::uint64_t> seed;
  std::string out = flags.out;

  if (!flags.config.empty()) {
    const json cfg = load_config(flags.config);
    ObjReader rd(cfg, "");
    rd.opt_u64("seed", seed);
    std::string design;
    rd.opt_string("design", design);
    const json* dyn_node = rd.opt_node("dynamics");
    if (!design.empty() && dyn_node)
      throw ConfigError("give either design or dynamics, not both");
    if (!design.empty()) config.dynamics = design_defaults(design, "design");
    if (dyn_node) config.dynamics = parse_dynamics(*dyn_node, "dynamics");
    rd.opt_ll("population", config.population);
    rd.opt_ll("initial_infected", config.initial_infected);
    rd.opt_int("horizon", config.horizon);
    std::string law_name;
    rd.opt_string("law", law_name);
    if (!law_name.empty()) config.law = parse_law(law_name, "law");
    if (const json* schemes = rd.opt_node("schemes")) {
      if (!schemes->is_array() || schemes->empty())
        throw ConfigError("schemes must be a non-empty array");
      config.schemes.clear();
      for (std::size_t i = 0; i < schemes->size(); ++i)
        config.schemes.push_back(parse_scheme_json(
            (*schemes)[i], "schemes[" + std::to_string(i) + "]"));
    }
    rd.opt_int("t_min", config.t_min);
    rd.opt_int("replications", config.replications);
    rd.opt_int("threads", config.threads);
    rd.opt_bool("warm_start", config.warm_start);
    rd.opt_double("tol", config.fit_options.tol);
    rd.opt_int("max_iter", config.fit_options.max_iter);
    rd.opt_string("output", out);
    rd.finish();
  }

  if (flags.seed_set) seed = flags.seed;
  if (!flags.design.empty())
    config.dynamics = design_defaults(flags.design, "--design");
  if (flags.population > 0) config.population = flags.population;
  if (flags.initial_infected > 0)
    config.initial_infected = flags.initial_infected;
  if (flags.horizon > 0) config.horizon = flags.horizon;
  if (!flags.law.empty()) config.law = parse_law(flags.law, "--law");
  if (!flags.schemes.empty()) {
    config.schemes.clear();
    for (const auto& text : flags.schemes)
      config.schemes.push_back(parse_scheme_string(text));
  }
  if (flags.t_min > 0) config.t_min = flags.t_min;
  if (flags.replications > 0) config.replications = flags.replications;
  if (flags.threads > 0) config.threads = flags.threads;
  if (flags.warm_start >= 0) config.warm_start = flags.warm_start != 0;
  if (!flags.out.empty()) out = flags.out;

  if (!seed) throw ConfigError("seed is required for scenario runs");
  if (out.empty()) throw ConfigError("output directory is required");
  config.master_seed = *seed;

  const ScenarioResult result = run_scenario(config);
  csv::write_scenario(result, out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// diagnose

struct DiagnoseFlags {
  EstimateFlags base;
  double level_mult = 0.0;
  int max_lag = -1;
};

int run_diagnose(const DiagnoseFlags& flags) {
  double level_mult = 2.0;
  int max_lag = -1;
  const EstimateSettings s =
      estimate_settings(flags.base, "directory", &level_mult, &max_lag);
  if (flags.level_mult > 0.0) level_mult = flags.level_mult;
  if (flags.max_lag >= 0) max_lag = flags.max_lag;
  const csv::PathCsv data = load_counts(s.input);
  std::vector<double> counts(data.n2.begin(), data.n2.end());
  const RegressionFrame frame = RegressionFrame::from_counts(
      std::move(counts), static_cast<double>(data.population));
  const int t_max = s.t_max > 0 ? s.t_max : frame.last_date();
  const FunctionalEstimate<2> fe = run_functional(frame, s, t_max);

  std::vector<csv::CiRow> ci_rows;
  std::vector<csv::BiasRow> bias_rows;
  std::vector<csv::PredictionRow> pred_rows;
  ci_rows.reserve(fe.fits.size());
  bias_rows.reserve(fe.fits.size());
  pred_rows.reserve(fe.fits.size());

  PoissonGlim poisson_model{&frame};
  PoissonGaussianGlim pg_model{&frame};

  for (const auto& fit : fe.fits) {
    csv::CiRow ci{fit.date, fit.theta[0], kNan, kNan,
                  1.0 - fit.theta[1], kNan, kNan, false};
    if (fit.ok) {
      const WeightSums sums = cumulated_sums(s.scheme, fit.horizon);
      const IntervalSet<2> band = confidence_interval(fit, sums, level_mult);
      if (band.available) {
        ci.available = true;
        ci.a_lo = band.lo[0];
        ci.a_hi = band.hi[0];
        ci.c_lo = 1.0 - band.hi[1];
        ci.c_hi = 1.0 - band.lo[1];
      }
    }
    ci_rows.push_back(ci);

    csv::BiasRow bias{fit.date, kNan, kNan, kNan};
    if (fit.ok && fit.converged) {
      try {
        const BiasTerms<2> terms =
            s.family == Family::poisson
                ? bias_terms(poisson_model, s.scheme, fit.date, fit, max_lag)
                : bias_terms(pg_model, s.scheme, fit.date, fit, max_lag);
        bias.a_corr = terms.correction[0];
        bias.omc_corr = terms.correction[1];
        bias.r0_corr = terms.correction[0] + terms.correction[1];
      } catch (const std::exception&) {
        // Degenerate information at this date; the NaN row records it.
      }
    }
    bias_rows.push_back(bias);

    const int target = fit.date + 1;
    const Prediction p = predict_counts(frame, target, Theta::from(fit.theta));
    csv::PredictionRow pred{target, p.predicted, kNan, p.residual};
    if (target <= frame.last_date())
      pred.actual = frame.y[static_cast<std::size_t>(target)];
    pred_rows.push_back(pred);
  }

  const std::filesystem::path dir(s.out);
  std::filesystem::create_directories(dir);
  csv::write_file(dir / "ci.csv", csv::ci_csv(ci_rows));
  csv::write_file(dir / "eigen.csv", csv::eigen_csv(eigen_diagnostics(fe)));
  csv::write_file(dir / "bias.csv", csv::bias_csv(bias_rows));
  csv::write_file(dir / "prediction.csv", csv::prediction_csv(pred_rows));
  std::cout << "wrote " << s.out << "\n";
  return 0;
}

const char* kSimulateFooter =
    "Config keys: seed (required), population, initial_infected, horizon,\n"
    "law (binomial|poisson|poisson_positive), design\n"
    "(constant|log_ar1|ulr_ou), dynamics {kind, ...}, output.\n"
    "dynamics constant: a, c. log_ar1: a_star, rho, sigma, c, a_0.\n"
    "ulr_ou: mu, k, eta, horizon, c, a_0 (optional).\n"
    "Flags override config values.";

const char* kEstimateFooter =
    "Config keys: input, output, scheme, family (poisson|poisson_gaussian),\n"
    "t_min, t_max, warm_start, tol, max_iter.\n"
    "scheme: number (geometric rho) or {kind: uniform|rolling|geometric|\n"
    "hyperbolic|kernel, window, rho, exponent, shape, c_frac, t_ref}.\n"
    "Flags override config values.";

const char* kScenarioFooter =
    "Config keys: seed (required), design (constant|log_ar1|ulr_ou),\n"
    "dynamics {kind, ...}, population, initial_infected, horizon, law,\n"
    "schemes (array of numbers = geometric rho, or scheme objects), t_min,\n"
    "replications, threads, warm_start, tol, max_iter, output.\n"
    "Flags override config values. Single replication writes a flat\n"
    "directory; R > 1 writes rep0/, rep1/, ... with stats.csv at the root.";

const char* kDiagnoseFooter =
    "Config keys: input, output, scheme, family, t_min, t_max, warm_start,\n"
    "tol, max_iter, level_mult, max_lag.\n"
    "Writes ci.csv, eigen.csv, bias.csv, prediction.csv into the output\n"
    "directory. Flags override config values.";

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{
      "tlml: locally weighted likelihood estimation for epidemic counts"};
  app.require_subcommand(1);

  SimulateFlags sim_flags;
  CLI::App* sim = app.add_subcommand(
      "simulate", "Simulate an epidemic path and write it as CSV");
  sim->footer(kSimulateFooter);
  sim->add_option("--config", sim_flags.config, "JSON config file");
  sim->add_option("--out", sim_flags.out, "output CSV path");
  CLI::Option* sim_seed =
      sim->add_option("--seed", sim_flags.seed, "master seed (required)");
  sim->add_option("--population", sim_flags.population, "population size");
  sim->add_option("--initial-infected", sim_flags.initial_infected,
                  "infected count at day 0");
  sim->add_option("--horizon", sim_flags.horizon, "days to simulate");
  sim->add_option("--law", sim_flags.law,
                  "binomial|poisson|poisson_positive");
  sim->add_option("--design", sim_flags.design,
                  "constant|log_ar1|ulr_ou with default parameters");

  EstimateFlags est_flags;
  CLI::App* est = app.add_subcommand(
      "estimate", "Per-date weighted-likelihood estimates from a path CSV");
  est->footer(kEstimateFooter);
  est->add_option("--config", est_flags.config, "JSON config file");
  est->add_option("--input", est_flags.input, "path CSV from simulate");
  est->add_option("--out", est_flags.out, "output CSV path");
  est->add_option("--scheme", est_flags.scheme,
                  "uniform|rolling:W|geometric:R|hyperbolic:E|"
                  "kernel:SHAPE:C:TREF");
  est->add_option("--family", est_flags.family,
                  "poisson|poisson_gaussian");
  est->add_option("--t-min", est_flags.t_min, "first estimation date");
  est->add_option("--t-max", est_flags.t_max, "last estimation date");
  bool est_warm = true;
  CLI::Option* est_warm_opt =
      est->add_flag("--warm-start,!--no-warm-start", est_warm,
                    "seed each date with the previous estimate");
  est->add_option("--tol", est_flags.tol, "solver gradient tolerance");
  est->add_option("--max-iter", est_flags.max_iter, "solver iteration cap");

  ScenarioFlags scen_flags;
  CLI::App* scen = app.add_subcommand(
      "scenario", "Simulate, estimate across schemes, and write a study");
  scen->footer(kScenarioFooter);
  scen->add_option("--config", scen_flags.config, "JSON config file");
  scen->add_option("--out", scen_flags.out, "output directory");
  CLI::Option* scen_seed =
      scen->add_option("--seed", scen_flags.seed, "master seed (required)");
  scen->add_option("--design", scen_flags.design,
                   "constant|log_ar1|ulr_ou with default parameters");
  scen->add_option("--population", scen_flags.population, "population size");
  scen->add_option("--initial-infected", scen_flags.initial_infected,
                   "infected count at day 0");
  scen->add_option("--horizon", scen_flags.horizon, "days to simulate");
  scen->add_option("--law", scen_flags.law,
                   "binomial|poisson|poisson_positive");
  scen->add_option("--scheme", scen_flags.schemes,
                   "weight scheme (repeatable), replaces the default set");
  scen->add_option("--t-min", scen_flags.t_min, "first estimation date");
  scen->add_option("--replications", scen_flags.replications,
                   "independent replications");
  scen->add_option("--threads", scen_flags.threads, "worker threads");
  bool scen_warm = true;
  CLI::Option* scen_warm_opt =
      scen->add_flag("--warm-start,!--no-warm-start", scen_warm,
                     "seed each date with the previous estimate");

  DiagnoseFlags diag_flags;
  CLI::App* diag = app.add_subcommand(
      "diagnose",
      "Confidence bands, eigenvalues, bias terms, and predictions");
  diag->footer(kDiagnoseFooter);
  diag->add_option("--config", diag_flags.base.config, "JSON config file");
  diag->add_option("--input", diag_flags.base.input, "path CSV from simulate");
  diag->add_option("--out", diag_flags.base.out, "output directory");
  diag->add_option("--scheme", diag_flags.base.scheme,
                   "uniform|rolling:W|geometric:R|hyperbolic:E|"
                   "kernel:SHAPE:C:TREF");
  diag->add_option("--family", diag_flags.base.family,
                   "poisson|poisson_gaussian");
  diag->add_option("--t-min", diag_flags.base.t_min, "first estimation date");
  diag->add_option("--t-max", diag_flags.base.t_max, "last estimation date");
  bool diag_warm = true;
  CLI::Option* diag_warm_opt =
      diag->add_flag("--warm-start,!--no-warm-start", diag_warm,
                     "seed each date with the previous estimate");
  diag->add_option("--level-mult", diag_flags.level_mult,
                   "confidence half-width multiplier (default 2)");
  diag->add_option("--max-lag", diag_flags.max_lag,
                   "autocovariance truncation lag (default: cube root)");

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.push_back("tlml");
  for (const auto& a : args) argv_storage.push_back(a);
  std::vector<const char*> argv;
  argv.reserve(argv_storage.size());
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  sim_flags.seed_set = sim_seed->count() > 0;
  scen_flags.seed_set = scen_seed->count() > 0;
  if (est_warm_opt->count() > 0) est_flags.warm_start = est_warm ? 1 : 0;
  if (scen_warm_opt->count() > 0) scen_flags.warm_start = scen_warm ? 1 : 0;
  if (diag_warm_opt->count() > 0)
    diag_flags.base.warm_start = diag_warm ? 1 : 0;

  try {
    if (sim->parsed()) return run_simulate(sim_flags);
    if (est->parsed()) return run_estimate(est_flags);
    if (scen->parsed()) return run_scenario_cmd(scen_flags);
    if (diag->parsed()) return run_diagnose(diag_flags);
    std::cerr << "no subcommand given\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace tlml::cli
