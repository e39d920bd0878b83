#include "tlml/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace tlml::csv {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void append_int(std::string& out, long long v) { out += std::to_string(v); }

void append_double(std::string& out, double v) { out += format_double(v); }

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

[[noreturn]] void bad_row(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("path CSV line " + std::to_string(line_no) + ": " +
                           what);
}

long long parse_ll(std::string_view field, std::size_t line_no) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || p != field.data() + field.size())
    bad_row(line_no, "expected integer, got '" + std::string(field) + "'");
  return v;
}

double parse_double(std::string_view field, std::size_t line_no) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || p != field.data() + field.size())
    bad_row(line_no, "expected number, got '" + std::string(field) + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

std::string path_csv(const SimResult& sim) {
  std::string out = "t,N1,N2,N21,N12,a_t,c_t\n";
  const auto& path = sim.path;
  for (std::size_t t = 0; t < path.n2.size(); ++t) {
    append_int(out, static_cast<long long>(t));
    out += ',';
    append_int(out, path.n1[t]);
    out += ',';
    append_int(out, path.n2[t]);
    out += ',';
    append_int(out, path.new_infections[t]);
    out += ',';
    append_int(out, path.new_recoveries[t]);
    out += ',';
    append_double(out, sim.params.a[t]);
    out += ',';
    append_double(out, sim.params.c[t]);
    out += '\n';
  }
  return out;
}

std::string estimates_csv(const FunctionalEstimate<2>& fe) {
  std::string out =
      "t,a_hat,c_hat,R0_hat,loglik,converged,bound_hit,eig1,eig2,foc_norm\n";
  for (const auto& fit : fe.fits) {
    append_int(out, fit.date);
    out += ',';
    append_double(out, fit.theta[0]);
    out += ',';
    append_double(out, 1.0 - fit.theta[1]);
    out += ',';
    append_double(out, fit.theta[0] + fit.theta[1]);
    out += ',';
    append_double(out, fit.loglik);
    out += ',';
    out += fit.converged ? '1' : '0';
    out += ',';
    out += (fit.bound_hit[0] || fit.bound_hit[1]) ? '1' : '0';
    out += ',';
    append_double(out, fit.info_eigenvalues[0]);
    out += ',';
    append_double(out, fit.info_eigenvalues[1]);
    out += ',';
    append_double(out, fit.foc_norm);
    out += '\n';
  }
  return out;
}

std::string deviations_csv(const SchemeResult& result) {
  std::string out = "t,a_dev,r0_dev,flag\n";
  for (std::size_t i = 0; i < result.a_dev.size(); ++i) {
    append_int(out, result.estimates.fits[i].date);
    out += ',';
    append_double(out, result.a_dev[i]);
    out += ',';
    append_double(out, result.r0_dev[i]);
    out += ',';
    append_int(out, result.flags[i]);
    out += '\n';
  }
  return out;
}

std::string stats_csv(const ScenarioResult& result) {
  std::string out = "rep,scheme,target,mean,sd,skew,kurt,retained,trimmed,failed\n";
  const auto row = [&out](int rep, const std::string& label, const char* target,
                          const DeviationStats& s) {
    append_int(out, rep);
    out += ',';
    out += label;
    out += ',';
    out += target;
    out += ',';
    append_double(out, s.mean);
    out += ',';
    append_double(out, s.sd);
    out += ',';
    append_double(out, s.skewness);
    out += ',';
    append_double(out, s.kurtosis);
    out += ',';
    append_int(out, s.retained);
    out += ',';
    append_int(out, s.trimmed);
    out += ',';
    append_int(out, s.failed);
    out += '\n';
  };
  for (std::size_t r = 0; r < result.reps.size(); ++r) {
    for (const auto& scheme : result.reps[r].schemes) {
      row(static_cast<int>(r), scheme.label, "a", scheme.a_stats);
      row(static_cast<int>(r), scheme.label, "R0", scheme.r0_stats);
    }
  }
  return out;
}

std::string density_csv(const DensityGrid& grid) {
  std::string out = "x,density\n";
  for (std::size_t i = 0; i < grid.x.size(); ++i) {
    append_double(out, grid.x[i]);
    out += ',';
    append_double(out, grid.density[i]);
    out += '\n';
  }
  return out;
}

std::string acf_csv(const AcfTable& table) {
  std::string out = "lag,acf_est,acf_param,ccf_pos,ccf_neg\n";
  for (std::size_t h = 0; h < table.acf_est.size(); ++h) {
    append_int(out, static_cast<long long>(h));
    out += ',';
    append_double(out, table.acf_est[h]);
    out += ',';
    append_double(out, table.acf_param[h]);
    out += ',';
    append_double(out, table.ccf_pos[h]);
    out += ',';
    append_double(out, table.ccf_neg[h]);
    out += '\n';
  }
  return out;
}

std::string eigen_csv(const std::vector<EigenRow>& rows) {
  std::string out = "t,eig_max,eig_min\n";
  for (const auto& row : rows) {
    append_int(out, row.date);
    out += ',';
    append_double(out, row.eig_max);
    out += ',';
    append_double(out, row.eig_min);
    out += '\n';
  }
  return out;
}

std::string loglik_csv(const std::vector<SchemeResult>& schemes) {
  std::string out = "t";
  for (const auto& s : schemes) {
    out += ',';
    out += s.label;
  }
  out += '\n';
  if (schemes.empty()) return out;
  const std::size_t n_dates = schemes.front().estimates.fits.size();
  for (std::size_t i = 0; i < n_dates; ++i) {
    append_int(out, schemes.front().estimates.fits[i].date);
    for (const auto& s : schemes) {
      out += ',';
      append_double(out, s.estimates.fits[i].loglik);
    }
    out += '\n';
  }
  return out;
}

std::string ci_csv(const std::vector<CiRow>& rows) {
  std::string out = "t,a_hat,a_lo,a_hi,c_hat,c_lo,c_hi,available\n";
  for (const auto& row : rows) {
    append_int(out, row.date);
    out += ',';
    append_double(out, row.a_hat);
    out += ',';
    append_double(out, row.a_lo);
    out += ',';
    append_double(out, row.a_hi);
    out += ',';
    append_double(out, row.c_hat);
    out += ',';
    append_double(out, row.c_lo);
    out += ',';
    append_double(out, row.c_hi);
    out += ',';
    out += row.available ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::string bias_csv(const std::vector<BiasRow>& rows) {
  std::string out = "t,a_corr,omc_corr,r0_corr\n";
  for (const auto& row : rows) {
    append_int(out, row.date);
    out += ',';
    append_double(out, row.a_corr);
    out += ',';
    append_double(out, row.omc_corr);
    out += ',';
    append_double(out, row.r0_corr);
    out += '\n';
  }
  return out;
}

std::string prediction_csv(const std::vector<PredictionRow>& rows) {
  std::string out = "t,predicted,actual,residual\n";
  for (const auto& row : rows) {
    append_int(out, row.date);
    out += ',';
    append_double(out, row.predicted);
    out += ',';
    append_double(out, row.actual);
    out += ',';
    append_double(out, row.residual);
    out += '\n';
  }
  return out;
}

void write_file(const std::filesystem::path& file, const std::string& content) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + file.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed for " + file.string());
}

namespace {

// Density and correlation reductions tolerate degenerate inputs by writing
// header-only files; the per-date CSVs carry the underlying flags.
void write_scheme_reductions(const std::filesystem::path& base,
                             const SchemeResult& scheme,
                             const ParamPath& params) {
  std::vector<double> a_usable;
  std::vector<double> r0_usable;
  for (std::size_t i = 0; i < scheme.flags.size(); ++i) {
    if (scheme.flags[i] == static_cast<int>(DateFlag::failed)) continue;
    if (!std::isfinite(scheme.a_dev[i])) continue;
    a_usable.push_back(scheme.a_dev[i]);
    r0_usable.push_back(scheme.r0_dev[i]);
  }
  const auto density_or_header = [](const std::vector<double>& series) {
    try {
      return density_csv(kernel_density(series));
    } catch (const std::exception&) {
      return std::string("x,density\n");
    }
  };
  write_file(base / ("density_" + scheme.label + "_a.csv"),
             density_or_header(a_usable));
  write_file(base / ("density_" + scheme.label + "_r0.csv"),
             density_or_header(r0_usable));

  // Correlations run on the dates where the fit is clean; the parameter
  // columns are NaN for constant designs (undefined autocorrelation).
  std::vector<double> a_est;
  std::vector<double> r0_est;
  std::vector<double> a_par;
  std::vector<double> r0_par;
  for (std::size_t i = 0; i < scheme.flags.size(); ++i) {
    if (scheme.flags[i] != static_cast<int>(DateFlag::ok)) continue;
    const auto& fit = scheme.estimates.fits[i];
    const std::size_t t = static_cast<std::size_t>(fit.date);
    a_est.push_back(fit.theta[0]);
    r0_est.push_back(fit.theta[0] + fit.theta[1]);
    a_par.push_back(params.a[t]);
    r0_par.push_back(params.a[t] + 1.0 - params.c[t]);
  }
  const auto acf_or_header = [](const std::vector<double>& est,
                                const std::vector<double>& par) {
    const int m = static_cast<int>(est.size());
    int max_lag = 20;
    if (m <= max_lag + 10) max_lag = m - 11;
    if (max_lag < 1) return std::string("lag,acf_est,acf_param,ccf_pos,ccf_neg\n");
    AcfTable table;
    try {
      const AcfCross both = acf_cross(est, par, max_lag);
      table.acf_est = both.acf_x;
      table.acf_param = both.acf_y;
      table.ccf_pos = both.ccf_pos;
      table.ccf_neg = both.ccf_neg;
    } catch (const std::domain_error&) {
      try {
        const AcfCross self = acf_cross(est, est, max_lag);
        table.acf_est = self.acf_x;
        const std::vector<double> nans(self.acf_x.size(), kNan);
        table.acf_param = nans;
        table.ccf_pos = nans;
        table.ccf_neg = nans;
      } catch (const std::exception&) {
        return std::string("lag,acf_est,acf_param,ccf_pos,ccf_neg\n");
      }
    }
    return acf_csv(table);
  };
  write_file(base / ("acf_" + scheme.label + "_a.csv"),
             acf_or_header(a_est, a_par));
  write_file(base / ("acf_" + scheme.label + "_r0.csv"),
             acf_or_header(r0_est, r0_par));
}

}  // namespace

void write_scenario(const ScenarioResult& result,
                    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const bool flat = result.reps.size() == 1;
  for (std::size_t r = 0; r < result.reps.size(); ++r) {
    const auto& rep = result.reps[r];
    const std::filesystem::path base =
        flat ? dir : dir / ("rep" + std::to_string(r));
    std::filesystem::create_directories(base);
    write_file(base / "path.csv", path_csv(rep.sim));
    for (const auto& scheme : rep.schemes) {
      write_file(base / ("estimates_" + scheme.label + ".csv"),
                 estimates_csv(scheme.estimates));
      write_file(base / ("deviations_" + scheme.label + ".csv"),
                 deviations_csv(scheme));
      write_file(base / ("eigen_" + scheme.label + ".csv"),
                 eigen_csv(eigen_diagnostics(scheme.estimates)));
      write_scheme_reductions(base, scheme, rep.sim.params);
    }
    write_file(base / "loglik.csv", loglik_csv(rep.schemes));
  }
  write_file(dir / "stats.csv", stats_csv(result));
}

PathCsv read_path_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty input CSV");
  if (trim_cr(line) != "t,N1,N2,N21,N12,a_t,c_t")
    throw std::runtime_error(
        "bad path CSV header (expected t,N1,N2,N21,N12,a_t,c_t)");

  PathCsv data;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim_cr(line);
    if (row.empty()) continue;

    std::array<std::string_view, 7> fields;
    std::size_t start = 0;
    for (int f = 0; f < 7; ++f) {
      const std::size_t comma = row.find(',', start);
      const bool last = f == 6;
      if (!last && comma == std::string_view::npos)
        bad_row(line_no, "expected 7 fields");
      if (last && comma != std::string_view::npos)
        bad_row(line_no, "expected 7 fields");
      fields[static_cast<std::size_t>(f)] =
          row.substr(start, last ? std::string_view::npos : comma - start);
      start = comma + 1;
    }

    const long long t = parse_ll(fields[0], line_no);
    if (t != static_cast<long long>(data.n1.size()))
      bad_row(line_no, "dates must run 0,1,2,... without gaps");
    data.n1.push_back(parse_ll(fields[1], line_no));
    data.n2.push_back(parse_ll(fields[2], line_no));
    data.new_infections.push_back(parse_ll(fields[3], line_no));
    data.new_recoveries.push_back(parse_ll(fields[4], line_no));
    data.a.push_back(parse_double(fields[5], line_no));
    data.c.push_back(parse_double(fields[6], line_no));
    if (data.n1.back() + data.n2.back() !=
        data.n1.front() + data.n2.front())
      bad_row(line_no, "N1 + N2 must stay constant");
  }
  if (data.n1.empty()) throw std::runtime_error("no data rows in path CSV");
  data.population = data.n1.front() + data.n2.front();
  return data;
}

PathCsv read_path_csv_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  return read_path_csv(in);
}

}  // namespace tlml::csv
