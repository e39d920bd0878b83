#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "tlml/estimator.hpp"
#include "tlml/inference.hpp"
#include "tlml/montecarlo.hpp"
#include "tlml/sis.hpp"

// Deterministic CSV emission and parsing: fixed headers, LF line endings,
// shortest round-trip numeric formatting, "nan" for missing values.

namespace tlml::csv {

// Shortest decimal representation that parses back to the same double;
// NaN of either sign prints as "nan".
std::string format_double(double v);

// Writers append to a string buffer; files are written in one shot.
std::string path_csv(const SimResult& sim);
std::string estimates_csv(const FunctionalEstimate<2>& fe);
std::string deviations_csv(const SchemeResult& result);
std::string stats_csv(const ScenarioResult& result);
std::string density_csv(const DensityGrid& grid);

struct AcfTable {
  // One row per lag; param/cross columns are NaN when the parameter path is
  // constant (its autocorrelation is undefined).
  std::vector<double> acf_est;
  std::vector<double> acf_param;
  std::vector<double> ccf_pos;
  std::vector<double> ccf_neg;
};
std::string acf_csv(const AcfTable& table);

std::string eigen_csv(const std::vector<EigenRow>& rows);

// One date column plus one optimum log-likelihood column per scheme.
std::string loglik_csv(const std::vector<SchemeResult>& schemes);

// Diagnose outputs.
struct CiRow {
  int date = 0;
  double a_hat = 0.0, a_lo = 0.0, a_hi = 0.0;
  double c_hat = 0.0, c_lo = 0.0, c_hi = 0.0;
  bool available = false;
};
struct BiasRow {
  int date = 0;
  double a_corr = 0.0;
  double omc_corr = 0.0;  // correction on the 1-c coordinate
  double r0_corr = 0.0;
};
struct PredictionRow {
  int date = 0;
  double predicted = 0.0;
  double actual = 0.0;
  double residual = 0.0;
};
std::string ci_csv(const std::vector<CiRow>& rows);
std::string bias_csv(const std::vector<BiasRow>& rows);
std::string prediction_csv(const std::vector<PredictionRow>& rows);

// Writes `content` to `file` (LF endings as-is). Throws std::runtime_error
// on I/O failure.
void write_file(const std::filesystem::path& file, const std::string& content);

// Scenario bundle: per replication path.csv, estimates_<scheme>.csv,
// deviations_<scheme>.csv, eigen_<scheme>.csv, density_<scheme>_<target>.csv,
// acf_<scheme>_<target>.csv, loglik.csv; stats.csv sits at the root. With a
// single replication everything is flat in `dir`; with R > 1 each
// replication gets a rep<k>/ subdirectory. Degenerate density/acf inputs
// (too few usable dates) produce header-only files.
void write_scenario(const ScenarioResult& result,
                    const std::filesystem::path& dir);

// Parsed simulate output (the `t` column is implicit row order).
struct PathCsv {
  std::vector<long long> n1;
  std::vector<long long> n2;
  std::vector<long long> new_infections;
  std::vector<long long> new_recoveries;
  std::vector<double> a;
  std::vector<double> c;
  long long population = 0;  // n1[0] + n2[0]
};

// Throws std::runtime_error on a bad header, malformed row (with its line
// number), or when no data rows are present.
PathCsv read_path_csv(std::istream& in);
PathCsv read_path_csv_file(const std::filesystem::path& file);

}  // namespace tlml::csv
