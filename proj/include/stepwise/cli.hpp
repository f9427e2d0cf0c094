#pragma once

// Commands behind the `stepwise` executable. Each returns the artifact as
// text so it can be tested without touching the filesystem.

#include "stepwise/bayes.hpp"
#include "stepwise/bounds.hpp"
#include "stepwise/fisher.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace stepwise::cli {

using Json = nlohmann::json;

enum class ModelKind { Qubit, Lz, Ising, Gaussian };

struct ModelSpec {
  ModelKind kind = ModelKind::Qubit;
  double alpha = 0.0;  // qubit
  double beta = 0.0;
  double lambda0 = 2.0;  // lz
  int length = 6;        // ising
  double alpha_re = 0.0;  // gaussian
  double alpha_im = 0.0;
  double r = 0.0;
  double phi = 0.0;
  ParamPoint point;

  /// Sets a scan axis: qubit {alpha, beta, lambda1, lambda2}, lz {lambda0,
  /// lambda1, lambda2}, ising {lambda1, lambda2}, gaussian {alpha_re,
  /// alpha_im, alpha_diag, r, phi}. alpha_diag sets Re = Im = value / sqrt(2).
  void set(const std::string& axis, double value);
  /// Instantiates the state model; throws ConfigError for the Gaussian probe.
  std::unique_ptr<ProbeModel> make_model() const;
};

struct AxisSpec {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  int steps = 101;

  /// lo + i (hi - lo) / (steps - 1)
  double value(int i) const noexcept;
};

struct ScanSpec {
  ModelSpec model;
  AxisSpec axis1;
  AxisSpec axis2;
  std::string output;
};

struct ScalingSpec {
  std::vector<int> lengths;
  ParamPoint point;
  std::string output;
};

struct BayesSpec {
  ModelSpec model;
  BayesConfig config;
  /// gamma = "optimal": the closed-form optimum of the chosen order at the true point.
  bool optimal_gamma = false;
  std::string output;
};

struct PointResult {
  Qfim q;
  double delta;  ///< NaN for the Gaussian probe
  bool degenerate;
  BoundsReport report;
};

/// Reads a JSON config; numbers may also be written as strings such as
/// "pi/4", "3*pi/8" or "2*pi".
Json load_config(const std::filesystem::path& path);
double parse_number(const Json& value);

ModelSpec parse_model(const Json& config);
ScanSpec parse_scan(const Json& config);
ScalingSpec parse_scaling(const Json& config);
BayesSpec parse_bayes(const Json& config);

/// QFIM, Uhlmann scalar and bounds at the model's point. Stencil failures
/// become a singular, degenerate row.
PointResult evaluate_point(const ModelSpec& spec);

inline constexpr const char* kScanHeader =
    "axis1,axis2,q11,q12,q22,delta,mu,mu_prime,mu_dblprime,mu_tilde,gamma_opt,strategy,region,"
    "ratio,eq7_value,eq7_satisfied,singular,degenerate_flag";

std::string scan_row(double v1, double v2, const PointResult& r);

/// Full CSV text, rows in row-major (axis1 outer) order regardless of `threads`.
std::string run_scan(const ScanSpec& spec, int threads, const std::string& config_echo = {});

struct ScalingRow {
  int length;
  BoundsReport report;
  bool degenerate;
};

struct ScalingResult {
  std::vector<ScalingRow> rows;
  double slope_mu;
  double slope_mu_tilde;
};

ScalingResult compute_scaling(const ScalingSpec& spec, int threads);
std::string scaling_csv(const ScalingResult& result, const std::string& config_echo = {});

/// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Resolves "optimal" gamma against the true point, then runs.
BayesTrace run_bayes(const BayesSpec& spec);
std::string bayes_csv(const BayesTrace& trace, const std::string& config_echo = {});

/// key=value lines for every report field plus the QFIM and delta.
std::string point_report(const ModelSpec& spec);

/// --threads flag, else WORKER_THREADS, else hardware concurrency.
int resolve_threads(std::optional<int> flag);

/// Resolves a relative output path against OUT_DIR when that is set.
std::filesystem::path resolve_output(const std::string& path);

/// Writes through a temporary file and renames, so a failed write leaves no artifact.
void write_file(const std::filesystem::path& path, const std::string& contents);

const char* git_hash() noexcept;

}  // namespace stepwise::cli
