#include "stepwise/cli.hpp"

#include "stepwise/csv.hpp"
#include "stepwise/errors.hpp"
#include "stepwise/models.hpp"
#include "stepwise/parallel.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#ifndef STEPWISE_GIT_HASH
#define STEPWISE_GIT_HASH "unknown"
#endif

namespace stepwise::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Recursive descent over + - * / ( ), numbers, pi and sqrt(...).
class ExpressionParser {
 public:
  explicit ExpressionParser(std::string_view text) : text_(text) {}

  double parse() {
    const double v = sum();
    skip_space();
    if (pos_ != text_.size()) fail();
    return v;
  }

 private:
  double sum() {
    double v = product();
    for (;;) {
      if (eat('+')) v += product();
      else if (eat('-')) v -= product();
      else return v;
    }
  }

  double product() {
    double v = unary();
    for (;;) {
      if (eat('*')) v *= unary();
      else if (eat('/')) v /= unary();
      else return v;
    }
  }

  double unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return atom();
  }

  double atom() {
    skip_space();
    if (eat('(')) {
      const double v = sum();
      if (!eat(')')) fail();
      return v;
    }
    if (word("pi")) return std::numbers::pi;
    if (word("sqrt")) {
      if (!eat('(')) fail();
      const double v = sum();
      if (!eat(')')) fail();
      return std::sqrt(v);
    }
    const char* begin = text_.data() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail();
    pos_ += static_cast<std::size_t>(end - begin);
    return v;
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool word(std::string_view w) {
    skip_space();
    if (text_.substr(pos_, w.size()) != w) return false;
    pos_ += w.size();
    return true;
  }

  [[noreturn]] void fail() const {
    throw ConfigError("cannot parse number expression '" + std::string(text_) + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

const Json& section(const Json& config, const char* name) {
  if (!config.is_object() || !config.contains(name) || !config.at(name).is_object())
    throw ConfigError(std::string("config has no '") + name + "' section");
  return config.at(name);
}

double number_or(const Json& obj, const char* key, double fallback) {
  return obj.contains(key) ? parse_number(obj.at(key)) : fallback;
}

std::int64_t integer(const Json& value, const char* key) {
  const double v = parse_number(value);
  if (std::floor(v) != v) throw ConfigError(std::string(key) + " must be an integer");
  return static_cast<std::int64_t>(v);
}

std::string string_or(const Json& obj, const char* key, std::string fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) throw ConfigError(std::string(key) + " must be a string");
  return obj.at(key).get<std::string>();
}

// DimensionBudget passes through; a too-short chain is a config error.
void check_length(int length) {
  try {
    (void)IsingConfig(length);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ParamPoint parse_point(const Json& value) {
  if (!value.is_array() || value.size() != 2)
    throw ConfigError("a parameter point is written [lambda1, lambda2]");
  return {parse_number(value[0]), parse_number(value[1])};
}

AxisSpec parse_axis(const Json& value, const char* key) {
  if (!value.is_object()) throw ConfigError(std::string(key) + " must be an object");
  AxisSpec a;
  a.name = string_or(value, "name", "");
  if (a.name.empty()) throw ConfigError(std::string(key) + " needs a name");
  if (!value.contains("lo") || !value.contains("hi"))
    throw ConfigError(std::string(key) + " needs lo and hi");
  a.lo = parse_number(value.at("lo"));
  a.hi = parse_number(value.at("hi"));
  if (value.contains("steps")) a.steps = static_cast<int>(integer(value.at("steps"), "steps"));
  if (a.steps < 2) throw ConfigError(std::string(key) + ".steps must be at least 2");
  if (!(a.lo < a.hi)) throw ConfigError(std::string(key) + " needs lo < hi");
  return a;
}

Strategy parse_order(const std::string& text) {
  if (text == "first1then2" || text == "lambda1_first") return Strategy::First1Then2;
  if (text == "first2then1" || text == "lambda2_first") return Strategy::First2Then1;
  throw ConfigError("order must be first1then2 or first2then1, got '" + text + "'");
}

std::string echo_line(const std::string& config_echo) {
  return config_echo.empty() ? std::string{} : "# config=" + config_echo + "\n";
}

bool touches_model_config(const std::string& axis) {
  return axis != "lambda1" && axis != "lambda2";
}

PointResult evaluate_with(const ModelSpec& spec, const ProbeModel* model) {
  if (spec.kind == ModelKind::Gaussian) {
    const Qfim q = gaussian_qfim({spec.alpha_re, spec.alpha_im}, spec.r);
    return {q, kNaN, false, classify_region(q)};
  }
  std::unique_ptr<ProbeModel> owned;
  if (model == nullptr) {
    owned = spec.make_model();
    model = owned.get();
  }
  try {
    const auto bundle = state_derivatives(model->state_fn(), spec.point);
    const Qfim q = qfim_pure(bundle);
    return {q, uhlmann_delta(bundle), bundle.degenerate_flag, classify_region(q)};
  } catch (const StencilFailure&) {
    BoundsReport r{};
    r.mu = r.mu_prime = r.mu_dblprime = r.mu_tilde = kInf;
    r.gamma_opt = r.ratio = r.eq7_value = kNaN;
    r.strategy = Strategy::Joint;
    r.region = Region::III;
    r.eq7_satisfied = false;
    r.singular = true;
    return {{kNaN, kNaN, kNaN}, kNaN, true, r};
  }
}

}  // namespace

Json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

double parse_number(const Json& value) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) return ExpressionParser(value.get<std::string>()).parse();
  throw ConfigError("expected a number, got " + value.dump());
}

void ModelSpec::set(const std::string& axis, double value) {
  if (axis == "lambda1" && kind != ModelKind::Gaussian) point.lambda1 = value;
  else if (axis == "lambda2" && kind != ModelKind::Gaussian) point.lambda2 = value;
  else if (axis == "alpha" && kind == ModelKind::Qubit) alpha = value;
  else if (axis == "beta" && kind == ModelKind::Qubit) beta = value;
  else if (axis == "lambda0" && kind == ModelKind::Lz) lambda0 = value;
  else if (axis == "alpha_re" && kind == ModelKind::Gaussian) alpha_re = value;
  else if (axis == "alpha_im" && kind == ModelKind::Gaussian) alpha_im = value;
  else if (axis == "alpha_diag" && kind == ModelKind::Gaussian) {
    alpha_re = alpha_im = value / std::numbers::sqrt2;
  } else if (axis == "r" && kind == ModelKind::Gaussian) {
    r = point.lambda2 = value;
  } else if (axis == "phi" && kind == ModelKind::Gaussian) {
    phi = point.lambda1 = value;
  } else {
    throw ConfigError("axis '" + axis + "' does not apply to this model");
  }
}

std::unique_ptr<ProbeModel> ModelSpec::make_model() const {
  switch (kind) {
    case ModelKind::Qubit: return std::make_unique<QubitModel>(QubitProbeConfig(alpha, beta));
    case ModelKind::Lz: return std::make_unique<LzModel>(LzConfig{lambda0});
    case ModelKind::Ising: return std::make_unique<IsingModel>(IsingConfig(length));
    case ModelKind::Gaussian: break;
  }
  throw ConfigError("the gaussian probe has no state representation");
}

double AxisSpec::value(int i) const noexcept {
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
}

ModelSpec parse_model(const Json& config) {
  const Json& m = section(config, "model");
  ModelSpec s;
  const std::string name = string_or(m, "name", "");
  if (name == "qubit") s.kind = ModelKind::Qubit;
  else if (name == "lz") s.kind = ModelKind::Lz;
  else if (name == "ising") s.kind = ModelKind::Ising;
  else if (name == "gaussian") s.kind = ModelKind::Gaussian;
  else throw ConfigError("model.name must be qubit, lz, ising or gaussian, got '" + name + "'");

  s.alpha = number_or(m, "alpha", std::numbers::pi / 4);
  s.beta = number_or(m, "beta", 3 * std::numbers::pi / 8);
  s.lambda0 = number_or(m, "lambda0", 2.0);
  if (m.contains("length")) s.length = static_cast<int>(integer(m.at("length"), "length"));
  s.alpha_re = number_or(m, "alpha_re", 1.0);
  s.alpha_im = number_or(m, "alpha_im", 0.0);
  s.r = number_or(m, "r", 1.0);
  s.phi = number_or(m, "phi", 0.0);
  s.point = {number_or(m, "lambda1", 0.5), number_or(m, "lambda2", 0.5)};
  if (s.kind == ModelKind::Gaussian) s.point = {s.phi, s.r};
  if (s.kind == ModelKind::Ising) check_length(s.length);
  return s;
}

ScanSpec parse_scan(const Json& config) {
  const Json& sc = section(config, "scan");
  ScanSpec s;
  s.model = parse_model(config);
  if (!sc.contains("axis1") || !sc.contains("axis2")) throw ConfigError("scan needs axis1 and axis2");
  s.axis1 = parse_axis(sc.at("axis1"), "axis1");
  s.axis2 = parse_axis(sc.at("axis2"), "axis2");
  if (s.axis1.name == s.axis2.name) throw ConfigError("scan axes must differ");
  ModelSpec probe = s.model;
  probe.set(s.axis1.name, s.axis1.lo);
  probe.set(s.axis2.name, s.axis2.lo);
  s.output = string_or(sc, "output", "scan.csv");
  return s;
}

ScalingSpec parse_scaling(const Json& config) {
  const Json& sc = section(config, "scaling");
  ScalingSpec s;
  if (!sc.contains("lengths") || !sc.at("lengths").is_array() || sc.at("lengths").empty())
    throw ConfigError("scaling.lengths must be a non-empty array");
  for (const auto& v : sc.at("lengths")) {
    const int length = static_cast<int>(integer(v, "lengths"));
    check_length(length);
    s.lengths.push_back(length);
  }
  if (!sc.contains("point")) throw ConfigError("scaling needs a point");
  s.point = parse_point(sc.at("point"));
  s.output = string_or(sc, "output", "scaling.csv");
  return s;
}

BayesSpec parse_bayes(const Json& config) {
  const Json& b = section(config, "bayes");
  BayesSpec s;
  s.model = parse_model(config);
  if (s.model.kind == ModelKind::Gaussian)
    throw ConfigError("bayes needs a model with a state representation");
  BayesConfig& c = s.config;
  c.true_point = s.model.point;
  if (b.contains("total_shots")) c.total_shots = integer(b.at("total_shots"), "total_shots");
  if (b.contains("gamma")) {
    const Json& g = b.at("gamma");
    if (g.is_string() && g.get<std::string>() == "optimal") s.optimal_gamma = true;
    else c.gamma = parse_number(g);
  }
  if (b.contains("seed")) {
    const Json& v = b.at("seed");
    if (!v.is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
    c.seed = v.get<std::uint64_t>();
  }
  if (b.contains("grid_points"))
    c.grid_points = static_cast<std::size_t>(integer(b.at("grid_points"), "grid_points"));
  c.prior_width_1 = number_or(b, "prior_width_1", c.prior_width_1);
  c.prior_width_2 = number_or(b, "prior_width_2", c.prior_width_2);
  c.order = parse_order(string_or(b, "order", "first1then2"));
  if (b.contains("batch_size")) c.batch_size = integer(b.at("batch_size"), "batch_size");
  s.output = string_or(b, "output", "bayes.csv");
  if (!s.optimal_gamma) {
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("bayes: ") + e.what());
    } catch (const GammaOutOfRange& e) {
      throw ConfigError(std::string("bayes: ") + e.what());
    }
  }
  return s;
}

PointResult evaluate_point(const ModelSpec& spec) { return evaluate_with(spec, nullptr); }

std::string scan_row(double v1, double v2, const PointResult& r) {
  const BoundsReport& b = r.report;
  std::string row;
  for (double v : {v1, v2, r.q.q11, r.q.q12, r.q.q22, r.delta, b.mu, b.mu_prime, b.mu_dblprime,
                   b.mu_tilde, b.gamma_opt}) {
    row += format_number(v);
    row += ',';
  }
  row += to_string(b.strategy);
  row += ',';
  row += to_string(b.region);
  row += ',' + format_number(b.ratio) + ',' + format_number(b.eq7_value) + ',';
  row += format_bool(b.eq7_satisfied);
  row += ',';
  row += format_bool(b.singular);
  row += ',';
  row += format_bool(r.degenerate);
  return row;
}

std::string run_scan(const ScanSpec& spec, int threads, const std::string& config_echo) {
  std::unique_ptr<ProbeModel> shared;
  if (spec.model.kind != ModelKind::Gaussian && !touches_model_config(spec.axis1.name) &&
      !touches_model_config(spec.axis2.name))
    shared = spec.model.make_model();

  const auto n1 = static_cast<std::size_t>(spec.axis1.steps);
  const auto n2 = static_cast<std::size_t>(spec.axis2.steps);
  std::vector<std::string> rows(n1 * n2);
  parallel_for(rows.size(), threads, [&](std::size_t idx) {
    const int i = static_cast<int>(idx / n2);
    const int j = static_cast<int>(idx % n2);
    const double v1 = spec.axis1.value(i);
    const double v2 = spec.axis2.value(j);
    ModelSpec m = spec.model;
    m.set(spec.axis1.name, v1);
    m.set(spec.axis2.name, v2);
    rows[idx] = scan_row(v1, v2, evaluate_with(m, shared.get()));
  });

  std::string out = "# git=" + std::string(git_hash()) + "\n" + echo_line(config_echo);
  out += "# axis1=" + spec.axis1.name + " axis2=" + spec.axis2.name + "\n";
  out += kScanHeader;
  out += '\n';
  for (const auto& r : rows) out += r + '\n';
  return out;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return kNaN;
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  return denom > 0.0 ? (n * sxy - sx * sy) / denom : kNaN;
}

ScalingResult compute_scaling(const ScalingSpec& spec, int threads) {
  ScalingResult result;
  result.rows.resize(spec.lengths.size());
  parallel_for(spec.lengths.size(), threads, [&](std::size_t i) {
    ModelSpec m;
    m.kind = ModelKind::Ising;
    m.length = spec.lengths[i];
    m.point = spec.point;
    const PointResult r = evaluate_point(m);
    result.rows[i] = {m.length, r.report, r.degenerate};
  });

  std::vector<double> ls, mus, mu_tildes;
  for (const auto& row : result.rows) {
    if (row.report.singular || row.degenerate) continue;
    ls.push_back(row.length);
    mus.push_back(row.report.mu);
    mu_tildes.push_back(row.report.mu_tilde);
  }
  result.slope_mu = log_log_slope(ls, mus);
  result.slope_mu_tilde = log_log_slope(ls, mu_tildes);
  return result;
}

std::string scaling_csv(const ScalingResult& result, const std::string& config_echo) {
  std::string out = "# git=" + std::string(git_hash()) + "\n" + echo_line(config_echo);
  out += "L,mu,mu_tilde,gamma_opt,region\n";
  for (const auto& row : result.rows) {
    out += std::to_string(row.length) + ',' + format_number(row.report.mu) + ',' +
           format_number(row.report.mu_tilde) + ',' + format_number(row.report.gamma_opt) + ',' +
           std::string(to_string(row.report.region)) + '\n';
  }
  out += "# slope_mu=" + format_number(result.slope_mu) +
         " slope_mu_tilde=" + format_number(result.slope_mu_tilde) + '\n';
  return out;
}

BayesTrace run_bayes(const BayesSpec& spec) {
  BayesConfig cfg = spec.config;
  if (spec.optimal_gamma) {
    const PointResult r = evaluate_point(spec.model);
    if (r.report.singular) throw ConfigError("QFIM is singular at the true point; gamma undefined");
    const SeOptimum se = optimal_se(r.q);
    cfg.gamma = cfg.order == Strategy::First2Then1 ? se.gamma_dblprime : se.gamma_prime;
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("bayes: ") + e.what());
  } catch (const GammaOutOfRange& e) {
    throw ConfigError(std::string("bayes: ") + e.what());
  }
  const auto model = spec.model.make_model();
  return StepwiseBayes(*model, cfg).run(cfg.seed);
}

std::string bayes_csv(const BayesTrace& trace, const std::string& config_echo) {
  std::ostringstream out;
  out << "# git=" << git_hash() << '\n' << echo_line(config_echo);
  out << "# mu=" << format_number(trace.mu) << " mu_tilde=" << format_number(trace.mu_tilde)
      << '\n';
  write_trace_csv(out, trace);
  return out.str();
}

std::string point_report(const ModelSpec& spec) {
  const PointResult r = evaluate_point(spec);
  const BoundsReport& b = r.report;
  std::ostringstream out;
  out << "lambda1=" << format_number(spec.point.lambda1) << '\n'
      << "lambda2=" << format_number(spec.point.lambda2) << '\n'
      << "q11=" << format_number(r.q.q11) << '\n'
      << "q12=" << format_number(r.q.q12) << '\n'
      << "q22=" << format_number(r.q.q22) << '\n'
      << "delta=" << format_number(r.delta) << '\n'
      << "mu=" << format_number(b.mu) << '\n'
      << "mu_prime=" << format_number(b.mu_prime) << '\n'
      << "mu_dblprime=" << format_number(b.mu_dblprime) << '\n'
      << "mu_tilde=" << format_number(b.mu_tilde) << '\n'
      << "gamma_opt=" << format_number(b.gamma_opt) << '\n'
      << "strategy=" << to_string(b.strategy) << '\n'
      << "region=" << to_string(b.region) << '\n'
      << "ratio=" << format_number(b.ratio) << '\n'
      << "eq7_value=" << format_number(b.eq7_value) << '\n'
      << "eq7_satisfied=" << format_bool(b.eq7_satisfied) << '\n'
      << "singular=" << format_bool(b.singular) << '\n'
      << "degenerate_flag=" << format_bool(r.degenerate) << '\n';
  return out.str();
}

int resolve_threads(std::optional<int> flag) {
  if (flag) {
    if (*flag < 1) throw ConfigError("--threads must be at least 1");
    return *flag;
  }
  if (const char* env = std::getenv("WORKER_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw ConfigError("WORKER_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::filesystem::path resolve_output(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv("OUT_DIR"); dir != nullptr && *dir != '\0')
      return std::filesystem::path(dir) / p;
  }
  return p;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << contents;
    out.close();
    if (!out) {
      std::filesystem::remove(tmp);
      throw ConfigError("write to " + tmp.string() + " failed");
    }
  }
  std::filesystem::rename(tmp, path);
}

const char* git_hash() noexcept { return STEPWISE_GIT_HASH; }

}  // namespace stepwise::cli
