#include "stepwise/bayes.hpp"

#include "stepwise/csv.hpp"
#include "stepwise/errors.hpp"
#include "stepwise/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace stepwise {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLogFloor = std::log(kLikelihoodFloor);

double safe_log(double p) { return std::log(std::max(p, kLikelihoodFloor)); }

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void check_counts(const Counts& counts, std::size_t outcomes) {
  if (counts.size() != outcomes)
    throw DimensionMismatch("count vector length " + std::to_string(counts.size()) +
                            " differs from outcome count " + std::to_string(outcomes));
}

double log_sum_exp_weighted(std::span<const double> logs, const std::vector<double>& weights) {
  double top = kNegInf;
  for (std::size_t j = 0; j < logs.size(); ++j)
    if (weights[j] > 0.0) top = std::max(top, logs[j]);
  if (top == kNegInf) return kNegInf;
  double acc = 0.0;
  for (std::size_t j = 0; j < logs.size(); ++j)
    if (weights[j] > 0.0) acc += weights[j] * std::exp(logs[j] - top);
  return top + std::log(acc);
}

}  // namespace

PosteriorGrid::PosteriorGrid(double lo, double hi, std::vector<double> weights)
    : lo_(lo), hi_(hi), weights_(std::move(weights)) {
  if (!(hi_ > lo_)) throw std::invalid_argument("posterior grid needs hi > lo");
  if (weights_.size() < 2) throw std::invalid_argument("posterior grid needs at least 2 points");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw std::invalid_argument("posterior weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > kWeightTolerance)
    throw std::invalid_argument("posterior weights sum to " + std::to_string(total));
}

PosteriorGrid PosteriorGrid::uniform(double lo, double hi, std::size_t n) {
  return PosteriorGrid(lo, hi, std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

PosteriorGrid PosteriorGrid::centered(double center, double width, std::size_t n) {
  return uniform(center - 0.5 * width, center + 0.5 * width, n);
}

PosteriorGrid PosteriorGrid::point_mass(double lo, double hi, std::size_t n, double value) {
  std::vector<double> w(n, 0.0);
  const double pos = (value - lo) / (hi - lo) * static_cast<double>(n) - 0.5;
  const auto idx = static_cast<std::size_t>(
      std::clamp(std::lround(pos), 0L, static_cast<long>(n - 1)));
  w[idx] = 1.0;
  return PosteriorGrid(lo, hi, std::move(w));
}

double PosteriorGrid::support(std::size_t i) const noexcept {
  return lo_ + (hi_ - lo_) * (static_cast<double>(i) + 0.5) / static_cast<double>(weights_.size());
}

std::int64_t BayesConfig::first_phase_shots() const {
  return static_cast<std::int64_t>(std::ceil(gamma * static_cast<double>(total_shots)));
}

void BayesConfig::validate() const {
  if (total_shots < 1) throw std::invalid_argument("total_shots must be at least 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw GammaOutOfRange("gamma must lie in (0, 1)");
  if (first_phase_shots() < 1 || second_phase_shots() < 1)
    throw std::invalid_argument("both phases need at least one shot (m1 = ceil(gamma M))");
  if (grid_points < 2) throw std::invalid_argument("grid_points must be at least 2");
  if (!(prior_width_1 > 0.0) || !(prior_width_2 > 0.0))
    throw std::invalid_argument("prior widths must be positive");
  if (!true_point.finite()) throw std::invalid_argument("true point must be finite");
  if (order == Strategy::Joint) throw std::invalid_argument("order must be a stepwise order");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
}

Counts sample_outcomes(std::span<const double> probs, std::int64_t count, Rng& rng) {
  if (count < 0) throw std::invalid_argument("negative shot count");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw UnnormalizedProbs("negative or NaN outcome probability");
    total += p;
  }
  if (probs.empty() || std::abs(total - 1.0) > 1e-9)
    throw UnnormalizedProbs("outcome probabilities sum to " + std::to_string(total));

  std::size_t last = 0;
  for (std::size_t k = 0; k < probs.size(); ++k)
    if (probs[k] > 0.0) last = k;

  Counts counts(probs.size(), 0);
  for (std::int64_t s = 0; s < count; ++s) {
    const double u = uniform01(rng);
    double acc = 0.0;
    std::size_t k = 0;
    for (; k < last; ++k) {
      acc += probs[k];
      if (u < acc) break;
    }
    ++counts[k];
  }
  return counts;
}

ProbabilityTable::ProbabilityTable(const ProbabilityFn& prob_fn, const PosteriorGrid& first,
                                   const PosteriorGrid& other, int first_axis)
    : n_first_(first.size()), n_other_(other.size()), outcomes_(0) {
  for (std::size_t i = 0; i < n_first_; ++i) {
    for (std::size_t j = 0; j < n_other_; ++j) {
      const ParamPoint p = first_axis == 0 ? ParamPoint{first.support(i), other.support(j)}
                                           : ParamPoint{other.support(j), first.support(i)};
      const auto probs = prob_fn(p);
      if (outcomes_ == 0) {
        outcomes_ = probs.size();
        log_probs_.reserve(n_first_ * n_other_ * outcomes_);
      } else if (probs.size() != outcomes_) {
        throw DimensionMismatch("probability vector length varies across the grid");
      }
      for (double v : probs) log_probs_.push_back(safe_log(v));
    }
  }
}

std::vector<double> marginal_log_likelihood(const ProbabilityTable& table, const Counts& counts,
                                            const PosteriorGrid& other_prior) {
  check_counts(counts, table.outcomes());
  if (other_prior.size() != table.other_size())
    throw DimensionMismatch("nuisance prior does not match the table");

  std::vector<double> out(table.first_size());
  std::vector<double> cell(table.other_size());
  bool any_possible = false;
  for (std::size_t i = 0; i < table.first_size(); ++i) {
    for (std::size_t j = 0; j < table.other_size(); ++j) {
      double s = 0.0;
      bool possible = true;
      for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] == 0) continue;
        const double lp = table.log_prob(i, j, k);
        if (lp <= kLogFloor) possible = false;
        s += static_cast<double>(counts[k]) * lp;
      }
      cell[j] = s;
      if (possible && other_prior.weights()[j] > 0.0) any_possible = true;
    }
    out[i] = log_sum_exp_weighted(cell, other_prior.weights());
  }
  if (!any_possible) throw ZeroLikelihood("observed outcomes are impossible on the whole grid");
  return out;
}

std::vector<double> conditional_log_likelihood(const ProbabilityFn& prob_fn, const Counts& counts,
                                               const PosteriorGrid& grid, int axis,
                                               double fixed_value) {
  std::vector<double> out(grid.size());
  bool any_possible = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const ParamPoint p = axis == 0 ? ParamPoint{grid.support(i), fixed_value}
                                   : ParamPoint{fixed_value, grid.support(i)};
    const auto probs = prob_fn(p);
    check_counts(counts, probs.size());
    double s = 0.0;
    bool possible = true;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (counts[k] == 0) continue;
      if (probs[k] <= kLikelihoodFloor) possible = false;
      s += static_cast<double>(counts[k]) * safe_log(probs[k]);
    }
    out[i] = s;
    any_possible = any_possible || possible;
  }
  if (!any_possible) throw ZeroLikelihood("observed outcomes are impossible on the whole grid");
  return out;
}

std::vector<double> marginal_likelihood_1(const ProbabilityFn& prob_fn1, const Counts& counts,
                                          const PosteriorGrid& grid1, const PosteriorGrid& grid2) {
  const ProbabilityTable table(prob_fn1, grid1, grid2, 0);
  return marginal_log_likelihood(table, counts, grid2);
}

std::vector<double> conditional_likelihood_2(const ProbabilityFn& prob_fn2, const Counts& counts,
                                             const PosteriorGrid& grid2, double lambda1_est) {
  return conditional_log_likelihood(prob_fn2, counts, grid2, 1, lambda1_est);
}

PosteriorGrid posterior_update(const PosteriorGrid& grid, std::span<const double> loglik) {
  if (loglik.size() != grid.size())
    throw DimensionMismatch("log-likelihood length differs from grid size");
  double top = kNegInf;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid.weights()[i] > 0.0) top = std::max(top, loglik[i]);
  if (!std::isfinite(top)) throw ZeroLikelihood("posterior has no support");

  std::vector<double> w(grid.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = grid.weights()[i] * std::exp(loglik[i] - top);
    total += w[i];
  }
  if (!(total > 0.0)) throw ZeroLikelihood("posterior has no support");
  for (double& x : w) x /= total;
  return PosteriorGrid(grid.lo(), grid.hi(), std::move(w));
}

Moments posterior_mean_var(const PosteriorGrid& grid) {
  double mean = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) mean += grid.weights()[i] * grid.support(i);
  // central second moment; avoids cancellation of E[x^2] - E[x]^2
  double var = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double d = grid.support(i) - mean;
    var += grid.weights()[i] * d * d;
  }
  return {mean, std::max(var, 0.0)};
}

ProbabilityFn measurement_probabilities(const ProbeModel& model, Povm povm) {
  return [&model, povm = std::move(povm)](const ParamPoint& p) {
    return born_probabilities(model.evaluate(p).state, povm);
  };
}

namespace {

BoundsReport bounds_at(const ProbeModel& model, const ParamPoint& point) {
  const auto bundle = state_derivatives(model.state_fn(), point);
  return classify_region(qfim_pure(bundle));
}

/// Running sum_k c_k log p(k | i, j) over the phase-1 table, plus the
/// impossible-cell mask, updated one batch at a time.
class MarginalAccumulator {
 public:
  explicit MarginalAccumulator(const ProbabilityTable& table)
      : table_(table),
        sums_(table.first_size() * table.other_size(), 0.0),
        possible_(sums_.size(), 1) {}

  void add(const Counts& batch) {
    for (std::size_t k = 0; k < batch.size(); ++k) {
      if (batch[k] == 0) continue;
      const double c = static_cast<double>(batch[k]);
      for (std::size_t i = 0; i < table_.first_size(); ++i) {
        for (std::size_t j = 0; j < table_.other_size(); ++j) {
          const double lp = table_.log_prob(i, j, k);
          const std::size_t idx = i * table_.other_size() + j;
          sums_[idx] += c * lp;
          if (lp <= kLogFloor) possible_[idx] = 0;
        }
      }
    }
  }

  std::vector<double> log_likelihood(const PosteriorGrid& other_prior) const {
    const std::size_t n_other = table_.other_size();
    if (std::none_of(possible_.begin(), possible_.end(), [](char v) { return v != 0; }))
      throw ZeroLikelihood("phase-1 outcomes are impossible on the whole grid");
    std::vector<double> out(table_.first_size());
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = log_sum_exp_weighted(std::span<const double>(sums_).subspan(i * n_other, n_other),
                                    other_prior.weights());
    return out;
  }

 private:
  const ProbabilityTable& table_;
  std::vector<double> sums_;
  std::vector<char> possible_;
};

}  // namespace

StepwiseBayes::StepwiseBayes(const ProbeModel& model, BayesConfig cfg)
    : model_(model),
      cfg_((cfg.validate(), cfg)),
      first_probs_(measurement_probabilities(model, cfg.order == Strategy::First2Then1
                                                        ? model.measurements().for_lambda2
                                                        : model.measurements().for_lambda1)),
      second_probs_(measurement_probabilities(model, cfg.order == Strategy::First2Then1
                                                         ? model.measurements().for_lambda1
                                                         : model.measurements().for_lambda2)),
      first_prior_(PosteriorGrid::centered(
          cfg.true_point[first_axis()],
          first_axis() == 0 ? cfg.prior_width_1 : cfg.prior_width_2, cfg.grid_points)),
      second_prior_(PosteriorGrid::centered(
          cfg.true_point[1 - first_axis()],
          first_axis() == 0 ? cfg.prior_width_2 : cfg.prior_width_1, cfg.grid_points)),
      table_(first_probs_, first_prior_, second_prior_, first_axis()) {
  true_first_ = first_probs_(cfg_.true_point);
  true_second_ = second_probs_(cfg_.true_point);
  const auto report = bounds_at(model, cfg_.true_point);
  mu_ = report.mu;
  mu_tilde_ = report.mu_tilde;
}

BayesTrace StepwiseBayes::run(std::uint64_t seed) const {
  Rng rng(seed);
  BayesTrace trace;
  trace.mu = mu_;
  trace.mu_tilde = mu_tilde_;

  const bool swapped = first_axis() == 1;
  const std::int64_t m1 = cfg_.first_phase_shots();
  const std::int64_t m2 = cfg_.second_phase_shots();

  auto push_row = [&](std::int64_t shots, Moments first, Moments second) {
    const Moments& p1 = swapped ? second : first;
    const Moments& p2 = swapped ? first : second;
    trace.rows.push_back({shots, p1.mean, p2.mean, p1.variance, p2.variance,
                          static_cast<double>(shots) * (p1.variance + p2.variance), mu_,
                          mu_tilde_});
  };

  const Moments second_prior_moments = posterior_mean_var(second_prior_);
  Moments first_moments = posterior_mean_var(first_prior_);

  try {
    MarginalAccumulator acc(table_);
    for (std::int64_t used = 0; used < m1;) {
      const std::int64_t batch = std::min(cfg_.batch_size, m1 - used);
      acc.add(sample_outcomes(true_first_, batch, rng));
      used += batch;
      const PosteriorGrid post = posterior_update(first_prior_, acc.log_likelihood(second_prior_));
      first_moments = posterior_mean_var(post);
      push_row(used, first_moments, second_prior_moments);
    }

    // conditional table at the frozen phase-1 estimate
    const double frozen = first_moments.mean;
    const std::size_t n = second_prior_.size();
    std::vector<double> log_table;
    std::vector<char> impossible;
    std::size_t outcomes = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = second_prior_.support(j);
      const auto probs = second_probs_(swapped ? ParamPoint{v, frozen} : ParamPoint{frozen, v});
      outcomes = probs.size();
      for (double p : probs) {
        log_table.push_back(safe_log(p));
        impossible.push_back(p <= kLikelihoodFloor);
      }
    }

    std::vector<double> sums(n, 0.0);
    std::vector<char> possible(n, 1);
    for (std::int64_t used = 0; used < m2;) {
      const std::int64_t batch = std::min(cfg_.batch_size, m2 - used);
      const Counts counts = sample_outcomes(true_second_, batch, rng);
      for (std::size_t k = 0; k < outcomes; ++k) {
        if (counts[k] == 0) continue;
        for (std::size_t j = 0; j < n; ++j) {
          sums[j] += static_cast<double>(counts[k]) * log_table[j * outcomes + k];
          if (impossible[j * outcomes + k]) possible[j] = 0;
        }
      }
      used += batch;
      if (std::none_of(possible.begin(), possible.end(), [](char v) { return v != 0; }))
        throw ZeroLikelihood("phase-2 outcomes are impossible on the whole grid");
      const PosteriorGrid post = posterior_update(second_prior_, sums);
      push_row(m1 + used, first_moments, posterior_mean_var(post));
    }
  } catch (const ZeroLikelihood& e) {
    trace.aborted = true;
    trace.error = e.what();
  }
  return trace;
}

BayesTrace run_stepwise_bayes(const ProbeModel& model, const BayesConfig& cfg) {
  return StepwiseBayes(model, cfg).run(cfg.seed);
}

std::vector<BayesTrace> run_seeds(const StepwiseBayes& runner, std::span<const std::uint64_t> seeds,
                                  int threads) {
  std::vector<BayesTrace> traces(seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t i) { traces[i] = runner.run(seeds[i]); });
  return traces;
}

void write_trace_csv(std::ostream& out, const BayesTrace& trace) {
  out << "shots_used,est1,est2,var1,var2,scaled_error,mu,mu_tilde\n";
  for (const auto& r : trace.rows) {
    out << r.shots_used << ',' << format_number(r.est1) << ',' << format_number(r.est2) << ','
        << format_number(r.var1) << ',' << format_number(r.var2) << ','
        << format_number(r.scaled_error) << ',' << format_number(r.mu) << ','
        << format_number(r.mu_tilde) << '\n';
  }
  if (trace.aborted) out << "# aborted: " << trace.error << '\n';
}

}  // namespace stepwise
