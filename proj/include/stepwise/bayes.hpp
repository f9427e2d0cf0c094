#pragma once

// Two-phase sequential Bayesian estimation on discretized posteriors.
//
// Phase 1 spends m1 = ceil(gamma M) shots in the first parameter's basis and
// updates its posterior with a likelihood averaged over the other
// parameter's prior. Phase 2 spends the remaining shots in the second basis
// with the first parameter frozen at its phase-1 posterior mean.

#include "stepwise/bounds.hpp"
#include "stepwise/fisher.hpp"
#include "stepwise/models.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace stepwise {

using Counts = std::vector<std::int64_t>;
using Rng = std::mt19937_64;

inline constexpr double kLikelihoodFloor = 1e-300;
inline constexpr double kWeightTolerance = 1e-12;

/// Probability masses on the midpoints of n equal cells covering [lo, hi].
class PosteriorGrid {
 public:
  /// Weights must be non-negative and sum to 1 within kWeightTolerance.
  PosteriorGrid(double lo, double hi, std::vector<double> weights);
  static PosteriorGrid uniform(double lo, double hi, std::size_t n);
  /// Uniform grid of the given width centred on `center`.
  static PosteriorGrid centered(double center, double width, std::size_t n);
  /// All mass on the support point nearest `value`.
  static PosteriorGrid point_mass(double lo, double hi, std::size_t n, double value);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  std::size_t size() const noexcept { return weights_.size(); }
  double support(std::size_t i) const noexcept;
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  double lo_;
  double hi_;
  std::vector<double> weights_;
};

struct Moments {
  double mean;
  double variance;
};

struct BayesConfig {
  std::int64_t total_shots = 10000;
  double gamma = 0.5;
  std::uint64_t seed = 1;
  std::size_t grid_points = 1000;
  ParamPoint true_point;
  double prior_width_1 = 1.0;
  double prior_width_2 = 1.0;
  Strategy order = Strategy::First1Then2;
  std::int64_t batch_size = 1;

  std::int64_t first_phase_shots() const;
  std::int64_t second_phase_shots() const { return total_shots - first_phase_shots(); }
  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct BayesRow {
  std::int64_t shots_used;
  double est1;
  double est2;
  double var1;
  double var2;
  double scaled_error;
  double mu;
  double mu_tilde;
};

struct BayesTrace {
  std::vector<BayesRow> rows;
  double mu = 0.0;
  double mu_tilde = 0.0;
  bool aborted = false;
  std::string error;
};

/// Draws `count` independent shots, one uniform variate each, and returns
/// the outcome histogram. Splitting a draw into batches consumes the RNG
/// identically.
Counts sample_outcomes(std::span<const double> probs, std::int64_t count, Rng& rng);

/// log p(k | first_i, other_j) over a parameter grid product, floored at kLikelihoodFloor.
class ProbabilityTable {
 public:
  /// `first_axis` (0 or 1) says which model coordinate the first grid scans.
  ProbabilityTable(const ProbabilityFn& prob_fn, const PosteriorGrid& first,
                   const PosteriorGrid& other, int first_axis);

  std::size_t first_size() const noexcept { return n_first_; }
  std::size_t other_size() const noexcept { return n_other_; }
  std::size_t outcomes() const noexcept { return outcomes_; }
  double log_prob(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return log_probs_[(i * n_other_ + j) * outcomes_ + k];
  }

 private:
  std::size_t n_first_;
  std::size_t n_other_;
  std::size_t outcomes_;
  std::vector<double> log_probs_;
};

/// log sum_j prior_j prod_k p(k | first_i, other_j)^{c_k} for each i.
std::vector<double> marginal_log_likelihood(const ProbabilityTable& table, const Counts& counts,
                                            const PosteriorGrid& other_prior);

/// log prod_k p(k | ...)^{c_k} along `grid` for coordinate `axis`, the other
/// coordinate fixed at `fixed_value`.
std::vector<double> conditional_log_likelihood(const ProbabilityFn& prob_fn, const Counts& counts,
                                               const PosteriorGrid& grid, int axis,
                                               double fixed_value);

/// Phase-1 likelihood for lambda1 averaged over the lambda2 prior.
std::vector<double> marginal_likelihood_1(const ProbabilityFn& prob_fn1, const Counts& counts,
                                          const PosteriorGrid& grid1, const PosteriorGrid& grid2);

/// Phase-2 likelihood for lambda2 with lambda1 fixed at its estimate.
std::vector<double> conditional_likelihood_2(const ProbabilityFn& prob_fn2, const Counts& counts,
                                             const PosteriorGrid& grid2, double lambda1_est);

/// weights * exp(loglik - max), renormalized.
PosteriorGrid posterior_update(const PosteriorGrid& grid, std::span<const double> loglik);

Moments posterior_mean_var(const PosteriorGrid& grid);

/// Born probabilities of `povm` on the model state; `model` must outlive the result.
ProbabilityFn measurement_probabilities(const ProbeModel& model, Povm povm);

/// Holds the phase-1 likelihood table so several seeds can share it.
class StepwiseBayes {
 public:
  StepwiseBayes(const ProbeModel& model, BayesConfig cfg);

  /// Deterministic in `seed`. A ZeroLikelihood aborts with the partial trace.
  BayesTrace run(std::uint64_t seed) const;
  const BayesConfig& config() const noexcept { return cfg_; }
  double mu() const noexcept { return mu_; }
  double mu_tilde() const noexcept { return mu_tilde_; }

 private:
  int first_axis() const noexcept { return cfg_.order == Strategy::First2Then1 ? 1 : 0; }

  const ProbeModel& model_;
  BayesConfig cfg_;
  ProbabilityFn first_probs_;
  ProbabilityFn second_probs_;
  PosteriorGrid first_prior_;
  PosteriorGrid second_prior_;
  ProbabilityTable table_;
  std::vector<double> true_first_;
  std::vector<double> true_second_;
  double mu_ = 0.0;
  double mu_tilde_ = 0.0;
};

BayesTrace run_stepwise_bayes(const ProbeModel& model, const BayesConfig& cfg);

/// Independent runs, one per seed, spread over `threads` workers; results in seed order.
std::vector<BayesTrace> run_seeds(const StepwiseBayes& runner, std::span<const std::uint64_t> seeds,
                                  int threads);

/// CSV with columns shots_used,est1,est2,var1,var2,scaled_error,mu,mu_tilde.
void write_trace_csv(std::ostream& out, const BayesTrace& trace);

}  // namespace stepwise
