#include "stepwise/bounds.hpp"

#include "stepwise/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace stepwise {

std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::First1Then2: return "First1Then2";
    case Strategy::First2Then1: return "First2Then1";
    case Strategy::Joint: return "Joint";
  }
  return "?";
}

std::string_view to_string(Region r) noexcept {
  switch (r) {
    case Region::I: return "I";
    case Region::II: return "II";
    case Region::III: return "III";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Returns det after checking the singularity precondition.
double checked_det(const Qfim& q) {
  const double det = q.det();
  if (!(det > 0.0) || !(det > kSingularTolerance * q.q11 * q.q22) || !std::isfinite(det)) {
    const double lo = q.min_eigenvalue();
    const double cond = lo > 0.0 ? q.max_eigenvalue() / lo : kInf;
    throw SingularQfim(det, cond);
  }
  return det;
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw GammaOutOfRange("budget fraction " + std::to_string(gamma) + " outside (0, 1)");
}

struct Optimum {
  double value;
  double gamma;
};

Optimum minimize_split(double a, double b) {
  const double sa = std::sqrt(a);
  const double sb = std::sqrt(b);
  return {(sa + sb) * (sa + sb), sa / (sa + sb)};
}

}  // namespace

double je_bound(const Qfim& q) {
  const double det = checked_det(q);
  return (q.q11 + q.q22) / det;
}

double se_bound_lambda1_first(const Qfim& q, double gamma) {
  check_gamma(gamma);
  const double det = checked_det(q);
  return (q.q22 / det) / gamma + 1.0 / ((1.0 - gamma) * q.q22);
}

double se_bound_lambda2_first(const Qfim& q, double gamma) {
  check_gamma(gamma);
  const double det = checked_det(q);
  return (q.q11 / det) / gamma + 1.0 / ((1.0 - gamma) * q.q11);
}

SeOptimum optimal_se(const Qfim& q) {
  const double det = checked_det(q);
  const Optimum first1 = minimize_split(q.q22 / det, 1.0 / q.q22);
  const Optimum first2 = minimize_split(q.q11 / det, 1.0 / q.q11);

  const double scale = std::max(first1.value, first2.value);
  const bool tie = std::abs(first1.value - first2.value) < kOrderTieTolerance * scale;
  const bool take1 = tie || first1.value < first2.value;
  const Optimum& best = take1 ? first1 : first2;
  return {best.value,    best.gamma,   take1 ? Strategy::First1Then2 : Strategy::First2Then1,
          first1.value, first1.gamma, first2.value,
          first2.gamma};
}

SufficiencyResult eq7_sufficiency(const Qfim& q) {
  if (!(q.q11 > 0.0) || !(q.q22 > 0.0))
    throw DegenerateDiagonal("sufficiency test needs positive diagonal QFIM entries");
  const double value = q.q12 * q.q12 / (q.q11 * q.q22);
  return {value > kSufficiencyThreshold, value};
}

double hcrb_d_invariant(const Qfim& q, double delta) {
  const double det = checked_det(q);
  if (std::abs(delta) > std::sqrt(q.q11 * q.q22) * (1.0 + 1e-8))
    throw DeltaTooLarge("|delta| exceeds sqrt(Q11 Q22)");
  return (q.q11 + q.q22 + 2.0 * std::abs(delta)) / det;
}

namespace {

Qfim oriented(const Qfim& q) {
  return q.q11 >= q.q22 ? q : Qfim{q.q22, q.q12, q.q11};
}

}  // namespace

double theorem2_objective(const Qfim& q_in, double delta, double gamma) {
  const Qfim q = oriented(q_in);
  const double det = checked_det(q);
  const double d = std::abs(delta);
  const double g = gamma;
  return (1.0 - 2.0 * g) * (q.q11 - q.q22) - (g * g * q.q22 + (1.0 - g) * (1.0 - g) * q.q11) +
         2.0 * g * (1.0 - g) * d + g * q.q12 * q.q12 * q.q11 / det;
}

double fmax_theorem2(const Qfim& q_in, double delta) {
  const Qfim q = oriented(q_in);
  const double det = checked_det(q);
  const double d = std::abs(delta);
  // f(g) = -Q22 + b g - a g^2
  const double a = q.q11 + q.q22 + 2.0 * d;
  const double b = 2.0 * q.q22 + 2.0 * d + q.q12 * q.q12 * q.q11 / det;
  const double g_star = b / (2.0 * a);
  if (g_star <= 0.0 || g_star >= 1.0)
    return theorem2_objective(q, delta, std::clamp(g_star, 0.0, 1.0));

  const double q12sq = q.q12 * q.q12;
  const double numerator = q.q11 * q.q11 * q12sq * q12sq +
                           4.0 * q.q11 * det * q12sq * (q.q22 + d) +
                           4.0 * det * det * (d * d - q.q11 * q.q22);
  return numerator / (4.0 * det * det * a);
}

NecessaryCondition se_beats_hcrb_necessary(const Qfim& q, double delta) {
  if (!(q.q11 > 0.0) || !(q.q22 > 0.0))
    throw DegenerateDiagonal("necessary condition needs positive diagonal QFIM entries");
  const double prod = q.q11 * q.q22;
  const double lhs = q.q12 * q.q12 / prod;
  const double rhs = (1.0 - delta * delta / prod) / (1.0 + std::abs(delta) / q.q22);
  return {lhs >= rhs, lhs, rhs};
}

BoundsReport classify_region(const Qfim& q) {
  BoundsReport r{};
  r.eq7_value = kNaN;
  r.eq7_satisfied = false;
  if (q.q11 > 0.0 && q.q22 > 0.0) {
    const auto s = eq7_sufficiency(q);
    r.eq7_value = s.value;
    r.eq7_satisfied = s.satisfied;
  }

  try {
    r.mu = je_bound(q);
  } catch (const SingularQfim&) {
    r.mu = r.mu_prime = r.mu_dblprime = r.mu_tilde = kInf;
    r.gamma_opt = r.ratio = kNaN;
    r.strategy = Strategy::Joint;
    r.region = Region::III;
    r.eq7_satisfied = false;
    r.singular = true;
    return r;
  }

  const SeOptimum se = optimal_se(q);
  r.mu_prime = se.mu_prime;
  r.mu_dblprime = se.mu_dblprime;
  r.mu_tilde = se.mu_tilde;
  r.gamma_opt = se.gamma_opt;
  r.ratio = se.mu_tilde / r.mu;
  r.singular = false;
  if (se.mu_tilde < r.mu * (1.0 - kRegionTolerance)) {
    r.strategy = se.strategy;
    r.region = se.strategy == Strategy::First1Then2 ? Region::I : Region::II;
  } else {
    r.strategy = Strategy::Joint;
    r.region = Region::III;
  }
  return r;
}

}  // namespace stepwise
