#pragma once

// Scalar precision bounds for joint (JE) and stepwise (SE) two-parameter
// estimation, and the logic choosing between them.
//
// All bounds are in units of M * (sum of variances), i.e. the per-shot
// constants mu, mu', mu''.

#include "stepwise/fisher.hpp"

#include <cmath>
#include <string_view>

namespace stepwise {

enum class Strategy { First1Then2, First2Then1, Joint };
enum class Region { I, II, III };

std::string_view to_string(Strategy s) noexcept;
std::string_view to_string(Region r) noexcept;

/// Relative determinant floor below which a QFIM counts as singular.
inline constexpr double kSingularTolerance = 1e-12;
/// 2 sqrt(2) - 2, the correlation threshold above which SE provably wins.
inline const double kSufficiencyThreshold = 2.0 * std::sqrt(2.0) - 2.0;
inline constexpr double kRegionTolerance = 1e-9;
inline constexpr double kOrderTieTolerance = 1e-12;

/// mu = Tr[Q^-1].
double je_bound(const Qfim& q);

/// mu'(gamma): lambda1 measured first with a fraction gamma of the shots.
double se_bound_lambda1_first(const Qfim& q, double gamma);
/// mu''(gamma): lambda2 measured first.
double se_bound_lambda2_first(const Qfim& q, double gamma);

struct SeOptimum {
  double mu_tilde;
  double gamma_opt;
  Strategy strategy;  ///< First1Then2 or First2Then1
  double mu_prime;       ///< lambda1-first optimum
  double gamma_prime;
  double mu_dblprime;    ///< lambda2-first optimum
  double gamma_dblprime;
};

/// Minimizes A/gamma + B/(1-gamma) for both orders in closed form:
/// gamma* = sqrt(A)/(sqrt(A)+sqrt(B)), value (sqrt(A)+sqrt(B))^2.
SeOptimum optimal_se(const Qfim& q);

struct SufficiencyResult {
  bool satisfied;
  double value;  ///< Q12^2 / (Q11 Q22)
};

/// Strict test value > 2 sqrt(2) - 2.
SufficiencyResult eq7_sufficiency(const Qfim& q);

/// Holevo bound of a D-invariant model, (Q11 + Q22 + 2|delta|) / det.
double hcrb_d_invariant(const Qfim& q, double delta);

/// Largest value over gamma in [0, 1] of
///   f(gamma) = (1-2g)(Q11-Q22) - [g^2 Q22 + (1-g)^2 Q11] + 2g(1-g)|delta| + g Q12^2 Q11 / det,
/// with indices swapped first so that Q11 >= Q22. Negative f_max means the
/// Holevo bound beats every stepwise split.
double fmax_theorem2(const Qfim& q, double delta);

/// f(gamma) itself, in the Q11 >= Q22 orientation (indices swapped if needed).
double theorem2_objective(const Qfim& q, double delta, double gamma);

struct NecessaryCondition {
  bool satisfied;
  double lhs;  ///< Q12^2 / (Q11 Q22)
  double rhs;  ///< (1 - delta^2/(Q11 Q22)) / (1 + |delta|/Q22)
};

/// Necessary condition for SE to beat the D-invariant Holevo bound.
NecessaryCondition se_beats_hcrb_necessary(const Qfim& q, double delta);

struct BoundsReport {
  double mu;
  double mu_prime;
  double mu_dblprime;
  double mu_tilde;
  double gamma_opt;
  Strategy strategy;
  Region region;
  double ratio;
  bool eq7_satisfied;
  double eq7_value;
  bool singular;
};

/// Never throws: singular QFIMs give singular=true with infinite bounds, a NaN
/// gamma_opt and ratio, and eq7_satisfied=false (eq7_value is still reported).
BoundsReport classify_region(const Qfim& q);

}  // namespace stepwise
