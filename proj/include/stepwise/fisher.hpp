#pragma once

// Parameter derivatives of probe states and the information matrices built
// from them.

#include "stepwise/quantum_core.hpp"

#include <functional>
#include <vector>

namespace stepwise {

struct ParamPoint {
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  bool finite() const noexcept;
  double operator[](int axis) const noexcept { return axis == 0 ? lambda1 : lambda2; }
  /// Copy with coordinate `axis` shifted by `delta`.
  ParamPoint shifted(int axis, double delta) const noexcept;
};

/// Symmetric 2x2 information matrix (quantum or classical).
struct Qfim {
  double q11 = 0.0;
  double q12 = 0.0;
  double q22 = 0.0;

  double det() const noexcept { return q11 * q22 - q12 * q12; }
  double trace() const noexcept { return q11 + q22; }
  double min_eigenvalue() const noexcept;
  double max_eigenvalue() const noexcept;
  Qfim scaled(double c) const noexcept { return {c * q11, c * q12, c * q22}; }
};

/// A model state plus whether it sits on a (near-)degenerate ground level.
struct ModelEvaluation {
  PureState state;
  bool degenerate = false;
};

using StateFn = std::function<ModelEvaluation(const ParamPoint&)>;
using ProbabilityFn = std::function<std::vector<double>(const ParamPoint&)>;

/// Wraps a plain state map that never reports degeneracy.
StateFn plain_state_fn(std::function<PureState(const ParamPoint&)> fn);

struct DerivativeBundle {
  PureState psi;
  CVector dpsi1;
  CVector dpsi2;
  bool degenerate_flag = false;
  double step_used = 0.0;
};

inline constexpr double kDefaultStep = 1e-5;
/// Ground states with gap below this fraction of the spectral range are flagged.
inline constexpr double kDegenerateGapFraction = 1e-8;
inline constexpr double kPsdTolerance = 1e-9;
inline constexpr double kDiagonalClamp = 1e-10;
inline constexpr double kProbabilityFloor = 1e-12;

/// Axis step actually used for base step h: h * max(1, |lambda_axis|).
double axis_step(const ParamPoint& point, int axis, double step);

/// Plain central difference (psi(+h) - psi(-h)) / 2h along one axis, with both
/// stencil states phase-aligned against `center`. No extrapolation.
CVector central_difference(const StateFn& fn, const PureState& center, const ParamPoint& point,
                           int axis, double h);

/// Central differences at h and h/2 combined by one Richardson step.
DerivativeBundle state_derivatives(const StateFn& fn, const ParamPoint& point,
                                   double step = kDefaultStep);

Qfim qfim_pure(const DerivativeBundle& bundle);

/// Gauge-invariant Berry curvature scalar 4 Im(<d1|d2> - <d1|psi><psi|d2>).
double uhlmann_delta(const DerivativeBundle& bundle);

/// Classical Fisher information of a measurement from central-difference
/// derivatives of its outcome probabilities.
Qfim classical_fim(const ProbabilityFn& prob_fn, const ParamPoint& point,
                   double step = kDefaultStep);

}  // namespace stepwise
