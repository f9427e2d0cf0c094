#include "stepwise/fisher.hpp"

#include "stepwise/errors.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>

namespace stepwise {

bool ParamPoint::finite() const noexcept {
  return std::isfinite(lambda1) && std::isfinite(lambda2);
}

ParamPoint ParamPoint::shifted(int axis, double delta) const noexcept {
  ParamPoint p = *this;
  (axis == 0 ? p.lambda1 : p.lambda2) += delta;
  return p;
}

double Qfim::min_eigenvalue() const noexcept {
  const double half_tr = 0.5 * (q11 + q22);
  const double disc = std::hypot(0.5 * (q11 - q22), q12);
  return half_tr - disc;
}

double Qfim::max_eigenvalue() const noexcept {
  const double half_tr = 0.5 * (q11 + q22);
  const double disc = std::hypot(0.5 * (q11 - q22), q12);
  return half_tr + disc;
}

StateFn plain_state_fn(std::function<PureState(const ParamPoint&)> fn) {
  return [fn = std::move(fn)](const ParamPoint& p) { return ModelEvaluation{fn(p), false}; };
}

double axis_step(const ParamPoint& point, int axis, double step) {
  return step * std::max(1.0, std::abs(point[axis]));
}

namespace {

ModelEvaluation evaluate(const StateFn& fn, const ParamPoint& p) {
  try {
    return fn(p);
  } catch (const std::exception& e) {
    throw StencilFailure(std::string("stencil evaluation failed: ") + e.what());
  }
}

struct Stencil {
  std::optional<CVector> aligned;  // nullopt when orthogonal to the center
  bool degenerate = false;
};

Stencil stencil_state(const StateFn& fn, const PureState& center, const ParamPoint& point,
                      int axis, double offset) {
  const auto e = evaluate(fn, point.shifted(axis, offset));
  try {
    return {phase_align(center, e.state).amplitudes(), e.degenerate};
  } catch (const OrthogonalStates&) {
    return {std::nullopt, e.degenerate};
  }
}

/// Richardson-combined central difference; falls back to a one-sided
/// difference on whichever side still overlaps the center.
CVector axis_derivative(const StateFn& fn, const PureState& center, const ParamPoint& point,
                        int axis, double h, bool& degenerate) {
  const Stencil plus = stencil_state(fn, center, point, axis, h);
  const Stencil minus = stencil_state(fn, center, point, axis, -h);
  const Stencil half_plus = stencil_state(fn, center, point, axis, 0.5 * h);
  const Stencil half_minus = stencil_state(fn, center, point, axis, -0.5 * h);
  for (const Stencil* s : {&plus, &minus, &half_plus, &half_minus})
    degenerate = degenerate || s->degenerate || !s->aligned;

  const CVector& psi = center.amplitudes();
  if (plus.aligned && minus.aligned && half_plus.aligned && half_minus.aligned) {
    const CVector coarse = (*plus.aligned - *minus.aligned) / (2.0 * h);
    const CVector fine = (*half_plus.aligned - *half_minus.aligned) / h;
    return (4.0 * fine - coarse) / 3.0;
  }
  if (plus.aligned && minus.aligned) return (*plus.aligned - *minus.aligned) / (2.0 * h);
  if (half_plus.aligned && half_minus.aligned) return (*half_plus.aligned - *half_minus.aligned) / h;
  for (double sign : {1.0, -1.0}) {
    const Stencil& near = sign > 0 ? half_plus : half_minus;
    const Stencil& far = sign > 0 ? plus : minus;
    if (near.aligned && far.aligned)
      return sign * (-3.0 * psi + 4.0 * *near.aligned - *far.aligned) / h;
    if (near.aligned) return sign * (*near.aligned - psi) / (0.5 * h);
    if (far.aligned) return sign * (*far.aligned - psi) / h;
  }
  throw StencilFailure("every stencil state along axis " + std::to_string(axis + 1) +
                       " is orthogonal to the center state");
}

}  // namespace

CVector central_difference(const StateFn& fn, const PureState& center, const ParamPoint& point,
                           int axis, double h) {
  const auto plus = evaluate(fn, point.shifted(axis, h));
  const auto minus = evaluate(fn, point.shifted(axis, -h));
  return (phase_align(center, plus.state).amplitudes() -
          phase_align(center, minus.state).amplitudes()) /
         (2.0 * h);
}

DerivativeBundle state_derivatives(const StateFn& fn, const ParamPoint& point, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("differentiation step must be positive");
  if (!point.finite()) throw std::invalid_argument("parameter point must be finite");

  const auto center = evaluate(fn, point);
  bool degenerate = center.degenerate;
  CVector derivs[2];
  for (int axis = 0; axis < 2; ++axis)
    derivs[axis] = axis_derivative(fn, center.state, point, axis, axis_step(point, axis, step),
                                   degenerate);
  return {center.state, std::move(derivs[0]), std::move(derivs[1]), degenerate, step};
}

Qfim qfim_pure(const DerivativeBundle& b) {
  const CVector& psi = b.psi.amplitudes();
  if (b.dpsi1.size() != psi.size() || b.dpsi2.size() != psi.size())
    throw DimensionMismatch("derivative vectors must match the state dimension");
  const Complex c1 = psi.dot(b.dpsi1);  // <psi|d1>
  const Complex c2 = psi.dot(b.dpsi2);
  auto element = [&](const CVector& di, Complex ci, const CVector& dj, Complex cj) {
    // <di|psi> = conj(<psi|di>)
    return 4.0 * (di.dot(dj) - std::conj(ci) * cj).real();
  };
  Qfim q{element(b.dpsi1, c1, b.dpsi1, c1), element(b.dpsi1, c1, b.dpsi2, c2),
         element(b.dpsi2, c2, b.dpsi2, c2)};
  if (q.q11 < 0.0 && q.q11 >= -kDiagonalClamp) q.q11 = 0.0;
  if (q.q22 < 0.0 && q.q22 >= -kDiagonalClamp) q.q22 = 0.0;
  return q;
}

double uhlmann_delta(const DerivativeBundle& b) {
  const CVector& psi = b.psi.amplitudes();
  const Complex c1 = psi.dot(b.dpsi1);
  const Complex c2 = psi.dot(b.dpsi2);
  return 4.0 * (b.dpsi1.dot(b.dpsi2) - std::conj(c1) * c2).imag();
}

namespace {

std::vector<double> checked_probs(const ProbabilityFn& fn, const ParamPoint& p) {
  auto probs = fn(p);
  for (double v : probs)
    if (v < -kProbabilityClamp)
      throw NegativeProbability("stencil probability " + std::to_string(v) + " is negative");
  return probs;
}

std::vector<double> prob_difference(const ProbabilityFn& fn, const ParamPoint& point, int axis,
                                    double h, std::size_t outcomes) {
  const auto plus = checked_probs(fn, point.shifted(axis, h));
  const auto minus = checked_probs(fn, point.shifted(axis, -h));
  if (plus.size() != outcomes || minus.size() != outcomes)
    throw DimensionMismatch("probability vectors change length across the stencil");
  std::vector<double> d(outcomes);
  for (std::size_t k = 0; k < outcomes; ++k) d[k] = (plus[k] - minus[k]) / (2.0 * h);
  return d;
}

}  // namespace

Qfim classical_fim(const ProbabilityFn& prob_fn, const ParamPoint& point, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("differentiation step must be positive");
  const auto center = checked_probs(prob_fn, point);
  const std::size_t k_out = center.size();

  std::vector<double> dp[2];
  for (int axis = 0; axis < 2; ++axis) {
    const double h = axis_step(point, axis, step);
    const auto coarse = prob_difference(prob_fn, point, axis, h, k_out);
    const auto fine = prob_difference(prob_fn, point, axis, 0.5 * h, k_out);
    dp[axis].resize(k_out);
    for (std::size_t k = 0; k < k_out; ++k) dp[axis][k] = (4.0 * fine[k] - coarse[k]) / 3.0;
  }

  // p (d_i ln p)(d_j ln p) = d_i p d_j p / p
  Qfim f;
  for (std::size_t k = 0; k < k_out; ++k) {
    const double p = center[k];
    if (p < kProbabilityFloor) continue;
    f.q11 += dp[0][k] * dp[0][k] / p;
    f.q12 += dp[0][k] * dp[1][k] / p;
    f.q22 += dp[1][k] * dp[1][k] / p;
  }
  return f;
}

}  // namespace stepwise
