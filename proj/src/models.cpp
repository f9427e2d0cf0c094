#include "stepwise/models.hpp"

#include "stepwise/errors.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stepwise {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  return r >= period ? 0.0 : r;
}

/// Coupling term and the two field operators of the periodic chain.
void build_ising_terms(int length, Eigen::MatrixXd& coupling, Eigen::MatrixXd& fx,
                       Eigen::MatrixXd& fz) {
  const auto d = Eigen::Index{1} << length;
  coupling = Eigen::MatrixXd::Zero(d, d);
  fx = Eigen::MatrixXd::Zero(d, d);
  fz = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index s = 0; s < d; ++s) {
    for (int i = 0; i < length; ++i) {
      const Eigen::Index bi = Eigen::Index{1} << i;
      const Eigen::Index bj = Eigen::Index{1} << ((i + 1) % length);
      coupling(s ^ bi ^ bj, s) += 1.0;
      fx(s ^ bi, s) += 1.0;
      fz(s, s) += (s & bi) ? -1.0 : 1.0;  // sz|0> = |0>
    }
  }
}

}  // namespace

QubitProbeConfig::QubitProbeConfig(double alpha, double beta) {
  if (!std::isfinite(alpha) || !std::isfinite(beta))
    throw std::invalid_argument("qubit probe angles must be finite");
  double a = wrap(alpha, 2.0 * kPi);
  double b = beta;
  if (a > kPi) {
    // cos((2pi-a)/2) = -cos(a/2): same ray with beta shifted by pi
    a = 2.0 * kPi - a;
    b += kPi;
  }
  alpha_ = a;
  beta_ = wrap(b, 2.0 * kPi);
}

IsingConfig::IsingConfig(int length) : length_(length) {
  if (length > kMaxLength)
    throw DimensionBudget("Ising length " + std::to_string(length) + " exceeds dense budget of " +
                          std::to_string(kMaxLength));
  if (length < kMinLength)
    throw std::invalid_argument("Ising length must be at least 3 for a periodic chain");
}

bool is_degenerate(const GroundState& gs) noexcept {
  return gs.gap < kDegenerateGapFraction * gs.spectral_range;
}

PureState qubit_state(const QubitProbeConfig& cfg, const ParamPoint& point) {
  CVector psi0(2);
  psi0 << std::cos(cfg.alpha() / 2.0),
      std::polar(1.0, cfg.beta()) * std::sin(cfg.alpha() / 2.0);
  CMatrix gen(2, 2);
  gen << point.lambda2, point.lambda1, point.lambda1, -point.lambda2;
  const CMatrix u = unitary_from_generator(HermitianOperator(gen));
  return PureState::normalized(u * psi0);
}

HermitianOperator lz_hamiltonian(const LzConfig& cfg, const ParamPoint& point) {
  Eigen::Matrix3d h;
  h << cfg.lambda0, point.lambda1, 0.0,
       point.lambda1, 0.0, point.lambda2,
       0.0, point.lambda2, -cfg.lambda0;
  return HermitianOperator(Eigen::MatrixXd(h));
}

ModelEvaluation lz_state(const LzConfig& cfg, const ParamPoint& point) {
  auto gs = ground_state(lz_hamiltonian(cfg, point));
  const bool degenerate = is_degenerate(gs);
  return {std::move(gs.state), degenerate};
}

HermitianOperator ising_hamiltonian(const IsingConfig& cfg, const ParamPoint& point) {
  Eigen::MatrixXd coupling, fx, fz;
  build_ising_terms(cfg.length(), coupling, fx, fz);
  return HermitianOperator(Eigen::MatrixXd(coupling - point.lambda1 * fx - point.lambda2 * fz));
}

ModelEvaluation ising_state(const IsingConfig& cfg, const ParamPoint& point) {
  auto gs = ground_state(ising_hamiltonian(cfg, point));
  const bool degenerate = is_degenerate(gs);
  return {std::move(gs.state), degenerate};
}

Qfim gaussian_qfim(const GaussianConfig& cfg, double r) {
  const double re = cfg.alpha_re;
  const double im = cfg.alpha_im;
  const double t = std::tanh(4.0 * r);
  return {8.0 * (re * re + im * im) + 2.0 * t * t,
          -16.0 * re * im * std::cosh(2.0 * r),
          8.0 * std::exp(4.0 * r) * re * re + 8.0 * std::exp(-4.0 * r) * im * im};
}

MeasurementPair qubit_measurements() {
  CVector plus(2), minus(2), zero(2), one(2);
  plus << 1.0, 1.0;
  minus << 1.0, -1.0;
  zero << 1.0, 0.0;
  one << 0.0, 1.0;
  return {Povm::from_vectors({plus, minus}, {"+", "-"}),
          Povm::from_vectors({zero, one}, {"0", "1"})};
}

MeasurementPair lz_measurements() {
  auto vec = [](double a, double b, double c) {
    CVector v(3);
    v << a, b, c;
    return v;
  };
  return {Povm::from_vectors({vec(1, 1, 0), vec(1, -1, 0), vec(0, 0, 1)}),
          Povm::from_vectors({vec(0, 1, 1), vec(0, 1, -1), vec(1, 0, 0)})};
}

Povm magnetization_povm(int length, Axis axis) {
  if (length > IsingConfig::kMaxLength)
    throw DimensionBudget("magnetization POVM length exceeds dense budget");
  if (length < IsingConfig::kMinLength)
    throw std::invalid_argument("magnetization POVM needs at least 3 sites");

  BasisGrouping g;
  g.qubits = length;
  g.outcomes = length + 1;
  g.hadamard_rotated = axis == Axis::X;
  const std::size_t d = std::size_t{1} << length;
  g.outcome_of_basis_state.resize(d);
  // m = L - 2 w for Hamming weight w; outcome index k has m = -L + 2k
  for (std::size_t s = 0; s < d; ++s)
    g.outcome_of_basis_state[s] = length - std::popcount(s);

  std::vector<std::string> labels;
  for (int k = 0; k <= length; ++k) labels.push_back(std::to_string(-length + 2 * k));
  return Povm(std::move(g), std::move(labels));
}

MeasurementPair ising_measurements(int length) {
  return {magnetization_povm(length, Axis::X), magnetization_povm(length, Axis::Z)};
}

StateFn ProbeModel::state_fn() const {
  return [this](const ParamPoint& p) { return evaluate(p); };
}

ModelEvaluation QubitModel::evaluate(const ParamPoint& point) const {
  return {qubit_state(cfg_, point), false};
}

IsingModel::IsingModel(IsingConfig cfg) : cfg_(cfg) {
  build_ising_terms(cfg_.length(), coupling_, field_x_, field_z_);
}

ModelEvaluation IsingModel::evaluate(const ParamPoint& point) const {
  auto gs = ground_state(HermitianOperator(
      Eigen::MatrixXd(coupling_ - point.lambda1 * field_x_ - point.lambda2 * field_z_)));
  const bool degenerate = is_degenerate(gs);
  return {std::move(gs.state), degenerate};
}

}  // namespace stepwise
