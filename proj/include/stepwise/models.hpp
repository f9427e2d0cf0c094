#pragma once

// Probe models: a qubit under a two-axis rotation, the three-level
// Landau-Zener ground state, the mixed-field Ising chain ground state, and a
// squeezed coherent Gaussian probe (analytic QFIM only).

#include "stepwise/fisher.hpp"
#include "stepwise/quantum_core.hpp"

#include <memory>
#include <string>

namespace stepwise {

/// Initial qubit state cos(alpha/2)|0> + e^{i beta} sin(alpha/2)|1>.
/// Construction folds alpha into [0, pi] and beta into [0, 2 pi); the
/// represented ray is unchanged.
class QubitProbeConfig {
 public:
  QubitProbeConfig(double alpha, double beta);
  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }

 private:
  double alpha_;
  double beta_;
};

struct LzConfig {
  double lambda0 = 2.0;
};

/// Periodic chain with J = 1, hx = lambda1, hz = lambda2.
class IsingConfig {
 public:
  static constexpr int kMinLength = 3;
  static constexpr int kMaxLength = 12;

  /// Throws DimensionBudget for length > 12, std::invalid_argument for < 3.
  explicit IsingConfig(int length);
  int length() const noexcept { return length_; }
  std::size_t dim() const noexcept { return std::size_t{1} << length_; }

 private:
  int length_;
};

struct GaussianConfig {
  double alpha_re = 0.0;
  double alpha_im = 0.0;
};

/// e^{-i(lambda1 sx + lambda2 sz)} |psi0>
PureState qubit_state(const QubitProbeConfig& cfg, const ParamPoint& point);

/// [[l0, l1, 0], [l1, 0, l2], [0, l2, -l0]]
HermitianOperator lz_hamiltonian(const LzConfig& cfg, const ParamPoint& point);
ModelEvaluation lz_state(const LzConfig& cfg, const ParamPoint& point);

/// sum_i sx_i sx_{i+1} - sum_i (hx sx_i + hz sz_i), periodic.
HermitianOperator ising_hamiltonian(const IsingConfig& cfg, const ParamPoint& point);
ModelEvaluation ising_state(const IsingConfig& cfg, const ParamPoint& point);

/// QFIM for parameters (phi, r) of R(phi) S(r) |alpha>; independent of phi.
Qfim gaussian_qfim(const GaussianConfig& cfg, double r);

/// Flags a ground state whose gap is below kDegenerateGapFraction of the spectral range.
bool is_degenerate(const GroundState& gs) noexcept;

struct MeasurementPair {
  Povm for_lambda1;
  Povm for_lambda2;
};

/// x basis {|+>, |->} for lambda1, z basis {|0>, |1>} for lambda2.
MeasurementPair qubit_measurements();

/// Projectors on (1,1,0), (1,-1,0), (0,0,1) for lambda1 and
/// (0,1,1), (0,1,-1), (1,0,0) for lambda2.
MeasurementPair lz_measurements();

enum class Axis { X, Z };

/// Eigenspace projectors of sum_i sigma_i^axis, ordered by eigenvalue
/// m = -L, -L+2, ..., L and labelled by m.
Povm magnetization_povm(int length, Axis axis);

/// x magnetization for lambda1 (hx), z magnetization for lambda2 (hz).
MeasurementPair ising_measurements(int length);

/// Common interface of the models that have a state representation.
class ProbeModel {
 public:
  virtual ~ProbeModel() = default;
  virtual ModelEvaluation evaluate(const ParamPoint& point) const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;
  virtual MeasurementPair measurements() const = 0;

  /// Callable view; the model must outlive it.
  StateFn state_fn() const;
};

class QubitModel final : public ProbeModel {
 public:
  explicit QubitModel(QubitProbeConfig cfg) : cfg_(cfg) {}
  ModelEvaluation evaluate(const ParamPoint& point) const override;
  std::size_t dim() const override { return 2; }
  std::string name() const override { return "qubit"; }
  MeasurementPair measurements() const override { return qubit_measurements(); }
  const QubitProbeConfig& config() const noexcept { return cfg_; }

 private:
  QubitProbeConfig cfg_;
};

class LzModel final : public ProbeModel {
 public:
  explicit LzModel(LzConfig cfg) : cfg_(cfg) {}
  ModelEvaluation evaluate(const ParamPoint& point) const override { return lz_state(cfg_, point); }
  std::size_t dim() const override { return 3; }
  std::string name() const override { return "lz"; }
  MeasurementPair measurements() const override { return lz_measurements(); }

 private:
  LzConfig cfg_;
};

/// Keeps the coupling and field terms prebuilt so each evaluation is one
/// matrix combination plus a dense eigensolve.
class IsingModel final : public ProbeModel {
 public:
  explicit IsingModel(IsingConfig cfg);
  ModelEvaluation evaluate(const ParamPoint& point) const override;
  std::size_t dim() const override { return cfg_.dim(); }
  std::string name() const override { return "ising"; }
  MeasurementPair measurements() const override { return ising_measurements(cfg_.length()); }
  const IsingConfig& config() const noexcept { return cfg_; }

 private:
  IsingConfig cfg_;
  Eigen::MatrixXd coupling_;
  Eigen::MatrixXd field_x_;
  Eigen::MatrixXd field_z_;
};

}  // namespace stepwise
