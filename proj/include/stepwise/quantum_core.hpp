#pragma once

// Dense linear algebra for small Hilbert spaces: states, Hermitian
// operators, eigensolvers, unitary evolution and measurements.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace stepwise {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kNormTolerance = 1e-12;
inline constexpr double kHermiticityTolerance = 1e-12;
inline constexpr double kPovmTolerance = 1e-10;
inline constexpr double kOverlapFloor = 1e-14;
inline constexpr double kProbabilityClamp = 1e-12;

/// Unit-norm amplitude vector of dimension >= 2.
class PureState {
 public:
  /// Throws InvalidState unless the norm is 1 within kNormTolerance.
  explicit PureState(CVector amplitudes);

  /// Rescales to unit norm; throws InvalidState for a zero vector.
  static PureState normalized(CVector amplitudes);

  const CVector& amplitudes() const noexcept { return amplitudes_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(amplitudes_.size()); }
  Complex operator[](std::size_t i) const { return amplitudes_(static_cast<Eigen::Index>(i)); }

  /// <this|other>
  Complex overlap(const PureState& other) const;

 private:
  CVector amplitudes_;
};

class HermitianOperator {
 public:
  /// Throws NonHermitianInput if any |A_ij - conj(A_ji)| exceeds kHermiticityTolerance.
  explicit HermitianOperator(CMatrix entries);
  explicit HermitianOperator(const Eigen::MatrixXd& real_entries);

  const CMatrix& entries() const noexcept { return entries_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  /// True when every imaginary part is exactly zero.
  bool is_real() const noexcept { return real_; }

  HermitianOperator operator-() const;

 private:
  CMatrix entries_;
  bool real_ = false;
};

struct EigenPair {
  double value;
  PureState vector;
};

struct GroundState {
  double energy;
  PureState state;
  /// Second eigenvalue minus the lowest; zero for a degenerate ground level.
  double gap;
  /// Largest minus smallest eigenvalue.
  double spectral_range;
};

/// Projective measurement given by grouping computational-basis states,
/// optionally after a Hadamard on every qubit. Probabilities never touch
/// the full projectors.
struct BasisGrouping {
  std::vector<int> outcome_of_basis_state;
  int outcomes = 0;
  int qubits = 0;
  bool hadamard_rotated = false;
};

/// Positive operator-valued measure. Either explicit effects or a basis grouping.
class Povm {
 public:
  /// Validates PSD (min eigenvalue >= -kPovmTolerance) and completeness.
  Povm(std::vector<CMatrix> effects, std::vector<std::string> labels);
  Povm(BasisGrouping grouping, std::vector<std::string> labels);

  /// Projectors onto the normalized vectors.
  static Povm from_vectors(const std::vector<CVector>& vectors,
                           std::vector<std::string> labels = {});

  std::size_t outcomes() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  /// Dense matrix of effect k. Grouped POVMs materialize it only for dim <= 256.
  CMatrix effect(std::size_t k) const;

  bool is_grouping() const noexcept { return std::holds_alternative<BasisGrouping>(repr_); }
  const BasisGrouping* grouping() const noexcept { return std::get_if<BasisGrouping>(&repr_); }
  const std::vector<CMatrix>* effects() const noexcept {
    return std::get_if<std::vector<CMatrix>>(&repr_);
  }

 private:
  std::variant<std::vector<CMatrix>, BasisGrouping> repr_;
  std::vector<std::string> labels_;
  std::size_t dim_ = 0;
};

inline constexpr std::size_t kMaxMaterializedDim = 256;

/// Full spectrum, ascending, with each eigenvector's largest-magnitude
/// component made real positive (ties go to the lowest index).
std::vector<EigenPair> eigendecompose(const HermitianOperator& op);

GroundState ground_state(const HermitianOperator& op);

/// exp(-i gen) through the eigendecomposition of gen.
CMatrix unitary_from_generator(const HermitianOperator& gen);

/// Born-rule probabilities Tr[Pi_k |psi><psi|]. Roundoff negatives down to
/// -kProbabilityClamp are clamped and the vector renormalized.
std::vector<double> born_probabilities(const PureState& state, const Povm& povm);

/// Multiplies state by the phase that makes <reference|state> real positive.
PureState phase_align(const PureState& reference, const PureState& state);

/// In-place Walsh-Hadamard transform on 2^qubits amplitudes (normalized).
void hadamard_all(CVector& amplitudes, int qubits);

}  // namespace stepwise
