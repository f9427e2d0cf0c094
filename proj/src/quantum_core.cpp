#include "stepwise/quantum_core.hpp"

#include "stepwise/errors.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace stepwise {

namespace {

void fix_phase(CVector& v) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) best = std::max(best, std::abs(v(i)));
  // lowest index among (near-)ties
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) >= best - 1e-12) {
      v *= std::conj(v(i)) / std::abs(v(i));
      v(i) = Complex(std::abs(v(i)), 0.0);
      return;
    }
  }
}

}  // namespace

PureState::PureState(CVector amplitudes) : amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() < 2) throw InvalidState("state dimension must be at least 2");
  const double norm = amplitudes_.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > kNormTolerance)
    throw InvalidState("state norm " + std::to_string(norm) + " differs from 1");
}

PureState PureState::normalized(CVector amplitudes) {
  const double norm = amplitudes.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw InvalidState("cannot normalize a zero vector");
  amplitudes /= norm;
  return PureState(std::move(amplitudes));
}

Complex PureState::overlap(const PureState& other) const {
  if (other.dim() != dim()) throw DimensionMismatch("overlap of states with different dimensions");
  return amplitudes_.dot(other.amplitudes_);
}

HermitianOperator::HermitianOperator(CMatrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) throw DimensionMismatch("operator must be square");
  const double dev = (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
  if (!(dev <= kHermiticityTolerance))
    throw NonHermitianInput("operator deviates from Hermitian by " + std::to_string(dev));
  real_ = entries_.imag().cwiseAbs().maxCoeff() == 0.0;
}

HermitianOperator::HermitianOperator(const Eigen::MatrixXd& real_entries)
    : HermitianOperator(CMatrix(real_entries.cast<Complex>())) {}

HermitianOperator HermitianOperator::operator-() const {
  return HermitianOperator(CMatrix(-entries_));
}

Povm::Povm(std::vector<CMatrix> effects, std::vector<std::string> labels)
    : labels_(std::move(labels)) {
  if (effects.empty()) throw InvalidPovm("POVM needs at least one effect");
  dim_ = static_cast<std::size_t>(effects.front().rows());
  if (labels_.empty())
    for (std::size_t k = 0; k < effects.size(); ++k) labels_.push_back(std::to_string(k));
  if (labels_.size() != effects.size()) throw InvalidPovm("label count differs from effect count");

  CMatrix total = CMatrix::Zero(effects.front().rows(), effects.front().cols());
  for (const auto& e : effects) {
    if (static_cast<std::size_t>(e.rows()) != dim_ || e.rows() != e.cols())
      throw DimensionMismatch("POVM effects must share one square shape");
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(e, Eigen::EigenvaluesOnly);
    if (solver.eigenvalues().minCoeff() < -kPovmTolerance)
      throw InvalidPovm("POVM effect is not positive semidefinite");
    total += e;
  }
  const CMatrix id = CMatrix::Identity(total.rows(), total.cols());
  if ((total - id).cwiseAbs().maxCoeff() > kPovmTolerance)
    throw InvalidPovm("POVM effects do not sum to identity");
  repr_ = std::move(effects);
}

Povm::Povm(BasisGrouping grouping, std::vector<std::string> labels) : labels_(std::move(labels)) {
  dim_ = grouping.outcome_of_basis_state.size();
  if (grouping.qubits <= 0 || dim_ != (std::size_t{1} << grouping.qubits))
    throw InvalidPovm("basis grouping must cover 2^qubits states");
  if (labels_.size() != static_cast<std::size_t>(grouping.outcomes))
    throw InvalidPovm("label count differs from outcome count");
  for (int k : grouping.outcome_of_basis_state)
    if (k < 0 || k >= grouping.outcomes) throw InvalidPovm("basis state mapped to unknown outcome");
  repr_ = std::move(grouping);
}

Povm Povm::from_vectors(const std::vector<CVector>& vectors, std::vector<std::string> labels) {
  std::vector<CMatrix> effects;
  effects.reserve(vectors.size());
  for (const auto& v : vectors) {
    const CVector u = v / v.norm();
    effects.push_back(u * u.adjoint());
  }
  return Povm(std::move(effects), std::move(labels));
}

CMatrix Povm::effect(std::size_t k) const {
  if (k >= outcomes()) throw std::out_of_range("POVM effect index");
  if (const auto* e = effects()) return (*e)[k];

  const auto& g = *grouping();
  if (dim_ > kMaxMaterializedDim)
    throw DimensionBudget("refusing to materialize a " + std::to_string(dim_) + "-dim projector");
  const auto d = static_cast<Eigen::Index>(dim_);
  CMatrix diag = CMatrix::Zero(d, d);
  for (Eigen::Index s = 0; s < d; ++s)
    if (g.outcome_of_basis_state[static_cast<std::size_t>(s)] == static_cast<int>(k))
      diag(s, s) = 1.0;
  if (!g.hadamard_rotated) return diag;
  // H^{(x)L} is real symmetric and self-inverse.
  CMatrix hadamard = CMatrix::Identity(d, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    CVector col = hadamard.col(c);
    hadamard_all(col, g.qubits);
    hadamard.col(c) = col;
  }
  return hadamard * diag * hadamard;
}

std::vector<EigenPair> eigendecompose(const HermitianOperator& op) {
  const auto d = static_cast<Eigen::Index>(op.dim());
  Eigen::VectorXd values;
  CMatrix vectors;
  // QL iteration occasionally stalls; an identity shift changes the rounding
  // but not the eigenvectors.
  const double norm = op.entries().cwiseAbs().maxCoeff();
  bool solved = false;
  for (double shift : {0.0, 0.5, -0.75, 1.25}) {
    const double s = shift * (norm + 1.0);
    if (op.is_real()) {
      const Eigen::MatrixXd m =
          op.entries().real() + s * Eigen::MatrixXd::Identity(d, d);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
      if (solver.info() != Eigen::Success) continue;
      values = solver.eigenvalues().array() - s;
      vectors = solver.eigenvectors().cast<Complex>();
    } else {
      const CMatrix m = op.entries() + s * CMatrix::Identity(d, d);
      Eigen::SelfAdjointEigenSolver<CMatrix> solver(m);
      if (solver.info() != Eigen::Success) continue;
      values = solver.eigenvalues().array() - s;
      vectors = solver.eigenvectors();
    }
    solved = true;
    break;
  }
  if (!solved) throw Error("eigensolver failed to converge");

  std::vector<EigenPair> pairs;
  pairs.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index k = 0; k < d; ++k) {
    CVector v = vectors.col(k);
    fix_phase(v);
    pairs.push_back({values(k), PureState::normalized(std::move(v))});
  }
  return pairs;
}

GroundState ground_state(const HermitianOperator& op) {
  auto pairs = eigendecompose(op);
  const double gap = pairs.size() > 1 ? std::max(0.0, pairs[1].value - pairs[0].value) : 0.0;
  const double range = pairs.back().value - pairs.front().value;
  return {pairs.front().value, std::move(pairs.front().vector), gap, range};
}

CMatrix unitary_from_generator(const HermitianOperator& gen) {
  const auto pairs = eigendecompose(gen);
  const auto d = static_cast<Eigen::Index>(gen.dim());
  CMatrix u = CMatrix::Zero(d, d);
  for (const auto& p : pairs) {
    const CVector& v = p.vector.amplitudes();
    u += std::exp(Complex(0.0, -p.value)) * (v * v.adjoint());
  }
  return u;
}

void hadamard_all(CVector& amplitudes, int qubits) {
  const Eigen::Index n = amplitudes.size();
  const double scale = 1.0 / std::sqrt(2.0);
  for (int q = 0; q < qubits; ++q) {
    const Eigen::Index bit = Eigen::Index{1} << q;
    for (Eigen::Index s = 0; s < n; ++s) {
      if (s & bit) continue;
      const Complex a = amplitudes(s);
      const Complex b = amplitudes(s | bit);
      amplitudes(s) = (a + b) * scale;
      amplitudes(s | bit) = (a - b) * scale;
    }
  }
}

std::vector<double> born_probabilities(const PureState& state, const Povm& povm) {
  if (state.dim() != povm.dim())
    throw DimensionMismatch("state dimension " + std::to_string(state.dim()) +
                            " differs from POVM dimension " + std::to_string(povm.dim()));
  std::vector<double> probs(povm.outcomes(), 0.0);

  if (const auto* g = povm.grouping()) {
    CVector amps = state.amplitudes();
    if (g->hadamard_rotated) hadamard_all(amps, g->qubits);
    for (Eigen::Index s = 0; s < amps.size(); ++s)
      probs[static_cast<std::size_t>(g->outcome_of_basis_state[static_cast<std::size_t>(s)])] +=
          std::norm(amps(s));
  } else {
    const CVector& psi = state.amplitudes();
    const auto& effects = *povm.effects();
    for (std::size_t k = 0; k < effects.size(); ++k)
      probs[k] = psi.dot(effects[k] * psi).real();
  }

  double total = 0.0;
  for (double& p : probs) {
    if (p < -kProbabilityClamp)
      throw NegativeProbability("Born probability " + std::to_string(p) + " below roundoff floor");
    p = std::max(p, 0.0);
    total += p;
  }
  for (double& p : probs) p /= total;
  return probs;
}

PureState phase_align(const PureState& reference, const PureState& state) {
  const Complex ov = reference.overlap(state);
  const double mag = std::abs(ov);
  if (!(mag > kOverlapFloor)) throw OrthogonalStates("phase alignment against an orthogonal state");
  CVector aligned = state.amplitudes() * (std::conj(ov) / mag);
  return PureState::normalized(std::move(aligned));
}

}  // namespace stepwise
