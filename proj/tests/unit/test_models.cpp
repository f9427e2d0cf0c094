#include "stepwise/bounds.hpp"
#include "stepwise/errors.hpp"
#include "stepwise/models.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace stepwise;

namespace {

constexpr double kPi = std::numbers::pi;
const Complex I{0.0, 1.0};

void check_projective(const Povm& povm) {
  const auto d = static_cast<Eigen::Index>(povm.dim());
  CMatrix total = CMatrix::Zero(d, d);
  for (std::size_t k = 0; k < povm.outcomes(); ++k) {
    const CMatrix e = povm.effect(k);
    total += e;
    CHECK((e * e - e).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((e - e.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(Eigen::SelfAdjointEigenSolver<CMatrix>(e).eigenvalues().minCoeff() >= -1e-10);
  }
  CHECK((total - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-10);
}

// Cyclic shift of the computational basis: site i -> i + 1 (mod L).
Eigen::MatrixXd shift_operator(int length) {
  const int dim = 1 << length;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(dim, dim);
  for (int s = 0; s < dim; ++s) {
    const int rotated = ((s << 1) | (s >> (length - 1))) & (dim - 1);
    t(rotated, s) = 1.0;
  }
  return t;
}

// All spins along +z: computational basis state 0 under bit 0 -> sigma_z = +1.
PureState all_up(int length) {
  CVector v = CVector::Zero(1 << length);
  v(0) = 1.0;
  return PureState(v);
}

Qfim pipeline_qfim(const ProbeModel& m, const ParamPoint& p) {
  return qfim_pure(state_derivatives(m.state_fn(), p));
}

}  // namespace

TEST_CASE("QubitProbeConfig normalizes angles without changing the ray") {
  const QubitProbeConfig a(-kPi / 4, 0.5);
  CHECK(a.alpha() == doctest::Approx(kPi / 4));
  CHECK(a.beta() == doctest::Approx(0.5 + kPi));
  const QubitProbeConfig b(kPi / 3, -1.0);
  CHECK(b.beta() == doctest::Approx(2 * kPi - 1.0));
  for (const auto& [alpha, beta] : {std::pair{-kPi / 4, 0.5}, {5.0, 7.0}, {kPi / 3, -1.0}}) {
    const auto raw = PureState::normalized(
        (CVector(2) << std::cos(alpha / 2), std::polar(1.0, beta) * std::sin(alpha / 2)).finished());
    const auto folded = qubit_state(QubitProbeConfig(alpha, beta), {0, 0});
    CHECK(std::abs(std::abs(raw.overlap(folded)) - 1.0) < 1e-12);
  }
}

TEST_CASE("qubit_state") {
  const QubitProbeConfig cfg(kPi / 4, 3 * kPi / 8);
  const auto psi0 = qubit_state(cfg, {0, 0});
  CHECK(std::abs(psi0[0] - Complex(std::cos(kPi / 8))) < 1e-14);
  CHECK(std::abs(psi0[1] - std::polar(std::sin(kPi / 8), 3 * kPi / 8)) < 1e-14);

  const auto flipped = qubit_state(QubitProbeConfig(0, 0), {kPi / 2, 0});
  CHECK(std::abs(flipped[0]) < 1e-12);
  CHECK(std::abs(flipped[1] + I) < 1e-12);

  const Qfim q = pipeline_qfim(QubitModel(cfg), {0.5, 0.5});
  CHECK(q.min_eigenvalue() >= -1e-9 * q.trace());
  const auto report = classify_region(q);
  CHECK(report.eq7_value == doctest::Approx(0.00667490907977).epsilon(1e-6));
  CHECK_FALSE(report.eq7_satisfied);
}

TEST_CASE("LZ Hamiltonian and ground state") {
  const LzConfig cfg{2.0};
  const auto h0 = lz_hamiltonian(cfg, {0, 0});
  CHECK((h0.entries() - CMatrix(Eigen::Vector3cd(2, 0, -2).asDiagonal())).norm() == 0.0);
  for (const auto& p : {ParamPoint{0.3, -0.2}, ParamPoint{3.5, 1.25}})
    CHECK(lz_hamiltonian(cfg, p).entries()(0, 2) == Complex(0));
  CHECK(lz_hamiltonian(cfg, {1.0, 2.0}).is_real());

  const auto gs0 = lz_state(cfg, {0, 0});
  CHECK(std::abs(gs0.state[2] - Complex(1)) < 1e-14);
  CHECK_FALSE(gs0.degenerate);

  const auto crossing = ground_state(lz_hamiltonian(cfg, {2 * std::numbers::sqrt2, 0}));
  CHECK(crossing.energy == doctest::Approx(-2));
  CHECK(crossing.gap < 1e-10);
  CHECK(lz_state(cfg, {2 * std::numbers::sqrt2, 0}).degenerate);

  const auto s = lz_state(cfg, {3.5, 1.25});
  CHECK(s.state.amplitudes().imag().cwiseAbs().maxCoeff() < 1e-12);
  const Qfim q = pipeline_qfim(LzModel(cfg), {3.5, 1.25});
  CHECK(std::isfinite(q.q11));
  CHECK(std::isfinite(q.q12));
  CHECK(std::isfinite(q.q22));
}

TEST_CASE("Ising Hamiltonian structure") {
  CHECK_THROWS_AS(IsingConfig(13), DimensionBudget);
  CHECK_THROWS_AS(IsingConfig(2), std::invalid_argument);
  CHECK(IsingConfig(5).dim() == 32);

  SUBCASE("pure coupling") {
    // odd rings are frustrated: traceless, but the spectrum is {-1 x6, 3 x2}
    const auto odd = eigendecompose(ising_hamiltonian(IsingConfig(3), {0, 0}));
    double trace = 0.0;
    for (const auto& e : odd) trace += e.value;
    CHECK(std::abs(trace) < 1e-12);
    CHECK(odd.front().value == doctest::Approx(-1));
    CHECK(odd[5].value == doctest::Approx(-1));
    CHECK(odd[6].value == doctest::Approx(3));
    const auto even = eigendecompose(ising_hamiltonian(IsingConfig(4), {0, 0}));
    for (std::size_t k = 0; k < even.size(); ++k)
      CHECK(even[k].value == doctest::Approx(-even[even.size() - 1 - k].value));
  }
  SUBCASE("translation invariance") {
    for (int length : {3, 4, 5}) {
      const Eigen::MatrixXd t = shift_operator(length);
      const CMatrix h = ising_hamiltonian(IsingConfig(length), {0.7, 0.3}).entries();
      CHECK((h * t.cast<Complex>() - t.cast<Complex>() * h).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  SUBCASE("strong longitudinal field") {
    const auto gs = ground_state(ising_hamiltonian(IsingConfig(4), {0, 10}));
    // second-order shift: each bond flips two aligned spins at cost 4 hz
    CHECK(gs.energy == doctest::Approx(-40.0 - 4.0 / 40.0).epsilon(1e-4));
    // first-order admixture: L bonds, amplitude 1/(4 hz) each
    CHECK(std::norm(all_up(4).overlap(gs.state)) == doctest::Approx(1.0 - 4.0 / 1600.0).epsilon(1e-4));
  }
  SUBCASE("model prebuilt terms match the direct Hamiltonian") {
    const IsingModel model(IsingConfig(5));
    const ParamPoint p{1.2, -0.4};
    const auto direct = ground_state(ising_hamiltonian(IsingConfig(5), p));
    CHECK(std::abs(std::abs(direct.state.overlap(model.evaluate(p).state)) - 1.0) < 1e-10);
  }
}

TEST_CASE("Ising ground states") {
  for (int length : {3, 6}) {
    const auto s = ising_state(IsingConfig(length), {0, 10});
    CHECK(std::norm(all_up(length).overlap(s.state)) > 0.99);
  }
  const IsingModel six(IsingConfig(6));
  const Qfim q = pipeline_qfim(six, {1.5, 0.1});
  CHECK(std::isfinite(q.q11));
  CHECK(std::isfinite(q.q22));
  CHECK(six.evaluate({1.5, 0.1}).state.amplitudes().imag().cwiseAbs().maxCoeff() < 1e-12);
  const auto near_critical = classify_region(pipeline_qfim(six, {1.9, 0.28}));
  CHECK(near_critical.ratio < 1.0);
  // sits just under the sufficiency threshold 0.8284 at this length
  CHECK(near_critical.eq7_value == doctest::Approx(0.827567).epsilon(1e-5));
}

TEST_CASE("gaussian_qfim") {
  auto q = gaussian_qfim({1.3, 0.0}, 0.7);
  CHECK(q.q12 == 0.0);
  q = gaussian_qfim({0.0, 0.0}, 0.0);
  CHECK(q.q11 == 0.0);
  CHECK(q.q22 == 0.0);
  const double s = 1 / std::numbers::sqrt2;
  q = gaussian_qfim({s, s}, 0.0);
  CHECK(q.q11 == doctest::Approx(8));
  CHECK(q.q12 == doctest::Approx(-8));
  CHECK(q.q22 == doctest::Approx(8));
  CHECK(classify_region(q).singular);

  for (double re : {-1.0, 0.2, 1.5}) {
    for (double im : {-0.3, 0.0, 0.8}) {
      for (double r : {0.0, 0.5, 1.0}) {
        const Qfim g = gaussian_qfim({re, im}, r);
        CHECK(g.q11 >= 0.0);
        CHECK(g.q22 >= 0.0);
        CHECK(g.det() >= -1e-9 * g.q11 * g.q22);
        CHECK(g.q11 == doctest::Approx(8 * (re * re + im * im) + 2 * std::pow(std::tanh(4 * r), 2)));
      }
    }
  }
}

TEST_CASE("fixed measurements are valid projective POVMs") {
  const auto q = qubit_measurements();
  check_projective(q.for_lambda1);
  check_projective(q.for_lambda2);
  const auto lz = lz_measurements();
  check_projective(lz.for_lambda1);
  check_projective(lz.for_lambda2);
  for (int length : {3, 4}) {
    check_projective(magnetization_povm(length, Axis::Z));
    check_projective(magnetization_povm(length, Axis::X));
  }
}

TEST_CASE("magnetization_povm") {
  const Povm z3 = magnetization_povm(3, Axis::Z);
  REQUIRE(z3.outcomes() == 4);
  const std::vector<std::string> labels{"-3", "-1", "1", "3"};
  CHECK(z3.labels() == labels);
  int ranks[4];
  for (std::size_t k = 0; k < 4; ++k)
    ranks[k] = static_cast<int>(std::lround(z3.effect(k).trace().real()));
  CHECK(ranks[0] == 1);
  CHECK(ranks[1] == 3);
  CHECK(ranks[2] == 3);
  CHECK(ranks[3] == 1);

  auto p = born_probabilities(all_up(5), magnetization_povm(5, Axis::Z));
  CHECK(p.back() == doctest::Approx(1.0));

  const PureState uniform = PureState(CVector::Constant(16, 0.25));
  p = born_probabilities(uniform, magnetization_povm(4, Axis::Z));
  const double expected[] = {1, 4, 6, 4, 1};
  for (int k = 0; k < 5; ++k) CHECK(p[k] == doctest::Approx(expected[k] / 16.0));
  // the same state is the all-plus product state: x magnetization is +L
  p = born_probabilities(uniform, magnetization_povm(4, Axis::X));
  CHECK(p.back() == doctest::Approx(1.0));

  // grouping agrees with dense projectors where both exist
  const IsingModel model(IsingConfig(4));
  const PureState s = model.evaluate({0.8, 0.3}).state;
  const Povm x4 = magnetization_povm(4, Axis::X);
  p = born_probabilities(s, x4);
  for (std::size_t k = 0; k < p.size(); ++k) {
    const Complex dense = s.amplitudes().dot(x4.effect(k) * s.amplitudes());
    CHECK(p[k] == doctest::Approx(dense.real()).epsilon(1e-12));
  }

  CHECK_THROWS_AS(magnetization_povm(9, Axis::Z).effect(0), DimensionBudget);
}

TEST_CASE("ProbeModel interface") {
  const QubitModel qubit(QubitProbeConfig(kPi / 4, 3 * kPi / 8));
  const LzModel lz(LzConfig{2.0});
  const IsingModel ising(IsingConfig(4));
  CHECK(qubit.name() == "qubit");
  CHECK(lz.name() == "lz");
  CHECK(ising.name() == "ising");
  CHECK(qubit.dim() == 2);
  CHECK(lz.dim() == 3);
  CHECK(ising.dim() == 16);
  CHECK(ising.measurements().for_lambda1.outcomes() == 5);
  const auto fn = lz.state_fn();
  CHECK(std::abs(fn({1, 1}).state.overlap(lz.evaluate({1, 1}).state) - Complex(1)) < 1e-14);
}

TEST_CASE("finite-difference QFIM is step-stable across every model") {
  const QubitModel qubit(QubitProbeConfig(kPi / 4, 3 * kPi / 8));
  const LzModel lz(LzConfig{2.0});
  const IsingModel ising(IsingConfig(4));
  for (const ProbeModel* m : {static_cast<const ProbeModel*>(&qubit), static_cast<const ProbeModel*>(&lz),
                              static_cast<const ProbeModel*>(&ising)}) {
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 10; ++j) {
        const ParamPoint p{0.2 + 0.35 * i, -0.9 + 0.2 * j};
        const auto a = state_derivatives(m->state_fn(), p, 1e-4);
        if (a.degenerate_flag) continue;
        const auto b = state_derivatives(m->state_fn(), p, 5e-5);
        const Qfim qa = qfim_pure(a);
        const Qfim qb = qfim_pure(b);
        const double scale = 1e-6 * std::max(1.0, qa.trace());
        CHECK(std::abs(qa.q11 - qb.q11) < scale);
        CHECK(std::abs(qa.q12 - qb.q12) < scale);
        CHECK(std::abs(qa.q22 - qb.q22) < scale);
      }
    }
  }
}

TEST_CASE("Ising ground states where plain QL iteration stalls") {
  const IsingModel model(IsingConfig(6));
  for (const ParamPoint p : {ParamPoint{1.16375, -0.04125}, ParamPoint{1.62625, -0.27125},
                             ParamPoint{1.82625, -0.08125}}) {
    const auto h = ising_hamiltonian(IsingConfig(6), p);
    const auto e = model.evaluate(p);
    const CVector& v = e.state.amplitudes();
    const double energy = (v.adjoint() * h.entries() * v)(0, 0).real();
    CHECK((h.entries() * v - energy * v).norm() < 1e-9);
  }
}
