#include "stepwise/bayes.hpp"
#include "stepwise/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

using namespace stepwise;

namespace {

constexpr double kPi = std::numbers::pi;

QubitModel fig_qubit() { return QubitModel(QubitProbeConfig(kPi / 4, 3 * kPi / 8)); }

double weight_sum(const PosteriorGrid& g) {
  return std::accumulate(g.weights().begin(), g.weights().end(), 0.0);
}

std::size_t mode_index(const PosteriorGrid& g) {
  return static_cast<std::size_t>(
      std::max_element(g.weights().begin(), g.weights().end()) - g.weights().begin());
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

BayesConfig qubit_scenario() {
  BayesConfig c;
  c.total_shots = 10000;
  c.gamma = 0.5;
  c.grid_points = 400;
  c.true_point = {kPi, 7 * kPi / 8};
  c.prior_width_1 = c.prior_width_2 = kPi / 5;
  c.order = Strategy::First1Then2;
  c.batch_size = 250;
  return c;
}

// |0> everywhere on the prior grid but an equal superposition at the truth,
// so the lambda1 measurement eventually sees an outcome the grid forbids.
class BlindModel final : public ProbeModel {
 public:
  ModelEvaluation evaluate(const ParamPoint& point) const override {
    CVector v(2);
    if (point.lambda1 == 0.0)
      v << 1.0, 1.0;
    else
      v << 1.0, 0.0;
    return {PureState::normalized(v), false};
  }
  std::size_t dim() const override { return 2; }
  std::string name() const override { return "blind"; }
  MeasurementPair measurements() const override {
    const auto q = qubit_measurements();
    return {q.for_lambda2, q.for_lambda2};
  }
};

BayesConfig blind_config() {
  BayesConfig c;
  c.total_shots = 200;
  c.gamma = 0.5;
  c.grid_points = 20;
  c.true_point = {0.0, 0.0};
  c.batch_size = 10;
  return c;
}

}  // namespace

TEST_CASE("PosteriorGrid construction") {
  CHECK_THROWS_AS(PosteriorGrid(1, 1, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(PosteriorGrid(0, 1, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(PosteriorGrid(0, 1, {0.7, 0.7}), std::invalid_argument);
  CHECK_THROWS_AS(PosteriorGrid(0, 1, {1.5, -0.5}), std::invalid_argument);
  const auto g = PosteriorGrid::centered(2.0, 1.0, 11);
  CHECK(g.lo() == doctest::Approx(1.5));
  CHECK(g.hi() == doctest::Approx(2.5));
  CHECK(g.support(5) == doctest::Approx(2.0));
  const auto p = PosteriorGrid::point_mass(0, 1, 11, 0.62);
  CHECK(p.weights()[6] == 1.0);
}

TEST_CASE("BayesConfig validation") {
  BayesConfig c = qubit_scenario();
  CHECK_NOTHROW(c.validate());
  CHECK(c.first_phase_shots() == 5000);
  c.gamma = 0.3333;
  CHECK(c.first_phase_shots() == 3333);
  c.total_shots = 3;
  c.gamma = 0.1;
  CHECK(c.first_phase_shots() == 1);
  CHECK(c.second_phase_shots() == 2);
  c.gamma = 0.9;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = qubit_scenario();
  c.gamma = 1.0;
  CHECK_THROWS_AS(c.validate(), GammaOutOfRange);
  c = qubit_scenario();
  c.order = Strategy::Joint;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = qubit_scenario();
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("sample_outcomes") {
  Rng rng(1);
  const std::vector<double> certain{1.0, 0.0};
  auto c = sample_outcomes(certain, 100, rng);
  CHECK(c[0] == 100);
  CHECK(c[1] == 0);
  c = sample_outcomes(certain, 0, rng);
  CHECK(c[0] == 0);
  CHECK(c[1] == 0);

  const std::vector<double> fair{0.5, 0.5};
  c = sample_outcomes(fair, 1000000, rng);
  CHECK(c[0] + c[1] == 1000000);
  CHECK(std::abs(c[0] - 500000) <= 2500);

  CHECK_THROWS_AS(sample_outcomes(std::vector<double>{0.5, 0.4}, 10, rng), UnnormalizedProbs);
  CHECK_THROWS_AS(sample_outcomes(std::vector<double>{1.2, -0.2}, 10, rng), UnnormalizedProbs);
  CHECK_THROWS_AS(sample_outcomes(fair, -1, rng), std::invalid_argument);
}

TEST_CASE("sample_outcomes is deterministic and batch-invariant") {
  const std::vector<double> p{0.2, 0.3, 0.5};
  Rng a(42), b(42);
  const Counts whole = sample_outcomes(p, 1000, a);
  Counts split(3, 0);
  for (int k = 0; k < 10; ++k) {
    const Counts part = sample_outcomes(p, 100, b);
    for (int j = 0; j < 3; ++j) split[j] += part[j];
  }
  CHECK(whole == split);
  CHECK(a() == b());
}

TEST_CASE("posterior_mean_var") {
  const auto u = PosteriorGrid::uniform(0, 1, 1000);
  auto m = posterior_mean_var(u);
  CHECK(m.mean == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(m.variance - 1.0 / 12.0) < 1e-4);

  m = posterior_mean_var(PosteriorGrid::point_mass(0, 1, 100, 0.303));
  CHECK(m.mean == doctest::Approx(0.305));
  CHECK(m.variance == 0.0);

  std::vector<double> w(200, 0.0);
  w[50] = w[149] = 0.5;  // support points -0.495 and +0.495 on [-1, 1]
  m = posterior_mean_var(PosteriorGrid(-1, 1, w));
  CHECK(std::abs(m.mean) < 1e-15);
  CHECK(m.variance == doctest::Approx(0.495 * 0.495).epsilon(1e-12));
}

TEST_CASE("posterior_update") {
  const auto g = PosteriorGrid::uniform(0, 1, 5);
  const std::vector<double> flat(5, -3.0);
  auto p = posterior_update(g, flat);
  for (std::size_t i = 0; i < 5; ++i) CHECK(p.weights()[i] == doctest::Approx(0.2).epsilon(1e-15));

  std::vector<double> spike(5, -1000.0);
  spike[3] = 0.0;
  p = posterior_update(g, spike);
  CHECK(p.weights()[3] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(weight_sum(p) - 1.0) < 1e-12);

  CHECK_THROWS_AS(posterior_update(g, std::vector<double>(4, 0.0)), DimensionMismatch);
  const std::vector<double> impossible(5, -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(posterior_update(g, impossible), ZeroLikelihood);
}

TEST_CASE("likelihood identities") {
  const auto model = fig_qubit();
  const auto m = model.measurements();
  const ProbabilityFn p1 = measurement_probabilities(model, m.for_lambda1);
  const ProbabilityFn p2 = measurement_probabilities(model, m.for_lambda2);
  const auto grid1 = PosteriorGrid::centered(kPi, kPi / 5, 41);
  const auto grid2 = PosteriorGrid::centered(7 * kPi / 8, kPi / 5, 41);

  SUBCASE("no data is a flat update") {
    const auto ll = marginal_likelihood_1(p1, {0, 0}, grid1, grid2);
    for (double v : ll) CHECK(v == doctest::Approx(ll[0]).epsilon(1e-14));
    const auto lc = conditional_likelihood_2(p2, {0, 0}, grid2, kPi);
    for (double v : lc) CHECK(v == 0.0);
  }
  SUBCASE("point-mass nuisance prior reduces to the conditional likelihood") {
    const Counts counts{37, 163};
    const auto point = PosteriorGrid::point_mass(grid2.lo(), grid2.hi(), 41, 7 * kPi / 8);
    const double fixed = point.support(mode_index(point));
    const auto marginal = marginal_likelihood_1(p1, counts, grid1, point);
    const auto conditional = conditional_log_likelihood(p1, counts, grid1, 0, fixed);
    for (std::size_t i = 0; i < marginal.size(); ++i)
      CHECK(marginal[i] == doctest::Approx(conditional[i]).epsilon(1e-12));
  }
  SUBCASE("sequential updates equal one joint update") {
    const Counts c1{12, 30};
    const Counts c2{25, 8};
    const Counts both{37, 38};
    const auto step = posterior_update(
        posterior_update(grid2, conditional_likelihood_2(p2, c1, grid2, kPi)),
        conditional_likelihood_2(p2, c2, grid2, kPi));
    const auto joint = posterior_update(grid2, conditional_likelihood_2(p2, both, grid2, kPi));
    for (std::size_t i = 0; i < grid2.size(); ++i)
      CHECK(std::abs(step.weights()[i] - joint.weights()[i]) < 1e-10);
  }
  SUBCASE("count vectors must match the outcomes") {
    CHECK_THROWS_AS(marginal_likelihood_1(p1, {1, 2, 3}, grid1, grid2), DimensionMismatch);
    CHECK_THROWS_AS(conditional_likelihood_2(p2, {1}, grid2, kPi), DimensionMismatch);
  }
}

TEST_CASE("impossible data raises ZeroLikelihood") {
  const ProbabilityFn certain = [](const ParamPoint&) { return std::vector<double>{1.0, 0.0}; };
  const auto g = PosteriorGrid::uniform(0, 1, 5);
  CHECK_THROWS_AS(marginal_likelihood_1(certain, {0, 3}, g, g), ZeroLikelihood);
  CHECK_THROWS_AS(conditional_likelihood_2(certain, {0, 3}, g, 0.5), ZeroLikelihood);
}

TEST_CASE("phase posteriors concentrate near the truth") {
  const auto model = fig_qubit();
  const auto m = model.measurements();
  const ParamPoint truth{kPi, 7 * kPi / 8};
  const ProbabilityFn p1 = measurement_probabilities(model, m.for_lambda1);
  const ProbabilityFn p2 = measurement_probabilities(model, m.for_lambda2);
  const auto grid1 = PosteriorGrid::centered(truth.lambda1, kPi / 5, 201);
  const auto grid2 = PosteriorGrid::centered(truth.lambda2, kPi / 5, 201);
  const ProbabilityTable table(p1, grid1, grid2, 0);
  const auto true1 = p1(truth);
  const auto true2 = p2(truth);

  int hits1 = 0, hits2 = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(seed);
    const auto post1 = posterior_update(
        grid1, marginal_log_likelihood(table, sample_outcomes(true1, 200, rng), grid2));
    const auto m1 = posterior_mean_var(post1);
    if (std::abs(post1.support(mode_index(post1)) - truth.lambda1) <= 3 * std::sqrt(m1.variance))
      ++hits1;
    const auto post2 = posterior_update(
        grid2, conditional_likelihood_2(p2, sample_outcomes(true2, 200, rng), grid2, truth.lambda1));
    const auto m2 = posterior_mean_var(post2);
    if (std::abs(post2.support(mode_index(post2)) - truth.lambda2) <= 3 * std::sqrt(m2.variance))
      ++hits2;
    CHECK(std::abs(weight_sum(post1) - 1.0) < 1e-12);
    CHECK(std::abs(weight_sum(post2) - 1.0) < 1e-12);
  }
  CHECK(hits1 == 50);
  CHECK(hits2 == 50);
}

TEST_CASE("StepwiseBayes runs") {
  const auto model = fig_qubit();
  const BayesConfig cfg = qubit_scenario();
  const StepwiseBayes runner(model, cfg);

  SUBCASE("trace structure") {
    const auto t = runner.run(7);
    REQUIRE_FALSE(t.aborted);
    REQUIRE(t.rows.size() == 40);
    CHECK(t.rows.back().shots_used == cfg.total_shots);
    for (std::size_t i = 1; i < t.rows.size(); ++i)
      CHECK(t.rows[i].shots_used > t.rows[i - 1].shots_used);
    for (const auto& r : t.rows) {
      CHECK(r.var1 >= 0.0);
      CHECK(r.var2 >= 0.0);
      CHECK(r.scaled_error == doctest::Approx(r.shots_used * (r.var1 + r.var2)));
      CHECK(r.mu == t.mu);
    }
    // var1 is frozen after phase 1
    const std::size_t phase1_rows = 20;
    for (std::size_t i = phase1_rows; i < t.rows.size(); ++i) {
      CHECK(t.rows[i].var1 == t.rows[phase1_rows - 1].var1);
      CHECK(t.rows[i].est1 == t.rows[phase1_rows - 1].est1);
    }
    CHECK(t.mu == doctest::Approx(3568).epsilon(1e-3));
    CHECK(t.mu_tilde == doctest::Approx(1010.6).epsilon(1e-3));
  }
  SUBCASE("determinism") {
    const auto a = runner.run(99);
    const auto b = StepwiseBayes(model, cfg).run(99);
    std::ostringstream sa, sb;
    write_trace_csv(sa, a);
    write_trace_csv(sb, b);
    CHECK(sa.str() == sb.str());
    const auto c = runner.run(100);
    CHECK(c.rows.back().est1 != a.rows.back().est1);
  }
  SUBCASE("batch size changes granularity only") {
    BayesConfig fine = cfg;
    fine.batch_size = 1;
    const auto a = StepwiseBayes(model, fine).run(3);
    const auto b = runner.run(3);
    CHECK(a.rows.size() == 10000);
    const auto& ra = a.rows.back();
    const auto& rb = b.rows.back();
    CHECK(ra.est1 == doctest::Approx(rb.est1).epsilon(1e-10));
    CHECK(ra.est2 == doctest::Approx(rb.est2).epsilon(1e-10));
    CHECK(ra.var1 == doctest::Approx(rb.var1).epsilon(1e-8));
    CHECK(ra.var2 == doctest::Approx(rb.var2).epsilon(1e-8));
  }
  SUBCASE("run_seeds matches individual runs") {
    const std::vector<std::uint64_t> seeds{5, 6, 7};
    const auto traces = run_seeds(runner, seeds, 2);
    for (std::size_t i = 0; i < seeds.size(); ++i)
      CHECK(traces[i].rows.back().est2 == runner.run(seeds[i]).rows.back().est2);
  }
}

TEST_CASE("credible intervals cover the truth") {
  const auto model = fig_qubit();
  const StepwiseBayes runner(model, qubit_scenario());
  std::vector<std::uint64_t> seeds(100);
  std::iota(seeds.begin(), seeds.end(), 1000);
  int covered = 0;
  for (const auto& t : run_seeds(runner, seeds, 1)) {
    const auto& r = t.rows.back();
    if (std::abs(r.est1 - kPi) <= 2 * std::sqrt(r.var1)) ++covered;
  }
  CHECK(covered >= 80);
}

TEST_CASE("phase-1 variance falls with shot count") {
  // well-conditioned point with a narrow nuisance prior
  BayesConfig cfg = qubit_scenario();
  cfg.true_point = {0.5, 0.5};
  cfg.grid_points = 300;
  cfg.total_shots = 3200;
  cfg.gamma = 0.5;
  cfg.batch_size = 400;
  cfg.prior_width_2 = 0.05;
  const auto model = fig_qubit();
  const StepwiseBayes runner(model, cfg);
  std::vector<double> at_400, at_1600;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto t = runner.run(seed);
    at_400.push_back(t.rows[0].var1);
    at_1600.push_back(t.rows[3].var1);
  }
  CHECK(median(at_400) >= 2.0 * median(at_1600));
}

TEST_CASE("grid refinement leaves estimates stable") {
  const auto model = fig_qubit();
  BayesConfig cfg = qubit_scenario();
  cfg.grid_points = 200;
  const auto coarse = StepwiseBayes(model, cfg).run(11).rows.back();
  cfg.grid_points = 400;
  const auto fine = StepwiseBayes(model, cfg).run(11).rows.back();
  CHECK(std::abs(coarse.est1 - fine.est1) < 0.1 * std::sqrt(fine.var1));
  CHECK(std::abs(coarse.est2 - fine.est2) < 0.1 * std::sqrt(fine.var2));
}

TEST_CASE("impossible outcomes abort with a partial trace") {
  const auto t = StepwiseBayes(BlindModel{}, blind_config()).run(1);
  REQUIRE(t.aborted);
  CHECK_FALSE(t.error.empty());
  CHECK(t.rows.size() < 20);
  std::ostringstream out;
  write_trace_csv(out, t);
  CHECK(out.str().find("# aborted: ") != std::string::npos);
  CHECK(run_stepwise_bayes(BlindModel{}, blind_config()).aborted);
}

TEST_CASE("trace CSV layout") {
  BayesTrace t;
  t.rows.push_back({10, 1.5, 0.25, 0.01, 0.02, 0.3, 4.0, 2.0});
  std::ostringstream out;
  write_trace_csv(out, t);
  CHECK(out.str() ==
        "shots_used,est1,est2,var1,var2,scaled_error,mu,mu_tilde\n"
        "10,1.5,0.25,0.01,0.02,0.3,4,2\n");
}
