#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "luenid/error.hpp"
#include "luenid/metrics.hpp"
#include "oracles.hpp"

using namespace luenid;
namespace lt = luenid::testing;

namespace {

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no luenid::Error thrown");
  return ErrorCode::kInvalidArgument;
}

CanonicalTheta scalar(double a, double b) {
  return {Vector::Constant(1, a), Vector::Constant(1, b)};
}

Trajectory exponential(double rate, double t0, double t1, int count) {
  Trajectory traj;
  for (int i = 0; i < count; ++i) {
    Sample s;
    s.t = t0 + (t1 - t0) * i / (count - 1);
    s.v = std::exp(rate * s.t);
    traj.samples.push_back(s);
  }
  return traj;
}

Box box_of(std::initializer_list<double> lower, std::initializer_list<double> upper) {
  Box b;
  b.lower = Vector::Map(std::data(lower), static_cast<Eigen::Index>(lower.size()));
  b.upper = Vector::Map(std::data(upper), static_cast<Eigen::Index>(upper.size()));
  return b;
}

DerivativeStack stack_of(std::initializer_list<double> values) {
  DerivativeStack d;
  d.values = Vector::Map(std::data(values), static_cast<Eigen::Index>(values.size()));
  return d;
}

}  // namespace

TEST_CASE("markov_error") {
  const StateSpace plant = lt::benchmark_plant();
  CHECK(markov_error(to_canonical(plant).theta, plant) <= 1e-14);
  CHECK(markov_error({Vector::Zero(3), Vector::Zero(3)}, plant) == doctest::Approx(1.0));
  CHECK(markov_error(lt::benchmark_theta(), plant) <= 1e-14);

  SUBCASE("invariant under similarity of the reference") {
    std::mt19937_64 rng(3);
    const CanonicalTheta probe{lt::benchmark_theta().a * 1.1, lt::benchmark_theta().b * 0.9};
    const double base = markov_error(probe, plant);
    for (int trial = 0; trial < 100; ++trial) {
      const Matrix t = lt::random_matrix(rng, 3, 3) + 3.0 * Matrix::Identity(3, 3);
      StateSpace moved;
      moved.A = t * plant.A * t.inverse();
      moved.B = t * plant.B;
      moved.C = plant.C * t.inverse();
      CHECK(std::abs(markov_error(probe, moved) - base) <= 1e-9);
    }
  }
  SUBCASE("degenerate reference") {
    StateSpace zero = plant;
    zero.B.setZero();
    CHECK(code_of([&] { markov_error(lt::benchmark_theta(), zero); }) ==
          ErrorCode::kDegenerateReference);
  }
}

TEST_CASE("eigen_error") {
  CHECK(eigen_error(lt::benchmark_theta(), lt::benchmark_theta()) == 0.0);
  CHECK(eigen_error(scalar(2.0, 1.0), scalar(1.0, 1.0)) == doctest::Approx(1.0));

  SUBCASE("pairing ignores ordering") {
    const ComplexList a{{-1.0, 0.0}, {-2.0, 0.0}, {-3.0, 0.0}};
    const ComplexList b{{-3.0, 0.0}, {-1.0, 0.0}, {-2.0, 0.0}};
    for (const auto& [l, r] : pair_spectra(a, b)) CHECK(l == r);
  }
  SUBCASE("symmetric") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
      const Eigen::Index n = 1 + trial % 3;
      const CanonicalTheta p{lt::random_vector(rng, n), Vector::Zero(n)};
      const CanonicalTheta q{lt::random_vector(rng, n), Vector::Zero(n)};
      CHECK(eigen_error(p, q) == doctest::Approx(eigen_error(q, p)).epsilon(1e-12));
      CHECK(eigen_error(p, p) == 0.0);
    }
  }
}

TEST_CASE("fit_decay_rate") {
  CHECK(std::abs(fit_decay_rate(exponential(-2.0, 0.0, 5.0, 101), 0.0, 5.0) + 2.0) <= 1e-9);
  CHECK(std::abs(fit_decay_rate(exponential(-0.37, 1.0, 40.0, 500), 2.0, 30.0) + 0.37) <= 1e-9);

  SUBCASE("degenerate windows") {
    Trajectory zero = exponential(-1.0, 0.0, 1.0, 11);
    zero.samples[5].v = 0.0;
    CHECK(code_of([&] { fit_decay_rate(zero, 0.0, 1.0); }) == ErrorCode::kDegenerateWindow);
    CHECK(code_of([&] { fit_decay_rate(exponential(-1.0, 0.0, 1.0, 11), 2.0, 3.0); }) ==
          ErrorCode::kDegenerateWindow);
  }
}

TEST_CASE("derivative_observation") {
  // y = x, y' = -a x + b v0, y'' = a^2 x - a b v0 + b v1
  const Vector y = derivative_observation(Vector::Constant(1, 0.5), scalar(2.0, 3.0),
                                          Eigen::Vector2d(1.0, -1.0), 3);
  CHECK(y(0) == doctest::Approx(0.5));
  CHECK(y(1) == doctest::Approx(-1.0 + 3.0));
  CHECK(y(2) == doctest::Approx(2.0 - 6.0 - 3.0));
}

TEST_CASE("injectivity_diagnostic") {
  const DerivativeStack exciting = stack_of({1.0, 0.3, -0.7});
  SUBCASE("zero numerator in the box") {
    // with b = 0 the plant state at x = 0 carries no trace of a
    const InjectivityDiagnostic d = injectivity_diagnostic(box_of({1.0, 0.0}, {2.0, 0.0}),
                                                           box_of({-1.0}, {1.0}), exciting, 3);
    CHECK(d.sigma_min <= 1e-8);
    CHECK(d.argmin(0) == 0.0);
  }
  SUBCASE("controllable first-order box") {
    const InjectivityDiagnostic d = injectivity_diagnostic(box_of({1.0, 1.0}, {2.0, 2.0}),
                                                           box_of({-1.0}, {1.0}), exciting, 3);
    CHECK(d.sigma_min > 1e-3);
    CHECK(d.argmin.size() == 3);
  }
  SUBCASE("vanishing input with the origin in the box") {
    const InjectivityDiagnostic d = injectivity_diagnostic(
        box_of({1.0, 1.0}, {2.0, 2.0}), box_of({-1.0}, {1.0}), stack_of({0.0, 0.3, -0.7}), 3);
    CHECK(d.sigma_min <= 1e-8);
  }
  SUBCASE("too few derivatives") {
    CHECK(injectivity_diagnostic(box_of({1.0, 1.0}, {2.0, 2.0}), box_of({0.5}, {1.0}), exciting, 2)
              .sigma_min == 0.0);
  }
  SUBCASE("shrinking the box never lowers sigma_min") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const DerivativeStack v = stack_of({lt::uniform(rng, 0.2, 1.0), lt::uniform(rng, -1, 1),
                                          lt::uniform(rng, -1, 1)});
      // the inner grid (3 points over half the box) is a subset of the outer one (5 points)
      const Box outer_theta = box_of({1.0, 1.0}, {3.0, 3.0});
      const Box outer_x = box_of({-1.0}, {1.0});
      const Box inner_theta = box_of({1.0, 1.0}, {2.0, 2.0});
      const Box inner_x = box_of({-1.0}, {0.0});
      const double outer = injectivity_diagnostic(outer_theta, outer_x, v, 3, 5).sigma_min;
      const double inner = injectivity_diagnostic(inner_theta, inner_x, v, 3, 3).sigma_min;
      CHECK(inner >= outer - 1e-12);
    }
  }
}

TEST_CASE("benchmark run: accuracy and decay") {
  const ObserverSpec spec = lt::benchmark_observer(10.0);
  SimConfig cfg;
  cfg.theta_true = lt::benchmark_theta();
  cfg.input = make_multisine(11);
  cfg.horizon_s = 20.0;
  cfg.record_every = 10;

  SUBCASE("zero initial filters: Err after the transient") {
    const Trajectory traj = integrate(cfg, spec);
    const double discard = default_discard_before(spec);
    double worst = 0.0;
    for (const Sample& s : traj.samples) {
      if (s.t < discard) continue;
      worst = std::max(worst, markov_error(CanonicalTheta::from_stacked(s.theta_hat),
                                           lt::benchmark_plant()));
    }
    CHECK(worst <= 1e-2);
    const RunReport report = summarize_run(traj, lt::benchmark_plant(), {0.0, 20.0, 10.0});
    CHECK(report.final_eigen_error <= 1e-4);
    CHECK(report.final_markov_error <= 1e-4);
    CHECK_FALSE(report.decay_rate.has_value());  // V is identically zero
    CHECK(report.validity_fraction > 0.5);
    CHECK(report.validity_fraction <= 1.0);
  }
  SUBCASE("perturbed filters: decay rate") {
    cfg.z0 = Vector::Constant(11, 0.5);
    const Trajectory traj = integrate(cfg, spec);
    const double rate = fit_decay_rate(traj, 0.0, 20.0);
    CHECK(rate <= 0.95 * spec.slowest_eigenvalue());
    const RunReport report = summarize_run(traj, lt::benchmark_plant(), {0.0, 20.0, 10.0});
    REQUIRE(report.decay_rate.has_value());
    CHECK(*report.decay_rate == rate);
  }
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK_THROWS_AS(median({}), Error);
}
