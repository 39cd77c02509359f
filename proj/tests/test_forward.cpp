#include "fragmellin/forward.hpp"

#include <doctest.h>

#include <cmath>

using namespace fragmellin;
using doctest::Approx;

namespace {
const LogGrid& sim_grid() {
  static const LogGrid g = make_log_grid(1e-4, 60.0, 512);
  return g;
}
GridFunction exp_on(const LogGrid& g) {
  return GridFunction::sample(g, [](double x) { return std::exp(-x); });
}
GridFunction exact(const LogGrid& g, double t) {
  return GridFunction::sample(g, [t](double x) { return (1 + t) * (1 + t) * std::exp(-(1 + t) * x); });
}
}  // namespace

TEST_CASE("gain_operator at x = 1") {
  const GridFunction f = exp_on(sim_grid());
  const RateSpec r(1.0, 1.0);
  const GridFunction gu = gain_operator(f, KernelSpec::uniform_binary(), r);
  CHECK(std::abs(interp_log(gu, 1.0) - 2.0 * std::exp(-1.0)) <= 1e-3);
  const GridFunction gm = gain_operator(f, KernelSpec::mitosis(), r);
  CHECK(std::abs(interp_log(gm, 1.0) - 8.0 * std::exp(-2.0)) <= 1e-3);
  // uniform: gain(x) = 2 e^{-x} at every interior node
  for (int i = 50; i < 450; i += 40) CHECK(gu.values[i] == Approx(2.0 * f.values[i]).epsilon(2e-3));
}

TEST_CASE("gain_operator: zero input and negative input") {
  const GridFunction z = GridFunction::zeros(sim_grid());
  CHECK(gain_operator(z, KernelSpec::beta(2.0, 2.0), RateSpec(1.0, 1.0)).values.cwiseAbs().maxCoeff() == 0.0);
  GridFunction neg = exp_on(sim_grid());
  neg.values[10] = -1e-6;
  CHECK_THROWS_AS(gain_operator(neg, KernelSpec::uniform_binary(), RateSpec(1.0, 1.0)), DomainError);
}

TEST_CASE("step: zero data, zero-mass kernel, stability guard") {
  const RateSpec r(1.0, 1.0);
  const GridFunction z = GridFunction::zeros(sim_grid());
  CHECK(step(z, KernelSpec::uniform_binary(), r, 0.01).values.cwiseAbs().maxCoeff() == 0.0);

  const GridFunction f = exp_on(sim_grid());
  const GridFunction d = step(f, KernelSpec::uniform_binary(0.0), r, 0.05);
  for (int i = 0; i < sim_grid().n; i += 37)
    CHECK(d.values[i] == Approx(std::exp(-sim_grid().nodes[i] * 0.05) * f.values[i]).epsilon(1e-14));

  CHECK(dt_max(r, sim_grid()) == Approx(50.0 / 60.0));
  CHECK_THROWS_AS(step(f, KernelSpec::uniform_binary(), r, 10.0), NumericalError);
  CHECK_THROWS_AS(step(f, KernelSpec::uniform_binary(), r, 0.0), DomainError);
}

TEST_CASE("simulate: exact solution at t = 1") {
  const TimeSeries ts = simulate(exp_on(sim_grid()), KernelSpec::uniform_binary(), RateSpec(1.0, 1.0), 1.0, {1.0});
  REQUIRE(ts.snapshots.size() == 1);
  CHECK(weighted_l1_distance(ts.snapshots[0], exact(sim_grid(), 1.0)) <= 1e-3);
  CHECK(std::abs(ts.M1[0] - 1.0) <= 1e-4);
  CHECK(std::abs(ts.M0[0] - 2.0) <= 1e-3);
}

TEST_CASE("simulate: zero initial data stays zero") {
  const TimeSeries ts =
      simulate(GridFunction::zeros(sim_grid()), KernelSpec::uniform_binary(), RateSpec(1.0, 1.0), 1.0, {0.5, 1.0});
  REQUIRE(ts.snapshots.size() == 2);
  for (const auto& s : ts.snapshots) CHECK(s.values.cwiseAbs().maxCoeff() == 0.0);
  for (double m : ts.M0) CHECK(m == 0.0);
}

TEST_CASE("simulate: bad arguments") {
  const GridFunction f = exp_on(sim_grid());
  CHECK_THROWS_AS(simulate(f, KernelSpec::uniform_binary(), RateSpec(1.0, 1.0), 1.0, {2.0}), DomainError);
  CHECK_THROWS_AS(simulate(f, KernelSpec::uniform_binary(), RateSpec(1.0, 1.0), 0.0, {}), DomainError);
  SimOptions o;
  o.dt = 10.0;
  CHECK_THROWS_AS(simulate(f, KernelSpec::uniform_binary(), RateSpec(1.0, 1.0), 1.0, {1.0}, o), NumericalError);
}

TEST_CASE("conservation, number growth and positivity for the bundled kernels") {
  const std::vector<double> times = {0.5, 1.0, 2.0, 3.0, 4.0, 5.0};
  for (const char* name : {"uniform", "beta22", "mitosis", "beta22_sampled"}) {
    CAPTURE(name);
    const KernelSpec k = read_kernel_file(std::string(FRAGMELLIN_SOURCE_DIR) + "/kernels/" + name + ".json");
    REQUIRE(validate_kernel(k).pass);
    const GridFunction f0 = exp_on(sim_grid());
    const double m1 = integrate(f0, 1.0);
    const TimeSeries ts = simulate(f0, k, RateSpec(1.0, 1.0), 5.0, times);
    REQUIRE(ts.M1.size() == times.size());
    double prev = number_moment(f0);
    for (std::size_t j = 0; j < times.size(); ++j) {
      CHECK(std::abs(ts.M1[j] - m1) / m1 <= 1e-4);
      CHECK(ts.M0[j] >= prev - 1e-10);
      prev = ts.M0[j];
      CHECK(ts.snapshots[j].values.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("rescale_snapshot of the exact solution") {
  const LogGrid pg = make_log_grid(1e-3, 40.0, 600);
  const GridFunction g = exp_on(pg);
  const LogGrid big = make_log_grid(1e-6, 60.0, 2000);
  const GridFunction r9 = rescale_snapshot(exact(big, 9.0), 9.0, RateSpec(1.0, 1.0), pg);
  const GridFunction r99 = rescale_snapshot(exact(big, 99.0), 99.0, RateSpec(1.0, 1.0), pg);
  const double d9 = l1_distance(r9, g), d99 = l1_distance(r99, g);
  CHECK(d9 <= 0.25);
  CHECK(d99 <= 0.03);
  CHECK(d99 < d9);

  // t = 1: only the t^{-2/gamma} prefactor, which is one
  const GridFunction f = exp_on(pg);
  const GridFunction id = rescale_snapshot(f, 1.0, RateSpec(1.0, 1.0), pg);
  for (int i = 0; i < pg.n; i += 50) CHECK(id.values[i] == Approx(f.values[i]).epsilon(1e-12));
  CHECK(rescale_snapshot(GridFunction::zeros(big), 5.0, RateSpec(1.0, 1.0), pg).values.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(rescale_snapshot(f, 0.0, RateSpec(1.0, 1.0), pg), DomainError);
}

TEST_CASE("self-similar distance decreases along dyadic times") {
  const std::vector<double> times = {1.0, 2.0, 4.0, 8.0};
  const LogGrid g = make_log_grid(1e-5, 60.0, 640);
  const TimeSeries ts = simulate(exp_on(g), KernelSpec::uniform_binary(), RateSpec(1.0, 1.0), 8.0, times);
  double prev = 1e300;
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double t = times[j];
    const GridFunction asym = GridFunction::sample(g, [t](double x) { return t * t * std::exp(-t * x); });
    const double d = weighted_l1_distance(ts.snapshots[j], asym);
    CHECK(d < prev);
    prev = d;
  }
}
