#include "fragmellin/core.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace fragmellin;
using doctest::Approx;

namespace {
GridFunction exp_on(const LogGrid& g) {
  return GridFunction::sample(g, [](double x) { return std::exp(-x); });
}
}  // namespace

TEST_CASE("make_log_grid: three nodes between 1 and 4") {
  const LogGrid g = make_log_grid(1.0, 4.0, 3);
  REQUIRE(g.n == 3);
  CHECK(g.nodes[0] == Approx(1.0).epsilon(1e-14));
  CHECK(g.nodes[1] == Approx(2.0).epsilon(1e-14));
  CHECK(g.nodes[2] == Approx(4.0).epsilon(1e-14));
  CHECK(g.ratio() == Approx(2.0).epsilon(1e-14));
}

TEST_CASE("make_log_grid: ratio over five decades") {
  const LogGrid g = make_log_grid(1e-3, 1e2, 256);
  CHECK(g.ratio() == Approx(std::pow(1e5, 1.0 / 255.0)).epsilon(1e-13));
  CHECK(g.nodes[255] == 1e2);
  for (int i = 1; i < g.n; ++i) CHECK(g.nodes[i] / g.nodes[i - 1] == Approx(g.ratio()).epsilon(1e-12));
}

TEST_CASE("make_log_grid: bad arguments") {
  CHECK_THROWS_AS(make_log_grid(0.0, 1.0, 10), DomainError);
  CHECK_THROWS_AS(make_log_grid(2.0, 1.0, 10), DomainError);
  CHECK_THROWS_AS(make_log_grid(1.0, 1.0, 10), DomainError);
  CHECK_THROWS_AS(make_log_grid(1.0, 2.0, 1), DomainError);
}

TEST_CASE("log_grid_from_nodes rejects non-geometric spacing") {
  const LogGrid g = make_log_grid(0.1, 10.0, 20);
  CHECK(log_grid_from_nodes(g.nodes).n == 20);
  VectorXd bad = g.nodes;
  bad[7] *= 1.01;
  CHECK_THROWS_AS(log_grid_from_nodes(bad), DomainError);
}

TEST_CASE("integrate: moments of exp(-x)") {
  const GridFunction f = exp_on(make_log_grid(1e-4, 50.0, 512));
  CHECK(std::abs(integrate(f, 1.0) - 1.0) <= 1e-4);
  // number moment: [0, 1e-4) holds 1e-4 of the mass, so start lower
  const GridFunction f0 = exp_on(make_log_grid(1e-7, 50.0, 600));
  CHECK(std::abs(integrate(f0, 0.0) - 1.0) <= 1e-4);
  CHECK(integrate(GridFunction::zeros(f.grid), 0.0) == 0.0);
  CHECK(integrate(GridFunction::zeros(f.grid), 2.5) == 0.0);
  CHECK_THROWS_AS(integrate(f, -1.0), DomainError);
}

TEST_CASE("integrate: second order in the log step") {
  // finite interval so the end slopes in ln x are nonzero (otherwise convergence is spectral)
  const double exact = std::exp(-0.01) - std::exp(-60.0);
  auto err = [&](int n) { return std::abs(integrate(exp_on(make_log_grid(0.01, 60.0, n)), 0.0) - exact); };
  const double e1 = err(64), e2 = err(128), e3 = err(256);
  CHECK(e1 / e2 == Approx(4.0).epsilon(0.15));
  CHECK(e2 / e3 == Approx(4.0).epsilon(0.15));
}

TEST_CASE("interp_log: nodes, log midpoints, outside the domain") {
  const GridFunction f = exp_on(make_log_grid(1e-3, 20.0, 200));
  for (int i : {0, 17, 100, 199}) CHECK(interp_log(f, f.grid.nodes[i]) == Approx(f.values[i]).epsilon(1e-12));
  const double mid = std::sqrt(f.grid.nodes[40] * f.grid.nodes[41]);
  CHECK(interp_log(f, mid) == Approx(0.5 * (f.values[40] + f.values[41])).epsilon(1e-12));
  CHECK(interp_log(f, 2.0 * f.grid.x_max) == 0.0);
  CHECK(interp_log(f, 0.5 * f.grid.x_min) == 0.0);
  CHECK_THROWS_AS(interp_log(f, 0.0), DomainError);
  CHECK_THROWS_AS(interp_log(f, -1.0), DomainError);
}

TEST_CASE("interp_log is monotone between nodes for monotone data") {
  const GridFunction f = exp_on(make_log_grid(1e-2, 10.0, 50));
  double prev = interp_log(f, f.grid.x_min);
  for (int j = 1; j <= 2000; ++j) {
    const double x = f.grid.x_min * std::pow(f.grid.x_max / f.grid.x_min, j / 2000.0);
    const double v = interp_log(f, std::min(x, f.grid.x_max));
    CHECK(v <= prev + 1e-15);
    prev = v;
  }
}

TEST_CASE("distances") {
  const LogGrid g = make_log_grid(1e-4, 60.0, 400);
  const GridFunction a = exp_on(g);
  CHECK(l1_distance(a, a) < 1e-15);
  CHECK(weighted_l1_distance(a, a) < 1e-15);
  const GridFunction z = GridFunction::zeros(g);
  CHECK(weighted_l1_distance(a, z) == Approx(1.0).epsilon(1e-4));
}

TEST_CASE("line_integral: zero, Lorentzian, Gaussian") {
  ComplexLine line = make_line(2.0, 100.0, 0.01);
  CHECK(std::abs(line_integral(line, line.values)) == 0.0);

  VectorXcd lor(line.size());
  for (Eigen::Index j = 0; j < line.size(); ++j) lor[j] = 1.0 / (1.0 + line.v[j] * line.v[j]);
  const cplx I = line_integral(line, lor);
  CHECK(std::abs(I.real()) < 1e-15);
  // truncated at |v| = 100 the exact value is 2 atan(100) = pi - 0.02
  CHECK(std::abs(I.imag() - 2.0 * std::atan(100.0)) < 1e-5);

  ComplexLine gl = make_line(0.0, 10.0, 0.01);
  VectorXcd gau(gl.size());
  for (Eigen::Index j = 0; j < gl.size(); ++j) gau[j] = std::exp(-gl.v[j] * gl.v[j]);
  const cplx J = line_integral(gl, gau);
  CHECK(std::abs(J - cplx(0.0, std::sqrt(pi))) < 1e-8);
}

TEST_CASE("line_integral: linear and real for Hermitian integrands") {
  ComplexLine line = make_line(1.0, 5.0, 0.05);
  VectorXcd a(line.size()), b(line.size());
  for (Eigen::Index j = 0; j < line.size(); ++j) {
    const double v = line.v[j];
    a[j] = cplx(std::exp(-v * v), 0.3 * v * std::exp(-v * v));
    b[j] = cplx(1.0 / (1.0 + v * v), std::sin(v));
  }
  const cplx lhs = line_integral(line, (2.0 * a + cplx(0.0, 1.5) * b).eval());
  const cplx rhs = 2.0 * line_integral(line, a) + cplx(0.0, 1.5) * line_integral(line, b);
  CHECK(std::abs(lhs - rhs) < 1e-13);
  // Hermitian in v times the element i: (1/i) * integral is real
  const cplx h = line_integral(line, a) / cplx(0.0, 1.0);
  CHECK(std::abs(h.imag()) < 1e-14);
  CHECK_THROWS_AS(line_integral(line, VectorXcd::Zero(3)), DomainError);
}

TEST_CASE("log_gamma") {
  CHECK(std::exp(log_gamma(cplx(5.0, 0.0))).real() == Approx(24.0).epsilon(1e-12));
  CHECK(std::exp(log_gamma(cplx(0.5, 0.0))).real() == Approx(std::sqrt(pi)).epsilon(1e-12));
  // Gamma(1 + z) = z Gamma(z) off the axis
  const cplx z(2.3, 7.1);
  CHECK(std::abs(gamma_fn(z + 1.0) / (z * gamma_fn(z)) - 1.0) < 1e-12);
  // |Gamma(1/2 + iy)|^2 = pi / cosh(pi y)
  const double y = 3.0;
  CHECK(std::norm(gamma_fn(cplx(0.5, y))) == Approx(pi / std::cosh(pi * y)).epsilon(1e-11));
  CHECK(std::exp(log_beta(cplx(2.0), cplx(3.0))).real() == Approx(1.0 / 12.0).epsilon(1e-12));
}

TEST_CASE("least_squares recovers an exact line") {
  Eigen::MatrixXd A(5, 2);
  VectorXd y(5);
  for (int i = 0; i < 5; ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = i;
    y[i] = 3.0 - 0.5 * i;
  }
  double r2 = 0.0;
  const VectorXd c = least_squares(A, y, &r2);
  CHECK(c[0] == Approx(3.0));
  CHECK(c[1] == Approx(-0.5));
  CHECK(r2 == Approx(1.0));
}

TEST_CASE("parallel_for writes every index once") {
  std::vector<int> hits(1000, 0);
  parallel_for(1000, [&](Eigen::Index i) { hits[i] += 1; }, 16);
  for (int h : hits) CHECK(h == 1);
  CHECK(worker_count() >= 1);
}

TEST_CASE("derive_seed: deterministic and stream dependent") {
  CHECK(derive_seed(1, "noise") == derive_seed(1, "noise"));
  CHECK(derive_seed(1, "noise") != derive_seed(1, "strip"));
  CHECK(derive_seed(1, "noise") != derive_seed(2, "noise"));
}

TEST_CASE("grid CSV round trip is exact") {
  const GridFunction f = exp_on(make_log_grid(1e-3, 30.0, 77));
  const auto path = (std::filesystem::temp_directory_path() / "fragmellin_core_roundtrip.csv").string();
  write_grid_csv(f, path);
  const GridFunction r = read_grid_csv(path);
  REQUIRE(r.grid.n == f.grid.n);
  for (int i = 0; i < f.grid.n; ++i) {
    CHECK(r.values[i] == f.values[i]);
    CHECK(r.grid.nodes[i] == Approx(f.grid.nodes[i]).epsilon(1e-15));
  }
  std::filesystem::remove(path);
}
