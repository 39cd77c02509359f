#include "fragmellin/kernels.hpp"
#include "fragmellin/mellin.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace fragmellin;
using doctest::Approx;

namespace {
MellinSamples analytic(double u, double V, double dv, const std::function<cplx(cplx)>& G) {
  MellinSamples m;
  m.line = make_line(u, V, dv);
  for (Eigen::Index j = 0; j < m.line.size(); ++j) m.line.values[j] = G(m.line.s(j));
  return m;
}
GridFunction exp_on(const LogGrid& g) {
  return GridFunction::sample(g, [](double x) { return std::exp(-x); });
}
double weighted_l1_on(const GridFunction& a, const GridFunction& b, double lo, double hi) {
  double acc = 0.0;
  for (int i = 0; i < a.grid.n; ++i) {
    const double x = a.grid.nodes[i];
    if (x < lo || x > hi) continue;
    acc += a.grid.weights[i] * x * std::abs(a.values[i] - interp_log(b, x));
  }
  return acc;
}
}  // namespace

TEST_CASE("mellin_forward: Gamma values of exp(-x)") {
  const GridFunction f = exp_on(make_log_grid(1e-6, 60.0, 1024));
  const MellinSamples m3 = mellin_forward(f, 3.0, 0.0, 0.1);
  REQUIRE(m3.line.size() == 1);
  CHECK(std::abs(m3.values()[0] - 2.0) <= 1e-5);
  CHECK(std::abs(mellin_at(f, 2.0) - 1.0) <= 1e-5);
  CHECK(std::abs(mellin_at(f, cplx(2.5, 3.0)) - gamma_fn(cplx(2.5, 3.0))) <= 1e-5);
  CHECK(std::exp(log_mellin_real(f, 12.0)) == Approx(std::tgamma(12.0)).epsilon(1e-6));
  CHECK_THROWS_AS(mellin_forward(f, 0.5, 1.0, 0.1), DomainError);
}

TEST_CASE("mellin_forward: sampled indicator") {
  // the jump at z = 1 sits on the last node; end-slope error is O(h^2)
  const GridFunction f = GridFunction::sample(make_log_grid(1e-4, 1.0, 8000), [](double) { return 2.0; });
  CHECK(std::abs(mellin_at(f, 5.0) - 0.4) <= 1e-5);
}

TEST_CASE("mellin_forward: Hermitian symmetry and truncation warning") {
  const GridFunction f = exp_on(make_log_grid(1e-6, 60.0, 700));
  const MellinSamples m = mellin_forward(f, 2.5, 10.0, 0.1);
  const Eigen::Index n = m.line.size();
  for (Eigen::Index j = 0; j < n; ++j) CHECK(m.values()[n - 1 - j] == std::conj(m.values()[j]));
  CHECK(m.diag.warnings.empty());
  const GridFunction cut = exp_on(make_log_grid(1e-6, 5.0, 500));
  CHECK_FALSE(mellin_forward(cut, 2.5, 1.0, 0.1).diag.warnings.empty());
}

TEST_CASE("functional equation of the exact profile on the real axis") {
  const GridFunction g = exp_on(make_log_grid(1e-7, 80.0, 1400));
  const KernelSpec k = KernelSpec::uniform_binary();
  double worst = 0.0;
  for (double s = 2.5; s <= 8.0 + 1e-12; s += 0.25) {
    const cplx Gs = mellin_at(g, s), Gs1 = mellin_at(g, s + 1.0);
    worst = std::max(worst, std::abs((2.0 - s) * Gs - (k0_mellin(k, s) - 1.0) * Gs1) / std::abs(Gs1));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("mellin_inverse: Gamma line gives exp(-x)") {
  const MellinSamples m = analytic(2.5, 40.0, 0.02, [](cplx s) { return gamma_fn(s); });
  const LogGrid xs = make_log_grid(0.1, 10.0, 120);
  const InverseResult r = mellin_inverse(m, xs, Taper::none());
  for (int i = 0; i < xs.n; ++i) CHECK(std::abs(r.g.values[i] - std::exp(-xs.nodes[i])) <= 1e-4);
  CHECK(r.symmetric);
  CHECK(r.imag_residual < 1e-10);
}

TEST_CASE("mellin_inverse: 2/s line gives the uniform kernel") {
  const MellinSamples m = analytic(3.0, 200.0, 0.01, [](cplx s) { return 2.0 / s; });
  const LogGrid xs = make_log_grid(0.05, 2.0, 300);
  const InverseResult r = mellin_inverse(m, xs, Taper::tukey(0.5));
  CHECK(std::abs(interp_log(r.g, 0.5) - 2.0) <= 0.05);
  CHECK(std::abs(interp_log(r.g, 2.0)) <= 0.05);
  for (int i = 0; i < xs.n; ++i) {
    const double x = xs.nodes[i];
    if (std::abs(x - 1.0) < 0.05) continue;
    CHECK(std::abs(r.g.values[i] - (x < 1.0 ? 2.0 : 0.0)) <= 0.05);
  }
}

TEST_CASE("mellin_inverse: zero line") {
  const MellinSamples m = analytic(2.0, 10.0, 0.1, [](cplx) { return cplx(0.0); });
  const InverseResult r = mellin_inverse(m, make_log_grid(0.1, 10.0, 20));
  CHECK(r.g.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mellin_inverse: asymmetric samples are flagged") {
  MellinSamples m = analytic(2.5, 20.0, 0.05, [](cplx s) { return gamma_fn(s); });
  m.line.values[m.line.size() / 2 + 3] += cplx(0.0, 0.5);
  const InverseResult r = mellin_inverse(m, make_log_grid(0.1, 10.0, 50));
  CHECK_FALSE(r.symmetric);
  CHECK_FALSE(r.diag.warnings.empty());
  m.line.values[0] = cplx(std::nan(""), 0.0);
  CHECK_THROWS_AS(mellin_inverse(m, make_log_grid(0.1, 10.0, 50)), NumericalError);
}

TEST_CASE("forward then inverse reproduces smooth profiles") {
  const LogGrid g = make_log_grid(1e-6, 60.0, 1200);
  for (const auto& fn : {std::function<double(double)>([](double x) { return std::exp(-x); }),
                         std::function<double(double)>([](double x) { return std::exp(-x * x); })}) {
    const GridFunction f = GridFunction::sample(g, fn);
    const MellinSamples m = mellin_forward(f, 2.5, 40.0, default_dv(g));
    const InverseResult r = mellin_inverse(m, g, Taper::none());
    CHECK(weighted_l1_on(r.g, f, g.x_min, g.x_max) <= 1e-3);
  }
}

TEST_CASE("pv_cauchy: symmetric cancellation") {
  const double a = 1.3;
  VectorXd w = VectorXd::LinSpaced(4001, 0.0, 2.0 * a);
  VectorXd h = VectorXd::Ones(w.size());
  CHECK(std::abs(pv_cauchy(w, h, a).value) < 1e-12);
}

TEST_CASE("pv_cauchy: 1/(w+1) with the pole at 1") {
  // trapezoid error on geometric nodes over 14 decades is about 3e-6 at 2e4 nodes
  const int n = 60001;
  VectorXd w(n), h(n);
  for (int i = 0; i < n; ++i) {
    w[i] = 1e-7 * std::exp(i * std::log(1e14) / (n - 1));
    h[i] = 1.0 / (w[i] + 1.0);
  }
  const PVResult r = pv_cauchy(w, h, 1.0);
  CHECK(r.nodes_near_pole >= 8);
  CHECK(std::abs(r.value) <= 1e-6);
}

TEST_CASE("cauchy_limit: one-sided offsets") {
  const double a = 1.0;
  VectorXd w = VectorXd::LinSpaced(2001, 0.0, 2.0);
  VectorXd h = VectorXd::Ones(w.size());
  const cplx above = cauchy_limit(w, h, a, Approach::from_above);
  const cplx below = cauchy_limit(w, h, a, Approach::from_below);
  CHECK(std::abs(above - cplx(0.0, -pi)) <= 1e-6);
  CHECK(std::abs(below - cplx(0.0, pi)) <= 1e-6);
}

TEST_CASE("pv_cauchy: unresolved pole and bad input") {
  VectorXd w = VectorXd::LinSpaced(20, 0.0, 2.0);
  VectorXd h = VectorXd::Ones(20);
  CHECK_THROWS_AS(pv_cauchy(w, h, 1.0), NumericalError);
  CHECK_THROWS_AS(pv_cauchy(w, h, 3.0), DomainError);
  CHECK_THROWS_AS(pv_cauchy(w, VectorXd::Ones(5), 1.0), DomainError);
}

TEST_CASE("taper parsing and weights") {
  CHECK(Taper::parse("none").kind == Taper::Kind::none);
  CHECK(Taper::parse("tukey:0.25").fraction == 0.25);
  CHECK(Taper::parse("cosine").kind == Taper::Kind::tukey);
  CHECK(Taper::parse("gaussian:0.01").lambda == 0.01);
  CHECK_THROWS_AS(Taper::parse("hann"), DomainError);
  CHECK_THROWS_AS(Taper::parse("tukey:2"), DomainError);
  CHECK_THROWS_AS(Taper::parse("tukey:x"), DomainError);
  const Taper t = Taper::tukey(0.5);
  CHECK(t.weight(0.0, 10.0) == 1.0);
  CHECK(t.weight(5.0, 10.0) == 1.0);
  CHECK(t.weight(7.5, 10.0) == Approx(0.5));
  CHECK(t.weight(10.0, 10.0) == Approx(0.0));
  CHECK(t.weight(11.0, 10.0) == 0.0);
}

TEST_CASE("Mellin CSV round trip") {
  const GridFunction f = GridFunction::sample(make_log_grid(1e-5, 50.0, 400), [](double x) { return std::exp(-x); });
  const MellinSamples m = mellin_forward(f, 3.0, 5.0, 0.1);
  const auto path = (std::filesystem::temp_directory_path() / "fragmellin_mellin_roundtrip.csv").string();
  write_mellin_csv(m, path, Taper::tukey(0.5));
  const MellinSamples r = read_mellin_csv(path);
  REQUIRE(r.line.size() == m.line.size());
  CHECK(r.line.u == 3.0);
  for (Eigen::Index j = 0; j < m.line.size(); ++j) CHECK(r.values()[j] == m.values()[j]);
  std::filesystem::remove(path);
}
