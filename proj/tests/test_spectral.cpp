#include "fragmellin/spectral.hpp"

#include <doctest.h>

#include <cmath>

using namespace fragmellin;
using doctest::Approx;

namespace {
const RateSpec unit(1.0, 1.0);

const LogGrid& profile_grid() {
  static const LogGrid g = make_log_grid(1e-5, 150.0, 1400);
  return g;
}

double l1_on(const GridFunction& a, const std::function<double(double)>& truth, double lo, double hi) {
  double acc = 0.0;
  for (int i = 0; i < a.grid.n; ++i) {
    const double x = a.grid.nodes[i];
    if (x >= lo && x <= hi) acc += a.grid.weights[i] * std::abs(a.values[i] - truth(x));
  }
  return acc;
}
}  // namespace

TEST_CASE("phi: closed values and the boundary") {
  const KernelSpec k = KernelSpec::uniform_binary();
  CHECK(std::abs(phi(4.0, k, unit) - 4.0) < 1e-13);
  CHECK_THROWS_AS(phi(2.0, k, unit), DomainError);
  CHECK_THROWS_AS(phi(cplx(1.5, 3.0), k, unit), DomainError);
  for (double s : {50.0, 200.0, 1000.0}) CHECK(std::abs(phi(s, k, unit) / s - 1.0) < 1e-10);
  // beta kernel grows the same way to leading order
  const KernelSpec b = KernelSpec::beta(2.0, 2.0);
  CHECK(std::abs(phi(400.0, b, unit) / 400.0 - 1.0) < 1e-2);
}

TEST_CASE("log_phi_line: real value at v = 0 and reflection") {
  SpectralConfig cfg = SpectralConfig::defaults(unit);
  cfg.s0 = 4.0;
  cfg.u_eval = 4.5;
  const ComplexLine line = log_phi_line(KernelSpec::uniform_binary(), unit, cfg);
  const Eigen::Index n = line.size(), mid = n / 2;
  REQUIRE(line.v[mid] == 0.0);
  CHECK(std::abs(line.values[mid] - std::log(4.0)) < 1e-13);
  for (Eigen::Index j = 1; j < n / 2; j += 97) {
    CHECK(std::abs(line.values[mid - j] - std::conj(line.values[mid + j])) < 1e-10);
  }
  // exponentiates back to Phi with a continuous branch
  for (Eigen::Index j = 0; j < n; j += 1013) {
    CHECK(std::abs(std::exp(line.values[j]) / phi(line.s(j), KernelSpec::uniform_binary(), unit) - 1.0) < 1e-10);
  }
  double jump = 0.0;
  for (Eigen::Index j = 1; j < n; ++j) jump = std::max(jump, std::abs(line.values[j].imag() - line.values[j - 1].imag()));
  CHECK(jump < 0.1);
}

TEST_CASE("SpectralConfig defaults and validation") {
  const SpectralConfig c = SpectralConfig::defaults(RateSpec(1.0, 2.0));
  CHECK(c.s0 == 5.0);
  CHECK(c.u_eval == 6.0);
  SpectralConfig bad = c;
  bad.s0 = 2.0;
  CHECK_THROWS_AS(bad.validate(RateSpec(1.0, 2.0)), DomainError);
  bad = c;
  bad.u_eval = bad.s0 + 3.0;
  CHECK_THROWS_AS(bad.validate(RateSpec(1.0, 2.0)), DomainError);
}

TEST_CASE("GTilde for the exact case is a multiple of Gamma") {
  const SpectralConfig cfg = SpectralConfig::defaults(unit);
  const GTilde gt(KernelSpec::uniform_binary(), unit, cfg);
  double lo = 1e300, hi = 0.0;
  for (double a : {0.1, 0.3, 0.5, 0.7, 0.9})
    for (double v : {-5.0, 0.0, 2.0, 8.0}) {
      const cplx s(cfg.s0 + a, v);
      const cplx r = std::exp(gt.log_value(s) - log_gamma(s));
      CHECK(std::abs(r.imag()) < 1e-2 * std::abs(r));
      lo = std::min(lo, std::abs(r));
      hi = std::max(hi, std::abs(r));
    }
  CHECK((hi - lo) / lo <= 0.01);
}

TEST_CASE("GTilde: functional equation, nonvanishing, continuity across seams") {
  for (const KernelSpec& k : {KernelSpec::uniform_binary(), KernelSpec::beta(2.0, 2.0), KernelSpec::mitosis()}) {
    CAPTURE(k.describe());
    const SpectralConfig cfg = SpectralConfig::defaults(unit);
    const GTilde gt(k, unit, cfg);
    for (double a : {0.05, 0.37, 0.61, 0.95})
      for (double v : {-15.0, -2.0, 0.0, 4.0, 19.0}) {
        const cplx s(cfg.s0 + a, v);
        const cplx lhs = std::exp(gt.log_value(s + 1.0) - gt.log_value(s));
        CHECK(std::abs(lhs - phi(s, k, unit)) / std::abs(lhs) <= 1e-3);
        CHECK(std::abs(gt.value(s)) > 0.0);
      }
    for (int kk : {0, 1, 2})
      for (double v : {0.0, 3.0, -7.0}) {
        const double seam = cfg.s0 + kk;
        const cplx l = gt.log_value(cplx(seam - 1e-4, v)), r = gt.log_value(cplx(seam + 1e-4, v));
        CHECK(std::abs(std::exp(r - l) - 1.0) < 1e-3);
      }
  }
}

TEST_CASE("spectral_profile: exact case gives exp(-z)") {
  const ProfileResult r = spectral_profile(KernelSpec::uniform_binary(), unit, SpectralConfig::defaults(unit), profile_grid());
  CHECK(l1_on(r.g, [](double z) { return std::exp(-z); }, 0.05, 20.0) < 1e-2);
  CHECK(integrate(r.g, 1.0) == Approx(1.0).epsilon(1e-6));
  CHECK(r.g.values.minCoeff() >= -1e-8 * r.g.values.maxCoeff());
  CHECK(r.method == ProfileMethod::spectral);
}

TEST_CASE("spectral_profile: beta kernel residual and rho scaling") {
  const KernelSpec b = KernelSpec::beta(2.0, 2.0);
  SpectralConfig cfg = SpectralConfig::defaults(unit);
  const ProfileResult r1 = spectral_profile(b, unit, cfg, profile_grid());
  CHECK(stationary_residual(r1.g, b, unit) < 1e-3);
  CHECK(functional_residual(r1.g, b, unit, 3.0, 20, 10.0, 7) <= 1e-3);
  cfg.rho = 2.0;
  const ProfileResult r2 = spectral_profile(b, unit, cfg, profile_grid());
  const double m = r1.g.values.maxCoeff();
  for (int i = 0; i < profile_grid().n; i += 25) CHECK(std::abs(r2.g.values[i] - 2.0 * r1.g.values[i]) <= 1e-9 * m);
}

TEST_CASE("spectral_profile: gamma = 2") {
  const RateSpec r2(1.0, 2.0);
  const KernelSpec k = KernelSpec::uniform_binary();
  // uniform kernel: g = C exp(-alpha z^gamma); unit mass gives 2 exp(-z^2)
  const ProfileResult r = spectral_profile(k, r2, SpectralConfig::defaults(r2), profile_grid());
  const double err = l1_on(r.g, [](double z) { return 2.0 * std::exp(-z * z); }, 0.05, 6.0);
  CHECK(err < 1e-2);
  CHECK(stationary_residual(r.g, k, r2) < 1e-3);
}

TEST_CASE("stationary_residual separates solutions from non-solutions") {
  const LogGrid g = make_log_grid(1e-6, 80.0, 1600);
  const KernelSpec k = KernelSpec::uniform_binary();
  const GridFunction e1 = GridFunction::sample(g, [](double z) { return std::exp(-z); });
  const GridFunction e2 = GridFunction::sample(g, [](double z) { return std::exp(-2.0 * z); });
  CHECK(stationary_residual(e1, k, unit) <= 1e-5);
  CHECK(stationary_residual(e2, k, unit) > 0.1);
  CHECK(stationary_residual(GridFunction::zeros(g), k, unit) == 0.0);
}

TEST_CASE("dynamic and spectral profiles agree for the exact case") {
  const LogGrid pg = make_log_grid(1e-4, 40.0, 1024);
  const ProfileResult sp = spectral_profile(KernelSpec::uniform_binary(), unit, SpectralConfig::defaults(unit), pg);
  DynamicConfig dc;
  dc.sim_grid = make_log_grid(1e-7, 60.0, 1024);
  dc.t_end = 99.0;
  const ProfileResult dp = dynamic_profile(KernelSpec::uniform_binary(), unit, dc, pg);
  CHECK(dp.method == ProfileMethod::dynamic);
  CHECK(l1_distance(sp.g, dp.g) <= 0.05);
  CHECK(integrate(dp.g, 1.0) == Approx(1.0).epsilon(1e-6));
}
