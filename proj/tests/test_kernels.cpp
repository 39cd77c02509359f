#include "fragmellin/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <string>

using namespace fragmellin;
using doctest::Approx;

namespace {
// trapezoid in ln z with a nonzero end slope at z = 1: O(h^2), about 3e-6 here
KernelSpec sampled_beta22() {
  const LogGrid zg = make_log_grid(1e-3, 1.0, 4000);
  return KernelSpec::from_samples(GridFunction::sample(zg, [](double z) { return 12.0 * z * (1.0 - z); }));
}

bool has_warning(const std::vector<std::string>& w, const std::string& needle) {
  for (const auto& s : w)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}
}  // namespace

TEST_CASE("validate_kernel: bundled closed forms") {
  for (const KernelSpec& k : {KernelSpec::uniform_binary(), KernelSpec::mitosis(), KernelSpec::beta(2.0, 2.0)}) {
    const KernelDiagnostics d = validate_kernel(k);
    CHECK(d.pass);
    CHECK(d.violations.empty());
    CHECK(d.mass == Approx(2.0).epsilon(1e-10));
    CHECK(d.first_moment == Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("validate_kernel reports violations instead of throwing") {
  KernelSpec k = KernelSpec::uniform_binary(3.0);
  KernelDiagnostics d = validate_kernel(k);
  CHECK_FALSE(d.pass);
  CHECK_FALSE(d.violations.empty());
  CHECK(d.first_moment == Approx(1.5));

  KernelSpec bad;
  bad.atoms = {{1.5, 1.0}};
  d = validate_kernel(bad);
  CHECK_FALSE(d.pass);
  CHECK(has_warning(d.violations, "outside"));
}

TEST_CASE("renormalize fixes the first moment") {
  const KernelSpec k = renormalize(KernelSpec::uniform_binary(3.0));
  CHECK(validate_kernel(k).pass);
  KernelSpec a;
  a.atoms = {{0.25, 1.0}, {0.75, 1.0}};
  CHECK(validate_kernel(renormalize(a)).first_moment == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("k0_mellin: closed-form values") {
  CHECK(std::abs(k0_mellin(KernelSpec::uniform_binary(), 2.0) - 1.0) < 1e-12);
  CHECK(std::abs(k0_mellin(KernelSpec::uniform_binary(), 5.0) - 0.4) < 1e-12);
  CHECK(std::abs(k0_mellin(KernelSpec::mitosis(), 3.0) - 0.5) < 1e-12);
  CHECK(std::abs(k0_mellin(KernelSpec::beta(2.0, 2.0), 4.0) - 0.4) < 1e-12);
  const cplx s(3.0, 7.0);
  CHECK(std::abs(k0_mellin(KernelSpec::beta(2.0, 2.0), s) - 12.0 / ((s + 1.0) * (s + 2.0))) < 1e-12);
  CHECK_THROWS_AS(k0_mellin(KernelSpec::uniform_binary(), 0.5), DomainError);
}

TEST_CASE("k0_mellin: sampled densities by quadrature") {
  const KernelSpec k = sampled_beta22();
  CHECK(std::abs(k0_mellin(k, 2.0) - 1.0) < 1e-5);
  const cplx s(4.0, 3.0);
  CHECK(std::abs(k0_mellin(k, s) - 12.0 / ((s + 1.0) * (s + 2.0))) < 1e-5);
}

TEST_CASE("K0(2) = 1 for every validated kernel") {
  for (const KernelSpec& k : {KernelSpec::uniform_binary(), KernelSpec::mitosis(), KernelSpec::beta(2.0, 2.0),
                              KernelSpec::beta(1.5, 3.0), sampled_beta22()}) {
    if (!validate_kernel(k, 1e-5).pass) continue;
    CHECK(std::abs(k0_mellin(k, 2.0) - 1.0) <= 1e-5);
  }
  CHECK(std::abs(k0_mellin(KernelSpec::beta(1.5, 3.0), 2.0) - 1.0) <= 1e-6);
}

TEST_CASE("|K0(s)| < 1 on the real axis beyond 2") {
  for (const KernelSpec& k : {KernelSpec::uniform_binary(), KernelSpec::mitosis(), KernelSpec::beta(2.0, 2.0)}) {
    for (double s = 2.01; s < 60.0; s *= 1.1) CHECK(std::abs(k0_mellin(k, s)) < 1.0);
  }
}

TEST_CASE("tail coefficients") {
  TailCoefficient t = k0_tail_coefficient(KernelSpec::uniform_binary());
  CHECK(t.value == Approx(2.0));
  t = k0_tail_coefficient(KernelSpec::beta(2.0, 2.0));
  CHECK(t.value == 0.0);
  t = k0_tail_coefficient(KernelSpec::mitosis());
  CHECK(t.value == 0.0);
  CHECK_FALSE(t.warnings.empty());

  KernelSpec at_one;
  at_one.atoms = {{1.0, 1.0}};
  CHECK_THROWS_AS(k0_tail_coefficient(at_one), NumericalError);
}

TEST_CASE("s K0(s) approaches k0(1) with decreasing error") {
  const KernelSpec beta = KernelSpec::beta(2.0, 1.0);  // 3z, nonzero at z = 1
  const double k1 = beta.density(1.0);
  double prev = 1e300;
  for (double s : {50.0, 100.0, 200.0}) {
    const double e = std::abs(s * k0_mellin(beta, s).real() - k1);
    CHECK(e < prev);
    prev = e;
  }
  CHECK(k0_tail_coefficient(beta).value == Approx(k1));
}

TEST_CASE("atoms do not decay along a vertical line") {
  const KernelSpec k = KernelSpec::mitosis();
  const double u = 3.0;
  double worst = 1e300;
  for (double v = 50.0; v <= 100.0; v += 0.5) worst = std::min(worst, std::abs(k0_mellin(k, cplx(u, v))));
  // a single atom has constant modulus c z^{u-1} on the line
  CHECK(worst > 0.99 * 2.0 * std::pow(0.5, u - 1.0));
  // a density does decay
  CHECK(std::abs(k0_mellin(KernelSpec::uniform_binary(), cplx(u, 100.0))) < 0.03);
}

TEST_CASE("kernel JSON round trip") {
  for (const KernelSpec& k : {KernelSpec::uniform_binary(), KernelSpec::mitosis(), KernelSpec::beta(2.0, 2.0)}) {
    const KernelSpec r = kernel_from_json_text(kernel_to_json_text(k));
    for (double s : {2.5, 4.0, 9.0}) CHECK(std::abs(k0_mellin(r, s) - k0_mellin(k, s)) < 1e-14);
  }
  CHECK_THROWS_AS(kernel_from_json_text("{\"density\": {\"kind\": \"weird\"}}"), DomainError);
  CHECK_THROWS_AS(kernel_from_json_text("{}"), DomainError);
  CHECK_THROWS_AS(kernel_from_json_text("not json"), DomainError);
  CHECK_THROWS_AS(kernel_from_json_text("{\"atoms\": [[0.5]]}"), DomainError);
}

TEST_CASE("rate spec") {
  const RateSpec r(2.0, 1.5);
  CHECK(r(4.0) == Approx(16.0));
  CHECK_THROWS_AS(RateSpec(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(RateSpec(1.0, -1.0), DomainError);
}
