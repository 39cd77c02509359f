#pragma once

#include "fragmellin/core.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fragmellin {

struct Atom {
  double z = 1.0;
  double c = 0.0;
};

enum class DensityKind { none, uniform, beta, samples };

// k0 = density part + atoms, supported in [0, 1].
struct KernelSpec {
  DensityKind kind = DensityKind::none;
  double kappa = 2.0;  // uniform: constant density value
  double p = 2.0;      // beta: z^{p-1} (1-z)^{q-1}, scaled by beta_scale
  double q = 2.0;
  double beta_scale = 1.0;
  std::optional<GridFunction> samples;  // sampled density on a grid inside (0, 1]
  std::vector<Atom> atoms;

  static KernelSpec uniform_binary(double kappa = 2.0);
  // Normalized so the first moment is one.
  static KernelSpec beta(double p, double q);
  static KernelSpec mitosis();
  static KernelSpec from_samples(GridFunction density);

  bool has_density() const { return kind != DensityKind::none; }
  // Density value at z (0 outside (0, 1]).
  double density(double z) const;
  std::string describe() const;
};

struct RateSpec {
  double alpha = 1.0;
  double gamma = 1.0;

  RateSpec() = default;
  RateSpec(double a, double g);
  double operator()(double x) const { return alpha * std::pow(x, gamma); }
};

struct KernelDiagnostics {
  double mass = 0.0;
  double first_moment = 0.0;
  bool pass = false;
  std::vector<std::string> violations;
  std::vector<std::string> warnings;
};

KernelDiagnostics validate_kernel(const KernelSpec& k, double tol = 1e-8);

// Rescales density and atom weights so the first moment equals one.
KernelSpec renormalize(const KernelSpec& k);

cplx k0_mellin(const KernelSpec& k, cplx s);
// Same, for any Re s at which the defining integral converges (no Re s >= 1 guard).
cplx k0_mellin_unchecked(const KernelSpec& k, cplx s);

struct TailCoefficient {
  double value = 0.0;
  std::vector<std::string> warnings;
};

// Limit of s K0(s) along the real axis. Throws NumericalError when an atom sits at z = 1
// or the density is unbounded at 1.
TailCoefficient k0_tail_coefficient(const KernelSpec& k);

// JSON: {"density": {"kind": "uniform"|"beta"|"samples", ...}, "atoms": [[z, c], ...]}
KernelSpec kernel_from_json_text(const std::string& text, const std::string& base_dir = ".");
KernelSpec read_kernel_file(const std::string& path);
std::string kernel_to_json_text(const KernelSpec& k);

}  // namespace fragmellin
