#pragma once

#include "fragmellin/core.hpp"
#include "fragmellin/forward.hpp"
#include "fragmellin/kernels.hpp"
#include "fragmellin/mellin.hpp"

#include <cstdint>
#include <string>

namespace fragmellin {

struct SpectralConfig {
  double s0 = 4.0;
  double V = 200.0;
  double dv = 0.01;      // step of the sigma line carrying log Phi
  double u_eval = 4.5;
  double rho = 1.0;
  double dv_inv = 0.0;   // step of the inversion lines (<= 0: half the grid's Nyquist step)
  Taper taper = {};
  bool multi_line = true;  // pick the inversion line per x (saddle rule) instead of u_eval only
  std::uint64_t seed = 12345;  // for the random strip checks

  static SpectralConfig defaults(const RateSpec& rate);
  void validate(const RateSpec& rate) const;
};

cplx phi(cplx s, const KernelSpec& k, const RateSpec& rate);

// log Phi on Re sigma = s0, |v| <= V + 6 gamma, continuous branch starting from the real value.
ComplexLine log_phi_line(const KernelSpec& k, const RateSpec& rate, const SpectralConfig& cfg,
                         Diagnostics* diag = nullptr);

// Nonvanishing solution of G(s + gamma) = Phi(s) G(s), fixed up to a constant.
class GTilde {
 public:
  GTilde(KernelSpec k, RateSpec rate, SpectralConfig cfg);
  GTilde(KernelSpec k, RateSpec rate, SpectralConfig cfg, ComplexLine log_phi);

  cplx log_value(cplx s) const;
  cplx value(cplx s) const { return std::exp(log_value(s)); }
  // Periodic exponent for Re s in the base strip (s0, s0 + gamma).
  cplx base_exponent(cplx s) const;
  // Branch of log Phi at s0 + iy that matches the sampled line.
  cplx log_phi_on_line(double y) const;

  const ComplexLine& line() const { return line_; }
  const SpectralConfig& config() const { return cfg_; }
  const RateSpec& rate() const { return rate_; }
  const KernelSpec& kernel() const { return k_; }

 private:
  KernelSpec k_;
  RateSpec rate_;
  SpectralConfig cfg_;
  ComplexLine line_;
};

cplx g_tilde(cplx s, const GTilde& gt);

enum class ProfileMethod { dynamic, spectral };

struct ProfileResult {
  GridFunction g;
  double rho = 1.0;
  double residual = 0.0;
  ProfileMethod method = ProfileMethod::spectral;
  Diagnostics diag;
};

ProfileResult spectral_profile(const KernelSpec& k, const RateSpec& rate, const SpectralConfig& cfg,
                               const LogGrid& out_grid);

struct DynamicConfig {
  LogGrid sim_grid;
  double t_end = 99.0;
  SimOptions sim = {};
  double rho = 1.0;
};

// Long-time simulation from e^{-x}, rescaled and normalized to mass rho.
ProfileResult dynamic_profile(const KernelSpec& k, const RateSpec& rate, const DynamicConfig& cfg,
                              const LogGrid& out_grid);

// Weak-form residual of the stationary profile equation, aggregated over test functions.
double stationary_residual(const GridFunction& g, const KernelSpec& k, const RateSpec& rate);

// Relative functional-equation residual of G from mellin_forward(g) at seeded random points of
// the strip [s0, s0 + gamma] x [-im_max, im_max].
double functional_residual(const GridFunction& g, const KernelSpec& k, const RateSpec& rate, double s0,
                           int points, double im_max, std::uint64_t seed);

void write_profile(const ProfileResult& r, const std::string& csv_path, const std::string& json_path);

}  // namespace fragmellin
