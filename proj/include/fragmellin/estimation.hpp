#pragma once

#include "fragmellin/core.hpp"
#include "fragmellin/forward.hpp"
#include "fragmellin/kernels.hpp"
#include "fragmellin/mellin.hpp"
#include "fragmellin/spectral.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace fragmellin {

struct Window {
  double lo = 10.0;
  double hi = 30.0;
};

struct GammaFit {
  double gamma_hat = 0.0;
  double r_squared = 0.0;
  double slope_check = 0.0;  // plain log r / log s slope at R = gamma_hat
  Diagnostics diag;
};

// Fits log r(s) - log s, r(s) = s G(s)/G(s+R), on an asymptotic basis of log G:
// {s log s, s, log s, 1, s^-1 .. s^-order}; the s log s coefficient is 1/gamma.
GammaFit estimate_gamma_mellin(const GridFunction& g, double probe_R, Window w = {10.0, 30.0}, int order = 3,
                               int points = 41, const ForwardOptions& fo = {});

GammaFit estimate_gamma_moments(const std::vector<double>& t, const std::vector<double>& M0, Window w);
GammaFit estimate_gamma_moments(const TimeSeries& series, Window w);

struct AlphaFit {
  double alpha_hat = 0.0;
  VectorXd coef;
  double r_squared = 0.0;
  Diagnostics diag;
};

// Fits r(s) (s-2)/s = a + b/s + ... up to s^-order, r(s) = s G(s)/G(s+gamma); alpha = a/gamma.
AlphaFit estimate_alpha(const GridFunction& g, double gamma_hat, Window w = {10.0, 30.0}, int order = 3,
                        int points = 41, const ForwardOptions& fo = {});

// Relative iid noise of a sampled profile, from a robust spread of fourth differences of log g.
double noise_level(const GridFunction& g);

struct RecoverOptions {
  bool adaptive_V = true;  // cut the line where |G| reaches its noise floor
  double collapse = 1e-12;
  ForwardOptions forward = {};
};

MellinSamples recover_K0_line(const GridFunction& g, double alpha_hat, double gamma_hat, double s0, double V,
                              double dv, const RecoverOptions& opt = {});

enum class ReconMode { direct, primitive };

struct Reconstruction {
  GridFunction k0_hat;
  GridFunction H_hat;
  ReconMode mode = ReconMode::direct;
  Diagnostics diag;
};

Reconstruction reconstruct_k0(const MellinSamples& K0_line, const LogGrid& out_grid, const Taper& window,
                              ReconMode mode);

// Plausibility of a reconstructed kernel without reference to the truth: mass above z = 1.05,
// negative mass below 1, and first-moment deviation.
double kernel_plausibility(const GridFunction& k0_hat);
double total_variation(const GridFunction& f, double z_lo, double z_hi);

struct SweepEntry {
  double V = 0.0;
  double total_variation = 0.0;           // of z^s0 k0_hat over the kernel grid (the function the line transforms)
  double plain_total_variation = 0.0;     // of k0_hat on sweep_tv_range
  double discarded = 0.0;  // line energy beyond V
};

struct EstimationOptions {
  double probe_R = 1.0;
  Window gamma_window = {10.0, 30.0};
  Window alpha_window = {10.0, 30.0};
  Window moment_window = {50.0, 500.0};
  int fit_order = -1;  // < 0: highest order in [1, max_fit_order] that the noise level supports
  int max_fit_order = 3;
  int bootstrap = 12;
  std::uint64_t seed = 1;
  std::vector<double> s0_candidates = {2.25, 2.5, 3.0, 3.5};
  double V = 40.0;
  double dv = 0.05;
  Taper taper = {};
  ReconMode mode = ReconMode::direct;
  bool auto_mode = true;  // primitive reconstruction when the estimated noise level exceeds 1e-4
  bool adaptive_V = true;
  std::vector<double> sweep_V = {40.0, 30.0, 20.0, 15.0, 10.0, 7.0, 5.0, 3.0};
  // sweep reconstructions use a Gaussian window exp(-decay (v/V)^2)
  double sweep_decay = 9.0;
  Window sweep_tv_range = {0.05, 1.5};
  LogGrid kernel_grid = make_log_grid(0.01, 2.0, 600);
  ForwardOptions forward = {};
};

// Highest fit order whose bootstrap spread of gamma_hat under noise `sigma` stays below `tol` relative.
int select_fit_order(const GridFunction& g, double sigma, const EstimationOptions& opt, double tol = 0.01,
                     Diagnostics* diag = nullptr);

struct EstimationReport {
  double gamma_hat = 0.0;
  double alpha_hat = 0.0;
  std::string gamma_method;
  double s0 = 0.0;
  double V_used = 0.0;
  MellinSamples K0_line;
  GridFunction k0_hat;
  GridFunction H_hat;
  std::vector<SweepEntry> sweep;
  double lcurve_V = 0.0;
  Diagnostics diag;
};

EstimationReport estimate(const GridFunction& g, const EstimationOptions& opt,
                          const std::optional<std::pair<std::vector<double>, std::vector<double>>>& series = std::nullopt);

struct RoundtripOptions {
  SpectralConfig spectral;
  LogGrid profile_grid = make_log_grid(1e-5, 150.0, 1400);
  double noise = 0.0;
  std::uint64_t seed = 1;
  EstimationOptions estimation = {};
};

struct RoundtripResult {
  EstimationReport report;
  ProfileResult profile;
  double gamma_error = 0.0;
  double alpha_error = 0.0;
  double kernel_l1 = std::numeric_limits<double>::quiet_NaN();  // relative, away from discontinuities; NaN for atoms
  double kernel_l2 = std::numeric_limits<double>::quiet_NaN();  // relative, on [0.05, 0.95]
};

RoundtripResult roundtrip(const KernelSpec& k, const RateSpec& rate, const RoundtripOptions& opt);

// Relative L1 / L2 errors of a reconstructed kernel against a density, on [a, b] by uniform sampling.
double kernel_rel_l2(const GridFunction& k0_hat, const KernelSpec& truth, double a, double b);
double kernel_rel_l1(const GridFunction& k0_hat, const KernelSpec& truth,
                     const std::vector<std::pair<double, double>>& intervals);

// Multiplicative iid Gaussian noise of relative size `level`.
GridFunction perturb(const GridFunction& g, double level, std::uint64_t seed);

void write_report(const EstimationReport& r, const std::string& dir, const std::string& extra_json = "");

}  // namespace fragmellin
