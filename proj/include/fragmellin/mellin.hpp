#pragma once

#include "fragmellin/core.hpp"

#include <string>

namespace fragmellin {

struct MellinSamples {
  ComplexLine line;
  Diagnostics diag;

  const VectorXcd& values() const { return line.values; }
};

struct Taper {
  enum class Kind { none, tukey, gaussian };
  Kind kind = Kind::tukey;
  double fraction = 0.5;  // tukey: tapered share of [-V, V]
  double lambda = 0.0;    // gaussian: W = exp(-lambda v^2)

  double weight(double v, double V) const;
  std::string describe() const;
  static Taper none() { return {Kind::none, 0.0, 0.0}; }
  static Taper tukey(double fraction) { return {Kind::tukey, fraction, 0.0}; }
  static Taper gaussian(double lambda) { return {Kind::gaussian, 0.0, lambda}; }
  static Taper parse(const std::string& text);
};

struct ForwardOptions {
  // Extends f below x_min by its first value (bounded-near-zero densities).
  bool constant_lower_tail = true;
  // Clip negative samples at zero (noisy inputs); the clipped mass is reported.
  bool clip_negative = false;
};

// Default line step, Nyquist-matched to the grid's log extent.
double default_dv(const LogGrid& grid);

MellinSamples mellin_forward(const GridFunction& f, double u, double V, double dv, const ForwardOptions& opt = {});
// Single evaluation at complex s.
cplx mellin_at(const GridFunction& f, cplx s, const ForwardOptions& opt = {});
// Real-s evaluation returning log G(s); stable for large s.
double log_mellin_real(const GridFunction& f, double s, const ForwardOptions& opt = {});

struct InverseResult {
  GridFunction g;
  double imag_residual = 0.0;  // max |Im| relative to max |Re|
  bool symmetric = true;
  Diagnostics diag;
};

InverseResult mellin_inverse(const MellinSamples& samples, const LogGrid& x_targets, const Taper& window = {});

struct PVResult {
  cplx value;
  int nodes_near_pole = 0;
};

// Principal value of the integral of h(w)/(w-a) over the sampled range of w (w >= 0, increasing).
PVResult pv_cauchy(const VectorXd& w, const VectorXd& h, double a);

enum class Approach { from_above, from_below };
// Limit of the integral of h(w)/(w - a +/- i eps): the path above the pole adds -i pi h(a).
cplx cauchy_limit(const VectorXd& w, const VectorXd& h, double a, Approach side);

void write_mellin_csv(const MellinSamples& m, const std::string& path, const Taper& taper);
MellinSamples read_mellin_csv(const std::string& path);

}  // namespace fragmellin
