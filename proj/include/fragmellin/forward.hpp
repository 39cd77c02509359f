#pragma once

#include "fragmellin/core.hpp"
#include "fragmellin/kernels.hpp"

#include <string>
#include <vector>

namespace fragmellin {

// Quadrature rule for the gain integral in z = x/y on the grid's own log step:
// z_m = r^{-m}, so x_i / z_m = x_{i+m}.
struct GainRule {
  LogGrid grid;
  RateSpec rate;
  VectorXd q;                // density weights per offset m
  VectorXd xg;               // alpha x_i^gamma
  std::vector<Atom> atoms;   // atom part, evaluated by interpolation
};

GainRule make_gain_rule(const LogGrid& grid, const KernelSpec& k, const RateSpec& rate);
VectorXd apply_gain(const GainRule& rule, const VectorXd& f);

GridFunction gain_operator(const GridFunction& f, const KernelSpec& k, const RateSpec& rate);

// Upper dt bound for the frozen-gain schemes: dt * alpha * x_max^gamma <= 50.
double dt_max(const RateSpec& rate, const LogGrid& grid);

// Plain exponential-Euler step.
GridFunction step(const GridFunction& f, const KernelSpec& k, const RateSpec& rate, double dt);

enum class Scheme { exp_euler, etd2 };

struct SimOptions {
  double dt = 0.0;  // <= 0: adaptive, dt_factor / (alpha xbar^gamma) capped by dt_max
  double dt_factor = 0.01;
  Scheme scheme = Scheme::etd2;
  bool mass_correction = true;
  double drift_tol = 1e-4;
};

struct TimeSeries {
  std::vector<double> times;
  std::vector<GridFunction> snapshots;
  std::vector<double> M0;  // includes a constant-extension estimate of the number below x_min
  std::vector<double> M1;
  std::vector<double> dust;  // mass lost below x_min, cumulative
  std::size_t steps = 0;
  Diagnostics diag;
};

struct Stepper {
  GainRule rule;
  SimOptions opt;
  VectorXd B;  // alpha x^gamma

  Stepper(const LogGrid& grid, const KernelSpec& k, const RateSpec& rate, SimOptions opt);
  // Advances f in place by dt, returns mass sent below the grid.
  double advance(VectorXd& f, double dt) const;
  double auto_dt(const VectorXd& f) const;
};

TimeSeries simulate(const GridFunction& f0, const KernelSpec& k, const RateSpec& rate, double t_end,
                    std::vector<double> output_times, const SimOptions& opt = {});

double number_moment(const GridFunction& f);

GridFunction rescale_snapshot(const GridFunction& f, double t, const RateSpec& rate, const LogGrid& profile_grid);
GridFunction rescale_snapshot(const GridFunction& f, double t, const RateSpec& rate);

void write_time_series(const TimeSeries& ts, const std::string& dir);

}  // namespace fragmellin
