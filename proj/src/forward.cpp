#include "fragmellin/forward.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace fragmellin {

namespace {

double phi1(double z) {
  if (std::abs(z) < 1e-5) return 1.0 + z / 2.0 + z * z / 6.0;
  return std::expm1(z) / z;
}

double phi2(double z) {
  if (std::abs(z) < 0.1) {
    double term = 0.5, acc = 0.0;
    for (int k = 0; k < 10; ++k) {
      acc += term;
      term *= z / (k + 3);
    }
    return acc;
  }
  return (std::expm1(z) - z) / (z * z);
}

double density_first_moment(const KernelSpec& k) {
  KernelSpec d = k;
  d.atoms.clear();
  return d.has_density() ? validate_kernel(d, 1e300).first_moment : 0.0;
}

}  // namespace

GainRule make_gain_rule(const LogGrid& grid, const KernelSpec& k, const RateSpec& rate) {
  GainRule rule;
  rule.grid = grid;
  rule.rate = rate;
  rule.atoms = k.atoms;
  const int n = grid.n;
  const double h = grid.log_step;
  rule.xg.resize(n);
  for (int i = 0; i < n; ++i) rule.xg[i] = rate(grid.nodes[i]);
  rule.q = VectorXd::Zero(n);
  if (!k.has_density()) return rule;
  double first = 0.0;
  for (int m = 0; m < n; ++m) {
    double w = 1.0;
    if (m == 0) w = 3.0 / 8.0;
    else if (m == 1) w = 7.0 / 6.0;
    else if (m == 2) w = 23.0 / 24.0;
    const double z = std::exp(-h * m);
    double kz = k.density(z);
    if (!std::isfinite(kz)) kz = k.density(std::exp(-h / 3.0));
    rule.q[m] = h * w * std::exp(rate.gamma * h * m) * kz;
    first += h * w * z * z * kz;
  }
  const double target = density_first_moment(k);
  if (first > 0.0 && target > 0.0) rule.q *= target / first;
  return rule;
}

VectorXd apply_gain(const GainRule& rule, const VectorXd& f) {
  const int n = rule.grid.n;
  VectorXd out = VectorXd::Zero(n);
  const bool dense = rule.q.cwiseAbs().maxCoeff() > 0.0;
  GridFunction fg;
  if (!rule.atoms.empty()) fg = GridFunction(rule.grid, f);
  auto node = [&](Eigen::Index ii) {
    const int i = static_cast<int>(ii);
    double acc = 0.0;
    if (dense) acc = rule.q.head(n - i).dot(f.segment(i, n - i));
    for (const auto& a : rule.atoms)
      acc += a.c * std::pow(a.z, -rule.rate.gamma - 1.0) * interp_log(fg, rule.grid.nodes[i] / a.z);
    out[i] = rule.xg[i] * acc;
  };
  if (n >= 2048) parallel_for(n, node, 256);
  else
    for (int i = 0; i < n; ++i) node(i);
  return out;
}

GridFunction gain_operator(const GridFunction& f, const KernelSpec& k, const RateSpec& rate) {
  if (f.values.size() > 0 && f.values.minCoeff() < -1e-12)
    throw DomainError("gain_operator: f has negative entries");
  return GridFunction(f.grid, apply_gain(make_gain_rule(f.grid, k, rate), f.values));
}

double dt_max(const RateSpec& rate, const LogGrid& grid) { return 50.0 / rate(grid.x_max); }

GridFunction step(const GridFunction& f, const KernelSpec& k, const RateSpec& rate, double dt) {
  if (!(dt > 0.0)) throw DomainError("step: dt must be positive");
  if (dt > dt_max(rate, f.grid) * (1.0 + 1e-12))
    throw NumericalError("stability: dt exceeds dt_max = " + std::to_string(dt_max(rate, f.grid)));
  SimOptions opt;
  opt.scheme = Scheme::exp_euler;
  opt.mass_correction = false;
  Stepper st(f.grid, k, rate, opt);
  VectorXd v = f.values;
  st.advance(v, dt);
  return GridFunction(f.grid, v);
}

Stepper::Stepper(const LogGrid& grid, const KernelSpec& k, const RateSpec& rate, SimOptions o)
    : rule(make_gain_rule(grid, k, rate)), opt(o), B(rule.xg) {}

double Stepper::advance(VectorXd& f, double dt) const {
  const auto& w = rule.grid.weights;
  const auto& x = rule.grid.nodes;
  const VectorXd zz = -B * dt;
  const VectorXd decay = zz.array().exp();
  VectorXd p1(zz.size()), p2(zz.size());
  for (Eigen::Index i = 0; i < zz.size(); ++i) {
    p1[i] = phi1(zz[i]) * dt;
    p2[i] = phi2(zz[i]) * dt;
  }
  const VectorXd G = apply_gain(rule, f);
  VectorXd inc = p1.cwiseProduct(G);
  if (opt.scheme == Scheme::etd2) {
    const VectorXd a = decay.cwiseProduct(f) + inc;
    inc += p2.cwiseProduct(apply_gain(rule, a) - G);
  }
  double dust = 0.0;
  if (opt.mass_correction) {
    const VectorXd wx = w.cwiseProduct(x);
    const double lost = wx.dot((VectorXd::Ones(f.size()) - decay).cwiseProduct(f));
    const double broken = wx.dot(B.cwiseProduct(f));
    const double inc_mass = wx.dot(inc);
    if (broken > 0.0 && inc_mass > 0.0) {
      const double frac = std::min(1.0, wx.dot(G) / broken);
      inc *= lost * frac / inc_mass;
      dust = lost * (1.0 - frac);
    }
  }
  f = decay.cwiseProduct(f) + inc;
  return dust;
}

double Stepper::auto_dt(const VectorXd& f) const {
  const auto& w = rule.grid.weights;
  const auto& x = rule.grid.nodes;
  const double m1 = (w.cwiseProduct(x)).dot(f);
  const double m2 = (w.cwiseProduct(x).cwiseProduct(x)).dot(f);
  const double cap = dt_max(rule.rate, rule.grid);
  if (!(m1 > 0.0)) return cap;
  const double xbar = m2 / m1;
  return std::min(cap, opt.dt_factor / rule.rate(xbar));
}

double number_moment(const GridFunction& f) {
  return integrate(f, 0.0) + f.grid.x_min * std::max(0.0, f.values[0]);
}

TimeSeries simulate(const GridFunction& f0, const KernelSpec& k, const RateSpec& rate, double t_end,
                    std::vector<double> output_times, const SimOptions& opt) {
  if (!(t_end > 0.0)) throw DomainError("simulate: t_end must be positive");
  if (f0.values.minCoeff() < 0.0) throw DomainError("simulate: initial data must be nonnegative");
  const double cap = dt_max(rate, f0.grid);
  if (opt.dt > 0.0 && opt.dt > cap * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "stability: dt = " << opt.dt << " exceeds dt_max = " << cap << " (dt*alpha*x_max^gamma <= 50)";
    throw NumericalError(os.str());
  }
  std::sort(output_times.begin(), output_times.end());
  output_times.erase(std::unique(output_times.begin(), output_times.end()), output_times.end());
  for (double t : output_times)
    if (t < 0.0 || t > t_end * (1.0 + 1e-12)) throw DomainError("simulate: output time outside [0, t_end]");
  if (output_times.empty() || output_times.back() < t_end) output_times.push_back(t_end);

  Stepper st(f0.grid, k, rate, opt);
  TimeSeries ts;
  VectorXd f = f0.values;
  double t = 0.0, dust = 0.0;
  const double m1_0 = integrate(f0, 1.0);
  double max_drift = 0.0, max_drop = 0.0;
  double prev_m0 = number_moment(f0);
  auto record = [&](double tt) {
    GridFunction snap(f0.grid, f);
    ts.times.push_back(tt);
    ts.M0.push_back(number_moment(snap));
    ts.M1.push_back(integrate(snap, 1.0));
    ts.dust.push_back(dust);
    ts.snapshots.push_back(std::move(snap));
  };
  std::size_t next = 0;
  if (output_times[0] == 0.0) {
    record(0.0);
    next = 1;
  }
  while (next < output_times.size()) {
    const double target = output_times[next];
    while (t < target - 1e-12 * std::max(1.0, target)) {
      double dt = opt.dt > 0.0 ? opt.dt : st.auto_dt(f);
      if (t + dt > target) dt = target - t;
      dust += st.advance(f, dt);
      t += dt;
      ++ts.steps;
      if (m1_0 > 0.0) {
        const double m1 = (f0.grid.weights.cwiseProduct(f0.grid.nodes)).dot(f);
        max_drift = std::max(max_drift, std::abs(m1 - m1_0) / m1_0);
      }
      const double m0 = integrate(GridFunction(f0.grid, f), 0.0) + f0.grid.x_min * std::max(0.0, f[0]);
      max_drop = std::max(max_drop, prev_m0 - m0);
      prev_m0 = m0;
    }
    t = target;
    record(target);
    ++next;
  }
  ts.diag.set("max_mass_drift", max_drift);
  ts.diag.set("max_number_drop", max_drop);
  ts.diag.set("dust", dust);
  ts.diag.set("steps", static_cast<double>(ts.steps));
  ts.diag.set("dt_max", cap);
  if (max_drift > opt.drift_tol) {
    std::ostringstream os;
    os << "relative mass drift " << max_drift << " exceeds " << opt.drift_tol;
    ts.diag.warn(os.str());
  }
  return ts;
}

GridFunction rescale_snapshot(const GridFunction& f, double t, const RateSpec& rate, const LogGrid& profile_grid) {
  if (!(t > 0.0)) throw DomainError("rescale_snapshot: t must be positive");
  const double pre = std::pow(t, -2.0 / rate.gamma);
  const double shrink = std::pow(t, -1.0 / rate.gamma);
  return GridFunction::sample(profile_grid, [&](double z) { return pre * interp_log(f, z * shrink); });
}

GridFunction rescale_snapshot(const GridFunction& f, double t, const RateSpec& rate) {
  return rescale_snapshot(f, t, rate, f.grid);
}

void write_time_series(const TimeSeries& ts, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream m(std::filesystem::path(dir) / "moments.csv");
  if (!m) throw DomainError("cannot write moments.csv in " + dir);
  m << "t,M0,M1,dust\n" << std::setprecision(17);
  for (std::size_t i = 0; i < ts.times.size(); ++i) {
    m << ts.times[i] << ',' << ts.M0[i] << ',' << ts.M1[i] << ',' << ts.dust[i] << '\n';
    std::ostringstream name;
    name << "snapshot_" << std::setw(4) << std::setfill('0') << i << ".csv";
    write_grid_csv(ts.snapshots[i], (std::filesystem::path(dir) / name.str()).string());
  }
}

}  // namespace fragmellin
