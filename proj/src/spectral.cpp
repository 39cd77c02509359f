#include "fragmellin/spectral.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace fragmellin {

SpectralConfig SpectralConfig::defaults(const RateSpec& rate) {
  SpectralConfig c;
  c.s0 = std::max(rate.gamma + 3.0, 2.5);
  c.u_eval = c.s0 + rate.gamma / 2.0;
  return c;
}

void SpectralConfig::validate(const RateSpec& rate) const {
  if (!(s0 > 2.0)) throw DomainError("spectral: s0 must exceed 2");
  if (!(u_eval > s0 && u_eval < s0 + rate.gamma)) throw DomainError("spectral: u_eval must lie in (s0, s0 + gamma)");
  if (!(V >= 50.0)) throw DomainError("spectral: V must be at least 50");
  if (!(rho > 0.0)) throw DomainError("spectral: rho must be positive");
  if (!(dv > 0.0)) throw DomainError("spectral: dv must be positive");
}

cplx phi(cplx s, const KernelSpec& k, const RateSpec& rate) {
  if (!(s.real() > 2.0)) throw DomainError("phi: need Re s > 2");
  const cplx den = rate.alpha * rate.gamma * (k0_mellin(k, s) - 1.0);
  if (std::abs(k0_mellin(k, s) - 1.0) < 1e-14) throw NumericalError("phi: K0(s) - 1 vanishes");
  return (2.0 - s) / den;
}

namespace {

cplx nearest_branch(cplx principal, double target_imag) {
  const double turns = std::round((target_imag - principal.imag()) / (2.0 * pi));
  return principal + cplx(0.0, 2.0 * pi * turns);
}

}  // namespace

ComplexLine log_phi_line(const KernelSpec& k, const RateSpec& rate, const SpectralConfig& cfg, Diagnostics* diag) {
  cfg.validate(rate);
  ComplexLine line = make_line(cfg.s0, cfg.V + 6.0 * rate.gamma, cfg.dv);
  const Eigen::Index mid = line.size() / 2;
  line.values[mid] = std::log(phi(cplx(cfg.s0, 0.0), k, rate));
  int cut_crossings = 0, coarse = 0;
  double prev_paper_arg = std::fmod(std::arg(phi(cplx(cfg.s0, 0.0), k, rate)) + 2.0 * pi, 2.0 * pi);
  for (Eigen::Index j = mid + 1; j < line.size(); ++j) {
    const cplx p = phi(line.s(j), k, rate);
    const cplx lp = nearest_branch(std::log(p), line.values[j - 1].imag());
    if (std::abs(lp.imag() - line.values[j - 1].imag()) > pi / 2.0) ++coarse;
    line.values[j] = lp;
    const double paper_arg = std::fmod(std::arg(p) + 2.0 * pi, 2.0 * pi);
    if (std::abs(paper_arg - prev_paper_arg) > pi) ++cut_crossings;
    prev_paper_arg = paper_arg;
  }
  for (Eigen::Index j = 1; j <= mid; ++j) line.values[mid - j] = std::conj(line.values[mid + j]);
  if (diag) {
    diag->set("log_phi_cut_crossings", 2.0 * cut_crossings);
    diag->set("log_phi_coarse_steps", 2.0 * coarse);
    if (coarse > 0) diag->warn("log Phi changes by more than pi/2 between nodes; reduce dv");
  }
  return line;
}

GTilde::GTilde(KernelSpec k, RateSpec rate, SpectralConfig cfg)
    : k_(std::move(k)), rate_(rate), cfg_(cfg), line_(log_phi_line(k_, rate_, cfg_)) {}

GTilde::GTilde(KernelSpec k, RateSpec rate, SpectralConfig cfg, ComplexLine log_phi)
    : k_(std::move(k)), rate_(rate), cfg_(cfg), line_(std::move(log_phi)) {}

cplx GTilde::log_phi_on_line(double y) const {
  const Eigen::Index mid = line_.size() / 2;
  const double pos = y / line_.dv + static_cast<double>(mid);
  if (pos < 0.0 || pos > static_cast<double>(line_.size() - 1))
    throw DomainError("g_tilde: |Im s| exceeds the sampled log Phi line");
  Eigen::Index j = static_cast<Eigen::Index>(std::floor(pos));
  if (j >= line_.size() - 1) j = line_.size() - 2;
  const double t = pos - static_cast<double>(j);
  const double guess = (1.0 - t) * line_.values[j].imag() + t * line_.values[j + 1].imag();
  return nearest_branch(std::log(phi(cplx(cfg_.s0, y), k_, rate_)), guess);
}

cplx GTilde::base_exponent(cplx s) const {
  const double gam = rate_.gamma;
  const double s0 = cfg_.s0;
  const double y = s.imag();
  const double theta = 2.0 * pi * (s.real() - s0) / gam;
  const cplx eith = std::polar(1.0, theta);
  const cplx emith = std::conj(eith);
  const cplx Lstar = log_phi_on_line(y);
  // pole proximity: |1 - e^{i theta} e^{E}| small at E near 0 happens only near the seam
  cplx acc{0.0, 0.0};
  const Eigen::Index n = line_.size();
  // outside [min(0,y), max(0,y)] the bracket decays like e^{-2 pi |dist| / gamma}
  const Eigen::Index mid = n / 2;
  const double reach = 6.0 * gam;
  const Eigen::Index j_lo = std::max<Eigen::Index>(0, mid + static_cast<Eigen::Index>(std::floor((std::min(0.0, y) - reach) / line_.dv)));
  const Eigen::Index j_hi = std::min<Eigen::Index>(n - 1, mid + static_cast<Eigen::Index>(std::ceil((std::max(0.0, y) + reach) / line_.dv)));
  for (Eigen::Index j = j_lo; j <= j_hi; ++j) {
    const double vj = line_.v[j];
    const double E = 2.0 * pi * (vj - y) / gam;
    cplx t1;
    if (E > 0.0) {
      const cplx r = emith * std::exp(-E);
      t1 = -r / (1.0 - r);
    } else {
      const cplx den = 1.0 - eith * std::exp(E);
      if (std::abs(den) < 1e-10) throw NumericalError("g_tilde: evaluation point too close to a pole of the integrand");
      t1 = 1.0 / den;
    }
    const double Q = 2.0 * pi * vj / gam;
    const double t2 = Q > 0.0 ? std::exp(-Q) / (1.0 + std::exp(-Q)) : 1.0 / (1.0 + std::exp(Q));
    const double w = (j == 0 || j == n - 1) ? 0.5 * line_.dv : line_.dv;
    acc += w * (line_.values[j] - Lstar) * (t1 - t2);
  }
  const cplx integral = cplx(0.0, 1.0) * acc + Lstar * (s - s0 - gam / 2.0);
  return integral / gam;
}

cplx GTilde::log_value(cplx s) const {
  const double gam = rate_.gamma;
  const double off = (s.real() - cfg_.s0) / gam;
  const double kf = std::floor(off);
  const int k = static_cast<int>(kf);
  const cplx sb = s - kf * gam;
  cplx out = base_exponent(sb);
  if (k > 0) {
    for (int j = 0; j < k; ++j) out += std::log(phi(sb + static_cast<double>(j) * gam, k_, rate_));
  } else if (k < 0) {
    for (int j = 0; j < -k; ++j) out -= std::log(phi(s + static_cast<double>(j) * gam, k_, rate_));
  }
  return out;
}

cplx g_tilde(cplx s, const GTilde& gt) { return gt.value(s); }

namespace {

std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double unit(std::uint64_t& state) { return static_cast<double>(splitmix(state) >> 11) * 0x1.0p-53; }

}  // namespace

ProfileResult spectral_profile(const KernelSpec& k, const RateSpec& rate, const SpectralConfig& cfg,
                               const LogGrid& out_grid) {
  cfg.validate(rate);
  Diagnostics diag;
  const ComplexLine lp = log_phi_line(k, rate, cfg, &diag);
  const GTilde gt(k, rate, cfg, lp);
  const double gam = rate.gamma;
  const double u0 = cfg.u_eval;
  const double dvi = cfg.dv_inv > 0.0 ? cfg.dv_inv : 0.5 * default_dv(out_grid);
  const ComplexLine vline = make_line(u0, cfg.V, dvi);
  const Eigen::Index mid = vline.size() / 2;
  const Eigen::Index nh = mid + 1;  // v >= 0
  const VectorXd tw = trapezoid_weights(vline);

  // Inversion lines: families u = ub + k gamma (ub in the base strip), all with u > 2.
  // Each x uses the line minimizing log G(u) - u ln x.
  struct Family {
    double ub = 0.0;
    int k_lo = 0, k_hi = 0;
    std::vector<double> b;  // Re log G(ub + k gamma), index k - k_lo
    std::vector<VectorXcd> coef;
  };
  auto real_log_phi = [&](double s) { return std::log(phi(cplx(s, 0.0), k, rate)).real(); };
  const double lx_max = std::log(out_grid.x_max);
  auto build = [&](double ub, bool extend) {
    Family f;
    f.ub = ub;
    if (extend)
      while (ub + (f.k_lo - 1) * gam > 2.0 + 1e-9) --f.k_lo;
    const double b0 = gt.base_exponent(cplx(ub, 0.0)).real();
    std::vector<double> down;
    double acc = b0;
    for (int kk = -1; kk >= f.k_lo; --kk) {
      acc -= real_log_phi(ub + kk * gam);
      down.push_back(acc);
    }
    f.b.assign(down.rbegin(), down.rend());
    f.b.push_back(b0);
    if (extend) {
      acc = b0;
      int rising = 0;
      double best = b0 - ub * lx_max;
      for (int kk = 1; kk <= 400 && rising < 3; ++kk) {
        acc += real_log_phi(ub + (kk - 1) * gam);
        f.b.push_back(acc);
        f.k_hi = kk;
        const double score = acc - (ub + kk * gam) * lx_max;
        if (score < best) {
          best = score;
          rising = 0;
        } else {
          ++rising;
        }
      }
    }
    return f;
  };
  std::vector<Family> fams;
  fams.push_back(build(u0, cfg.multi_line));
  if (cfg.multi_line && u0 + fams[0].k_lo * gam > 3.0) {
    // no main line close to 2: add one at 2.5, mapped into the base strip
    const double target = 2.5;
    double pos = std::fmod(target - cfg.s0, gam);
    if (pos < 0.0) pos += gam;
    if (pos < 0.05 * gam || pos > 0.95 * gam) pos = 0.5 * gam;
    const double ub = cfg.s0 + pos;
    Family f = build(ub, false);
    int shift = static_cast<int>(std::floor((target - ub) / gam + 0.5));
    while (ub + shift * gam <= 2.0) ++shift;
    f.k_lo = shift;
    f.k_hi = shift;
    f.b.clear();
    double acc = f.b.empty() ? gt.base_exponent(cplx(ub, 0.0)).real() : 0.0;
    if (shift < 0)
      for (int kk = -1; kk >= shift; --kk) acc -= real_log_phi(ub + kk * gam);
    f.b.push_back(acc);
    fams.push_back(std::move(f));
  }

  std::vector<std::pair<int, int>> choice(out_grid.n);  // (family, k)
  for (int i = 0; i < out_grid.n; ++i) {
    const double lx = std::log(out_grid.nodes[i]);
    double bs = std::numeric_limits<double>::infinity();
    for (int fi = 0; fi < static_cast<int>(fams.size()); ++fi)
      for (int kk = fams[fi].k_lo; kk <= fams[fi].k_hi; ++kk) {
        const double sc = fams[fi].b[kk - fams[fi].k_lo] - (fams[fi].ub + kk * gam) * lx;
        if (sc < bs) {
          bs = sc;
          choice[i] = {fi, kk};
        }
      }
  }
  double u_lowest = std::numeric_limits<double>::infinity(), u_highest = -u_lowest;
  for (int fi = 0; fi < static_cast<int>(fams.size()); ++fi) {
    Family& f = fams[fi];
    const int nl = f.k_hi - f.k_lo + 1;
    std::vector<char> used(nl, 0);
    for (const auto& c : choice)
      if (c.first == fi) used[c.second - f.k_lo] = 1;
    int top = f.k_lo - 1, low = f.k_hi + 1;
    for (int kk = f.k_lo; kk <= f.k_hi; ++kk)
      if (used[kk - f.k_lo]) {
        top = std::max(top, kk);
        low = std::min(low, kk);
      }
    f.coef.assign(nl, VectorXcd());
    if (top < low) continue;
    u_lowest = std::min(u_lowest, f.ub + low * gam);
    u_highest = std::max(u_highest, f.ub + top * gam);
    VectorXcd E(nh);
    parallel_for(nh, [&](Eigen::Index j) { E[j] = gt.base_exponent(cplx(f.ub, vline.v[mid + j])); }, 4);
    auto store = [&](int kk, const VectorXcd& lg) {
      VectorXcd c(nh);
      for (Eigen::Index j = 0; j < nh; ++j) {
        const double wgt = tw[mid + j] * cfg.taper.weight(vline.v[mid + j], vline.V) / (2.0 * pi);
        c[j] = wgt * std::exp(lg[j] - lg[0].real());
        if (j > 0) c[j] *= 2.0;
      }
      f.coef[kk - f.k_lo] = std::move(c);
    };
    VectorXcd acc = E;
    for (int kk = 0; kk <= top; ++kk) {
      if (kk > 0)
        for (Eigen::Index j = 0; j < nh; ++j)
          acc[j] += std::log(phi(cplx(f.ub + (kk - 1) * gam, vline.v[mid + j]), k, rate));
      if (kk >= f.k_lo && used[kk - f.k_lo]) store(kk, acc);
    }
    acc = E;
    for (int kk = -1; kk >= low; --kk) {
      for (Eigen::Index j = 0; j < nh; ++j) acc[j] -= std::log(phi(cplx(f.ub + kk * gam, vline.v[mid + j]), k, rate));
      if (kk <= f.k_hi && used[kk - f.k_lo]) store(kk, acc);
    }
  }
  VectorXd g(out_grid.n);
  parallel_for(out_grid.n, [&](Eigen::Index i) {
    const auto [fi, kk] = choice[i];
    const Family& f = fams[fi];
    const double lx = std::log(out_grid.nodes[i]);
    const VectorXcd& c = f.coef[kk - f.k_lo];
    double acc = 0.0;
    for (Eigen::Index j = 0; j < nh; ++j) {
      const double ph = -vline.v[mid + j] * lx;
      acc += c[j].real() * std::cos(ph) - c[j].imag() * std::sin(ph);
    }
    const double u = f.ub + kk * gam;
    g[i] = std::exp(f.b[kk - f.k_lo] - u * lx) * acc;
  }, 8);

  const double gmax = g.maxCoeff();
  const double gmin = g.minCoeff();
  diag.set("min_before_clip_rel", gmax > 0.0 ? gmin / gmax : 0.0);
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = std::max(0.0, g[i]);
  GridFunction gf(out_grid, g);
  const double mass = integrate(gf, 1.0);
  if (!(mass > 0.0)) throw NumericalError("spectral_profile: non-positive mass before normalization");
  gf.values *= cfg.rho / mass;

  diag.set("lines_low", u_lowest);
  diag.set("lines_high", u_highest);
  diag.set("dv_inv", dvi);
  diag.set("tail_model", 0.0);

  // strip diagnostics on the construction
  {
    double min_rel = std::numeric_limits<double>::infinity();
    const double ref = gt.log_value(cplx(u0, 0.0)).real();
    for (int a = 1; a <= 9; ++a) {
      const double re = cfg.s0 + gam * a / 10.0;
      for (int m = 0; m <= 40; ++m) {
        const double im = cfg.V * m / 40.0;
        min_rel = std::min(min_rel, gt.log_value(cplx(re, im)).real() - ref);
      }
    }
    diag.set("strip_min_log_abs_rel", min_rel);
    const double d = 1e-4;
    double seam = 0.0;
    for (double im : {0.0, 3.0, 10.0}) {
      const cplx below = gt.log_value(cplx(cfg.s0 + gam - d, im));
      const cplx above = gt.log_value(cplx(cfg.s0 + gam + d, im));
      seam = std::max(seam, std::abs(std::exp(above - below) - 1.0));
    }
    diag.set("seam_jump", seam);
    // decay beyond |v| = 10 below s0
    const double ud = cfg.s0 - gam / 2.0;
    int violations = 0;
    if (ud > 2.0) {
      double prev = gt.log_value(cplx(ud, 10.0)).real();
      for (double im = 10.5; im <= std::min(cfg.V, 60.0); im += 0.5) {
        const double cur = gt.log_value(cplx(ud, im)).real();
        if (cur > prev + 1e-12) ++violations;
        prev = cur;
      }
    }
    diag.set("decay_violations", violations);
    if (violations > 0) diag.warn("|G~| not monotone in |v| beyond 10");
  }
  ProfileResult r;
  r.g = std::move(gf);
  r.rho = cfg.rho;
  r.method = ProfileMethod::spectral;
  r.residual = stationary_residual(r.g, k, rate);
  diag.set("fe_residual_profile", functional_residual(r.g, k, rate, cfg.s0, 20, 5.0, cfg.seed));
  r.diag = std::move(diag);
  return r;
}

ProfileResult dynamic_profile(const KernelSpec& k, const RateSpec& rate, const DynamicConfig& cfg,
                              const LogGrid& out_grid) {
  const GridFunction f0 = GridFunction::sample(cfg.sim_grid, [](double x) { return std::exp(-x); });
  const TimeSeries ts = simulate(f0, k, rate, cfg.t_end, {cfg.t_end}, cfg.sim);
  GridFunction g = rescale_snapshot(ts.snapshots.back(), cfg.t_end, rate, out_grid);
  const double mass = integrate(g, 1.0);
  if (!(mass > 0.0)) throw NumericalError("dynamic_profile: rescaled snapshot has no mass on the profile grid");
  g.values *= cfg.rho / mass;
  ProfileResult r;
  r.g = std::move(g);
  r.rho = cfg.rho;
  r.method = ProfileMethod::dynamic;
  r.residual = stationary_residual(r.g, k, rate);
  r.diag.merge(ts.diag, "sim.");
  r.diag.set("t_end", cfg.t_end);
  return r;
}

namespace {

struct TestFn {
  std::function<double(double)> f;
  std::function<double(double)> dz;  // (z f)'
};

std::vector<TestFn> test_functions() {
  std::vector<TestFn> out;
  out.push_back({[](double z) { return z; }, [](double z) { return 2.0 * z; }});
  out.push_back({[](double z) { return z * z; }, [](double z) { return 3.0 * z * z; }});
  out.push_back({[](double z) { return std::exp(-z); }, [](double z) { return (1.0 - z) * std::exp(-z); }});
  const double sig = 0.5;
  for (double c : {std::log(0.3), 0.0, std::log(3.0)}) {
    auto f = [=](double z) {
      const double t = (std::log(z) - c) / sig;
      return std::exp(-0.5 * t * t);
    };
    out.push_back({f, [=](double z) { return f(z) * (1.0 - (std::log(z) - c) / (sig * sig)); }});
  }
  return out;
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) {
        x[i] = 0.5 * (1.0 - t);
        w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
        break;
      }
    }
  }
}

}  // namespace

double stationary_residual(const GridFunction& g, const KernelSpec& k, const RateSpec& rate) {
  const auto& grid = g.grid;
  const double ag = rate.alpha * rate.gamma;
  std::vector<double> zq, wq;
  if (k.kind == DensityKind::uniform || k.kind == DensityKind::beta) {
    gauss_legendre(64, zq, wq);
    for (std::size_t i = 0; i < zq.size(); ++i) wq[i] *= k.density(zq[i]);
  } else if (k.kind == DensityKind::samples) {
    const auto& sg = k.samples->grid;
    for (int i = 0; i < sg.n; ++i) {
      zq.push_back(sg.nodes[i]);
      wq.push_back(sg.weights[i] * k.samples->values[i]);
    }
  }
  for (const auto& a : k.atoms) {
    zq.push_back(a.z);
    wq.push_back(a.c);
  }
  const double zlow = 0.5 * grid.x_min;
  double worst = 0.0;
  for (const auto& tf : test_functions()) {
    auto lhs_density = [&](double z) { return -tf.dz(z) + (2.0 + ag * std::pow(z, rate.gamma)) * tf.f(z); };
    auto kphi = [&](double u) {
      double acc = 0.0;
      for (std::size_t j = 0; j < zq.size(); ++j) acc += wq[j] * tf.f(u * zq[j]);
      return acc;
    };
    auto rhs_density = [&](double u) { return ag * std::pow(u, rate.gamma) * kphi(u); };
    double L = 0.0, R = 0.0, scale = 0.0;
    for (int i = 0; i < grid.n; ++i) {
      const double z = grid.nodes[i];
      const double gi = g.values[i];
      const double l = lhs_density(z), r = rhs_density(z);
      L += grid.weights[i] * l * gi;
      R += grid.weights[i] * r * gi;
      scale += grid.weights[i] * (std::abs(-tf.dz(z)) + std::abs((2.0 + ag * std::pow(z, rate.gamma)) * tf.f(z)) + std::abs(r)) * std::abs(gi);
    }
    const double g0 = g.values[0];
    L += grid.x_min * lhs_density(zlow) * g0;
    R += grid.x_min * rhs_density(zlow) * g0;
    scale += grid.x_min * (std::abs(lhs_density(zlow)) + std::abs(rhs_density(zlow))) * std::abs(g0);
    if (scale > 0.0) worst = std::max(worst, std::abs(L - R) / scale);
  }
  return worst;
}

double functional_residual(const GridFunction& g, const KernelSpec& k, const RateSpec& rate, double s0,
                           int points, double im_max, std::uint64_t seed) {
  std::uint64_t state = seed;
  double worst = 0.0;
  for (int p = 0; p < points; ++p) {
    const cplx s(s0 + rate.gamma * unit(state), im_max * (2.0 * unit(state) - 1.0));
    const cplx G = mellin_at(g, s);
    const cplx Gp = mellin_at(g, s + rate.gamma);
    const cplx rhs = rate.alpha * rate.gamma * (k0_mellin(k, s) - 1.0) * Gp;
    worst = std::max(worst, std::abs((2.0 - s) * G - rhs) / std::abs(rhs));
  }
  return worst;
}

void write_profile(const ProfileResult& r, const std::string& csv_path, const std::string& json_path) {
  write_grid_csv(r.g, csv_path);
  nlohmann::json j;
  j["method"] = r.method == ProfileMethod::spectral ? "spectral" : "dynamic";
  j["rho"] = r.rho;
  j["residual"] = r.residual;
  j["diagnostics"] = r.diag.values;
  j["warnings"] = r.diag.warnings;
  std::ofstream out(json_path);
  if (!out) throw DomainError("cannot write " + json_path);
  out << std::setprecision(17) << j.dump(2) << '\n';
}

}  // namespace fragmellin
