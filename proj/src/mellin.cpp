#include "fragmellin/mellin.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace fragmellin {

double Taper::weight(double v, double V) const {
  const double a = std::abs(v);
  switch (kind) {
    case Kind::none:
      return a <= V ? 1.0 : 0.0;
    case Kind::gaussian:
      return a <= V ? std::exp(-lambda * v * v) : 0.0;
    case Kind::tukey: {
      if (a > V) return 0.0;
      const double L = fraction * V;
      if (L <= 0.0 || a <= V - L) return 1.0;
      return 0.5 * (1.0 + std::cos(pi * (a - (V - L)) / L));
    }
  }
  return 1.0;
}

std::string Taper::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::none:
      os << "none";
      break;
    case Kind::tukey:
      os << "tukey:" << fraction;
      break;
    case Kind::gaussian:
      os << "gaussian:" << lambda;
      break;
  }
  return os.str();
}

Taper Taper::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  double param = std::numeric_limits<double>::quiet_NaN();
  if (colon != std::string::npos) {
    try {
      param = std::stod(text.substr(colon + 1));
    } catch (const std::exception&) {
      throw DomainError("taper: bad parameter in '" + text + "'");
    }
  }
  if (name == "none") return none();
  if (name == "tukey" || name == "cosine") {
    const double f = std::isnan(param) ? 0.5 : param;
    if (!(f >= 0.0 && f <= 1.0)) throw DomainError("taper: tukey fraction must lie in [0, 1]");
    return tukey(f);
  }
  if (name == "gaussian") {
    if (!(param >= 0.0)) throw DomainError("taper: gaussian needs lambda >= 0");
    return gaussian(param);
  }
  throw DomainError("taper: unknown kind '" + name + "'");
}

double default_dv(const LogGrid& grid) { return pi / std::log(grid.x_max / grid.x_min); }

namespace {

struct Prepared {
  VectorXd a;   // w_i x_i^{u-1} f_i
  VectorXd lx;  // ln x_i
  double clipped = 0.0;
  double f0 = 0.0;
};

Prepared prepare(const GridFunction& f, double u, const ForwardOptions& opt) {
  const auto& g = f.grid;
  Prepared p;
  p.a.resize(g.n);
  p.lx.resize(g.n);
  for (int i = 0; i < g.n; ++i) {
    double fi = f.values[i];
    if (opt.clip_negative && fi < 0.0) {
      p.clipped += -fi * g.weights[i] * g.nodes[i];
      fi = 0.0;
    }
    if (i == 0) p.f0 = fi;
    p.lx[i] = std::log(g.nodes[i]);
    p.a[i] = g.weights[i] * std::exp((u - 1.0) * p.lx[i]) * fi;
  }
  return p;
}

cplx lower_tail(const Prepared& p, const LogGrid& g, cplx s, const ForwardOptions& opt) {
  if (!opt.constant_lower_tail || p.f0 == 0.0) return 0.0;
  return p.f0 * std::exp(s * std::log(g.x_min)) / s;
}

cplx sum_at(const Prepared& p, double v) {
  double re = 0.0, im = 0.0;
  for (Eigen::Index i = 0; i < p.a.size(); ++i) {
    const double ph = v * p.lx[i];
    re += p.a[i] * std::cos(ph);
    im += p.a[i] * std::sin(ph);
  }
  return {re, im};
}

}  // namespace

MellinSamples mellin_forward(const GridFunction& f, double u, double V, double dv, const ForwardOptions& opt) {
  if (!(u >= 1.0)) throw DomainError("mellin_forward: need u >= 1");
  MellinSamples m;
  m.line = make_line(u, V, dv);
  const Prepared p = prepare(f, u, opt);
  const Eigen::Index nv = m.line.size();
  const Eigen::Index mid = nv / 2;
  // v >= 0 half computed, the other half by Hermitian symmetry (real input)
  parallel_for(mid + 1, [&](Eigen::Index j) {
    const double v = m.line.v[mid + j];
    const cplx s(u, v);
    m.line.values[mid + j] = sum_at(p, v) + lower_tail(p, f.grid, s, opt);
  }, 16);
  for (Eigen::Index j = 1; j <= mid; ++j) m.line.values[mid - j] = std::conj(m.line.values[mid + j]);

  const auto& g = f.grid;
  const double G0 = std::abs(m.line.values[mid]);
  const double top = std::abs(std::pow(g.x_max, u) * (opt.clip_negative ? std::max(0.0, f.values[g.n - 1]) : f.values[g.n - 1]));
  const double bottom = opt.constant_lower_tail ? 0.0 : std::abs(std::pow(g.x_min, u) * f.values[0]);
  m.diag.set("boundary_top", G0 > 0.0 ? top / G0 : 0.0);
  m.diag.set("boundary_bottom", G0 > 0.0 ? bottom / G0 : 0.0);
  m.diag.set("clipped_mass", p.clipped);
  if (G0 > 0.0 && std::max(top, bottom) > 1e-8 * G0)
    m.diag.warn("boundary terms exceed 1e-8 of the transform: truncation-dominated result");
  return m;
}

cplx mellin_at(const GridFunction& f, cplx s, const ForwardOptions& opt) {
  const Prepared p = prepare(f, s.real(), opt);
  return sum_at(p, s.imag()) + lower_tail(p, f.grid, s, opt);
}

double log_mellin_real(const GridFunction& f, double s, const ForwardOptions& opt) {
  const auto& g = f.grid;
  std::vector<double> l(g.n + 1, -std::numeric_limits<double>::infinity());
  std::vector<int> sign(g.n + 1, 0);
  double top = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < g.n; ++i) {
    double fi = f.values[i];
    if (opt.clip_negative && fi < 0.0) fi = 0.0;
    if (fi == 0.0) continue;
    sign[i] = fi > 0.0 ? 1 : -1;
    l[i] = std::log(g.weights[i]) + (s - 1.0) * std::log(g.nodes[i]) + std::log(std::abs(fi));
    top = std::max(top, l[i]);
  }
  double f0 = f.values[0];
  if (opt.clip_negative && f0 < 0.0) f0 = 0.0;
  if (opt.constant_lower_tail && f0 != 0.0) {
    sign[g.n] = f0 > 0.0 ? 1 : -1;
    l[g.n] = std::log(std::abs(f0)) + s * std::log(g.x_min) - std::log(s);
    top = std::max(top, l[g.n]);
  }
  if (!std::isfinite(top)) throw NumericalError("log_mellin_real: zero transform");
  double acc = 0.0;
  for (int i = 0; i <= g.n; ++i)
    if (sign[i] != 0) acc += sign[i] * std::exp(l[i] - top);
  if (!(acc > 0.0)) throw NumericalError("log_mellin_real: non-positive transform");
  return top + std::log(acc);
}

InverseResult mellin_inverse(const MellinSamples& samples, const LogGrid& x_targets, const Taper& window) {
  const auto& line = samples.line;
  if (!line.values.allFinite()) throw NumericalError("mellin_inverse: non-finite samples");
  const VectorXd tw = trapezoid_weights(line);
  VectorXcd c(line.size());
  for (Eigen::Index j = 0; j < line.size(); ++j)
    c[j] = line.values[j] * (tw[j] * window.weight(line.v[j], line.V) / (2.0 * pi));
  VectorXd re(x_targets.n), im(x_targets.n);
  parallel_for(x_targets.n, [&](Eigen::Index i) {
    const double lx = std::log(x_targets.nodes[i]);
    const double amp = std::exp(-line.u * lx);
    double sr = 0.0, si = 0.0;
    for (Eigen::Index j = 0; j < line.size(); ++j) {
      const double ph = -line.v[j] * lx;
      const double cr = std::cos(ph), ci = std::sin(ph);
      sr += c[j].real() * cr - c[j].imag() * ci;
      si += c[j].real() * ci + c[j].imag() * cr;
    }
    re[i] = amp * sr;
    im[i] = amp * si;
  }, 8);
  InverseResult r;
  r.g = GridFunction(x_targets, re);
  const double scale = re.cwiseAbs().maxCoeff();
  r.imag_residual = scale > 0.0 ? im.cwiseAbs().maxCoeff() / scale : im.cwiseAbs().maxCoeff();
  r.symmetric = r.imag_residual <= 1e-6;
  r.diag.set("imag_residual", r.imag_residual);
  if (!r.symmetric) r.diag.warn("imaginary residual exceeds 1e-6: Hermitian symmetry violated");
  return r;
}

namespace {

// h(a) and h'(a) from the quadratic through the three nodes nearest the pole.
std::pair<double, double> value_at_pole(const VectorXd& w, const VectorXd& h, double a) {
  const Eigen::Index n = w.size();
  Eigen::Index k = std::upper_bound(w.data(), w.data() + n, a) - w.data() - 1;
  if (k + 1 < n && std::abs(w[k + 1] - a) < std::abs(w[k] - a)) ++k;
  k = std::clamp<Eigen::Index>(k - 1, 0, n - 3);
  const double x0 = w[k], x1 = w[k + 1], x2 = w[k + 2];
  const double l0 = (a - x1) * (a - x2) / ((x0 - x1) * (x0 - x2));
  const double l1 = (a - x0) * (a - x2) / ((x1 - x0) * (x1 - x2));
  const double l2 = (a - x0) * (a - x1) / ((x2 - x0) * (x2 - x1));
  const double d0 = (2 * a - x1 - x2) / ((x0 - x1) * (x0 - x2));
  const double d1 = (2 * a - x0 - x2) / ((x1 - x0) * (x1 - x2));
  const double d2 = (2 * a - x0 - x1) / ((x2 - x0) * (x2 - x1));
  return {l0 * h[k] + l1 * h[k + 1] + l2 * h[k + 2], d0 * h[k] + d1 * h[k + 1] + d2 * h[k + 2]};
}

}  // namespace

PVResult pv_cauchy(const VectorXd& w, const VectorXd& h, double a) {
  const Eigen::Index n = w.size();
  if (n != h.size() || n < 3) throw DomainError("pv_cauchy: need matching w, h with at least 3 nodes");
  if (!(a > w[0] && a < w[n - 1])) throw DomainError("pv_cauchy: pole must lie inside the sampled range");
  PVResult r;
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(w[i] - a) < a / 10.0) ++r.nodes_near_pole;
  if (r.nodes_near_pole < 8)
    throw NumericalError("pv_cauchy: fewer than 8 nodes resolve the pole neighbourhood");
  const auto [ha, slope] = value_at_pole(w, h, a);
  auto q = [&](Eigen::Index i) {
    const double d = w[i] - a;
    if (std::abs(d) < 1e-12 * a) return slope;
    return (h[i] - ha) / d;
  };
  double acc = 0.0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) acc += 0.5 * (w[i + 1] - w[i]) * (q(i) + q(i + 1));
  acc += ha * std::log((w[n - 1] - a) / (a - w[0]));
  r.value = {acc, 0.0};
  return r;
}

cplx cauchy_limit(const VectorXd& w, const VectorXd& h, double a, Approach side) {
  const PVResult pv = pv_cauchy(w, h, a);
  const double ha = value_at_pole(w, h, a).first;
  const double sgn = side == Approach::from_above ? -1.0 : 1.0;
  return pv.value + cplx(0.0, sgn * pi * ha);
}

void write_mellin_csv(const MellinSamples& m, const std::string& path, const Taper& taper) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path);
  out << std::setprecision(17);
  out << "# u=" << m.line.u << " V=" << m.line.V << " dv=" << m.line.dv << " taper=" << taper.describe() << '\n';
  out << "v,re,im\n";
  for (Eigen::Index j = 0; j < m.line.size(); ++j)
    out << m.line.v[j] << ',' << m.line.values[j].real() << ',' << m.line.values[j].imag() << '\n';
}

MellinSamples read_mellin_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read " + path);
  std::string line;
  double u = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> vs, re, im;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto p = line.find("u=");
      if (p != std::string::npos) u = std::stod(line.substr(p + 2));
      continue;
    }
    if (line.rfind("v,", 0) == 0) continue;
    std::istringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ','))
      throw DomainError(path + ":" + std::to_string(lineno) + ": expected v,re,im");
    vs.push_back(std::stod(a));
    re.push_back(std::stod(b));
    im.push_back(std::stod(c));
  }
  if (std::isnan(u)) throw DomainError(path + ": missing '# u=' header");
  if (vs.size() < 2) throw DomainError(path + ": need at least two samples");
  const double dv = vs[1] - vs[0];
  MellinSamples m;
  m.line = make_line(u, -vs.front(), dv);
  if (m.line.size() != static_cast<Eigen::Index>(vs.size()))
    throw DomainError(path + ": v nodes are not a symmetric uniform grid");
  for (std::size_t j = 0; j < vs.size(); ++j) m.line.values[static_cast<Eigen::Index>(j)] = {re[j], im[j]};
  return m;
}

}  // namespace fragmellin
