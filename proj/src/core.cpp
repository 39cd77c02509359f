#include "fragmellin/core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

namespace fragmellin {

double Diagnostics::get(const std::string& key, double fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

void Diagnostics::merge(const Diagnostics& other, const std::string& prefix) {
  for (const auto& [k, v] : other.values) values[prefix + k] = v;
  for (const auto& w : other.warnings) warnings.push_back(prefix + w);
}

LogGrid make_log_grid(double x_min, double x_max, int n) {
  if (!(x_min > 0.0) || !(x_max > x_min) || !std::isfinite(x_max))
    throw DomainError("make_log_grid: need 0 < x_min < x_max");
  if (n < 2) throw DomainError("make_log_grid: need at least 2 nodes");
  LogGrid g;
  g.x_min = x_min;
  g.x_max = x_max;
  g.n = n;
  g.log_step = std::log(x_max / x_min) / (n - 1);
  g.nodes.resize(n);
  g.weights.resize(n);
  for (int i = 0; i < n; ++i) g.nodes[i] = x_min * std::exp(g.log_step * i);
  g.nodes[n - 1] = x_max;
  for (int i = 0; i < n; ++i) g.weights[i] = g.nodes[i] * g.log_step;
  g.weights[0] *= 0.5;
  g.weights[n - 1] *= 0.5;
  return g;
}

LogGrid log_grid_from_nodes(const VectorXd& x, double rel_tol) {
  if (x.size() < 2) throw DomainError("grid needs at least 2 nodes");
  LogGrid g = make_log_grid(x[0], x[x.size() - 1], static_cast<int>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::abs(x[i] - g.nodes[i]) > rel_tol * g.nodes[i] + 1e-300)
      throw DomainError("grid nodes are not geometrically spaced (node " + std::to_string(i) + ")");
  }
  return g;
}

GridFunction::GridFunction(LogGrid g, VectorXd v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid.n) throw DomainError("GridFunction: value count differs from grid size");
  if (!values.allFinite()) throw DomainError("GridFunction: non-finite values");
}

GridFunction GridFunction::zeros(const LogGrid& g) { return GridFunction(g, VectorXd::Zero(g.n)); }

GridFunction GridFunction::sample(const LogGrid& g, const std::function<double(double)>& f) {
  VectorXd v(g.n);
  for (int i = 0; i < g.n; ++i) v[i] = f(g.nodes[i]);
  return GridFunction(g, std::move(v));
}

double integrate(const GridFunction& f, double k) {
  if (!(k >= 0.0)) throw DomainError("integrate: moment order must be >= 0");
  const auto& g = f.grid;
  double acc = 0.0;
  for (int i = 0; i < g.n; ++i) acc += g.weights[i] * std::pow(g.nodes[i], k) * f.values[i];
  return acc;
}

double interp_log(const GridFunction& f, double x) {
  if (!(x > 0.0)) throw DomainError("interp_log: x must be positive");
  const auto& g = f.grid;
  if (x < g.x_min || x > g.x_max) return 0.0;
  const double pos = std::log(x / g.x_min) / g.log_step;
  int i = static_cast<int>(std::floor(pos));
  if (i >= g.n - 1) return f.values[g.n - 1];
  if (i < 0) i = 0;
  const double t = pos - i;
  return (1.0 - t) * f.values[i] + t * f.values[i + 1];
}

GridFunction resample(const GridFunction& f, const LogGrid& target) {
  return GridFunction::sample(target, [&](double x) { return interp_log(f, x); });
}

double l1_distance(const GridFunction& a, const GridFunction& b) {
  double acc = 0.0;
  for (int i = 0; i < a.grid.n; ++i)
    acc += a.grid.weights[i] * std::abs(a.values[i] - interp_log(b, a.grid.nodes[i]));
  return acc;
}

double weighted_l1_distance(const GridFunction& a, const GridFunction& b) {
  double acc = 0.0;
  for (int i = 0; i < a.grid.n; ++i) {
    const double x = a.grid.nodes[i];
    acc += a.grid.weights[i] * x * std::abs(a.values[i] - interp_log(b, x));
  }
  return acc;
}

ComplexLine make_line(double u, double V, double dv) {
  if (!(dv > 0.0)) throw DomainError("make_line: dv must be positive");
  if (!(V >= 0.0)) throw DomainError("make_line: V must be >= 0");
  ComplexLine line;
  line.u = u;
  line.dv = dv;
  const long m = std::lround(V / dv);
  line.V = m * dv;
  line.v.resize(2 * m + 1);
  for (long j = -m; j <= m; ++j) line.v[j + m] = j * dv;
  line.values = VectorXcd::Zero(2 * m + 1);
  return line;
}

VectorXd trapezoid_weights(const ComplexLine& line) {
  VectorXd w = VectorXd::Constant(line.size(), line.dv);
  if (line.size() > 0) {
    w[0] *= 0.5;
    w[line.size() - 1] *= 0.5;
  }
  if (line.size() == 1) w[0] = line.dv;
  return w;
}

namespace {

constexpr double lanczos_g = 7.0;
constexpr double lanczos_c[9] = {0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
                                 771.32342877765313,   -176.61502916214059,   12.507343278686905,
                                 -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

cplx log_sin_pi(cplx z) {
  const double y = z.imag();
  if (std::abs(y) < 30.0) return std::log(std::sin(pi * z));
  // sin(pi z) = (e^{i pi z} - e^{-i pi z}) / (2i); keep the dominant exponential symbolic
  const cplx i(0.0, 1.0);
  if (y > 0.0) return -i * pi * z + std::log((1.0 - std::exp(2.0 * i * pi * z)) / (-2.0 * i));
  return i * pi * z + std::log((std::exp(-2.0 * i * pi * z) - 1.0) / (-2.0 * i));
}

}  // namespace

cplx log_gamma(cplx z) {
  if (z.real() < 0.5) {
    if (z.imag() == 0.0 && z.real() == std::floor(z.real()))
      throw DomainError("log_gamma: pole at non-positive integer");
    return std::log(pi) - log_sin_pi(z) - log_gamma(1.0 - z);
  }
  z -= 1.0;
  cplx a = lanczos_c[0];
  for (int k = 1; k < 9; ++k) a += lanczos_c[k] / (z + static_cast<double>(k));
  const cplx t = z + lanczos_g + 0.5;
  return 0.5 * std::log(2.0 * pi) + (z + 0.5) * std::log(t) - t + std::log(a);
}

cplx log_beta(cplx a, cplx b) { return log_gamma(a) + log_gamma(b) - log_gamma(a + b); }

VectorXd least_squares(const Eigen::MatrixXd& A, const VectorXd& y, double* r_squared) {
  if (A.rows() < A.cols()) throw NumericalError("least_squares: underdetermined system");
  VectorXd scale = A.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < scale.size(); ++j)
    if (scale[j] == 0.0) scale[j] = 1.0;
  const Eigen::MatrixXd As = A * scale.cwiseInverse().asDiagonal();
  VectorXd c = As.colPivHouseholderQr().solve(y);
  c = c.cwiseQuotient(scale);
  if (r_squared) {
    const VectorXd res = y - A * c;
    const double mean = y.mean();
    const double tot = (y.array() - mean).square().sum();
    *r_squared = tot > 0.0 ? 1.0 - res.squaredNorm() / tot : 1.0;
  }
  return c;
}

int worker_count() {
  static const int count = [] {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (const char* env = std::getenv("FRAGMELLIN_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end != env && v >= 1) return static_cast<int>(std::min<long>(v, 256));
    }
    return hw;
  }();
  return count;
}

void parallel_for(Eigen::Index n, const std::function<void(Eigen::Index)>& body, Eigen::Index min_chunk) {
  if (n <= 0) return;
  const int workers = static_cast<int>(std::min<Eigen::Index>(worker_count(), (n + min_chunk - 1) / min_chunk));
  if (workers <= 1) {
    for (Eigen::Index i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<Eigen::Index> next{0};
  const Eigen::Index chunk = std::max<Eigen::Index>(1, n / (8 * workers));
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto run = [&] {
    try {
      for (;;) {
        const Eigen::Index start = next.fetch_add(chunk);
        if (start >= n || failed.load()) break;
        const Eigen::Index stop = std::min(n, start + chunk);
        for (Eigen::Index i = start; i < stop; ++i) body(i);
      }
    } catch (...) {
      if (!failed.exchange(true)) failure = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::uint64_t derive_seed(std::uint64_t seed, const std::string& stream) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = seed ^ h;
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void write_grid_csv(const GridFunction& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path);
  out << "x,value\n" << std::setprecision(17);
  for (int i = 0; i < f.grid.n; ++i) out << f.grid.nodes[i] << ',' << f.values[i] << '\n';
}

GridFunction read_grid_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read " + path);
  std::string line;
  std::vector<double> xs, vs;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("x,", 0) == 0) continue;
    std::istringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ','))
      throw DomainError(path + ":" + std::to_string(lineno) + ": expected x,value");
    try {
      xs.push_back(std::stod(a));
      vs.push_back(std::stod(b));
    } catch (const std::exception&) {
      throw DomainError(path + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  VectorXd x = Eigen::Map<VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  VectorXd v = Eigen::Map<VectorXd>(vs.data(), static_cast<Eigen::Index>(vs.size()));
  return GridFunction(log_grid_from_nodes(x, 1e-6), v);
}

}  // namespace fragmellin
