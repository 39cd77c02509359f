#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace fragmellin {

using cplx = std::complex<double>;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double pi = 3.14159265358979323846;

// Bad arguments or malformed inputs (CLI exit code 2).
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A computation that could not produce a trustworthy result (CLI exit code 3).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Named scalars plus free-form warnings attached to results.
struct Diagnostics {
  std::map<std::string, double> values;
  std::vector<std::string> warnings;

  void warn(std::string msg) { warnings.push_back(std::move(msg)); }
  void set(const std::string& key, double v) { values[key] = v; }
  double get(const std::string& key, double fallback = 0.0) const;
  void merge(const Diagnostics& other, const std::string& prefix);
};

struct LogGrid {
  double x_min = 1.0;
  double x_max = 2.0;
  int n = 0;
  double log_step = 0.0;  // ln r
  VectorXd nodes;
  VectorXd weights;

  double ratio() const { return std::exp(log_step); }
};

LogGrid make_log_grid(double x_min, double x_max, int n);

// Rebuilds a grid from node positions, requiring geometric spacing.
LogGrid log_grid_from_nodes(const VectorXd& x, double rel_tol = 1e-8);

struct GridFunction {
  LogGrid grid;
  VectorXd values;

  GridFunction() = default;
  GridFunction(LogGrid g, VectorXd v);
  static GridFunction zeros(const LogGrid& g);
  static GridFunction sample(const LogGrid& g, const std::function<double(double)>& f);
};

double integrate(const GridFunction& f, double moment_order);
double interp_log(const GridFunction& f, double x);
// Resamples f onto another grid with interp_log.
GridFunction resample(const GridFunction& f, const LogGrid& target);

// Plain and x-weighted L1 distances on the grid of a (b is interpolated).
double l1_distance(const GridFunction& a, const GridFunction& b);
double weighted_l1_distance(const GridFunction& a, const GridFunction& b);

struct ComplexLine {
  double u = 0.0;
  double V = 0.0;
  double dv = 0.0;
  VectorXd v;
  VectorXcd values;

  Eigen::Index size() const { return v.size(); }
  cplx s(Eigen::Index j) const { return {u, v[j]}; }
};

// Symmetric nodes j*dv, |j| <= round(V/dv); values zeroed.
ComplexLine make_line(double u, double V, double dv);

// Trapezoid weights of a line (dv, halved at both ends).
VectorXd trapezoid_weights(const ComplexLine& line);

// Approximates the integral over Re(sigma) = u of the sampled integrand in d(sigma) = i dv.
template <class Derived>
cplx line_integral(const ComplexLine& line, const Eigen::MatrixBase<Derived>& integrand) {
  if (integrand.size() != line.v.size())
    throw DomainError("line_integral: integrand length does not match the line");
  const Eigen::Index m = integrand.size();
  if (m == 0) return {0.0, 0.0};
  cplx acc{0.0, 0.0};
  for (Eigen::Index j = 0; j < m; ++j) {
    const double w = (j == 0 || j == m - 1) ? 0.5 * line.dv : line.dv;
    acc += w * cplx(integrand[j]);
  }
  return cplx(0.0, 1.0) * acc;
}

// Complex log-gamma (Lanczos with reflection), principal-ish branch continuous off the negative axis.
cplx log_gamma(cplx z);
inline cplx gamma_fn(cplx z) { return std::exp(log_gamma(z)); }
cplx log_beta(cplx a, cplx b);

// Ordinary least squares: returns coefficients and fills R^2 if requested.
VectorXd least_squares(const Eigen::MatrixXd& A, const VectorXd& y, double* r_squared = nullptr);

// Worker count from FRAGMELLIN_THREADS (default: hardware concurrency).
int worker_count();
// Runs body(i) for i in [0, n). Results must be written per index for determinism.
void parallel_for(Eigen::Index n, const std::function<void(Eigen::Index)>& body,
                  Eigen::Index min_chunk = 64);

// Independent seed for a named random stream.
std::uint64_t derive_seed(std::uint64_t seed, const std::string& stream);

void write_grid_csv(const GridFunction& f, const std::string& path);
GridFunction read_grid_csv(const std::string& path);

}  // namespace fragmellin
