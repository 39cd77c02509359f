#include "fragmellin/kernels.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace fragmellin {

KernelSpec KernelSpec::uniform_binary(double kappa) {
  KernelSpec k;
  k.kind = DensityKind::uniform;
  k.kappa = kappa;
  return k;
}

KernelSpec KernelSpec::beta(double p, double q) {
  if (!(p > 0.0) || !(q > 0.0)) throw DomainError("beta kernel: p, q must be positive");
  KernelSpec k;
  k.kind = DensityKind::beta;
  k.p = p;
  k.q = q;
  k.beta_scale = std::exp(-log_beta(p + 1.0, q).real());
  return k;
}

KernelSpec KernelSpec::mitosis() {
  KernelSpec k;
  k.atoms.push_back({0.5, 2.0});
  return k;
}

KernelSpec KernelSpec::from_samples(GridFunction density) {
  if (density.grid.x_max > 1.0 + 1e-12) throw DomainError("sampled kernel density must live in (0, 1]");
  KernelSpec k;
  k.kind = DensityKind::samples;
  k.samples = std::move(density);
  return k;
}

double KernelSpec::density(double z) const {
  if (!(z > 0.0) || z > 1.0) return 0.0;
  switch (kind) {
    case DensityKind::none:
      return 0.0;
    case DensityKind::uniform:
      return kappa;
    case DensityKind::beta:
      return beta_scale * std::pow(z, p - 1.0) * std::pow(1.0 - z, q - 1.0);
    case DensityKind::samples:
      return interp_log(*samples, z);
  }
  return 0.0;
}

std::string KernelSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case DensityKind::none:
      os << "atoms-only";
      break;
    case DensityKind::uniform:
      os << "uniform(" << kappa << ")";
      break;
    case DensityKind::beta:
      os << "beta(" << p << "," << q << ")";
      break;
    case DensityKind::samples:
      os << "samples(n=" << samples->grid.n << ")";
      break;
  }
  for (const auto& a : atoms) os << " + " << a.c << "*delta(" << a.z << ")";
  return os.str();
}

RateSpec::RateSpec(double a, double g) : alpha(a), gamma(g) {
  if (!(a > 0.0) || !(g > 0.0)) throw DomainError("rate: alpha and gamma must be positive");
}

namespace {

struct Moments {
  double mass = 0.0;
  double first = 0.0;
};

Moments density_moments(const KernelSpec& k) {
  switch (k.kind) {
    case DensityKind::none:
      return {};
    case DensityKind::uniform:
      return {k.kappa, 0.5 * k.kappa};
    case DensityKind::beta:
      return {k.beta_scale * std::exp(log_beta(k.p, k.q).real()),
              k.beta_scale * std::exp(log_beta(k.p + 1.0, k.q).real())};
    case DensityKind::samples:
      return {integrate(*k.samples, 0.0), integrate(*k.samples, 1.0)};
  }
  return {};
}

}  // namespace

KernelDiagnostics validate_kernel(const KernelSpec& k, double tol) {
  KernelDiagnostics d;
  const Moments m = density_moments(k);
  d.mass = m.mass;
  d.first_moment = m.first;
  for (const auto& a : k.atoms) {
    if (!(a.z > 0.0) || a.z > 1.0)
      d.violations.push_back("atom location " + std::to_string(a.z) + " outside (0,1]");
    if (!(a.c > 0.0)) d.violations.push_back("atom weight " + std::to_string(a.c) + " not positive");
    d.mass += a.c;
    d.first_moment += a.c * a.z;
  }
  if (k.kind == DensityKind::uniform && !(k.kappa >= 0.0))
    d.violations.push_back("negative uniform density");
  if (k.kind == DensityKind::samples) {
    const double mn = k.samples->values.minCoeff();
    if (mn < 0.0) d.violations.push_back("sampled density has negative value " + std::to_string(mn));
  }
  if (!std::isfinite(d.mass)) d.violations.push_back("total mass is not finite");
  const double dev = std::abs(d.first_moment - 1.0);
  if (!(dev <= tol)) {
    std::ostringstream os;
    os << "first moment " << std::setprecision(12) << d.first_moment << " deviates from 1 by " << dev;
    d.violations.push_back(os.str());
  }
  if (k.kind == DensityKind::beta) {
    if (k.p < 1.0) d.warnings.push_back("density unbounded near z=0");
    if (k.q < 1.0) d.warnings.push_back("density unbounded near z=1");
  }
  if (!k.has_density()) d.warnings.push_back("no density part: no positive lower bound on any interval");
  if (!k.atoms.empty()) d.warnings.push_back("atoms present: kernel reconstruction is distributional only");
  d.pass = d.violations.empty();
  return d;
}

KernelSpec renormalize(const KernelSpec& k) {
  const KernelDiagnostics d = validate_kernel(k, 1e300);
  if (!(d.first_moment > 0.0)) throw DomainError("renormalize: first moment must be positive");
  const double c = 1.0 / d.first_moment;
  KernelSpec out = k;
  out.kappa *= c;
  out.beta_scale *= c;
  if (out.samples) out.samples->values *= c;
  for (auto& a : out.atoms) a.c *= c;
  return out;
}

cplx k0_mellin_unchecked(const KernelSpec& k, cplx s) {
  cplx acc{0.0, 0.0};
  switch (k.kind) {
    case DensityKind::none:
      break;
    case DensityKind::uniform:
      acc = k.kappa / s;
      break;
    case DensityKind::beta:
      acc = k.beta_scale * std::exp(log_beta(s + k.p - 1.0, k.q));
      break;
    case DensityKind::samples: {
      const auto& g = k.samples->grid;
      for (int i = 0; i < g.n; ++i)
        acc += g.weights[i] * std::exp((s - 1.0) * std::log(g.nodes[i])) * k.samples->values[i];
      break;
    }
  }
  for (const auto& a : k.atoms) acc += a.c * std::exp((s - 1.0) * std::log(a.z));
  return acc;
}

cplx k0_mellin(const KernelSpec& k, cplx s) {
  if (!(s.real() >= 1.0)) throw DomainError("k0_mellin: need Re s >= 1");
  return k0_mellin_unchecked(k, s);
}

TailCoefficient k0_tail_coefficient(const KernelSpec& k) {
  TailCoefficient t;
  for (const auto& a : k.atoms)
    if (std::abs(a.z - 1.0) < 1e-12)
      throw NumericalError("asymptotic law inapplicable: atom at z = 1");
  switch (k.kind) {
    case DensityKind::none:
      t.value = 0.0;
      break;
    case DensityKind::uniform:
      t.value = k.kappa;
      break;
    case DensityKind::beta:
      if (k.q < 1.0) throw NumericalError("asymptotic law inapplicable: density unbounded at z = 1");
      t.value = k.q == 1.0 ? k.beta_scale : 0.0;
      break;
    case DensityKind::samples: {
      const auto& g = k.samples->grid;
      if (g.x_max < 1.0 - 1e-9) {
        t.value = 0.0;
        t.warnings.push_back("sampled density stops before z=1; tail coefficient taken as 0");
      } else {
        t.value = k.samples->values[g.n - 1];
      }
      break;
    }
  }
  if (!k.atoms.empty() && t.value == 0.0)
    t.warnings.push_back("atoms below z=1 make s*K0(s) decay faster than any power of 1/s");
  return t;
}

namespace {

using nlohmann::json;

GridFunction samples_from_json(const json& d, const std::string& base_dir) {
  if (d.contains("path")) {
    std::filesystem::path p = d.at("path").get<std::string>();
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    return read_grid_csv(p.string());
  }
  const auto z = d.at("z").get<std::vector<double>>();
  const auto v = d.at("values").get<std::vector<double>>();
  if (z.size() != v.size()) throw DomainError("kernel samples: z and values differ in length");
  VectorXd zx = Eigen::Map<const VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
  VectorXd vv = Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  return GridFunction(log_grid_from_nodes(zx, 1e-6), vv);
}

}  // namespace

KernelSpec kernel_from_json_text(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DomainError(std::string("kernel json: ") + e.what());
  }
  try {
    KernelSpec k;
    if (j.contains("density") && !j.at("density").is_null()) {
      const json& d = j.at("density");
      const std::string kind = d.at("kind").get<std::string>();
      if (kind == "uniform") {
        k = KernelSpec::uniform_binary(d.value("kappa", 2.0));
      } else if (kind == "beta") {
        k = KernelSpec::beta(d.value("p", 2.0), d.value("q", 2.0));
        if (d.contains("scale")) k.beta_scale = d.at("scale").get<double>();
      } else if (kind == "samples") {
        k = KernelSpec::from_samples(samples_from_json(d, base_dir));
      } else {
        throw DomainError("kernel json: unknown density kind '" + kind + "'");
      }
    }
    if (j.contains("atoms")) {
      for (const auto& a : j.at("atoms")) {
        if (!a.is_array() || a.size() != 2) throw DomainError("kernel json: atoms must be [z, c] pairs");
        k.atoms.push_back({a[0].get<double>(), a[1].get<double>()});
      }
    }
    if (!k.has_density() && k.atoms.empty()) throw DomainError("kernel json: empty kernel");
    return k;
  } catch (const json::exception& e) {
    throw DomainError(std::string("kernel json: ") + e.what());
  }
}

KernelSpec read_kernel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read kernel file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return kernel_from_json_text(ss.str(), std::filesystem::path(path).parent_path().string());
}

std::string kernel_to_json_text(const KernelSpec& k) {
  json j;
  switch (k.kind) {
    case DensityKind::none:
      j["density"] = nullptr;
      break;
    case DensityKind::uniform:
      j["density"] = {{"kind", "uniform"}, {"kappa", k.kappa}};
      break;
    case DensityKind::beta:
      j["density"] = {{"kind", "beta"}, {"p", k.p}, {"q", k.q}, {"scale", k.beta_scale}};
      break;
    case DensityKind::samples: {
      std::vector<double> z(k.samples->grid.nodes.data(), k.samples->grid.nodes.data() + k.samples->grid.n);
      std::vector<double> v(k.samples->values.data(), k.samples->values.data() + k.samples->grid.n);
      j["density"] = {{"kind", "samples"}, {"z", z}, {"values", v}};
      break;
    }
  }
  json atoms = json::array();
  for (const auto& a : k.atoms) atoms.push_back({a.z, a.c});
  j["atoms"] = atoms;
  return j.dump(2);
}

}  // namespace fragmellin
