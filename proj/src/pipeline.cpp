#include "fragmellin/pipeline.hpp"

#include <json.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace fragmellin {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw DomainError("cannot write " + p.string());
  out << std::setprecision(17);
  return out;
}

std::string run_dir(const RunConfig& cfg, const CommandOptions& opt) {
  const std::string dir = opt.output_dir ? *opt.output_dir : cfg.output_dir;
  fs::create_directories(dir);
  return dir;
}

void write_report_plots(const EstimationReport& rep, const fs::path& dir, const KernelSpec* truth) {
  {
    auto out = open_out(dir / "plot_kernel.csv");
    out << "quantity,z,value\n";
    for (int i = 0; i < rep.k0_hat.grid.n; ++i) out << "k0_hat," << rep.k0_hat.grid.nodes[i] << ',' << rep.k0_hat.values[i] << '\n';
    for (int i = 0; i < rep.H_hat.grid.n; ++i) out << "H_hat," << rep.H_hat.grid.nodes[i] << ',' << rep.H_hat.values[i] << '\n';
    if (truth && truth->has_density())
      for (int i = 0; i < rep.k0_hat.grid.n; ++i)
        out << "k0_true," << rep.k0_hat.grid.nodes[i] << ',' << truth->density(rep.k0_hat.grid.nodes[i]) << '\n';
  }
  {
    auto out = open_out(dir / "plot_sweep.csv");
    out << "V,total_variation,plain_total_variation,discarded\n";
    for (const auto& e : rep.sweep)
      out << e.V << ',' << e.total_variation << ',' << e.plain_total_variation << ',' << e.discarded << '\n';
  }
  {
    auto out = open_out(dir / "plot_K0_line.csv");
    out << "v,re,im,abs\n";
    const auto& l = rep.K0_line.line;
    for (Eigen::Index j = 0; j < l.size(); ++j)
      out << l.v[j] << ',' << l.values[j].real() << ',' << l.values[j].imag() << ',' << std::abs(l.values[j]) << '\n';
  }
}

json diag_json(const Diagnostics& d) { return {{"values", d.values}, {"warnings", d.warnings}}; }

}  // namespace

SampleSet parse_samples(const std::string& text, const std::string& source) {
  SampleSet s;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cols = split(t);
    const std::string where = source + ":" + std::to_string(lineno);
    if (!header_seen) {
      header_seen = true;
      if (cols.size() >= 2 && cols[0] == "t" && cols[1] == "x") continue;
    }
    if (cols.size() != 2) throw DomainError(where + ": expected two columns t,x");
    const double tt = parse_number(cols[0], where + ": t");
    const double x = parse_number(cols[1], where + ": x");
    if (!(x > 0.0)) throw DomainError(where + ": size must be positive, got " + cols[1]);
    if (s.times.empty() || tt != s.times.back()) {
      if (!s.times.empty() && tt < s.times.back()) throw DomainError(where + ": times must be non-decreasing");
      s.times.push_back(tt);
      s.sizes.emplace_back();
    }
    s.sizes.back().push_back(x);
  }
  return s;
}

SampleSet ingest_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read samples " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_samples(ss.str(), path);
}

double log_bandwidth(const std::vector<double>& sizes) {
  if (sizes.size() < 2) return 0.5;
  std::vector<double> w(sizes.size());
  std::transform(sizes.begin(), sizes.end(), w.begin(), [](double x) { return std::log(x); });
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / w.size();
  double var = 0.0;
  for (double v : w) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / (w.size() - 1));
  std::sort(w.begin(), w.end());
  auto q = [&](double p) { return w[static_cast<std::size_t>(p * (w.size() - 1))]; };
  const double iqr = (q(0.75) - q(0.25)) / 1.349;
  double spread = iqr > 0.0 ? std::min(sd, iqr) : sd;
  if (!(spread > 0.0)) spread = 0.1;
  return 0.9 * spread * std::pow(static_cast<double>(w.size()), -0.2);
}

GridFunction empirical_density(const std::vector<double>& sizes, const LogGrid& grid, double bandwidth,
                               Diagnostics* diag) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw DomainError("empirical_density: bandwidth must be positive");
  for (double x : sizes)
    if (!(x > 0.0)) throw DomainError("empirical_density: sizes must be positive");
  const double n = static_cast<double>(sizes.size());
  if (diag) {
    diag->set("normalization", n);
    diag->set("bandwidth", bandwidth);
    if (sizes.size() < 30) diag->warn("fewer than 30 samples: density estimate is rough");
  }
  VectorXd f = VectorXd::Zero(grid.n);
  if (sizes.empty()) return GridFunction(grid, f);
  std::vector<double> w(sizes.size());
  std::transform(sizes.begin(), sizes.end(), w.begin(), [](double x) { return std::log(x); });
  std::sort(w.begin(), w.end());
  const double c = 1.0 / (n * bandwidth * std::sqrt(2.0 * pi));
  const double reach = 9.0 * bandwidth;
  parallel_for(grid.n, [&](Eigen::Index i) {
    const double lx = std::log(grid.nodes[i]);
    auto a = std::lower_bound(w.begin(), w.end(), lx - reach);
    auto b = std::upper_bound(w.begin(), w.end(), lx + reach);
    double acc = 0.0;
    for (auto it = a; it != b; ++it) {
      const double t = (lx - *it) / bandwidth;
      acc += std::exp(-0.5 * t * t);
    }
    f[i] = c * acc / grid.nodes[i];
  }, 16);
  return GridFunction(grid, f);
}

std::pair<std::vector<double>, std::vector<double>> read_moments_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read series " + path);
  std::vector<double> t, m0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    const auto cols = split(s);
    if (cols[0] == "t") continue;
    const std::string where = path + ":" + std::to_string(lineno);
    if (cols.size() < 2) throw DomainError(where + ": expected t,M0,...");
    t.push_back(parse_number(cols[0], where));
    m0.push_back(parse_number(cols[1], where));
  }
  return {t, m0};
}

void write_run_json(const std::string& dir, const std::string& command, const std::string& config_json,
                    const std::string& extra_json) {
  fs::create_directories(dir);
  json j;
  j["command"] = command;
  j["version"] = {{"fragmellin", version_string},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
                  {"compiler", __VERSION__}};
  j["threads"] = worker_count();
  j["config"] = json::parse(config_json);
  j["result"] = json::parse(extra_json);
  auto out = open_out(fs::path(dir) / "run.json");
  out << j.dump(2) << '\n';
}

std::string run_simulate(const RunConfig& cfg, const CommandOptions& opt) {
  const std::string dir = run_dir(cfg, opt);
  const GridFunction f0 = GridFunction::sample(cfg.sim_grid, [](double x) { return std::exp(-x); });
  const TimeSeries ts = simulate(f0, cfg.kernel, cfg.rate, cfg.t_end, cfg.output_times, cfg.sim);
  write_time_series(ts, dir);
  if (opt.emit_plot_data) {
    auto out = open_out(fs::path(dir) / "plot_snapshots.csv");
    out << "t,x,f\n";
    for (std::size_t k = 0; k < ts.times.size(); ++k)
      for (int i = 0; i < ts.snapshots[k].grid.n; ++i)
        out << ts.times[k] << ',' << ts.snapshots[k].grid.nodes[i] << ',' << ts.snapshots[k].values[i] << '\n';
  }
  json res = {{"initial_condition", "exp(-x)"}, {"steps", ts.steps}, {"diagnostics", diag_json(ts.diag)}};
  write_run_json(dir, "simulate", cfg.to_json(), res.dump());
  std::ostringstream os;
  os << "simulate: " << ts.times.size() << " snapshots, " << ts.steps << " steps, max mass drift "
     << ts.diag.get("max_mass_drift") << ", output in " << dir;
  return os.str();
}

std::string run_profile(const RunConfig& cfg, const std::string& method, const CommandOptions& opt) {
  if (method != "dynamic" && method != "spectral" && method != "both")
    throw DomainError("profile: method must be dynamic, spectral or both");
  const std::string dir = run_dir(cfg, opt);
  std::optional<ProfileResult> sp, dp;
  if (method != "dynamic") {
    sp = spectral_profile(cfg.kernel, cfg.rate, cfg.spectral, cfg.profile_grid);
    write_profile(*sp, (fs::path(dir) / "profile_spectral.csv").string(), (fs::path(dir) / "profile_spectral.json").string());
  }
  if (method != "spectral") {
    DynamicConfig dc;
    dc.sim_grid = cfg.sim_grid;
    dc.t_end = cfg.dynamic_t_end;
    dc.sim = cfg.sim;
    dc.rho = cfg.spectral.rho;
    dp = dynamic_profile(cfg.kernel, cfg.rate, dc, cfg.profile_grid);
    write_profile(*dp, (fs::path(dir) / "profile_dynamic.csv").string(), (fs::path(dir) / "profile_dynamic.json").string());
  }
  json res = {{"method", method}};
  std::ostringstream os;
  os << "profile (" << method << "):";
  if (sp) {
    res["spectral_residual"] = sp->residual;
    os << " spectral residual " << sp->residual;
  }
  if (dp) {
    res["dynamic_residual"] = dp->residual;
    os << " dynamic residual " << dp->residual;
  }
  if (sp && dp) {
    const double d = l1_distance(sp->g, dp->g);
    res["cross_method_l1"] = d;
    os << " cross-method L1 " << d;
  }
  if (opt.emit_plot_data) {
    auto out = open_out(fs::path(dir) / "plot_profile.csv");
    out << "method,x,g\n";
    for (const auto* r : {sp ? &*sp : nullptr, dp ? &*dp : nullptr}) {
      if (!r) continue;
      const char* name = r->method == ProfileMethod::spectral ? "spectral" : "dynamic";
      for (int i = 0; i < r->g.grid.n; ++i) out << name << ',' << r->g.grid.nodes[i] << ',' << r->g.values[i] << '\n';
    }
  }
  write_run_json(dir, "profile", cfg.to_json(), res.dump());
  os << ", output in " << dir;
  return os.str();
}

std::string run_estimate(const RunConfig& cfg, const std::string& profile_csv,
                         const std::optional<std::string>& series_csv, const CommandOptions& opt) {
  const std::string dir = run_dir(cfg, opt);
  const GridFunction g = read_grid_csv(profile_csv);
  EstimationOptions eo = cfg.estimation;
  eo.forward.clip_negative = true;
  std::optional<std::pair<std::vector<double>, std::vector<double>>> series;
  if (series_csv) series = read_moments_csv(*series_csv);
  const EstimationReport rep = estimate(g, eo, series);
  write_report(rep, dir, cfg.to_json());
  if (opt.emit_plot_data) write_report_plots(rep, dir, nullptr);
  json res = {{"profile", profile_csv},
              {"series", series_csv ? json(*series_csv) : json(nullptr)},
              {"gamma_hat", rep.gamma_hat},
              {"alpha_hat", rep.alpha_hat},
              {"gamma_method", rep.gamma_method},
              {"s0", rep.s0},
              {"V_used", rep.V_used}};
  write_run_json(dir, "estimate", cfg.to_json(), res.dump());
  std::ostringstream os;
  os << "estimate: gamma_hat " << rep.gamma_hat << " (" << rep.gamma_method << "), alpha_hat " << rep.alpha_hat
     << ", s0 " << rep.s0 << ", V " << rep.V_used << ", output in " << dir;
  return os.str();
}

std::string run_roundtrip(const RunConfig& cfg, const CommandOptions& opt) {
  const std::string dir = run_dir(cfg, opt);
  RoundtripOptions ro;
  ro.spectral = cfg.spectral;
  ro.profile_grid = cfg.profile_grid;
  ro.noise = cfg.noise;
  ro.seed = cfg.seed;
  ro.estimation = cfg.estimation;
  const RoundtripResult r = roundtrip(cfg.kernel, cfg.rate, ro);
  write_report(r.report, dir, cfg.to_json());
  write_profile(r.profile, (fs::path(dir) / "profile_spectral.csv").string(), (fs::path(dir) / "profile_spectral.json").string());
  if (opt.emit_plot_data) write_report_plots(r.report, dir, &cfg.kernel);
  json res = {{"gamma_hat", r.report.gamma_hat},
              {"alpha_hat", r.report.alpha_hat},
              {"gamma_error", r.gamma_error},
              {"alpha_error", r.alpha_error},
              {"kernel_l1", r.kernel_l1},
              {"kernel_l2", r.kernel_l2},
              {"noise", cfg.noise},
              {"s0", r.report.s0},
              {"V_used", r.report.V_used},
              {"sweep_tv_monotone", r.report.diag.get("sweep_tv_monotone") == 1.0}};
  write_run_json(dir, "roundtrip", cfg.to_json(), res.dump());
  std::ostringstream os;
  os << "roundtrip: gamma error " << r.gamma_error << ", alpha error " << r.alpha_error;
  if (std::isfinite(r.kernel_l1))
    os << ", kernel L1 " << r.kernel_l1 << ", kernel L2 " << r.kernel_l2;
  else
    os << ", kernel has atoms (no density error)";
  os << ", output in " << dir;
  return os.str();
}

std::string run_mellin(const std::string& csv, double u, double V, double dv, const Taper& taper,
                       const std::string& out_csv, bool emit_plot_data) {
  const GridFunction f = read_grid_csv(csv);
  if (!(dv > 0.0)) dv = default_dv(f.grid);
  const MellinSamples m = mellin_forward(f, u, V, dv);
  fs::path out(out_csv);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_mellin_csv(m, out_csv, taper);
  const fs::path dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
  if (emit_plot_data) {
    auto p = open_out(dir / "plot_mellin.csv");
    p << "v,abs,arg\n";
    for (Eigen::Index j = 0; j < m.line.size(); ++j) p << m.line.v[j] << ',' << std::abs(m.line.values[j]) << ',' << std::arg(m.line.values[j]) << '\n';
  }
  json cfg = {{"input", csv}, {"u", u}, {"V", m.line.V}, {"dv", m.line.dv}, {"taper", taper.describe()}, {"output", out_csv}};
  write_run_json(dir.string(), "mellin", cfg.dump(), json({{"diagnostics", diag_json(m.diag)}}).dump());
  std::ostringstream os;
  os << "mellin: " << m.line.size() << " samples on Re s = " << u << " written to " << out_csv;
  for (const auto& w : m.diag.warnings) os << "\nwarning: " << w;
  return os.str();
}

std::string run_density(const std::string& samples_csv, const LogGrid& grid, std::optional<double> bandwidth,
                        const std::string& out_dir, bool emit_plot_data) {
  const SampleSet s = ingest_samples(samples_csv);
  if (s.groups() == 0) throw DomainError("density: no samples in " + samples_csv);
  fs::create_directories(out_dir);
  json groups = json::array();
  std::ofstream plot;
  if (emit_plot_data) {
    plot = open_out(fs::path(out_dir) / "plot_density.csv");
    plot << "t,x,density\n";
  }
  for (std::size_t k = 0; k < s.groups(); ++k) {
    Diagnostics d;
    const double h = bandwidth ? *bandwidth : log_bandwidth(s.sizes[k]);
    const GridFunction f = empirical_density(s.sizes[k], grid, h, &d);
    std::ostringstream name;
    name << "density_" << std::setw(4) << std::setfill('0') << k << ".csv";
    write_grid_csv(f, (fs::path(out_dir) / name.str()).string());
    if (emit_plot_data)
      for (int i = 0; i < grid.n; ++i) plot << s.times[k] << ',' << grid.nodes[i] << ',' << f.values[i] << '\n';
    groups.push_back({{"t", s.times[k]}, {"count", s.sizes[k].size()}, {"file", name.str()}, {"diagnostics", diag_json(d)}});
  }
  json cfg = {{"input", samples_csv},
              {"grid", {{"x_min", grid.x_min}, {"x_max", grid.x_max}, {"n", grid.n}}},
              {"bandwidth", bandwidth ? json(*bandwidth) : json("silverman-log")}};
  write_run_json(out_dir, "density", cfg.dump(), json({{"groups", groups}}).dump());
  std::ostringstream os;
  os << "density: " << s.groups() << " time groups written to " << out_dir;
  return os.str();
}

}  // namespace fragmellin
