#include "fragmellin/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace fragmellin {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class Section {
 public:
  Section(const IniFile& ini, const std::string& name) : ini_(ini), name_(name) {
    auto it = ini.entries.find(name);
    if (it != ini.entries.end()) map_ = &it->second;
  }

  bool has(const std::string& key) const { return map_ && map_->count(key); }

  std::string where(const std::string& key) const {
    const int line = map_ && map_->count(key) ? map_->at(key).second : 0;
    return ini_.source + ":" + std::to_string(line) + ": [" + name_ + "] " + key;
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    used_.insert(key);
    return map_->at(key).first;
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    used_.insert(key);
    return parse_number(map_->at(key).first, where(key));
  }

  int integer(const std::string& key, int fallback) {
    const double v = number(key, fallback);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw DomainError(where(key) + ": expected an integer");
    return static_cast<int>(v);
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    used_.insert(key);
    const std::string v = map_->at(key).first;
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    throw DomainError(where(key) + ": expected true or false");
  }

  std::vector<double> list(const std::string& key, const std::vector<double>& fallback) {
    if (!has(key)) return fallback;
    used_.insert(key);
    return parse_list(map_->at(key).first, where(key));
  }

  Window window(const std::string& key, Window fallback) {
    if (!has(key)) return fallback;
    const auto v = list(key, {});
    if (v.size() != 2 || !(v[0] > 0.0) || !(v[1] > v[0])) throw DomainError(where(key) + ": expected 'lo, hi' with 0 < lo < hi");
    return {v[0], v[1]};
  }

  // rethrows DomainError from a validator with this key's location
  template <class F>
  auto guarded(const std::string& key, F&& f) {
    try {
      return f();
    } catch (const DomainError& e) {
      throw DomainError(where(key) + ": " + e.what());
    }
  }

  void finish() const {
    if (!map_) return;
    for (const auto& [k, v] : *map_)
      if (!used_.count(k))
        throw DomainError(ini_.source + ":" + std::to_string(v.second) + ": unknown key '" + k + "' in [" + name_ + "]");
  }

 private:
  const IniFile& ini_;
  std::string name_;
  const std::map<std::string, std::pair<std::string, int>>* map_ = nullptr;
  std::set<std::string> used_;
};

LogGrid read_grid(Section& s, const LogGrid& fallback) {
  const double lo = s.number("x_min", fallback.x_min);
  const double hi = s.number("x_max", fallback.x_max);
  const int n = s.integer("n", fallback.n);
  return s.guarded("n", [&] { return make_log_grid(lo, hi, n); });
}

KernelSpec kernel_by_kind(Section& s, const std::string& kind) {
  if (kind == "uniform") return KernelSpec::uniform_binary(s.number("kappa", 2.0));
  if (kind == "beta") return KernelSpec::beta(s.number("p", 2.0), s.number("q", 2.0));
  if (kind == "mitosis") return KernelSpec::mitosis();
  throw DomainError(s.where("kind") + ": unknown kernel kind '" + kind + "' (uniform, beta, mitosis, or use path)");
}

nlohmann::json grid_json(const LogGrid& g) { return {{"x_min", g.x_min}, {"x_max", g.x_max}, {"n", g.n}}; }

}  // namespace

double parse_number(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    throw DomainError(what + ": not a number: '" + t + "'");
  }
  if (pos != t.size() || !std::isfinite(v)) throw DomainError(what + ": not a number: '" + t + "'");
  return v;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_number(item, what));
  }
  return out;
}

IniFile IniFile::parse(const std::string& text, const std::string& source) {
  IniFile ini;
  ini.source = source;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw DomainError(source + ":" + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      ini.entries[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DomainError(source + ":" + std::to_string(lineno) + ": expected key = value");
    if (section.empty()) throw DomainError(source + ":" + std::to_string(lineno) + ": key outside of any [section]");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw DomainError(source + ":" + std::to_string(lineno) + ": empty key");
    if (ini.entries[section].count(key))
      throw DomainError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    ini.entries[section][key] = {trim(line.substr(eq + 1)), lineno};
  }
  return ini;
}

IniFile IniFile::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

RunConfig RunConfig::from_ini(const IniFile& ini, const std::string& base_dir) {
  static const std::set<std::string> known = {"grid", "profile", "kernel", "rate", "solver", "spectral", "estimation", "run"};
  for (const auto& [name, keys] : ini.entries)
    if (!known.count(name)) {
      int line = keys.empty() ? 0 : keys.begin()->second.second;
      throw DomainError(ini.source + ":" + std::to_string(line) + ": unknown section [" + name + "]");
    }
  RunConfig c;
  c.source = ini.source;
  c.base_dir = base_dir;

  Section grid(ini, "grid");
  c.sim_grid = read_grid(grid, c.sim_grid);
  grid.finish();

  Section rate(ini, "rate");
  const double alpha = rate.number("alpha", 1.0), gamma = rate.number("gamma", 1.0);
  c.rate = rate.guarded("gamma", [&] { return RateSpec(alpha, gamma); });
  rate.finish();

  Section prof(ini, "profile");
  c.profile_grid = read_grid(prof, make_log_grid(1e-5, std::max(20.0, std::pow(150.0 / alpha, 1.0 / gamma)), 1400));
  c.profile_method = prof.text("method", c.profile_method);
  c.dynamic_t_end = prof.number("t_end", c.dynamic_t_end);
  prof.finish();

  Section ker(ini, "kernel");
  if (ker.has("path") && ker.has("kind")) throw DomainError(ker.where("kind") + ": give either path or kind, not both");
  if (ker.has("path")) {
    const std::filesystem::path p = ker.text("path", "");
    const std::filesystem::path full = p.is_absolute() ? p : std::filesystem::path(base_dir) / p;
    if (!std::filesystem::exists(full)) throw DomainError(ker.where("path") + ": file not found: " + full.string());
    c.kernel = ker.guarded("path", [&] { return read_kernel_file(full.string()); });
    c.kernel_source = full.string();
  } else {
    const std::string kind = ker.text("kind", "uniform");
    c.kernel = ker.guarded("kind", [&] { return kernel_by_kind(ker, kind); });
    c.kernel_source = "kind=" + kind;
  }
  if (ker.flag("renormalize", false)) c.kernel = renormalize(c.kernel);
  ker.finish();

  Section sol(ini, "solver");
  c.sim.dt = sol.number("dt", 0.0);
  c.sim.dt_factor = sol.number("dt_factor", c.sim.dt_factor);
  c.t_end = sol.number("t_end", c.t_end);
  c.output_times = sol.list("output_times", c.output_times);
  {
    const std::string scheme = sol.text("scheme", "etd2");
    if (scheme == "etd2") c.sim.scheme = Scheme::etd2;
    else if (scheme == "exp_euler") c.sim.scheme = Scheme::exp_euler;
    else throw DomainError(sol.where("scheme") + ": expected etd2 or exp_euler");
  }
  c.sim.mass_correction = sol.flag("mass_correction", c.sim.mass_correction);
  c.sim.drift_tol = sol.number("drift_tol", c.sim.drift_tol);
  sol.finish();

  Section sp(ini, "spectral");
  c.spectral = SpectralConfig::defaults(c.rate);
  c.spectral.s0 = sp.number("s0", c.spectral.s0);
  c.spectral.u_eval = sp.number("u_eval", c.spectral.s0 + c.rate.gamma / 2.0);
  c.spectral.V = sp.number("V", c.spectral.V);
  c.spectral.dv = sp.number("dv", c.spectral.dv);
  c.spectral.dv_inv = sp.number("dv_inv", c.spectral.dv_inv);
  c.spectral.rho = sp.number("rho", c.spectral.rho);
  c.spectral.multi_line = sp.flag("multi_line", c.spectral.multi_line);
  if (sp.has("taper")) c.spectral.taper = sp.guarded("taper", [&] { return Taper::parse(sp.text("taper", "")); });
  sp.finish();

  Section es(ini, "estimation");
  EstimationOptions& e = c.estimation;
  e.probe_R = es.number("probe_R", e.probe_R);
  e.gamma_window = es.window("gamma_window", e.gamma_window);
  e.alpha_window = es.window("alpha_window", e.alpha_window);
  e.moment_window = es.window("moment_window", e.moment_window);
  {
    const std::string fo = es.text("fit_order", "auto");
    e.fit_order = fo == "auto" ? -1 : es.guarded("fit_order", [&] {
      const double v = parse_number(fo, "fit_order");
      if (v != std::floor(v) || v < 0 || v > 8) throw DomainError("expected auto or an integer in [0, 8]");
      return static_cast<int>(v);
    });
  }
  e.max_fit_order = es.integer("max_fit_order", e.max_fit_order);
  e.bootstrap = es.integer("bootstrap", e.bootstrap);
  e.s0_candidates = es.list("s0_candidates", e.s0_candidates);
  e.V = es.number("V", e.V);
  e.dv = es.number("dv", e.dv);
  if (es.has("taper")) e.taper = es.guarded("taper", [&] { return Taper::parse(es.text("taper", "")); });
  {
    const std::string mode = es.text("mode", "auto");
    if (mode == "auto") e.auto_mode = true;
    else if (mode == "direct" || mode == "primitive") {
      e.auto_mode = false;
      e.mode = mode == "direct" ? ReconMode::direct : ReconMode::primitive;
    } else {
      throw DomainError(es.where("mode") + ": expected auto, direct or primitive");
    }
  }
  e.adaptive_V = es.flag("adaptive_V", e.adaptive_V);
  e.sweep_V = es.list("sweep_V", e.sweep_V);
  e.sweep_decay = es.number("sweep_decay", e.sweep_decay);
  e.sweep_tv_range = es.window("sweep_tv_range", e.sweep_tv_range);
  {
    const double lo = es.number("kernel_x_min", e.kernel_grid.x_min);
    const double hi = es.number("kernel_x_max", e.kernel_grid.x_max);
    const int n = es.integer("kernel_n", e.kernel_grid.n);
    e.kernel_grid = es.guarded("kernel_n", [&] { return make_log_grid(lo, hi, n); });
  }
  c.noise = es.number("noise", c.noise);
  es.finish();

  Section run(ini, "run");
  {
    const double s = run.number("seed", 1.0);
    if (s < 0 || s != std::floor(s) || s > 9.007199254740992e15) throw DomainError(run.where("seed") + ": expected a non-negative integer");
    c.seed = static_cast<std::uint64_t>(s);
  }
  c.estimation.seed = derive_seed(c.seed, "estimation");
  c.spectral.seed = derive_seed(c.seed, "strip");
  c.output_dir = run.text("output_dir", c.output_dir);
  run.finish();

  c.validate();
  return c;
}

RunConfig RunConfig::read(const std::string& path) {
  const IniFile ini = IniFile::read(path);
  std::string dir = std::filesystem::path(path).parent_path().string();
  if (dir.empty()) dir = ".";
  return from_ini(ini, dir);
}

void RunConfig::validate() const {
  const KernelDiagnostics kd = validate_kernel(kernel);
  if (!kd.pass) {
    std::string msg = "kernel " + kernel_source + " fails validation:";
    for (const auto& v : kd.violations) msg += " " + v + ";";
    throw DomainError(msg);
  }
  if (!(t_end > 0.0)) throw DomainError("solver: t_end must be positive");
  for (double t : output_times)
    if (!(t >= 0.0) || t > t_end) throw DomainError("solver: output_times must lie in [0, t_end]");
  if (!std::is_sorted(output_times.begin(), output_times.end())) throw DomainError("solver: output_times must be increasing");
  if (!(sim.dt_factor > 0.0)) throw DomainError("solver: dt_factor must be positive");
  if (profile_method != "dynamic" && profile_method != "spectral" && profile_method != "both")
    throw DomainError("profile: method must be dynamic, spectral or both");
  if (!(dynamic_t_end > 0.0)) throw DomainError("profile: t_end must be positive");
  spectral.validate(rate);
  if (!(noise >= 0.0)) throw DomainError("estimation: noise must be >= 0");
  for (double s0 : estimation.s0_candidates)
    if (!(s0 > 2.0)) throw DomainError("estimation: s0 candidates must exceed 2");
  if (estimation.s0_candidates.empty()) throw DomainError("estimation: s0_candidates is empty");
  if (!(estimation.alpha_window.lo > 2.0)) throw DomainError("estimation: alpha_window must lie above 2");
  if (!(estimation.V > 0.0) || !(estimation.dv > 0.0)) throw DomainError("estimation: V and dv must be positive");
  if (estimation.max_fit_order < 1) throw DomainError("estimation: max_fit_order must be >= 1");
  if (output_dir.empty()) throw DomainError("run: output_dir is empty");
}

std::string RunConfig::to_json() const {
  using nlohmann::json;
  json j;
  j["source"] = source;
  j["grid"] = grid_json(sim_grid);
  j["profile"] = {{"grid", grid_json(profile_grid)}, {"method", profile_method}, {"t_end", dynamic_t_end}};
  j["kernel"] = {{"source", kernel_source}, {"spec", json::parse(kernel_to_json_text(kernel))}};
  j["rate"] = {{"alpha", rate.alpha}, {"gamma", rate.gamma}};
  j["solver"] = {{"dt", sim.dt},
                 {"dt_factor", sim.dt_factor},
                 {"dt_max", dt_max(rate, sim_grid)},
                 {"t_end", t_end},
                 {"output_times", output_times},
                 {"scheme", sim.scheme == Scheme::etd2 ? "etd2" : "exp_euler"},
                 {"mass_correction", sim.mass_correction},
                 {"drift_tol", sim.drift_tol}};
  j["spectral"] = {{"s0", spectral.s0},
                   {"u_eval", spectral.u_eval},
                   {"V", spectral.V},
                   {"dv", spectral.dv},
                   {"dv_inv", spectral.dv_inv > 0.0 ? spectral.dv_inv : 0.5 * pi / std::log(profile_grid.x_max / profile_grid.x_min)},
                   {"rho", spectral.rho},
                   {"multi_line", spectral.multi_line},
                   {"taper", spectral.taper.describe()},
                   {"seed", spectral.seed}};
  const EstimationOptions& e = estimation;
  j["estimation"] = {{"probe_R", e.probe_R},
                     {"gamma_window", {e.gamma_window.lo, e.gamma_window.hi}},
                     {"alpha_window", {e.alpha_window.lo, e.alpha_window.hi}},
                     {"moment_window", {e.moment_window.lo, e.moment_window.hi}},
                     {"fit_order", e.fit_order < 0 ? json("auto") : json(e.fit_order)},
                     {"max_fit_order", e.max_fit_order},
                     {"bootstrap", e.bootstrap},
                     {"bootstrap_tolerance", 0.01},
                     {"s0_candidates", e.s0_candidates},
                     {"V", e.V},
                     {"dv", e.dv},
                     {"taper", e.taper.describe()},
                     {"mode", e.auto_mode ? "auto" : (e.mode == ReconMode::direct ? "direct" : "primitive")},
                     {"auto_mode_noise_threshold", 1e-4},
                     {"adaptive_V", e.adaptive_V},
                     {"sweep_V", e.sweep_V},
                     {"sweep_decay", e.sweep_decay},
                     {"sweep_tv_range", {e.sweep_tv_range.lo, e.sweep_tv_range.hi}},
                     {"kernel_grid", grid_json(e.kernel_grid)},
                     {"noise", noise},
                     {"seed", e.seed}};
  j["run"] = {{"seed", seed}, {"output_dir", output_dir}};
  return j.dump(2);
}

}  // namespace fragmellin
