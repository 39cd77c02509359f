#include "fragmellin/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

using namespace fragmellin;

int main(int argc, char** argv) {
  CLI::App app{"fragmentation profiles, Mellin inversion and kernel estimation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(version_string));

  bool plot = false;
  std::string out_dir;
  app.add_flag("--emit-plot-data", plot, "also write tidy CSVs for plotting");
  app.add_option("-o,--output-dir", out_dir, "override [run] output_dir");

  std::string config;
  auto* sim = app.add_subcommand("simulate", "time-integrate from exp(-x)");
  sim->add_option("config", config, "run configuration")->required()->check(CLI::ExistingFile);

  std::string method = "";
  auto* prof = app.add_subcommand("profile", "self-similar profile");
  prof->add_option("config", config)->required()->check(CLI::ExistingFile);
  prof->add_option("--method", method, "dynamic, spectral or both (default: [profile] method)")
      ->check(CLI::IsMember({"dynamic", "spectral", "both"}));

  std::string profile_csv, series_csv;
  auto* est = app.add_subcommand("estimate", "estimate gamma, alpha and k0 from a profile");
  est->add_option("config", config)->required()->check(CLI::ExistingFile);
  est->add_option("--profile", profile_csv, "profile CSV (x,value)")->required()->check(CLI::ExistingFile);
  est->add_option("--series", series_csv, "moments.csv from simulate")->check(CLI::ExistingFile);

  auto* rt = app.add_subcommand("roundtrip", "spectral profile -> estimate -> compare with the true kernel");
  rt->add_option("config", config)->required()->check(CLI::ExistingFile);

  std::string input, output = "mellin.csv", taper = "tukey:0.5";
  double u = 2.5, V = 40.0, dv = 0.0;
  auto* mel = app.add_subcommand("mellin", "Mellin transform of a grid CSV along Re s = u");
  mel->add_option("csv", input)->required()->check(CLI::ExistingFile);
  mel->add_option("--u", u, "real part of the line")->capture_default_str();
  mel->add_option("--V", V, "half-length of the line")->capture_default_str();
  mel->add_option("--dv", dv, "line step (default pi / ln(x_max / x_min))");
  mel->add_option("--taper", taper, "recorded in the CSV header")->capture_default_str();
  mel->add_option("--out", output, "output CSV")->capture_default_str();

  std::string samples;
  double x_min = 1e-3, x_max = 100.0, bandwidth = 0.0;
  int n = 512;
  auto* den = app.add_subcommand("density", "empirical densities from t,x size samples");
  den->add_option("csv", samples)->required()->check(CLI::ExistingFile);
  den->add_option("--x-min", x_min)->capture_default_str();
  den->add_option("--x-max", x_max)->capture_default_str();
  den->add_option("--n", n)->capture_default_str();
  den->add_option("--bandwidth", bandwidth, "log-domain bandwidth (default: Silverman on ln x)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    CommandOptions opt;
    opt.emit_plot_data = plot;
    if (!out_dir.empty()) opt.output_dir = out_dir;
    std::string summary;
    if (*sim) {
      summary = run_simulate(RunConfig::read(config), opt);
    } else if (*prof) {
      const RunConfig cfg = RunConfig::read(config);
      summary = run_profile(cfg, method.empty() ? cfg.profile_method : method, opt);
    } else if (*est) {
      summary = run_estimate(RunConfig::read(config), profile_csv,
                             series_csv.empty() ? std::nullopt : std::optional<std::string>(series_csv), opt);
    } else if (*rt) {
      summary = run_roundtrip(RunConfig::read(config), opt);
    } else if (*mel) {
      if (!out_dir.empty()) output = (std::filesystem::path(out_dir) / output).string();
      summary = run_mellin(input, u, V, dv, Taper::parse(taper), output, plot);
    } else if (*den) {
      const std::optional<double> h = den->count("--bandwidth") ? std::optional<double>(bandwidth) : std::nullopt;
      summary = run_density(samples, make_log_grid(x_min, x_max, n), h, out_dir.empty() ? "out" : out_dir, plot);
    }
    std::cout << summary << '\n';
    return 0;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}
