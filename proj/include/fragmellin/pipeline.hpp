#pragma once

#include "fragmellin/config.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fragmellin {

inline constexpr const char* version_string = "0.1.0";

// Measured sizes grouped by observation time.
struct SampleSet {
  std::vector<double> times;
  std::vector<std::vector<double>> sizes;

  std::size_t groups() const { return times.size(); }
};

// CSV with header `t,x`; rows grouped by t (times must not decrease).
SampleSet ingest_samples(const std::string& path);
SampleSet parse_samples(const std::string& text, const std::string& source = "<samples>");

// Log-domain Gaussian KDE, integrating to one over (0, inf); diag receives "normalization"
// (the sample count) and "bandwidth".
GridFunction empirical_density(const std::vector<double>& sizes, const LogGrid& grid, double bandwidth,
                               Diagnostics* diag = nullptr);
// Silverman's rule on ln x.
double log_bandwidth(const std::vector<double>& sizes);

// moments.csv as written by write_time_series: t, M0[, M1, dust].
std::pair<std::vector<double>, std::vector<double>> read_moments_csv(const std::string& path);

// Writes run.json: command, versions, the configuration in use (JSON text) and extra results.
void write_run_json(const std::string& dir, const std::string& command, const std::string& config_json,
                    const std::string& extra_json = "{}");

struct CommandOptions {
  bool emit_plot_data = false;
  std::optional<std::string> output_dir;  // overrides the config
};

// Each returns a short human-readable summary line; outputs go to the run directory.
std::string run_simulate(const RunConfig& cfg, const CommandOptions& opt);
std::string run_profile(const RunConfig& cfg, const std::string& method, const CommandOptions& opt);
std::string run_estimate(const RunConfig& cfg, const std::string& profile_csv,
                         const std::optional<std::string>& series_csv, const CommandOptions& opt);
std::string run_roundtrip(const RunConfig& cfg, const CommandOptions& opt);
std::string run_mellin(const std::string& csv, double u, double V, double dv, const Taper& taper,
                       const std::string& out_csv, bool emit_plot_data);
std::string run_density(const std::string& samples_csv, const LogGrid& grid, std::optional<double> bandwidth,
                        const std::string& out_dir, bool emit_plot_data);

}  // namespace fragmellin
