#pragma once

#include "fragmellin/estimation.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fragmellin {

// Line-based `key = value` file with [sections]; '#' and ';' start comments.
struct IniFile {
  // section -> key -> (value, line number)
  std::map<std::string, std::map<std::string, std::pair<std::string, int>>> entries;
  std::string source;

  static IniFile parse(const std::string& text, const std::string& source = "<config>");
  static IniFile read(const std::string& path);
};

struct RunConfig {
  std::string source;  // config path, or empty
  std::string base_dir = ".";

  LogGrid sim_grid = make_log_grid(1e-4, 60.0, 512);
  LogGrid profile_grid = make_log_grid(1e-5, 150.0, 1400);

  KernelSpec kernel = KernelSpec::uniform_binary();
  std::string kernel_source = "kind=uniform";
  RateSpec rate;

  SimOptions sim;
  double t_end = 5.0;
  std::vector<double> output_times = {0.5, 1.0, 2.0, 5.0};

  std::string profile_method = "spectral";  // dynamic | spectral | both
  double dynamic_t_end = 99.0;

  SpectralConfig spectral;
  EstimationOptions estimation;
  double noise = 0.0;

  std::uint64_t seed = 1;
  std::string output_dir = "out";

  // Throws DomainError with the offending line for unknown sections/keys and bad values.
  static RunConfig from_ini(const IniFile& ini, const std::string& base_dir = ".");
  static RunConfig read(const std::string& path);
  void validate() const;

  // Every parameter value in use, as JSON text.
  std::string to_json() const;
};

double parse_number(const std::string& text, const std::string& what);
std::vector<double> parse_list(const std::string& text, const std::string& what);

}  // namespace fragmellin
