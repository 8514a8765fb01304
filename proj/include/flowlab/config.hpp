#pragma once

#include "flowlab/catalog.hpp"
#include "flowlab/parallel.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace flowlab {

// INI file with tables [run] [model] [base] [perturbed] [mesh] [mc] [params] [tolerances] [output].
// Lists are comma separated.
struct RunConfig {
  std::string name;
  Reduction reduction = Reduction::fixed_order;
  int threads = 0;

  std::string model_kind;
  ParamMap model;
  std::string base_kind;
  ParamMap base;
  std::string perturbed_kind;
  ParamMap perturbed;

  double h = 0;  // fine mesh
  double H = 0;  // estimator mesh

  Index paths = 0;
  std::optional<std::uint64_t> seed;

  std::map<std::string, std::string> params;
  std::map<std::string, double> tolerances;
  std::string output_dir = "out";

  bool has_model() const { return !model_kind.empty(); }
  bool has_pair() const { return !base_kind.empty() && !perturbed_kind.empty(); }

  double param(const std::string& key, double fallback) const;
  double param(const std::string& key) const;  // throws ConfigError("params.key")
  std::vector<double> param_list(const std::string& key, std::vector<double> fallback) const;
  std::vector<double> param_list(const std::string& key) const;
  double tolerance(const std::string& key, double fallback) const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

// Throws ConfigError naming the first bad field; what() lists every violation.
void validate(const RunConfig& cfg);
std::vector<std::pair<std::string, std::string>> config_violations(const RunConfig& cfg);

ModelPtr<double> config_model(const RunConfig& cfg);
ModelPtr<double> config_base(const RunConfig& cfg);
ModelPtr<double> config_perturbed(const RunConfig& cfg);

std::string format_double(double v);
std::vector<double> parse_list(const std::string& text, const std::string& field);

}  // namespace flowlab
