#include "flowlab/config.hpp"

#include "flowlab/brownian.hpp"
#include "flowlab/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace flowlab {

namespace pt = boost::property_tree;

namespace {

double to_double(const std::string& text, const std::string& field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(field, "expected a number, got '" + text + "'");
  }
}

std::uint64_t to_u64(const std::string& text, const std::string& field) {
  try {
    std::size_t used = 0;
    if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
    const unsigned long long v = std::stoull(text, &used, 0);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(field, "expected a non-negative integer, got '" + text + "'");
  }
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

void read_model(const pt::ptree& tree, const std::string& table, std::string& kind, ParamMap& out) {
  for (const auto& [key, node] : tree) {
    const std::string value = trim(node.data());
    if (key == "kind")
      kind = value;
    else
      out[key] = to_double(value, table + "." + key);
  }
  if (kind.empty()) throw ConfigError(table + ".kind", "model kind missing");
}

void write_model(std::ostream& os, const std::string& table, const std::string& kind,
                 const ParamMap& params) {
  if (kind.empty()) return;
  os << '[' << table << "]\nkind = " << kind << '\n';
  for (const auto& [k, v] : params) os << k << " = " << format_double(v) << '\n';
  os << '\n';
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_list(const std::string& text, const std::string& field) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(item, field));
  }
  if (out.empty()) throw ConfigError(field, "empty list");
  return out;
}

double RunConfig::param(const std::string& key, double fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : to_double(trim(it->second), "params." + key);
}

double RunConfig::param(const std::string& key) const {
  const auto it = params.find(key);
  if (it == params.end()) throw ConfigError("params." + key, "required");
  return to_double(trim(it->second), "params." + key);
}

std::vector<double> RunConfig::param_list(const std::string& key,
                                          std::vector<double> fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : parse_list(it->second, "params." + key);
}

std::vector<double> RunConfig::param_list(const std::string& key) const {
  const auto it = params.find(key);
  if (it == params.end()) throw ConfigError("params." + key, "required");
  return parse_list(it->second, "params." + key);
}

double RunConfig::tolerance(const std::string& key, double fallback) const {
  const auto it = tolerances.find(key);
  return it == tolerances.end() ? fallback : it->second;
}

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config", "line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig cfg;
  for (const auto& [table, node] : tree) {
    if (node.empty() && !node.data().empty())
      throw ConfigError(table, "key outside of a table");
    if (table == "run") {
      for (const auto& [key, v] : node) {
        const std::string value = trim(v.data());
        if (key == "name") {
          cfg.name = value;
        } else if (key == "reduction") {
          if (value == "fixed-order")
            cfg.reduction = Reduction::fixed_order;
          else if (value == "parallel")
            cfg.reduction = Reduction::parallel;
          else
            throw ConfigError("run.reduction", "expected fixed-order or parallel");
        } else if (key == "threads") {
          cfg.threads = static_cast<int>(to_u64(value, "run.threads"));
        } else {
          throw ConfigError("run." + key, "unknown key");
        }
      }
    } else if (table == "model") {
      read_model(node, table, cfg.model_kind, cfg.model);
    } else if (table == "base") {
      read_model(node, table, cfg.base_kind, cfg.base);
    } else if (table == "perturbed") {
      read_model(node, table, cfg.perturbed_kind, cfg.perturbed);
    } else if (table == "mesh") {
      for (const auto& [key, v] : node) {
        if (key == "h")
          cfg.h = to_double(trim(v.data()), "mesh.h");
        else if (key == "H")
          cfg.H = to_double(trim(v.data()), "mesh.H");
        else
          throw ConfigError("mesh." + key, "unknown key");
      }
    } else if (table == "mc") {
      for (const auto& [key, v] : node) {
        if (key == "paths")
          cfg.paths = static_cast<Index>(to_u64(trim(v.data()), "mc.paths"));
        else if (key == "seed")
          cfg.seed = to_u64(trim(v.data()), "mc.seed");
        else
          throw ConfigError("mc." + key, "unknown key");
      }
    } else if (table == "params") {
      for (const auto& [key, v] : node) cfg.params[key] = trim(v.data());
    } else if (table == "tolerances") {
      for (const auto& [key, v] : node)
        cfg.tolerances[key] = to_double(trim(v.data()), "tolerances." + key);
    } else if (table == "output") {
      for (const auto& [key, v] : node) {
        if (key == "dir")
          cfg.output_dir = trim(v.data());
        else
          throw ConfigError("output." + key, "unknown key");
      }
    } else {
      throw ConfigError(table, "unknown table");
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "[run]\n";
  if (!cfg.name.empty()) os << "name = " << cfg.name << '\n';
  os << "reduction = " << (cfg.reduction == Reduction::fixed_order ? "fixed-order" : "parallel")
     << '\n';
  if (cfg.threads > 0) os << "threads = " << cfg.threads << '\n';
  os << '\n';
  write_model(os, "model", cfg.model_kind, cfg.model);
  write_model(os, "base", cfg.base_kind, cfg.base);
  write_model(os, "perturbed", cfg.perturbed_kind, cfg.perturbed);
  if (cfg.h > 0 || cfg.H > 0) {
    os << "[mesh]\n";
    if (cfg.h > 0) os << "h = " << format_double(cfg.h) << '\n';
    if (cfg.H > 0) os << "H = " << format_double(cfg.H) << '\n';
    os << '\n';
  }
  os << "[mc]\n";
  if (cfg.paths > 0) os << "paths = " << cfg.paths << '\n';
  if (cfg.seed) os << "seed = " << *cfg.seed << '\n';
  os << '\n';
  if (!cfg.params.empty()) {
    os << "[params]\n";
    for (const auto& [k, v] : cfg.params) os << k << " = " << v << '\n';
    os << '\n';
  }
  if (!cfg.tolerances.empty()) {
    os << "[tolerances]\n";
    for (const auto& [k, v] : cfg.tolerances) os << k << " = " << format_double(v) << '\n';
    os << '\n';
  }
  os << "[output]\ndir = " << cfg.output_dir << '\n';
  return os.str();
}

std::vector<std::pair<std::string, std::string>> config_violations(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  if (cfg.h < 0 || (cfg.H > 0 && cfg.h <= 0)) out.emplace_back("mesh.h", "must be positive");
  if (cfg.H < 0) out.emplace_back("mesh.H", "must be positive");
  if (cfg.H > 0 && cfg.h > 0) {
    try {
      mesh_ratio(cfg.H, cfg.h, "mesh.H");
    } catch (const ConfigError& e) {
      out.emplace_back("mesh.H", "must be an integer multiple of mesh.h");
    }
  }
  if (cfg.paths < 2) out.emplace_back("mc.paths", "must be at least 2");
  if (!cfg.seed) out.emplace_back("mc.seed", "required (no default seed)");
  return out;
}

void validate(const RunConfig& cfg) {
  const auto v = config_violations(cfg);
  if (v.empty()) return;
  std::string msg;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) msg += "; ";
    msg += (i ? v[i].first + ": " : std::string()) + v[i].second;
  }
  throw ConfigError(v.front().first, msg);
}

ModelPtr<double> config_model(const RunConfig& cfg) {
  if (!cfg.has_model()) throw ConfigError("model", "table [model] required");
  return make_model(cfg.model_kind, cfg.model, "model");
}

ModelPtr<double> config_base(const RunConfig& cfg) {
  if (cfg.base_kind.empty()) throw ConfigError("base", "table [base] required");
  return make_model(cfg.base_kind, cfg.base, "base");
}

ModelPtr<double> config_perturbed(const RunConfig& cfg) {
  if (cfg.perturbed_kind.empty()) throw ConfigError("perturbed", "table [perturbed] required");
  return make_model(cfg.perturbed_kind, cfg.perturbed, "perturbed");
}

}  // namespace flowlab
