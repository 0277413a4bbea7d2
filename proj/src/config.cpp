#include "tbf/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

#include "tbf/error.hpp"

namespace tbf {

namespace pt = boost::property_tree;

const ConfigDocument::Schema& ConfigDocument::default_schema() {
  static const Schema schema{
      {"system",
       {"omega_c_hz", "omega_c_g_hz", "omega_ge_hz", "omega_ef_hz", "alpha_hz", "g_hz", "kappa_ex_hz",
        "kappa_in_hz", "t1_ge_s", "t2_ge_s", "t1_ef_s", "t2_ef_s"}},
      {"lo", {"omega_c_lo_hz", "omega_geef_lo_hz", "omega_f0g1_lo_hz", "omega_rep_hz", "tolerance"}},
      {"pulse",
       {"width_s", "peak_geff_hz", "chirp_coeff_hz", "stark_coeff_hz", "phase_offset_rad", "bin_separation_s",
        "control_width_s", "beta_ge", "beta_ef"}},
      {"dynamics", {"dt_s", "window_s", "frame"}},
      {"tomography",
       {"samples_per_setting", "phases", "eta_meas", "eta_gen", "cutoff", "bootstrap", "bins", "q_max"}},
      {"run", {"seed", "output_dir"}},
  };
  return schema;
}

ConfigDocument ConfigDocument::parse(const std::string& text, const Schema& schema) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }

  ConfigDocument doc;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError("config key '" + section + "' appears outside of a section");
    }
    auto allowed = schema.find(section);
    if (allowed == schema.end()) {
      throw ConfigError("unknown config section [" + section + "]");
    }
    auto& out = doc.values_[section];
    for (const auto& [key, value] : body) {
      if (!allowed->second.contains(key)) {
        throw ConfigError("unknown config key '" + key + "' in section [" + section + "]");
      }
      out[key] = value.data();
    }
  }
  return doc;
}

ConfigDocument ConfigDocument::load(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), schema);
}

bool ConfigDocument::has_section(const std::string& section) const { return values_.contains(section); }

bool ConfigDocument::has(const std::string& section, const std::string& key) const {
  auto it = values_.find(section);
  return it != values_.end() && it->second.contains(key);
}

std::optional<std::string> ConfigDocument::get(const std::string& section, const std::string& key) const {
  auto it = values_.find(section);
  if (it == values_.end()) return std::nullopt;
  auto kv = it->second.find(key);
  if (kv == it->second.end()) return std::nullopt;
  return kv->second;
}

std::optional<double> ConfigDocument::get_double(const std::string& section, const std::string& key) const {
  auto raw = get(section, key);
  if (!raw) return std::nullopt;
  const std::string& s = *raw;
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin != end && *begin == ' ') ++begin;
  while (end != begin && *(end - 1) == ' ') --end;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("value of '" + key + "' in [" + section + "] is not a number: '" + s + "'");
  }
  return value;
}

double ConfigDocument::require_double(const std::string& section, const std::string& key) const {
  auto v = get_double(section, key);
  if (!v) {
    throw ConfigError("missing required key '" + key + "' in section [" + section + "]");
  }
  return *v;
}

}  // namespace tbf
