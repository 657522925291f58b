#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ratelat/model.hpp"

namespace ratelat {

// Key-value configuration file with [link], [field] and [scheme] sections.
// File-level units are the convenient ones (mW, kHz, ms, bytes, km^-2);
// materialize() converts to SI exactly once.
//
//   [link]
//   tx_power_mw   = 10
//   distance_m    = 20
//   path_loss_exp = 4
//   arrival_prob  = 0.04
//   packet_bytes  = 40
//   bandwidth_khz = 100
//   capacity_gap  = 0.8
//   slot_ms       = 1
//   num_rates     = 5
//   num_classes   = 8
//
//   [field]
//   density_per_km2 = 1000
//   type_probs      = 0.33333333333333331, 0.33333333333333331, 0.33333333333333331
//   powers_mw       = 10, 7, 5
//   activities      = 0.1, 0.3, 0.5
//
//   [scheme]
//   kind        = dynamic      # static | dynamic
//   static_rate = 1
//   down_prob   = 0.3
//   up_prob     = 0.1

struct FileConfig {
  // [link]
  double tx_power_mw = 10.0;
  double distance_m = 20.0;
  double path_loss_exp = 4.0;
  double arrival_prob = 0.04;
  double packet_bytes = 40.0;
  double bandwidth_khz = 100.0;
  double capacity_gap = 0.8;
  double slot_ms = 1.0;
  int num_rates = 5;
  int num_classes = 8;
  // [field]
  double density_per_km2 = 1000.0;
  std::vector<double> type_probs = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  std::vector<double> powers_mw = {10.0, 7.0, 5.0};
  std::vector<double> activities = {0.1, 0.3, 0.5};
  // [scheme]
  std::string kind = "dynamic";
  int static_rate = 1;
  double down_prob = 0.3;
  double up_prob = 0.1;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double x = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0')
    throw std::invalid_argument("config: key '" + key +
                                "' has non-numeric value '" + value + "'");
  return x;
}

inline int parse_int(const std::string& key, const std::string& value) {
  const double x = parse_double(key, value);
  const int i = static_cast<int>(x);
  if (static_cast<double>(i) != x)
    throw std::invalid_argument("config: key '" + key +
                                "' expects an integer, got '" + value + "'");
  return i;
}

inline std::vector<double> parse_list(const std::string& key,
                                      const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw std::invalid_argument("config: key '" + key +
                                  "' has an empty list element");
    out.push_back(parse_double(key, item));
  }
  if (out.empty())
    throw std::invalid_argument("config: key '" + key + "' has an empty list");
  return out;
}

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string format_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += format_double(xs[i]);
  }
  return out;
}

}  // namespace detail

// Assigns one "section.key = value" entry; throws on unknown keys so that
// typos in files and --override flags surface immediately.
inline void set_config_key(FileConfig& cfg, const std::string& section,
                           const std::string& key, const std::string& value) {
  using detail::parse_double;
  using detail::parse_int;
  using detail::parse_list;
  const std::string full = section + "." + key;
  if (section == "link") {
    if (key == "tx_power_mw") cfg.tx_power_mw = parse_double(full, value);
    else if (key == "distance_m") cfg.distance_m = parse_double(full, value);
    else if (key == "path_loss_exp") cfg.path_loss_exp = parse_double(full, value);
    else if (key == "arrival_prob") cfg.arrival_prob = parse_double(full, value);
    else if (key == "packet_bytes") cfg.packet_bytes = parse_double(full, value);
    else if (key == "bandwidth_khz") cfg.bandwidth_khz = parse_double(full, value);
    else if (key == "capacity_gap") cfg.capacity_gap = parse_double(full, value);
    else if (key == "slot_ms") cfg.slot_ms = parse_double(full, value);
    else if (key == "num_rates") cfg.num_rates = parse_int(full, value);
    else if (key == "num_classes") cfg.num_classes = parse_int(full, value);
    else throw std::invalid_argument("config: unknown key '" + full + "'");
  } else if (section == "field") {
    if (key == "density_per_km2") cfg.density_per_km2 = parse_double(full, value);
    else if (key == "type_probs") cfg.type_probs = parse_list(full, value);
    else if (key == "powers_mw") cfg.powers_mw = parse_list(full, value);
    else if (key == "activities") cfg.activities = parse_list(full, value);
    else throw std::invalid_argument("config: unknown key '" + full + "'");
  } else if (section == "scheme") {
    if (key == "kind") {
      if (value != "static" && value != "dynamic")
        throw std::invalid_argument(
            "config: scheme.kind must be 'static' or 'dynamic', got '" +
            value + "'");
      cfg.kind = value;
    } else if (key == "static_rate") cfg.static_rate = parse_int(full, value);
    else if (key == "down_prob") cfg.down_prob = parse_double(full, value);
    else if (key == "up_prob") cfg.up_prob = parse_double(full, value);
    else throw std::invalid_argument("config: unknown key '" + full + "'");
  } else {
    throw std::invalid_argument("config: unknown section '" + section + "'");
  }
}

inline FileConfig parse_config(std::istream& in, const std::string& origin) {
  FileConfig cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']')
        throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                    ": malformed section header");
      section = detail::trim(body.substr(1, body.size() - 2));
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
    if (section.empty())
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                  ": key outside any [section]");
    set_config_key(cfg, section, detail::trim(body.substr(0, eq)),
                   detail::trim(body.substr(eq + 1)));
  }
  return cfg;
}

inline FileConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  return parse_config(in, path);
}

// Applies "section.key=value" override strings on top of a parsed config.
inline void apply_overrides(FileConfig& cfg,
                            const std::vector<std::string>& overrides) {
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("override '" + ov +
                                  "' is not of the form section.key=value");
    const std::string path = detail::trim(ov.substr(0, eq));
    const auto dot = path.find('.');
    if (dot == std::string::npos)
      throw std::invalid_argument("override key '" + path +
                                  "' must be qualified as section.key");
    set_config_key(cfg, path.substr(0, dot), path.substr(dot + 1),
                   detail::trim(ov.substr(eq + 1)));
  }
}

// File units -> SI, applied exactly once.
inline DefaultConfig materialize(const FileConfig& file) {
  DefaultConfig out;
  out.link.tx_power = file.tx_power_mw * 1e-3;
  out.link.distance = file.distance_m;
  out.link.path_loss_exp = file.path_loss_exp;
  out.link.arrival_prob = file.arrival_prob;
  out.link.packet_bits = file.packet_bytes * 8.0;
  out.link.bandwidth = file.bandwidth_khz * 1e3;
  out.link.capacity_gap = file.capacity_gap;
  out.link.slot_duration = file.slot_ms * 1e-3;
  out.link.num_rates = file.num_rates;
  out.link.num_classes = file.num_classes;

  out.field.density = file.density_per_km2 * 1e-6;
  out.field.type_probs = file.type_probs;
  out.field.activities = file.activities;
  out.field.powers.clear();
  for (double w : file.powers_mw) out.field.powers.push_back(w * 1e-3);

  out.scheme.kind =
      file.kind == "static" ? SchemeKind::Static : SchemeKind::Dynamic;
  out.scheme.static_rate = file.static_rate;
  out.scheme.down_prob = file.down_prob;
  out.scheme.up_prob = file.up_prob;

  validate(out.link);
  validate(out.field);
  validate(out.scheme, out.link.num_rates);
  return out;
}

// Canonical "section.key = value" listing, used both for config files and
// for the resolved-config header comments embedded in every CSV.
inline std::vector<std::pair<std::string, std::string>> config_entries(
    const FileConfig& cfg) {
  using detail::format_double;
  using detail::format_list;
  return {
      {"link.tx_power_mw", format_double(cfg.tx_power_mw)},
      {"link.distance_m", format_double(cfg.distance_m)},
      {"link.path_loss_exp", format_double(cfg.path_loss_exp)},
      {"link.arrival_prob", format_double(cfg.arrival_prob)},
      {"link.packet_bytes", format_double(cfg.packet_bytes)},
      {"link.bandwidth_khz", format_double(cfg.bandwidth_khz)},
      {"link.capacity_gap", format_double(cfg.capacity_gap)},
      {"link.slot_ms", format_double(cfg.slot_ms)},
      {"link.num_rates", std::to_string(cfg.num_rates)},
      {"link.num_classes", std::to_string(cfg.num_classes)},
      {"field.density_per_km2", format_double(cfg.density_per_km2)},
      {"field.type_probs", format_list(cfg.type_probs)},
      {"field.powers_mw", format_list(cfg.powers_mw)},
      {"field.activities", format_list(cfg.activities)},
      {"scheme.kind", cfg.kind},
      {"scheme.static_rate", std::to_string(cfg.static_rate)},
      {"scheme.down_prob", format_double(cfg.down_prob)},
      {"scheme.up_prob", format_double(cfg.up_prob)},
  };
}

inline std::string serialize_config(const FileConfig& cfg) {
  std::string out, current;
  for (const auto& [path, value] : config_entries(cfg)) {
    const auto dot = path.find('.');
    const std::string section = path.substr(0, dot);
    if (section != current) {
      if (!current.empty()) out += "\n";
      out += "[" + section + "]\n";
      current = section;
    }
    out += path.substr(dot + 1) + " = " + value + "\n";
  }
  return out;
}

inline void save_config(const FileConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write '" + path + "'");
  out << serialize_config(cfg);
}

}  // namespace ratelat
