#pragma once

/// \file
/// Run configuration files: `[section]` headers and `key = value` lines, `#`
/// comments. Every key is addressable as `section.key` for command-line
/// overrides. Errors carry file and line.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "neuradp/common.hpp"
#include "neuradp/sim.hpp"

namespace neuradp {

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_config_number(const std::string& text) {
  auto v = parse_number<T>(text);
  if (!v) throw ConfigError("invalid number '" + text + "'");
  return *v;
}

inline bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("invalid boolean '" + text + "'");
}

inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

/// "begin-end:mean, ..." in epochs.
inline RateProfile parse_profile(const std::string& text) {
  RateProfile prof;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    if (part.empty()) continue;
    const auto dash = part.find('-');
    const auto colon = part.find(':');
    if (dash == std::string::npos || colon == std::string::npos || colon < dash) {
      throw ConfigError("profile segment '" + part + "' is not begin-end:mean");
    }
    RateProfile::Segment seg;
    seg.begin = parse_config_number<int>(trim(part.substr(0, dash)));
    seg.end = parse_config_number<int>(trim(part.substr(dash + 1, colon - dash - 1)));
    seg.mean = parse_config_number<double>(trim(part.substr(colon + 1)));
    if (seg.end <= seg.begin || seg.mean < 0.0) throw ConfigError("profile segment '" + part + "' is empty or negative");
    prof.segments.push_back(seg);
  }
  if (prof.segments.empty()) throw ConfigError("empty demand profile");
  return prof;
}

inline std::string format_profile(const RateProfile& p) {
  std::string out;
  for (const auto& s : p.segments) {
    if (!out.empty()) out += ", ";
    out += std::to_string(s.begin) + "-" + std::to_string(s.end) + ":" + format_double(s.mean);
  }
  return out;
}

struct ConfigKey {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
ConfigKey number_key(T RunConfig::*field) {
  return {[field](RunConfig& c, const std::string& v) { c.*field = parse_config_number<T>(v); },
          [field](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*field);
            else return std::to_string(c.*field);
          }};
}

template <typename T>
ConfigKey number_key(std::function<T&(RunConfig&)> ref) {
  return {[ref](RunConfig& c, const std::string& v) { ref(c) = parse_config_number<T>(v); },
          [ref](const RunConfig& c) {
            const T& x = ref(const_cast<RunConfig&>(c));
            if constexpr (std::is_floating_point_v<T>) return format_double(x);
            else return std::to_string(x);
          }};
}

inline ConfigKey string_key(std::function<std::string&(RunConfig&)> ref) {
  return {[ref](RunConfig& c, const std::string& v) { ref(c) = v; },
          [ref](const RunConfig& c) { return ref(const_cast<RunConfig&>(c)); }};
}

inline ConfigKey bool_key(std::function<bool&(RunConfig&)> ref) {
  return {[ref](RunConfig& c, const std::string& v) { ref(c) = parse_bool(v); },
          [ref](const RunConfig& c) { return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

/// All known keys in output order.
inline const std::vector<std::pair<std::string, ConfigKey>>& config_keys() {
  using C = RunConfig;
  static const std::vector<std::pair<std::string, ConfigKey>> keys = {
      {"city.network_file", string_key([](C& c) -> std::string& { return c.network_file; })},
      {"city.grid_rows", number_key(&C::grid_rows)},
      {"city.grid_cols", number_key(&C::grid_cols)},
      {"city.grid_edge_seconds", number_key(&C::grid_edge_seconds)},
      {"time.delta", number_key(&C::delta)},
      {"time.horizon_epochs", number_key(&C::horizon_epochs)},
      {"constraints.tau", number_key<double>([](C& c) -> double& { return c.delays.tau; })},
      {"constraints.lambda", number_key<double>([](C& c) -> double& { return c.delays.lambda; })},
      {"fleet.size", number_key(&C::fleet_size)},
      {"fleet.capacity", number_key(&C::capacity)},
      {"demand.profile",
       {[](C& c, const std::string& v) { c.demand.profile = parse_profile(v); },
        [](const C& c) { return format_profile(c.demand.profile); }}},
      {"demand.hotspot_center", number_key<Location>([](C& c) -> Location& { return c.demand.hotspot_center; })},
      {"demand.hotspot_amplitude", number_key<double>([](C& c) -> double& { return c.demand.hotspot_amplitude; })},
      {"demand.hotspot_scale", number_key<double>([](C& c) -> double& { return c.demand.hotspot_scale; })},
      {"demand.trips_file", string_key([](C& c) -> std::string& { return c.demand.trips_file; })},
      {"seeds.demand", number_key(&C::demand_seed)},
      {"seeds.placement", number_key(&C::placement_seed)},
      {"seeds.training", number_key(&C::training_seed)},
      {"feasibility.max_candidates", number_key<int>([](C& c) -> int& { return c.feasibility.max_candidates; })},
      {"feasibility.eval_cap", number_key<std::int64_t>([](C& c) -> std::int64_t& { return c.feasibility.eval_cap; })},
      {"solver.node_limit", number_key<std::int64_t>([](C& c) -> std::int64_t& { return c.solve.node_limit; })},
      {"solver.strict", bool_key([](C& c) -> bool& { return c.solve.strict; })},
      {"rebalance.enabled", bool_key([](C& c) -> bool& { return c.rebalance; })},
      {"rebalance.samples", number_key(&C::rebalance_samples)},
      {"runtime.workers", number_key(&C::workers)},
      {"runtime.snapshot_dir", string_key([](C& c) -> std::string& { return c.snapshot_dir; })},
      {"embedding.dim", number_key<int>([](C& c) -> int& { return c.embedding.dim; })},
      {"embedding.hidden", number_key<int>([](C& c) -> int& { return c.embedding.hidden; })},
      {"embedding.steps", number_key<int>([](C& c) -> int& { return c.embedding.steps; })},
      {"embedding.batch", number_key<int>([](C& c) -> int& { return c.embedding.batch; })},
      {"embedding.lr", number_key<double>([](C& c) -> double& { return c.embedding.lr; })},
      {"value.hidden", number_key<int>([](C& c) -> int& { return c.network.hidden; })},
      {"value.head1", number_key<int>([](C& c) -> int& { return c.network.head1; })},
      {"value.head2", number_key<int>([](C& c) -> int& { return c.network.head2; })},
      {"value.init", string_key([](C& c) -> std::string& { return c.init; })},
      {"train.episodes", number_key(&C::episodes)},
      {"train.gamma", number_key<double>([](C& c) -> double& { return c.trainer.gamma; })},
      {"train.lr", number_key<double>([](C& c) -> double& { return c.trainer.adam.lr; })},
      {"train.target_update_every",
       number_key<std::int64_t>([](C& c) -> std::int64_t& { return c.trainer.target_update_every; })},
      {"train.noise_start", number_key<double>([](C& c) -> double& { return c.trainer.noise_start; })},
      {"train.noise_end", number_key<double>([](C& c) -> double& { return c.trainer.noise_end; })},
      {"train.max_grad_norm", number_key<double>([](C& c) -> double& { return c.trainer.max_grad_norm; })},
      {"train.update_every", number_key(&C::update_every)},
      {"train.minibatch", number_key(&C::minibatch)},
      {"train.divergence_loss", number_key(&C::divergence_loss)},
      {"train.divergence_patience", number_key(&C::divergence_patience)},
      {"replay.capacity", number_key<std::size_t>([](C& c) -> std::size_t& { return c.replay.capacity; })},
      {"replay.alpha", number_key<double>([](C& c) -> double& { return c.replay.alpha; })},
      {"replay.beta_start", number_key<double>([](C& c) -> double& { return c.replay.beta_start; })},
      {"replay.beta_end", number_key<double>([](C& c) -> double& { return c.replay.beta_end; })},
      {"replay.epsilon", number_key<double>([](C& c) -> double& { return c.replay.epsilon; })},
      {"eval.days", number_key(&C::eval_days)},
  };
  return keys;
}

inline const ConfigKey* find_key(const std::string& name) {
  for (const auto& [k, v] : config_keys())
    if (k == name) return &v;
  return nullptr;
}

}  // namespace detail

/// Parses configuration text and `section.key=value` overrides (applied after
/// the file). Lambda defaults to 2 tau unless given. Throws ConfigError with
/// "<source>:<line>: message".
inline RunConfig parse_config(std::istream& in, const std::string& source,
                              const std::vector<std::string>& overrides = {}) {
  RunConfig cfg;
  bool lambda_given = false;
  auto apply = [&](const std::string& key, const std::string& value, const std::string& where) {
    const detail::ConfigKey* k = detail::find_key(key);
    if (k == nullptr) throw ConfigError(where + ": unknown key '" + key + "'");
    try {
      k->set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + key + ": " + e.what());
    }
    if (key == "constraints.lambda") lambda_given = true;
  };

  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto hash = line.find('#');
    const std::string text = detail::trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']' || text.size() < 3) throw ConfigError(where + ": malformed section header");
      section = detail::trim(text.substr(1, text.size() - 2));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    if (section.empty()) throw ConfigError(where + ": key outside of any section");
    apply(section + "." + detail::trim(text.substr(0, eq)), detail::trim(text.substr(eq + 1)), where);
  }
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "': expected section.key=value");
    apply(detail::trim(o.substr(0, eq)), detail::trim(o.substr(eq + 1)), "override '" + o + "'");
  }
  if (!lambda_given) cfg.delays.lambda = 2.0 * cfg.delays.tau;
  cfg.network.embed_dim = cfg.embedding.dim;
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

inline RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {}) {
  std::istringstream in(text);
  return parse_config(in, "<text>", overrides);
}

inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  return parse_config(in, path, overrides);
}

/// Every key with its effective value; parsing the output reproduces `cfg`.
inline std::string resolved_config(const RunConfig& cfg) {
  std::string out, section;
  for (const auto& [name, key] : detail::config_keys()) {
    const auto dot = name.find('.');
    const std::string sec = name.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += "\n";
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += name.substr(dot + 1) + " = " + key.get(cfg) + "\n";
  }
  return out;
}

}  // namespace neuradp
