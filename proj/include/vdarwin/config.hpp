#pragma once

// Run configuration and its flat `key = value` text format.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace vdarwin {

enum class Mode { darwin, free_stream, electrostatic, radial_reference };

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::darwin: return "darwin";
    case Mode::free_stream: return "free_stream";
    case Mode::electrostatic: return "electrostatic";
    case Mode::radial_reference: return "radial_reference";
  }
  return "unknown";
}

inline Mode parse_mode(std::string_view s) {
  if (s == "darwin") return Mode::darwin;
  if (s == "free_stream") return Mode::free_stream;
  if (s == "electrostatic") return Mode::electrostatic;
  if (s == "radial_reference") return Mode::radial_reference;
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}

struct SimConfig {
  double R0 = 1.0;              // spatial support radius of f0
  double P0 = 1.0;              // momentum support radius of f0
  double amplitude = 1e-3;      // sup of f0
  int grid_n = 64;              // nodes per axis of the unpadded grid
  double box_half_width = 41.0;
  double dt = 0.5;
  double t_end = 40.0;
  std::int64_t particle_count = 100000;
  Mode mode = Mode::darwin;
  double fixed_point_tol = 1e-8;
  int fixed_point_max_iter = 20;
  std::uint64_t seed = 1;

  // Extensions beyond the core field list.
  double beta = 0.5;          // Jacobian floor parameter
  int tracked_markers = 64;   // markers carrying variational state
  int snapshot_every = 0;     // steps between snapshots; 0 selects ceil(t_end / (10 dt))
  int pad_factor = 2;         // zero-padding factor of the field solves
  bool symmetrize = false;    // sample markers in orbits of the 48 signed axis permutations

  int step_count() const { return static_cast<int>(std::llround(t_end / dt)); }

  int snapshot_cadence() const {
    if (snapshot_every > 0) return snapshot_every;
    return std::max(1, static_cast<int>(std::ceil(t_end / (10.0 * dt) - 1e-9)));
  }

  double cell_size() const { return 2.0 * box_half_width / grid_n; }
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline void validate(const SimConfig& c) {
  auto fail = [](const std::string& m) { throw ConfigError("invalid configuration: " + m); };
  if (!(c.R0 > 0)) fail("R0 must be positive");
  if (!(c.P0 > 0)) fail("P0 must be positive");
  if (!(c.amplitude > 0 && c.amplitude <= 1)) fail("amplitude must lie in (0, 1]");
  if (!(c.dt > 0)) fail("dt must be positive");
  if (!(c.t_end >= 0)) fail("t_end must be nonnegative");
  if (std::abs(c.step_count() * c.dt - c.t_end) > 1e-9 * std::max(1.0, c.t_end))
    fail("t_end must be an integer multiple of dt");
  if (!is_power_of_two(c.grid_n) || c.grid_n < 16) fail("grid_n must be a power of two >= 16");
  if (!(c.box_half_width >= c.R0 + c.t_end))
    fail("box_half_width must be at least R0 + t_end (support radius bound)");
  if (c.particle_count < 1) fail("particle_count must be >= 1");
  if (!(c.fixed_point_tol > 0)) fail("fixed_point_tol must be positive");
  if (c.fixed_point_max_iter < 1) fail("fixed_point_max_iter must be >= 1");
  if (!(c.beta > 0 && c.beta < 1)) fail("beta must lie in (0, 1)");
  if (c.tracked_markers < 0) fail("tracked_markers must be >= 0");
  if (c.snapshot_every < 0) fail("snapshot_every must be >= 0");
  if (c.pad_factor < 2) fail("pad_factor must be >= 2");
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError("cannot parse value '" + std::string(v) + "' for key '" + std::string(key) + "'");
  return out;
}

inline bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("cannot parse boolean '" + std::string(v) + "' for key '" + std::string(key) + "'");
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// Parses `key = value` lines into key/value pairs. '#' starts a comment.
inline std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv(line);
    if (auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
    sv = detail::trim(sv);
    if (sv.empty()) continue;
    auto eq = sv.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    auto key = detail::trim(sv.substr(0, eq));
    auto val = detail::trim(sv.substr(eq + 1));
    if (key.empty() || val.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    for (const auto& [k, v] : out)
      if (k == key) throw ConfigError("duplicate key '" + std::string(key) + "'");
    out.emplace_back(std::string(key), std::string(val));
  }
  return out;
}

// Applies one key to the config. Returns false when the key is not a SimConfig field.
inline bool apply_key(SimConfig& c, std::string_view key, std::string_view v) {
  using detail::parse_bool;
  using detail::parse_number;
  if (key == "R0") c.R0 = parse_number<double>(key, v);
  else if (key == "P0") c.P0 = parse_number<double>(key, v);
  else if (key == "amplitude") c.amplitude = parse_number<double>(key, v);
  else if (key == "grid_n") c.grid_n = parse_number<int>(key, v);
  else if (key == "box_half_width") c.box_half_width = parse_number<double>(key, v);
  else if (key == "dt") c.dt = parse_number<double>(key, v);
  else if (key == "t_end") c.t_end = parse_number<double>(key, v);
  else if (key == "particle_count") c.particle_count = parse_number<std::int64_t>(key, v);
  else if (key == "mode") c.mode = parse_mode(v);
  else if (key == "fixed_point_tol") c.fixed_point_tol = parse_number<double>(key, v);
  else if (key == "fixed_point_max_iter") c.fixed_point_max_iter = parse_number<int>(key, v);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
  else if (key == "beta") c.beta = parse_number<double>(key, v);
  else if (key == "tracked_markers") c.tracked_markers = parse_number<int>(key, v);
  else if (key == "snapshot_every") c.snapshot_every = parse_number<int>(key, v);
  else if (key == "pad_factor") c.pad_factor = parse_number<int>(key, v);
  else if (key == "symmetrize") c.symmetrize = parse_bool(key, v);
  else return false;
  return true;
}

inline SimConfig parse_config(std::istream& in) {
  SimConfig c;
  for (const auto& [k, v] : parse_key_values(in))
    if (!apply_key(c, k, v)) throw ConfigError("unknown configuration key '" + k + "'");
  validate(c);
  return c;
}

inline SimConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
  return parse_config(in);
}

inline std::vector<std::pair<std::string, std::string>> config_entries(const SimConfig& c) {
  using detail::format_double;
  return {{"R0", format_double(c.R0)},
          {"P0", format_double(c.P0)},
          {"amplitude", format_double(c.amplitude)},
          {"grid_n", std::to_string(c.grid_n)},
          {"box_half_width", format_double(c.box_half_width)},
          {"dt", format_double(c.dt)},
          {"t_end", format_double(c.t_end)},
          {"particle_count", std::to_string(c.particle_count)},
          {"mode", std::string(to_string(c.mode))},
          {"fixed_point_tol", format_double(c.fixed_point_tol)},
          {"fixed_point_max_iter", std::to_string(c.fixed_point_max_iter)},
          {"seed", std::to_string(c.seed)},
          {"beta", format_double(c.beta)},
          {"tracked_markers", std::to_string(c.tracked_markers)},
          {"snapshot_every", std::to_string(c.snapshot_every)},
          {"pad_factor", std::to_string(c.pad_factor)},
          {"symmetrize", c.symmetrize ? "true" : "false"}};
}

inline std::string format_config(const SimConfig& c) {
  std::string s;
  for (const auto& [k, v] : config_entries(c)) s += k + " = " + v + "\n";
  return s;
}

}  // namespace vdarwin
