#pragma once

// Output formats: time-series CSV, binary grid snapshots and the JSON run manifest.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "diagnostics.hpp"
#include "errors.hpp"
#include "grid.hpp"

namespace vdarwin {

inline constexpr const char* kTimeseriesHeader =
    "t,sup_rho,sup_j,sup_el,sup_et,sup_b,sup_grad_el,sup_grad_et,sup_grad_b,q_t,total_charge,fp_iters";

inline std::string format_scientific(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

inline std::string timeseries_row(const TimeSeriesRecord& r) {
  std::string s;
  for (double v : {r.t, r.sup_rho, r.sup_j, r.sup_el, r.sup_et, r.sup_b, r.sup_grad_el, r.sup_grad_et, r.sup_grad_b,
                   r.q_t, r.total_charge}) {
    s += format_scientific(v);
    s += ',';
  }
  s += std::to_string(r.fixed_point_iters);
  return s;
}

inline void write_timeseries(const std::vector<TimeSeriesRecord>& series, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << kTimeseriesHeader << '\n';
  for (const auto& r : series) out << timeseries_row(r) << '\n';
  out.flush();
  if (!out) throw Error("short write to '" + path + "'");
}

inline std::vector<TimeSeriesRecord> read_timeseries(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kTimeseriesHeader) throw Error("'" + path + "' has an unexpected header");
  std::vector<TimeSeriesRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TimeSeriesRecord r;
    double* fields[] = {&r.t,         &r.sup_rho,     &r.sup_j,      &r.sup_el, &r.sup_et,       &r.sup_b,
                        &r.sup_grad_el, &r.sup_grad_et, &r.sup_grad_b, &r.q_t,    &r.total_charge};
    std::size_t pos = 0;
    for (double* f : fields) {
      const std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) throw Error("malformed row in '" + path + "'");
      *f = std::stod(line.substr(pos, comma - pos));
      pos = comma + 1;
    }
    r.fixed_point_iters = std::stoi(line.substr(pos));
    out.push_back(r);
  }
  return out;
}

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::ofstream& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get_le(std::ifstream& in) {
  unsigned char b[sizeof(T)];
  in.read(reinterpret_cast<char*>(b), sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace detail

inline constexpr std::uint32_t kSnapshotVersion = 1;

// Binary snapshot: "VDGF", u32 version, u32 n, u32 components, f64 extent, then the samples as f64
// in storage order (component, x, y, z with z fastest); all little-endian.
inline void write_snapshot(const GridField& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write("VDGF", 4);
  detail::put_le<std::uint32_t>(out, kSnapshotVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.n));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.components));
  detail::put_le<double>(out, f.extent);
  for (double v : f.values) detail::put_le<double>(out, v);
  out.flush();
  if (!out) throw Error("short write to '" + path + "'");
}

inline GridField read_snapshot(const std::string& path, int pad_factor = 2) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "VDGF", 4) != 0) throw Error("'" + path + "' is not a grid snapshot");
  const auto version = detail::get_le<std::uint32_t>(in);
  if (version != kSnapshotVersion) throw Error("'" + path + "' has unsupported version " + std::to_string(version));
  const auto n = detail::get_le<std::uint32_t>(in);
  const auto comps = detail::get_le<std::uint32_t>(in);
  const double extent = detail::get_le<double>(in);
  GridField f(extent, static_cast<int>(n), static_cast<int>(comps), pad_factor);
  for (double& v : f.values) v = detail::get_le<double>(in);
  if (!in) throw Error("'" + path + "' is truncated");
  return f;
}

enum class TerminationReason { completed, fixed_point_divergence, marker_escape };

inline const char* to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::completed: return "completed";
    case TerminationReason::fixed_point_divergence: return "fixed_point_divergence";
    case TerminationReason::marker_escape: return "marker_escape";
  }
  return "unknown";
}

inline constexpr const char* kCodeVersion = "1.0.0";

struct RunManifest {
  SimConfig config;
  std::string code_version = kCodeVersion;
  std::string start_time;
  std::string end_time;
  std::vector<int> fixed_point_iters;
  TerminationReason termination = TerminationReason::completed;
  std::string message;
  std::vector<std::string> warnings;
  double effective_amplitude = 0.0;
  std::size_t markers = 0;
};

inline nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : config_entries(m.config)) cfg[k] = v;
  return {{"config", cfg},
          {"code_version", m.code_version},
          {"seed", m.config.seed},
          {"start_time", m.start_time},
          {"end_time", m.end_time},
          {"fixed_point_iters", m.fixed_point_iters},
          {"termination_reason", to_string(m.termination)},
          {"message", m.message},
          {"warnings", m.warnings},
          {"effective_amplitude", m.effective_amplitude},
          {"markers", m.markers}};
}

inline void write_manifest(const RunManifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << to_json(m).dump(2) << '\n';
  out.flush();
  if (!out) throw Error("short write to '" + path + "'");
}

}  // namespace vdarwin
