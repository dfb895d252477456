#pragma once

#include <cstddef>
#include <functional>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vdarwin {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class GridMismatchError : public Error {
 public:
  using Error::Error;
};

// A marker left the region covered by the deposition stencil; the box is too small for the run.
class MarkerEscapeError : public Error {
 public:
  MarkerEscapeError(std::size_t marker, double time, const std::string& detail)
      : Error("marker " + std::to_string(marker) + " outside the grid box at t=" + std::to_string(time) +
              " (" + detail + "); increase box_half_width"),
        marker_(marker),
        time_(time) {}

  std::size_t marker() const { return marker_; }
  double time() const { return time_; }

 private:
  std::size_t marker_;
  double time_;
};

// The transverse-field Picard iteration failed to reach its tolerance.
class FixedPointDivergenceError : public Error {
 public:
  explicit FixedPointDivergenceError(std::vector<double> residuals)
      : Error(describe(residuals)), residuals_(std::move(residuals)) {}

  const std::vector<double>& residuals() const { return residuals_; }

 private:
  static std::string describe(const std::vector<double>& r) {
    std::string s = "transverse field fixed point did not converge; residual history:";
    for (double v : r) s += " " + std::to_string(v);
    return s;
  }
  std::vector<double> residuals_;
};

// Run log for non-fatal conditions. Messages go to std::clog unless a sink is installed.
class RunLog {
 public:
  using Sink = std::function<void(const std::string&)>;

  static RunLog& instance() {
    static RunLog log;
    return log;
  }

  void warn(const std::string& msg) {
    std::lock_guard lock(mutex_);
    messages_.push_back(msg);
    if (sink_)
      sink_(msg);
    else
      std::clog << "vdarwin: warning: " << msg << '\n';
  }

  void set_sink(Sink sink) {
    std::lock_guard lock(mutex_);
    sink_ = std::move(sink);
  }

  std::vector<std::string> drain() {
    std::lock_guard lock(mutex_);
    return std::exchange(messages_, {});
  }

 private:
  std::mutex mutex_;
  Sink sink_;
  std::vector<std::string> messages_;
};

inline void log_warning(const std::string& msg) { RunLog::instance().warn(msg); }

}  // namespace vdarwin
