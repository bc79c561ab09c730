#pragma once

#include <stdexcept>
#include <string>

namespace optimfkd {

struct HistoryGapError : std::runtime_error {
  explicit HistoryGapError(const std::string& msg) : std::runtime_error(msg) {}
};

struct WindowRangeError : std::runtime_error {
  explicit WindowRangeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalFailureError : std::runtime_error {
  explicit NumericalFailureError(const std::string& msg) : std::runtime_error(msg) {}
};

struct StaleSolutionError : std::runtime_error {
  explicit StaleSolutionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace optimfkd
