#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace qlyap {

// Invalid or inconsistent run configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Integration left its trusted regime: boundary leakage, tangent overflow,
// separation outside the grid margin (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Corrupted, truncated or mismatched file (CLI exit code 4).
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Compact number formatting for diagnostics (%g).
inline std::string diag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace qlyap
