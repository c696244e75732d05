#pragma once

#include <stdexcept>
#include <string>

namespace das {

// Thrown on contract violations (bad sizes, invalid config fields) and
// runtime failures (corrupt files, non-finite gradients).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(what);
}

}  // namespace das
