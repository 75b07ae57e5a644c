#pragma once

#include <stdexcept>
#include <string>

namespace mixsimplex {

/// Raised when an enumeration-based routine is asked for more faces than it
/// is willing to materialize.
class resource_limit_error : public std::length_error {
 public:
  using std::length_error::length_error;
};

namespace detail {

[[noreturn]] inline void fail(const std::string& what) { throw std::invalid_argument(what); }

inline void require(bool ok, const char* what) {
  if (!ok) fail(what);
}

}  // namespace detail
}  // namespace mixsimplex
