#pragma once

#include <complex>
#include <sstream>
#include <stdexcept>
#include <string>

namespace dnr {

using Complex = std::complex<double>;

// Input file could not be read or decoded.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input decoded fine but violates a model invariant.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A solver could not complete (iteration cap, numerical failure).
struct SolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename... Parts>
std::string concat(const Parts&... parts) {
  std::ostringstream oss;
  (oss << ... << parts);
  return oss.str();
}

}  // namespace detail

template <typename... Parts>
[[noreturn]] void fail_validation(const Parts&... parts) {
  throw ValidationError(detail::concat(parts...));
}

template <typename... Parts>
[[noreturn]] void fail_parse(const Parts&... parts) {
  throw ParseError(detail::concat(parts...));
}

}  // namespace dnr
