#pragma once

// Built-in initial coefficient vectors for the N = 40 chain.

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "blochsim/error.hpp"
#include "blochsim/grid.hpp"

namespace blochsim::initial_states {

inline constexpr int table_sites = 40;

// c_0 .. c_40 exactly as tabulated.
inline constexpr std::array<double, 41> table1_raw = {
    0.0,      0.0,      0.0,      0.0,      0.0,      0.0,      0.0,      0.303e-5, 0.177e-4,
    0.898e-4, 0.396e-3, 0.151e-2, 0.502e-2, 0.149e-1, 0.363e-1, 0.788e-1, 0.149,    0.244,
    0.347,    0.429,    0.460,    0.429,    0.347,    0.244,    0.149,    0.788e-1, 0.363e-1,
    0.149e-1, 0.502e-2, 0.151e-2, 0.396e-3, 0.898e-4, 0.177e-4, 0.303e-5, 0.0,      0.0,
    0.0,      0.0,      0.0,      0.0,      0.0};

inline constexpr std::array<double, 41> table2_raw = {
    0.0,      0.0,      0.0,      0.0,      0.0,      0.0,      0.0,      0.0,      0.614e-5,
    0.354e-4, 0.180e-3, 0.814e-3, 0.330e-2, 0.121e-1, 0.414e-1, 0.133,    0.351,    0.496,
    0.471,    0.411,    0.336,    0.252,    0.170,    0.103,    0.546e-1, 0.257e-1, 0.106e-1,
    0.386e-2, 0.123e-2, 0.340e-3, 0.826e-4, 0.175e-4, 0.323e-5, 0.0,      0.0,      0.0,
    0.0,      0.0,      0.0,      0.0,      0.0};

inline std::vector<complex> normalized(std::span<const complex> c) {
  NeumaierSum s;
  for (const auto& v : c) s.add(std::norm(v));
  const double n = std::sqrt(s.value());
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("initial state has zero or non-finite norm");
  std::vector<complex> out(c.begin(), c.end());
  for (auto& v : out) v /= n;
  return out;
}

/// Drops c_0 (which must be zero, the chain runs over l = 1..40) and normalizes.
inline std::vector<complex> from_table(const std::array<double, 41>& raw) {
  if (raw[0] != 0.0) throw ShapeError("tabulated c_0 must vanish");
  std::vector<complex> c(raw.begin() + 1, raw.end());
  return normalized(c);
}

inline std::vector<complex> table1() { return from_table(table1_raw); }
inline std::vector<complex> table2() { return from_table(table2_raw); }

/// Unit amplitude on site `site` (1-based) of an N-site chain.
inline std::vector<complex> single_site(int N, int site) {
  if (N < 2) throw DomainError("N must be at least 2");
  if (site < 1 || site > N) throw DomainError("site index out of range 1..N");
  std::vector<complex> c(static_cast<std::size_t>(N));
  c[static_cast<std::size_t>(site - 1)] = 1.0;
  return c;
}

/// Named state for an N-site chain: table1, table2, single-site (site N/2).
inline std::vector<complex> builtin(const std::string& name, int N) {
  if (name == "table1" || name == "table2") {
    if (N != table_sites) throw ShapeError(name + " is defined for N = 40 only");
    return name == "table1" ? table1() : table2();
  }
  if (name == "single-site") return single_site(N, N / 2);
  throw DomainError("unknown built-in initial state '" + name + "'");
}

/// User-supplied amplitudes, checked against N and normalized.
inline std::vector<complex> custom(std::span<const complex> c, int N) {
  if (c.size() != static_cast<std::size_t>(N))
    throw ShapeError("custom initial state has " + std::to_string(c.size()) + " entries, expected " +
                     std::to_string(N));
  return normalized(c);
}

}  // namespace blochsim::initial_states
