#pragma once

#include <random>
#include <string>

#include "wdq/verify.hpp"

namespace wdq {

inline void PrintTo(const MixedElement& a, std::ostream* os) { *os << a.str(); }
inline void PrintTo(const Scalar& a, std::ostream* os) { *os << a.str(); }

}  // namespace wdq

namespace wdq::test {

inline MixedElement P(const std::string& text, int n = 1) {
  return parse_element(text, TruncationPolicy::unbounded(n));
}

inline TruncationPolicy policy(int n, int jet = 4, int fedosov = 6, int hbar = 3) {
  TruncationPolicy p;
  p.n = n;
  p.jet_order = jet;
  p.fedosov_order = fedosov;
  p.hbar_order = hbar;
  return p;
}

inline std::mt19937_64 rng(std::uint64_t seed = 7) { return std::mt19937_64(seed); }

}  // namespace wdq::test
