// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>

namespace na {

// Exact rational arithmetic. Conversion from double is exact (every finite
// double is a dyadic rational), which is what lets compiled half-integer
// weights round-trip through the double-valued network container without
// losing the margins the constructions rely on.
using Rat = boost::multiprecision::cpp_rational;

inline int rat_sign(const Rat& r) { return r.sign(); }

inline double rat_to_double(const Rat& r) { return r.convert_to<double>(); }

inline std::string rat_to_string(const Rat& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

}  // namespace na
