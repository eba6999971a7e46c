// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "na/asym.hpp"
#include "na/nets.hpp"

namespace na::statecomp {

// Which hidden quantity to enumerate.
enum class Selector { Hidden, Cell, Values, Summary };

Selector selector_from_name(const std::string& name);  // h | c | V | summary
const char* selector_name(Selector s);

struct EnumOptions {
  long long budget = 1LL << 20;  // maximum number of inputs per length
  int jobs = 1;
};

// Exact configuration set of the selected quantity over all inputs of
// length n. Values come only from stable evaluations; unstable inputs are
// counted separately. Deduplication is by exact equality of rational
// vectors.
struct ConfigSet {
  int n = 0;
  std::set<std::vector<asym::AsymScalar>> values;
  long long unstable_count = 0;
  long long tie_note_count = 0;  // inputs where attention averaged tied scores

  long long count() const { return static_cast<long long>(values.size()); }
};

ConfigSet config_set(const nets::NetworkSpec& net, Selector selector, int n,
                     const EnumOptions& opts = {});

enum class GrowthClass { Constant, Linear, Quadratic, Exponential, Inconclusive };
const char* growth_name(GrowthClass g);

// Decision rule over (n, count) points:
//   constant counts over the top half of the range -> O(1);
//   successive ratios >= 1.8 throughout            -> 2^Theta(n);
//   otherwise fit log(count) against log(n): slope within 0.25 of 1 or 2
//   gives Theta(n) / Theta(n^2); anything else is inconclusive.
GrowthClass classify_growth(const std::vector<std::pair<int, long long>>& points);

struct ComplexityCurve {
  std::vector<std::pair<int, long long>> points;
  std::vector<long long> unstable;
  GrowthClass fitted = GrowthClass::Inconclusive;
};

ComplexityCurve complexity_curve(const nets::NetworkSpec& net, Selector selector, int n_min,
                                 int n_max, const EnumOptions& opts = {});

}  // namespace na::statecomp
