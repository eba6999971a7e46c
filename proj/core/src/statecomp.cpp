// SPDX-License-Identifier: Apache-2.0
#include "na/statecomp.hpp"

#include <cmath>
#include <thread>

#include "na/errors.hpp"

namespace na::statecomp {

Selector selector_from_name(const std::string& name) {
  if (name == "h") return Selector::Hidden;
  if (name == "c") return Selector::Cell;
  if (name == "V") return Selector::Values;
  if (name == "summary") return Selector::Summary;
  throw ConfigError("unknown selector '" + name + "' (expected h, c, V, or summary)");
}

const char* selector_name(Selector s) {
  switch (s) {
    case Selector::Hidden: return "h";
    case Selector::Cell: return "c";
    case Selector::Values: return "V";
    case Selector::Summary: return "summary";
  }
  return "?";
}

namespace {

void check_selector(const nets::NetworkSpec& net, Selector selector) {
  const bool attn = net.arch == nets::Arch::AttnEnc;
  switch (selector) {
    case Selector::Hidden:
      if (attn) throw ConfigError("selector h is undefined for attention; use V or summary");
      break;
    case Selector::Cell:
      if (net.arch != nets::Arch::Lstm) throw ConfigError("selector c requires an LSTM");
      break;
    case Selector::Values:
    case Selector::Summary:
      if (!attn) throw ConfigError("selectors V/summary require an attention encoder");
      break;
  }
}

std::vector<asym::AsymScalar> extract(const asym::LimitTrace& trace, Selector selector, int n) {
  switch (selector) {
    case Selector::Hidden:
      return n > 0 ? trace.h.back() : std::vector<asym::AsymScalar>{};
    case Selector::Cell:
      return n > 0 ? trace.c.back() : std::vector<asym::AsymScalar>{};
    case Selector::Summary:
      return n > 0 ? trace.h.back() : std::vector<asym::AsymScalar>{};
    case Selector::Values: {
      std::vector<asym::AsymScalar> flat;
      for (const auto& row : trace.values) flat.insert(flat.end(), row.begin(), row.end());
      return flat;
    }
  }
  return {};
}

// Is the evaluation stable as far as the selected quantity is concerned?
// Head instability does not taint state-level selectors.
bool stable_for(const asym::LimitTrace& trace, Selector) { return trace.state_stable(); }

}  // namespace

ConfigSet config_set(const nets::NetworkSpec& net, Selector selector, int n,
                     const EnumOptions& opts) {
  if (n < 0) throw ConfigError("length must be >= 0");
  check_selector(net, selector);
  const int s = net.alphabet.size();
  double total_d = 1.0;
  for (int i = 0; i < n; ++i) total_d *= s;
  if (total_d > static_cast<double>(opts.budget))
    throw BudgetError("enumerating |alphabet|^n = " + std::to_string(total_d) +
                      " inputs exceeds the budget of " + std::to_string(opts.budget));
  const long long total = static_cast<long long>(total_d);

  const asym::LimitEvaluator evaluator(net);
  const int jobs = std::max(1, opts.jobs);

  auto run_range = [&](long long lo, long long hi, ConfigSet& out) {
    lang::SentenceMatrix X;
    X.width = s;
    X.rows.assign(n, 0);
    for (long long idx = lo; idx < hi; ++idx) {
      long long v = idx;
      for (int t = 0; t < n; ++t) {
        X.rows[t] = static_cast<int>(v % s);
        v /= s;
      }
      const asym::LimitTrace trace = evaluator.evaluate(X);
      if (trace.constant_tie_count > 0) ++out.tie_note_count;
      if (!stable_for(trace, selector)) {
        ++out.unstable_count;
        continue;
      }
      out.values.insert(extract(trace, selector, n));
    }
  };

  ConfigSet result;
  result.n = n;
  if (jobs == 1 || total < 2 * jobs) {
    run_range(0, total, result);
    return result;
  }
  std::vector<ConfigSet> partial(jobs);
  std::vector<std::thread> threads;
  const long long chunk = (total + jobs - 1) / jobs;
  for (int j = 0; j < jobs; ++j) {
    const long long lo = j * chunk;
    const long long hi = std::min(total, lo + chunk);
    if (lo >= hi) break;
    threads.emplace_back([&, lo, hi, j] { run_range(lo, hi, partial[j]); });
  }
  for (std::thread& t : threads) t.join();
  for (const ConfigSet& p : partial) {
    result.unstable_count += p.unstable_count;
    result.tie_note_count += p.tie_note_count;
    result.values.insert(p.values.begin(), p.values.end());
  }
  return result;
}

GrowthClass classify_growth(const std::vector<std::pair<int, long long>>& points) {
  if (points.size() < 4) throw ConfigError("growth classification needs at least 4 points");

  // Constant over the top half of the range.
  const std::size_t half = points.size() / 2;
  bool constant = true;
  for (std::size_t i = half; i < points.size(); ++i)
    if (points[i].second != points[half].second) constant = false;
  if (constant) return GrowthClass::Constant;

  // Exponential: successive ratios >= 1.8 throughout.
  bool exponential = true;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i - 1].second <= 0 ||
        static_cast<double>(points[i].second) < 1.8 * static_cast<double>(points[i - 1].second))
      exponential = false;
  }
  if (exponential) return GrowthClass::Exponential;

  // Log-log least squares.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& [n, count] : points) {
    if (n <= 0 || count <= 0) continue;
    const double x = std::log(static_cast<double>(n));
    const double y = std::log(static_cast<double>(count));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) return GrowthClass::Inconclusive;
  const double denom = m * sxx - sx * sx;
  if (denom == 0) return GrowthClass::Inconclusive;
  const double slope = (m * sxy - sx * sy) / denom;
  if (std::abs(slope - 1.0) <= 0.25) return GrowthClass::Linear;
  if (std::abs(slope - 2.0) <= 0.25) return GrowthClass::Quadratic;
  return GrowthClass::Inconclusive;
}

const char* growth_name(GrowthClass g) {
  switch (g) {
    case GrowthClass::Constant: return "O(1)";
    case GrowthClass::Linear: return "Theta(n)";
    case GrowthClass::Quadratic: return "Theta(n^2)";
    case GrowthClass::Exponential: return "2^Theta(n)";
    case GrowthClass::Inconclusive: return "inconclusive";
  }
  return "?";
}

ComplexityCurve complexity_curve(const nets::NetworkSpec& net, Selector selector, int n_min,
                                 int n_max, const EnumOptions& opts) {
  if (n_min < 0 || n_min > n_max) throw ConfigError("bad length range");
  ComplexityCurve curve;
  for (int n = n_min; n <= n_max; ++n) {
    const ConfigSet cs = config_set(net, selector, n, opts);
    curve.points.emplace_back(n, cs.count());
    curve.unstable.push_back(cs.unstable_count);
  }
  curve.fitted = classify_growth(curve.points);
  return curve;
}

}  // namespace na::statecomp
