// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "na/lang.hpp"
#include "na/nets.hpp"
#include "na/rational.hpp"

namespace na::asym {

// Exact limit value of a network quantity under the weight scaling
// theta -> N*theta, N -> infinity: either a rational or a signed infinity.
// Arithmetic on finite values is exact. The indeterminate forms 0*inf and
// inf-inf raise EvalError instead of being silently resolved.
class AsymScalar {
 public:
  AsymScalar() : kind_(Kind::Finite), value_(0) {}
  AsymScalar(const Rat& r) : kind_(Kind::Finite), value_(r) {}  // NOLINT(implicit)
  AsymScalar(int i) : kind_(Kind::Finite), value_(i) {}         // NOLINT(implicit)

  static AsymScalar pos_inf();
  static AsymScalar neg_inf();

  bool is_finite() const { return kind_ == Kind::Finite; }
  bool is_pos_inf() const { return kind_ == Kind::PosInf; }
  bool is_neg_inf() const { return kind_ == Kind::NegInf; }

  // Finite value; throws EvalError on infinities.
  const Rat& value() const;

  // -1 / 0 / +1; infinities have the corresponding sign.
  int sign() const;

  AsymScalar operator-() const;
  AsymScalar& operator+=(const AsymScalar& o) { return *this = *this + o; }
  friend AsymScalar operator+(const AsymScalar& a, const AsymScalar& b);
  friend AsymScalar operator-(const AsymScalar& a, const AsymScalar& b);
  friend AsymScalar operator*(const AsymScalar& a, const AsymScalar& b);

  friend bool operator==(const AsymScalar& a, const AsymScalar& b);
  // Total order with -inf < finite < +inf.
  friend std::strong_ordering operator<=>(const AsymScalar& a, const AsymScalar& b);

  std::string str() const;

 private:
  enum class Kind { Finite, NegInf, PosInf };
  Kind kind_;
  Rat value_;
};

using AsymVector = std::vector<AsymScalar>;

// lim sigmoid(N*x): 1 for x > 0, 0 for x < 0, 1/2 at exactly 0.
AsymScalar asym_sigmoid(const AsymScalar& x);
// lim tanh(N*x): the sign function.
AsymScalar asym_tanh(const AsymScalar& x);
// lim softmax(N*u): 1/m on the m maximal coordinates, 0 elsewhere.
AsymVector asym_softmax(const AsymVector& u);
// Limit attention: the average of the value rows whose scores are maximal.
AsymVector asym_attention(const AsymVector& q, const std::vector<AsymVector>& K,
                          const std::vector<AsymVector>& V);

enum class Outcome { Accept, Reject, Unstable };
const char* outcome_name(Outcome o);

struct AsymDecision {
  Outcome outcome = Outcome::Unstable;
  // Identifier of the unit whose pre-activation limit was exactly zero,
  // e.g. "t=3 tanh[1]"; empty for stable decisions.
  std::string witness;
};

// Full symbolic evaluation of a network on one input. Pre-activations of
// the form N*(w.v + b) are decided by the sign of w.v + b in exact rational
// arithmetic; an exactly-zero pre-activation anywhere is surfaced as
// instability, never tie-broken.
struct LimitTrace {
  std::vector<AsymVector> h;       // per-step hidden limits (attention: summary h_t)
  std::vector<AsymVector> c;       // lstm cell limits
  std::vector<AsymVector> values;  // attention encoder values v_t
  AsymVector pooled;               // cnn pooled vector
  AsymScalar p = Rat(1) / 2;       // limit acceptance output: 0, 1/2, or 1

  std::string state_witness;  // first zero pre-activation on the state path
  std::string head_witness;   // zero pre-activation at the readout
  long long constant_tie_count = 0;  // attention argmax ties with equal scores

  // Smallest |pre-activation| seen anywhere during the evaluation; this is
  // the margin certifying stability of a construction.
  bool has_min_abs_pre = false;
  Rat min_abs_pre;

  bool state_stable() const { return state_witness.empty(); }
  bool decision_stable() const { return state_witness.empty() && head_witness.empty(); }
};

// Reusable evaluator: converts the weights to exact rationals once and can
// then evaluate many inputs. evaluate() is const and safe to call from
// several threads.
class LimitEvaluator {
 public:
  explicit LimitEvaluator(const nets::NetworkSpec& net);
  ~LimitEvaluator();
  LimitEvaluator(LimitEvaluator&&) noexcept;
  LimitEvaluator& operator=(LimitEvaluator&&) noexcept;

  LimitTrace evaluate(const lang::SentenceMatrix& X) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

LimitTrace evaluate_limits(const nets::NetworkSpec& net, const lang::SentenceMatrix& X);

AsymDecision asym_accept(const nets::NetworkSpec& net, const lang::SentenceMatrix& X);
AsymDecision asym_accept(const nets::NetworkSpec& net, std::string_view s);

// Smallest N on the doubling schedule 1,2,4,...,2^30 at which the rounded
// continuous output matches the asymptotic decision on every given string.
struct ScaleReport {
  long long scale = 1;
  struct Row {
    std::string input;
    int want = 0;    // asymptotic indicator
    double p = 0.0;  // continuous output at the returned scale
    double margin = 0.0;
  };
  std::vector<Row> rows;
  double min_margin = 0.0;
};
ScaleReport find_scale(const nets::NetworkSpec& net, const std::vector<std::string>& strings,
                       int m);

enum class ConvergenceVerdict { ToZero, ToOne, OscillatingOrFlat };
const char* verdict_name(ConvergenceVerdict v);

struct ConvergenceReport {
  struct Point {
    long long scale;
    double p;
  };
  std::vector<Point> points;
  ConvergenceVerdict verdict = ConvergenceVerdict::OscillatingOrFlat;
};

// Numeric cross-check of the pointwise limit: evaluates the continuous
// network along a scale schedule and reports where the output settles
// (tolerance 1e-3 over 3 consecutive scales).
ConvergenceReport check_convergence(const nets::NetworkSpec& net, const lang::SentenceMatrix& X,
                                    std::vector<long long> schedule = {});

}  // namespace na::asym
