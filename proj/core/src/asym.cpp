// SPDX-License-Identifier: Apache-2.0
#include "na/asym.hpp"

#include <cmath>

#include "na/errors.hpp"

namespace na::asym {

AsymScalar AsymScalar::pos_inf() {
  AsymScalar s;
  s.kind_ = Kind::PosInf;
  return s;
}

AsymScalar AsymScalar::neg_inf() {
  AsymScalar s;
  s.kind_ = Kind::NegInf;
  return s;
}

const Rat& AsymScalar::value() const {
  if (!is_finite()) throw EvalError("infinite limit value has no rational value");
  return value_;
}

int AsymScalar::sign() const {
  switch (kind_) {
    case Kind::PosInf: return 1;
    case Kind::NegInf: return -1;
    case Kind::Finite: return rat_sign(value_);
  }
  return 0;
}

AsymScalar AsymScalar::operator-() const {
  switch (kind_) {
    case Kind::PosInf: return neg_inf();
    case Kind::NegInf: return pos_inf();
    case Kind::Finite: return AsymScalar(Rat(-value_));
  }
  return {};
}

AsymScalar operator+(const AsymScalar& a, const AsymScalar& b) {
  if (a.is_finite() && b.is_finite()) return AsymScalar(Rat(a.value_ + b.value_));
  if (a.is_finite()) return b;
  if (b.is_finite()) return a;
  if (a.kind_ == b.kind_) return a;
  throw EvalError("indeterminate sum inf + (-inf)");
}

AsymScalar operator-(const AsymScalar& a, const AsymScalar& b) { return a + (-b); }

AsymScalar operator*(const AsymScalar& a, const AsymScalar& b) {
  if (a.is_finite() && b.is_finite()) return AsymScalar(Rat(a.value_ * b.value_));
  // One side (at least) is infinite: 0 * inf is indeterminate.
  if (a.sign() == 0 || b.sign() == 0) throw EvalError("indeterminate product 0 * inf");
  return a.sign() * b.sign() > 0 ? AsymScalar::pos_inf() : AsymScalar::neg_inf();
}

bool operator==(const AsymScalar& a, const AsymScalar& b) {
  if (a.kind_ != b.kind_) return false;
  return !a.is_finite() || a.value_ == b.value_;
}

std::strong_ordering operator<=>(const AsymScalar& a, const AsymScalar& b) {
  auto rank = [](AsymScalar::Kind k) {
    return k == AsymScalar::Kind::NegInf ? 0 : k == AsymScalar::Kind::Finite ? 1 : 2;
  };
  if (rank(a.kind_) != rank(b.kind_))
    return rank(a.kind_) < rank(b.kind_) ? std::strong_ordering::less
                                         : std::strong_ordering::greater;
  if (!a.is_finite()) return std::strong_ordering::equal;
  if (a.value_ < b.value_) return std::strong_ordering::less;
  if (a.value_ > b.value_) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::string AsymScalar::str() const {
  switch (kind_) {
    case Kind::PosInf: return "inf";
    case Kind::NegInf: return "-inf";
    case Kind::Finite: return rat_to_string(value_);
  }
  return "?";
}

AsymScalar asym_sigmoid(const AsymScalar& x) {
  const int s = x.sign();
  if (s > 0) return AsymScalar(Rat(1));
  if (s < 0) return AsymScalar(Rat(0));
  return AsymScalar(Rat(1) / 2);
}

AsymScalar asym_tanh(const AsymScalar& x) { return AsymScalar(Rat(x.sign())); }

AsymVector asym_softmax(const AsymVector& u) {
  if (u.empty()) throw EvalError("softmax of an empty vector");
  AsymScalar mx = u[0];
  for (const AsymScalar& s : u)
    if (s > mx) mx = s;
  long long m = 0;
  for (const AsymScalar& s : u)
    if (s == mx) ++m;
  AsymVector out(u.size(), AsymScalar(Rat(0)));
  const Rat share = Rat(1) / m;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (u[i] == mx) out[i] = AsymScalar(share);
  return out;
}

AsymVector asym_attention(const AsymVector& q, const std::vector<AsymVector>& K,
                          const std::vector<AsymVector>& V) {
  if (K.empty() || V.empty()) throw EvalError("attention over zero steps is undefined");
  if (K.size() != V.size()) throw EvalError("K and V must have the same number of rows");
  AsymVector scores;
  scores.reserve(K.size());
  for (const AsymVector& k : K) {
    if (k.size() != q.size()) throw EvalError("query/key dimension mismatch");
    AsymScalar dot = Rat(0);
    for (std::size_t j = 0; j < q.size(); ++j) dot += q[j] * k[j];
    scores.push_back(dot);
  }
  AsymScalar mx = scores[0];
  for (const AsymScalar& s : scores)
    if (s > mx) mx = s;
  long long m = 0;
  for (const AsymScalar& s : scores)
    if (s == mx) ++m;
  AsymVector out(V[0].size(), AsymScalar(Rat(0)));
  for (std::size_t t = 0; t < scores.size(); ++t) {
    if (!(scores[t] == mx)) continue;
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += V[t][j];
  }
  const AsymScalar share = AsymScalar(Rat(1) / m);
  for (AsymScalar& o : out) o = o * share;
  return out;
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Accept: return "accept";
    case Outcome::Reject: return "reject";
    case Outcome::Unstable: return "unstable";
  }
  return "?";
}

const char* verdict_name(ConvergenceVerdict v) {
  switch (v) {
    case ConvergenceVerdict::ToZero: return "converged-to-0";
    case ConvergenceVerdict::ToOne: return "converged-to-1";
    case ConvergenceVerdict::OscillatingOrFlat: return "oscillating-or-flat";
  }
  return "?";
}

AsymDecision asym_accept(const nets::NetworkSpec& net, const lang::SentenceMatrix& X) {
  const LimitTrace trace = evaluate_limits(net, X);
  AsymDecision d;
  if (!trace.decision_stable()) {
    d.outcome = Outcome::Unstable;
    d.witness = trace.state_witness.empty() ? trace.head_witness : trace.state_witness;
    return d;
  }
  d.outcome = trace.p == AsymScalar(Rat(1)) ? Outcome::Accept : Outcome::Reject;
  return d;
}

AsymDecision asym_accept(const nets::NetworkSpec& net, std::string_view s) {
  return asym_accept(net, lang::encode_one_hot(s, net.alphabet));
}

ScaleReport find_scale(const nets::NetworkSpec& net, const std::vector<std::string>& strings,
                       int m) {
  std::vector<int> want(strings.size());
  std::vector<lang::SentenceMatrix> inputs;
  inputs.reserve(strings.size());
  for (std::size_t i = 0; i < strings.size(); ++i) {
    if (static_cast<int>(strings[i].size()) >= m)
      throw ConfigError("find_scale given a string of length >= m");
    inputs.push_back(lang::encode_one_hot(strings[i], net.alphabet));
    const AsymDecision d = asym_accept(net, inputs.back());
    if (d.outcome == Outcome::Unstable)
      throw EvalError("find_scale requires a stable construction; witness: " + d.witness);
    want[i] = d.outcome == Outcome::Accept ? 1 : 0;
  }
  for (long long N = 1; N <= (1LL << 30); N *= 2) {
    ScaleReport report;
    report.scale = N;
    report.min_margin = 1.0;
    bool all_ok = true;
    for (std::size_t i = 0; i < strings.size(); ++i) {
      const double p = nets::acceptor_forward(net, inputs[i], static_cast<double>(N)).p;
      const int rounded = p > 0.5 ? 1 : 0;
      const double margin = std::abs(p - 0.5);
      report.rows.push_back({strings[i], want[i], p, margin});
      report.min_margin = std::min(report.min_margin, margin);
      if (rounded != want[i]) {
        all_ok = false;
        break;
      }
    }
    if (all_ok) return report;
  }
  throw NoConvergenceError("doubling schedule exhausted at 2^30 without agreement");
}

ConvergenceReport check_convergence(const nets::NetworkSpec& net, const lang::SentenceMatrix& X,
                                    std::vector<long long> schedule) {
  if (schedule.empty())
    for (long long N = 1; N <= (1 << 16); N *= 2) schedule.push_back(N);
  ConvergenceReport report;
  for (long long N : schedule)
    report.points.push_back({N, nets::acceptor_forward(net, X, static_cast<double>(N)).p});
  constexpr double kTol = 1e-3;
  constexpr int kRun = 3;
  auto tail_converged = [&](double target) {
    if (static_cast<int>(report.points.size()) < kRun) return false;
    for (std::size_t i = report.points.size() - kRun; i < report.points.size(); ++i)
      if (std::abs(report.points[i].p - target) > kTol) return false;
    return true;
  };
  if (tail_converged(1.0))
    report.verdict = ConvergenceVerdict::ToOne;
  else if (tail_converged(0.0))
    report.verdict = ConvergenceVerdict::ToZero;
  else
    report.verdict = ConvergenceVerdict::OscillatingOrFlat;
  return report;
}

}  // namespace na::asym
