// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "na/asym.hpp"
#include "na/compile.hpp"
#include "na/rng.hpp"

using namespace na;
using namespace na::asym;
using lang::encode_one_hot;

TEST_CASE("asym scalar arithmetic") {
  const AsymScalar a(Rat(1) / 3);
  const AsymScalar b(Rat(1) / 6);
  CHECK((a + b) == AsymScalar(Rat(1) / 2));
  CHECK((a - b) == AsymScalar(Rat(1) / 6));
  CHECK((a * b) == AsymScalar(Rat(1) / 18));

  const AsymScalar inf = AsymScalar::pos_inf();
  const AsymScalar ninf = AsymScalar::neg_inf();
  CHECK((inf + a) == inf);
  CHECK((inf * AsymScalar(Rat(-2))) == ninf);
  CHECK((inf + inf) == inf);
  CHECK(ninf < a);
  CHECK(a < inf);

  // indeterminate forms are errors, never silently resolved
  CHECK_THROWS_AS(inf + ninf, EvalError);
  CHECK_THROWS_AS(inf * AsymScalar(Rat(0)), EvalError);
  CHECK_THROWS_AS(inf.value(), EvalError);
}

TEST_CASE("limit activations") {
  CHECK(asym_sigmoid(AsymScalar(Rat(32, 10))) == AsymScalar(Rat(1)));
  CHECK(asym_sigmoid(AsymScalar(Rat(-1, 2))) == AsymScalar(Rat(0)));
  CHECK(asym_sigmoid(AsymScalar(Rat(0))) == AsymScalar(Rat(1) / 2));
  CHECK(asym_sigmoid(AsymScalar::pos_inf()) == AsymScalar(Rat(1)));
  CHECK(asym_sigmoid(AsymScalar::neg_inf()) == AsymScalar(Rat(0)));

  CHECK(asym_tanh(AsymScalar(Rat(2))) == AsymScalar(Rat(1)));
  CHECK(asym_tanh(AsymScalar(Rat(-1))) == AsymScalar(Rat(-1)));
  CHECK(asym_tanh(AsymScalar(Rat(0))) == AsymScalar(Rat(0)));
}

TEST_CASE("limit softmax") {
  const AsymVector out = asym_softmax({Rat(2), Rat(5), Rat(5), Rat(1)});
  CHECK(out == AsymVector{Rat(0), Rat(1) / 2, Rat(1) / 2, Rat(0)});
  CHECK(asym_softmax({Rat(7)}) == AsymVector{Rat(1)});
  const AsymVector thirds = asym_softmax({Rat(3), Rat(3), Rat(3)});
  CHECK(thirds == AsymVector{Rat(1) / 3, Rat(1) / 3, Rat(1) / 3});
}

TEST_CASE("limit softmax sums to one and is nonnegative") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    AsymVector u;
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 6));
    for (int i = 0; i < n; ++i) u.emplace_back(Rat(rng.uniform_int(-3, 3)) / 2);
    const AsymVector out = asym_softmax(u);
    Rat sum = 0;
    for (const AsymScalar& s : out) {
      CHECK(s.value() >= 0);
      sum += s.value();
    }
    CHECK(sum == 1);
  }
}

TEST_CASE("limit attention") {
  // unique maximum retrieves that row exactly
  const AsymVector q{Rat(1)};
  const std::vector<AsymVector> K{{Rat(0)}, {Rat(2)}, {Rat(5)}, {Rat(1)}};
  const std::vector<AsymVector> V{{Rat(10)}, {Rat(20)}, {Rat(30)}, {Rat(40)}};
  CHECK(asym_attention(q, K, V) == AsymVector{Rat(30)});

  // two tied maxima average their values
  const std::vector<AsymVector> K2{{Rat(1)}, {Rat(1)}};
  const std::vector<AsymVector> V2{{Rat(0)}, {Rat(1)}};
  CHECK(asym_attention(q, K2, V2) == AsymVector{Rat(1) / 2});

  CHECK_THROWS_AS(asym_attention(q, {}, {}), EvalError);
}

TEST_CASE("limit attention output stays in the convex hull of the value rows") {
  Rng rng(90);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 4));
    AsymVector q{Rat(rng.uniform_int(-2, 2))};
    std::vector<AsymVector> K, V;
    for (int t = 0; t < n; ++t) {
      K.push_back({Rat(rng.uniform_int(-3, 3))});
      V.push_back({Rat(rng.uniform_int(-5, 5))});
    }
    const AsymVector out = asym_attention(q, K, V);
    Rat lo = V[0][0].value(), hi = V[0][0].value();
    for (const AsymVector& row : V) {
      lo = std::min(lo, row[0].value());
      hi = std::max(hi, row[0].value());
    }
    CHECK(out[0].value() >= lo);
    CHECK(out[0].value() <= hi);
  }
}

TEST_CASE("counting encoder summary is l/n") {
  const nets::NetworkSpec net = compile::attention_counting_encoder();
  auto summary = [&](const std::string& s) {
    const LimitTrace tr = evaluate_limits(net, encode_one_hot(s, net.alphabet));
    return tr.h.back()[0];
  };
  CHECK(summary("1011") == AsymScalar(Rat(3) / 4));
  CHECK(summary("0000") == AsymScalar(Rat(0)));
  CHECK(summary("1111") == AsymScalar(Rat(1)));
}

TEST_CASE("asymptotic acceptance on compiled parity") {
  const compile::DfaCompilation parity = compile::compile_dfa_to_srn(compile::parity_dfa());
  CHECK(asym_accept(parity.net, "1010").outcome == Outcome::Accept);
  CHECK(asym_accept(parity.net, "100").outcome == Outcome::Reject);
  CHECK(asym_accept(parity.net, "").outcome == Outcome::Accept);
}

TEST_CASE("zero-weight network is unstable, with a witness") {
  nets::NetworkSpec net;
  net.arch = nets::Arch::Srn;
  net.alphabet = lang::Alphabet::binary();
  net.hidden = 1;
  net.weights["W"] = Tensor(1, 2);
  net.weights["U"] = Tensor(1, 1);
  net.weights["b"] = Tensor(1, 1);
  net.weights["Wa"] = Tensor(1, 1);
  net.weights["ba"] = Tensor(1, 1);
  const AsymDecision d = asym_accept(net, "01");
  CHECK(d.outcome == Outcome::Unstable);
  CHECK_FALSE(d.witness.empty());
}

TEST_CASE("counter cell with the literal scalar lift flags all-zero input") {
  const nets::NetworkSpec net =
      compile::counter_cell_spec_literal(compile::counter_params().plus);
  const LimitTrace tr = evaluate_limits(net, encode_one_hot("000", net.alphabet));
  CHECK_FALSE(tr.state_stable());  // sigma(N*0) = 1/2 persists
  // while the paper-faithful one-hot lift stays stable
  const nets::NetworkSpec hold = compile::counter_cell_spec(compile::counter_params().plus);
  CHECK(evaluate_limits(hold, encode_one_hot("000", hold.alphabet)).state_stable());
}

TEST_CASE("acceptance decisions are invariant under doubling the weights") {
  const compile::DfaCompilation parity = compile::compile_dfa_to_srn(compile::parity_dfa());
  nets::NetworkSpec doubled = parity.net;
  for (auto& [name, t] : doubled.weights)
    for (double& v : t.v) v *= 2.0;
  for (const std::string& s : {"", "1", "11", "0101", "11010", "000111"}) {
    CHECK(asym_accept(parity.net, s).outcome == asym_accept(doubled, s).outcome);
  }
}

TEST_CASE("squash-output lstm is rejected by the limit evaluator") {
  nets::NetworkSpec net;
  net.arch = nets::Arch::Lstm;
  net.alphabet = lang::Alphabet::binary();
  net.hidden = 1;
  for (const char* n : {"Wf", "Wi", "Wo", "Wc"}) net.weights[n] = Tensor(1, 2, 1.0);
  for (const char* n : {"Uf", "Ui", "Uo", "Uc"}) net.weights[n] = Tensor(1, 1);
  for (const char* n : {"bf", "bi", "bo", "bc"}) net.weights[n] = Tensor(1, 1);
  net.weights["Wa"] = Tensor(1, 1, 1.0);
  net.weights["ba"] = Tensor(1, 1);
  net.lstm_squash_output = true;
  CHECK_THROWS_AS(evaluate_limits(net, encode_one_hot("1", net.alphabet)), UnsupportedError);
  net.lstm_squash_output = false;
  CHECK_NOTHROW(evaluate_limits(net, encode_one_hot("1", net.alphabet)));
}

TEST_CASE("lstm cell limits under clamped gates are integers in [-n, n]") {
  Rng rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    nets::NetworkSpec net;
    net.arch = nets::Arch::Lstm;
    net.alphabet = lang::Alphabet::binary();
    net.hidden = 2;
    auto bipolar = [&](int rows) {
      Tensor t(rows, 2);
      for (double& v : t.v) v = rng.uniform_int(0, 1) ? 1.0 : -1.0;
      return t;
    };
    for (const char* n : {"Wf", "Wi", "Wo", "Wc"}) net.weights[n] = bipolar(2);
    for (const char* n : {"Uf", "Ui", "Uo", "Uc"}) net.weights[n] = Tensor(2, 2);
    for (const char* n : {"bf", "bi", "bo", "bc"}) net.weights[n] = Tensor(2, 1);
    net.weights["Wa"] = bipolar(1);
    net.weights["ba"] = Tensor(1, 1, 0.5);

    const int n_len = 6;
    for (int idx = 0; idx < 10; ++idx) {
      std::string s;
      for (int i = 0; i < n_len; ++i) s.push_back(rng.uniform_int(0, 1) ? '1' : '0');
      const LimitTrace tr = evaluate_limits(net, encode_one_hot(s, net.alphabet));
      REQUIRE(tr.state_stable());
      for (const AsymVector& c : tr.c)
        for (const AsymScalar& v : c) {
          CHECK(denominator(v.value()) == 1);
          CHECK(v.value() <= n_len);
          CHECK(v.value() >= -n_len);
        }
    }
  }
}

TEST_CASE("find_scale") {
  const compile::DfaCompilation parity = compile::compile_dfa_to_srn(compile::parity_dfa());
  std::vector<std::string> strings;
  for (int n = 0; n <= 5; ++n) {
    const long long total = 1LL << n;
    for (long long i = 0; i < total; ++i) {
      std::string s(n, '0');
      for (int t = 0; t < n; ++t)
        if (i & (1LL << t)) s[t] = '1';
      strings.push_back(std::move(s));
    }
  }
  const ScaleReport rep = find_scale(parity.net, strings, 6);
  CHECK(rep.scale >= 1);
  CHECK(rep.rows.size() == strings.size());
  for (const auto& row : rep.rows) {
    const bool want = lang::dfa_accepts(compile::parity_dfa(), row.input);
    CHECK((row.p > 0.5) == want);
  }

  // a pre-scaled network already agrees at N = 1
  nets::NetworkSpec big = parity.net;
  for (auto& [name, t] : big.weights)
    for (double& v : t.v) v *= 1000.0;
  CHECK(find_scale(big, strings, 6).scale == 1);

  // unstable constructions are refused
  nets::NetworkSpec zero = parity.net;
  for (auto& [name, t] : zero.weights)
    for (double& v : t.v) v = 0.0;
  CHECK_THROWS_AS(find_scale(zero, strings, 6), EvalError);

  // strings longer than the bound are a config error
  CHECK_THROWS_AS(find_scale(parity.net, {"010101"}, 3), ConfigError);
}

TEST_CASE("check_convergence") {
  const compile::DfaCompilation parity = compile::compile_dfa_to_srn(compile::parity_dfa());
  const ConvergenceReport on =
      check_convergence(parity.net, encode_one_hot("11", parity.net.alphabet));
  CHECK(on.verdict == ConvergenceVerdict::ToOne);
  const ConvergenceReport off =
      check_convergence(parity.net, encode_one_hot("1", parity.net.alphabet));
  CHECK(off.verdict == ConvergenceVerdict::ToZero);

  nets::NetworkSpec zero = parity.net;
  for (auto& [name, t] : zero.weights)
    for (double& v : t.v) v = 0.0;
  const ConvergenceReport flat =
      check_convergence(zero, encode_one_hot("11", zero.alphabet));
  CHECK(flat.verdict == ConvergenceVerdict::OscillatingOrFlat);
  for (const auto& pt : flat.points) CHECK(pt.p == doctest::Approx(0.5));
}

TEST_CASE("counter cell trace converges to the count") {
  const nets::NetworkSpec plus = compile::counter_cell_spec(compile::counter_params().plus);
  const lang::SentenceMatrix X = encode_one_hot("111", plus.alphabet);
  for (double N : {16.0, 32.0, 64.0}) {
    const nets::HiddenTrace tr = nets::acceptor_forward(plus, X, N);
    CHECK(std::abs(tr.h.back()[0] - 3.0) < 1e-3);
  }
}

TEST_CASE("symbolic and numeric verdicts agree on compiled networks") {
  const compile::DfaCompilation gru = compile::compile_dfa_to_gru(compile::contains_ab_dfa());
  for (const std::string& s : {"", "a", "b", "ab", "ba", "aab", "abba", "bbbb", "aaab"}) {
    const AsymDecision d = asym_accept(gru.net, s);
    REQUIRE(d.outcome != Outcome::Unstable);
    const ConvergenceReport rep =
        check_convergence(gru.net, encode_one_hot(s, gru.net.alphabet));
    if (d.outcome == Outcome::Accept)
      CHECK(rep.verdict == ConvergenceVerdict::ToOne);
    else
      CHECK(rep.verdict == ConvergenceVerdict::ToZero);
  }
}
