// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "na/compile.hpp"
#include "na/nets.hpp"
#include "na/rng.hpp"

using namespace na;
using namespace na::nets;
using lang::Alphabet;
using lang::SentenceMatrix;
using lang::encode_one_hot;

namespace {

NetworkSpec random_srn(int hidden, std::uint64_t seed) {
  NetworkSpec net;
  net.arch = Arch::Srn;
  net.alphabet = Alphabet::binary();
  net.hidden = hidden;
  Rng rng(seed);
  auto tensor = [&](int r, int c) {
    Tensor t(r, c);
    for (double& v : t.v) v = rng.uniform(-1.0, 1.0);
    return t;
  };
  net.weights["W"] = tensor(hidden, 2);
  net.weights["U"] = tensor(hidden, hidden);
  net.weights["b"] = tensor(hidden, 1);
  net.weights["Wa"] = tensor(1, hidden);
  net.weights["ba"] = tensor(1, 1);
  return net;
}

}  // namespace

TEST_CASE("srn step") {
  // zero weights: h = tanh(0) = 0
  Tensor W(1, 2), U(1, 1), b(1, 1);
  CHECK(srn_step({1, 0}, {0}, W, U, b) == std::vector<double>{0});

  // 1 unit, W = [1, 0]: h = tanh(1)
  W.at(0, 0) = 1;
  const double h = srn_step({1, 0}, {0}, W, U, b)[0];
  CHECK(h == doctest::Approx(0.7616).epsilon(1e-3));

  // scaling by N = 100 saturates
  CHECK(srn_step({1, 0}, {0}, W, U, b, 100.0)[0] == doctest::Approx(1.0).epsilon(1e-6));

  CHECK_THROWS_AS(srn_step({1, 0, 0}, {0}, W, U, b), ShapeError);
}

TEST_CASE("srn/gru outputs stay strictly inside (-1,1)") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const NetworkSpec net = random_srn(3, rng.next_u64());
    std::string s;
    for (int i = 0; i < 6; ++i) s.push_back(rng.uniform_int(0, 1) ? '1' : '0');
    const HiddenTrace tr = acceptor_forward(net, encode_one_hot(s, net.alphabet), 3.0);
    for (const auto& h : tr.h)
      for (double v : h) {
        CHECK(v > -1.0);
        CHECK(v < 1.0);
      }
    CHECK(tr.p > 0.0);
    CHECK(tr.p < 1.0);
  }
}

TEST_CASE("gru step gating") {
  NetworkSpec net;
  net.arch = Arch::Gru;
  net.alphabet = Alphabet::binary();
  net.hidden = 1;
  for (const char* n : {"Wz", "Wr", "Wu"}) net.weights[n] = Tensor(1, 2);
  for (const char* n : {"Uz", "Ur", "Uu"}) net.weights[n] = Tensor(1, 1);
  for (const char* n : {"bz", "br", "bu"}) net.weights[n] = Tensor(1, 1);
  net.weights["Wa"] = Tensor(1, 1);
  net.weights["ba"] = Tensor(1, 1);

  // zero weights, h_prev = 0: z = 1/2, u = 0, h = 0
  CHECK(gru_step({1, 0}, {0}, net) == std::vector<double>{0});

  // z forced to 1 keeps the previous state
  net.weights["bz"].at(0, 0) = 30.0;
  CHECK(gru_step({1, 0}, {0.73}, net)[0] == doctest::Approx(0.73).epsilon(1e-9));

  // z forced to 0 rewrites with the candidate
  net.weights["bz"].at(0, 0) = -30.0;
  net.weights["bu"].at(0, 0) = 2.0;
  CHECK(gru_step({1, 0}, {0.73}, net)[0] == doctest::Approx(std::tanh(2.0)).epsilon(1e-6));
}

TEST_CASE("lstm step") {
  NetworkSpec net;
  net.arch = Arch::Lstm;
  net.alphabet = Alphabet::binary();
  net.hidden = 1;
  for (const char* n : {"Wf", "Wi", "Wo", "Wc"}) net.weights[n] = Tensor(1, 2);
  for (const char* n : {"Uf", "Ui", "Uo", "Uc"}) net.weights[n] = Tensor(1, 1);
  for (const char* n : {"bf", "bi", "bo", "bc"}) net.weights[n] = Tensor(1, 1);
  net.weights["Wa"] = Tensor(1, 1);
  net.weights["ba"] = Tensor(1, 1);

  // zero weights, c_prev = 0: c = 1/2*0 + 1/2*0 = 0
  LstmState st{{0}, {0}};
  CHECK(lstm_step({1, 0}, st, net).c == std::vector<double>{0});

  // saturated f = 1, i = 0: the cell is preserved
  net.weights["bf"].at(0, 0) = 30.0;
  net.weights["bi"].at(0, 0) = -30.0;
  st.c = {1.25};
  CHECK(lstm_step({1, 0}, st, net).c[0] == doctest::Approx(1.25).epsilon(1e-9));

  // saturated f = 1, i = 1, candidate 1: the cell increments
  net.weights["bi"].at(0, 0) = 30.0;
  net.weights["bc"].at(0, 0) = 30.0;
  CHECK(lstm_step({1, 0}, st, net).c[0] == doctest::Approx(2.25).epsilon(1e-6));
}

TEST_CASE("lstm with clamped gates changes each cell coordinate as a*c + b") {
  // gates in {0,1} and candidate in {-1,1}: after any step the new cell
  // value is a*c + b with a in {0,1} and b in {-1,0,1}
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    NetworkSpec net;
    net.arch = Arch::Lstm;
    net.alphabet = Alphabet::binary();
    net.hidden = 2;
    auto saturated = [&](int rows) {
      Tensor t(rows, 2);
      for (double& v : t.v) v = rng.uniform_int(0, 1) ? 30.0 : -30.0;
      return t;
    };
    for (const char* n : {"Wf", "Wi", "Wo", "Wc"}) net.weights[n] = saturated(2);
    for (const char* n : {"Uf", "Ui", "Uo", "Uc"}) net.weights[n] = Tensor(2, 2);
    for (const char* n : {"bf", "bi", "bo", "bc"}) net.weights[n] = Tensor(2, 1);
    net.weights["Wa"] = Tensor(1, 2);
    net.weights["ba"] = Tensor(1, 1);

    LstmState st{{0, 0}, {0, 0}};
    std::vector<double> c = {rng.uniform_int(-3, 3) * 1.0, rng.uniform_int(-3, 3) * 1.0};
    st.c = c;
    const std::vector<double> x = rng.uniform_int(0, 1) ? std::vector<double>{0, 1}
                                                        : std::vector<double>{1, 0};
    const LstmState next = lstm_step(x, st, net);
    for (int j = 0; j < 2; ++j) {
      bool matched = false;
      for (double a : {0.0, 1.0})
        for (double b : {-1.0, 0.0, 1.0})
          if (std::abs(next.c[j] - (a * c[j] + b)) < 1e-9) matched = true;
      CHECK(matched);
    }
  }
}

TEST_CASE("counter cell step, literal scalar form") {
  const auto [theta_plus, theta_id] = compile::counter_params();
  CHECK(theta_plus == std::array<double, 2>{1.0, 1.0});
  CHECK(theta_id == std::array<double, 2>{-1.0, 1.0});

  // scaled theta+, input 1,0,1: h converges to 2
  double h = 0.0;
  for (int bit : {1, 0, 1}) h = counter_cell_step(bit, h, theta_plus, 50.0);
  CHECK(h == doctest::Approx(2.0).epsilon(1e-6));

  // all-zero input keeps sigma(0) = 1/2 in play at every scale
  h = 0.0;
  h = counter_cell_step(0, h, theta_plus, 50.0);
  CHECK(h == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("cnn forward") {
  NetworkSpec net;
  net.arch = Arch::Cnn;
  net.alphabet = Alphabet::ab();
  net.hidden = 1;
  net.window = 0;  // single-position window
  net.weights["Wh"] = Tensor(1, 2);
  net.weights["bh"] = Tensor(1, 1);
  net.weights["Wa"] = Tensor(1, 1);
  net.weights["ba"] = Tensor(1, 1);

  // zero filters: H = 0, pooled = 0, p = sigmoid(ba)
  const CnnOut zero = cnn_forward(encode_one_hot("ab", net.alphabet), net);
  CHECK(zero.pooled == std::vector<double>{0});
  CHECK(zero.p == doctest::Approx(0.5));

  // a filter matching 'b': pooled saturates to 1 iff the input contains b
  net.weights["Wh"].at(0, 1) = 1.0;
  CHECK(cnn_forward(encode_one_hot("ab", net.alphabet), net, 50.0).pooled[0] ==
        doctest::Approx(1.0).epsilon(1e-6));
  CHECK(cnn_forward(encode_one_hot("aa", net.alphabet), net, 50.0).pooled[0] ==
        doctest::Approx(0.0).epsilon(1e-6));

  // empty input pools to -1
  const CnnOut empty = cnn_forward(encode_one_hot("", net.alphabet), net, 50.0);
  CHECK(empty.pooled == std::vector<double>{-1.0});
}

TEST_CASE("compiled cnn drives invalid-pattern detectors to -1 on valid strings") {
  const compile::CnnCompilation comp = compile::compile_sl_to_cnn(compile::no_aa_grammar());
  const CnnOut out = cnn_forward(encode_one_hot("abab", comp.net.alphabet), comp.net, 64.0);
  for (double v : out.pooled) CHECK(v == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(out.p > 0.99);
}

TEST_CASE("attention") {
  // n = 1 returns the single value row exactly
  Tensor K1(1, 2, {3.0, -1.0});
  Tensor V1(1, 2, {0.25, 0.75});
  CHECK(attention({1.0, 2.0}, K1, V1) == std::vector<double>{0.25, 0.75});

  // q = 0 averages the rows
  Tensor K(2, 1, {1.0, -1.0});
  Tensor V(2, 1, {0.0, 1.0});
  CHECK(attention({0.0}, K, V)[0] == doctest::Approx(0.5));

  // a dominating score retrieves that row
  Tensor K3(3, 1, {0.0, 50.0, 0.0});
  Tensor V3(3, 1, {1.0, 2.0, 3.0});
  CHECK(attention({1.0}, K3, V3)[0] == doctest::Approx(2.0).epsilon(1e-9));

  CHECK_THROWS_AS(attention({1.0}, Tensor(0, 1), Tensor(0, 1)), EvalError);
}

TEST_CASE("attention output stays in the convex hull of the value rows") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 5));
    const int d = 1 + static_cast<int>(rng.uniform_int(0, 2));
    Tensor K(n, d), V(n, d);
    for (double& v : K.v) v = rng.uniform(-2, 2);
    for (double& v : V.v) v = rng.uniform(-2, 2);
    std::vector<double> q(d);
    for (double& v : q) v = rng.uniform(-2, 2);
    const std::vector<double> out = attention(q, K, V);
    for (int j = 0; j < d; ++j) {
      double lo = V.at(0, j), hi = V.at(0, j);
      for (int t = 0; t < n; ++t) {
        lo = std::min(lo, V.at(t, j));
        hi = std::max(hi, V.at(t, j));
      }
      CHECK(out[j] >= lo - 1e-12);
      CHECK(out[j] <= hi + 1e-12);
    }
  }
}

TEST_CASE("doubling weights never changes the attention argmax") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(0, 4));
    Tensor K(n, 2);
    for (double& v : K.v) v = rng.uniform(-2, 2);
    std::vector<double> q = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
    auto argmax = [&](double scale) {
      int best = 0;
      double best_v = -1e300;
      for (int t = 0; t < n; ++t) {
        const double s = scale * (q[0] * K.at(t, 0) + q[1] * K.at(t, 1));
        if (s > best_v) {
          best_v = s;
          best = t;
        }
      }
      return best;
    };
    CHECK(argmax(1.0) == argmax(2.0));
  }
}

TEST_CASE("acceptor forward") {
  // zero-weight SRN: p = sigmoid(ba)
  NetworkSpec net = random_srn(2, 1);
  for (auto& [name, t] : net.weights)
    for (double& v : t.v) v = 0.0;
  net.weights["ba"].at(0, 0) = 0.3;
  const HiddenTrace tr = acceptor_forward(net, encode_one_hot("0110", net.alphabet));
  CHECK(tr.p == doctest::Approx(1.0 / (1.0 + std::exp(-0.3))));
  CHECK(tr.h.size() == 4);

  // compiled parity SRN at N = 64
  const compile::DfaCompilation parity = compile::compile_dfa_to_srn(compile::parity_dfa());
  CHECK(acceptor_forward(parity.net, encode_one_hot("11", parity.net.alphabet), 64.0).p > 0.99);
  CHECK(acceptor_forward(parity.net, encode_one_hot("1", parity.net.alphabet), 64.0).p < 0.01);

  // width mismatch
  CHECK_THROWS_AS(acceptor_forward(net, encode_one_hot("ab", Alphabet::ab())), ShapeError);
}

TEST_CASE("checkpoint round trip is byte identical") {
  Rng rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    NetworkSpec net = random_srn(3, rng.next_u64());
    net.h0 = {rng.uniform(-1, 1), 0.0, rng.uniform(-1, 1)};
    std::stringstream first;
    net.to_checkpoint().save(first);
    std::stringstream reload(first.str());
    const NetworkSpec loaded = NetworkSpec::from_checkpoint(Checkpoint::load(reload));
    std::stringstream second;
    loaded.to_checkpoint().save(second);
    CHECK(first.str() == second.str());
    CHECK(loaded.weights.at("W") == net.weights.at("W"));
    CHECK(loaded.h0 == net.h0);
  }
}

TEST_CASE("checkpoint parse errors") {
  std::stringstream bad1("nope");
  CHECK_THROWS_AS(Checkpoint::load(bad1), ParseError);
  std::stringstream bad2("na-checkpoint 1\nkind srn\ntensor W 2 2\n1 2 3\n");
  CHECK_THROWS_AS(Checkpoint::load(bad2), ParseError);
  std::stringstream bad3("na-checkpoint 1\nkind srn\ntensor W 1 1\nxyz\nend\n");
  CHECK_THROWS_AS(Checkpoint::load(bad3), ParseError);
}

TEST_CASE("network validation catches shape mismatches") {
  NetworkSpec net = random_srn(2, 9);
  net.weights["U"] = Tensor(2, 3);
  CHECK_THROWS_AS(net.validate(), ShapeError);
  net.weights.erase("U");
  CHECK_THROWS_AS(net.validate(), ShapeError);
}
