// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "na/compile.hpp"
#include "na/rng.hpp"
#include "na/statecomp.hpp"

using namespace na;
using namespace na::statecomp;

namespace {

nets::NetworkSpec random_net(nets::Arch arch, int hidden, std::uint64_t seed) {
  nets::NetworkSpec net;
  net.arch = arch;
  net.alphabet = lang::Alphabet::binary();
  net.hidden = hidden;
  Rng rng(seed);
  auto tensor = [&](int r, int c) {
    Tensor t(r, c);
    for (double& v : t.v) v = rng.uniform(-1.0, 1.0);
    return t;
  };
  auto gate = [&](const char* w, const char* u, const char* b) {
    net.weights[w] = tensor(hidden, 2);
    net.weights[u] = tensor(hidden, hidden);
    net.weights[b] = tensor(hidden, 1);
  };
  if (arch == nets::Arch::Srn) {
    gate("W", "U", "b");
  } else if (arch == nets::Arch::Gru) {
    gate("Wz", "Uz", "bz");
    gate("Wr", "Ur", "br");
    gate("Wu", "Uu", "bu");
  }
  net.weights["Wa"] = tensor(1, hidden);
  net.weights["ba"] = tensor(1, 1);
  return net;
}

}  // namespace

TEST_CASE("counter cell configuration sets") {
  const nets::NetworkSpec plus = compile::counter_cell_spec(compile::counter_params().plus);
  const ConfigSet cs = config_set(plus, Selector::Hidden, 4);
  CHECK(cs.count() == 5);
  std::set<std::vector<asym::AsymScalar>> want;
  for (int l = 0; l <= 4; ++l) want.insert({asym::AsymScalar(Rat(l))});
  CHECK(cs.values == want);
  CHECK(cs.unstable_count == 0);

  const nets::NetworkSpec id = compile::counter_cell_spec(compile::counter_params().identity);
  const ConfigSet cs_id = config_set(id, Selector::Hidden, 4);
  CHECK(cs_id.count() == 2);
}

TEST_CASE("identity attention encoder realizes all value-matrix configurations") {
  const nets::NetworkSpec net = compile::attention_identity_encoder();
  const ConfigSet cs = config_set(net, Selector::Values, 3);
  CHECK(cs.count() == 8);
}

TEST_CASE("unique-maximum keys keep the summary in a fixed finite set") {
  const nets::NetworkSpec net = compile::attention_last_value_encoder();
  for (int n = 1; n <= 6; ++n) {
    const ConfigSet cs = config_set(net, Selector::Summary, n);
    CHECK(cs.count() == 2);  // the summary is exactly the last value vector
    CHECK(cs.unstable_count == 0);
  }
}

TEST_CASE("universal bound: config sets never exceed |alphabet|^n") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const nets::NetworkSpec net = random_net(nets::Arch::Srn, 2, rng.next_u64());
    for (int n = 1; n <= 6; ++n) {
      const ConfigSet cs = config_set(net, Selector::Hidden, n);
      CHECK(cs.count() + cs.unstable_count <= (1LL << n));
      CHECK(cs.count() <= 4);  // 2^k
    }
  }
}

TEST_CASE("gru hidden limits lie in {-1,0,1} per coordinate") {
  Rng rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    const nets::NetworkSpec net = random_net(nets::Arch::Gru, 2, rng.next_u64());
    for (int n = 1; n <= 6; ++n) {
      const ConfigSet cs = config_set(net, Selector::Hidden, n);
      CHECK(cs.count() <= 9);  // 3^k
      for (const auto& vec : cs.values)
        for (const auto& v : vec) {
          const Rat r = v.value();
          CHECK((r == -1 || r == 0 || r == 1));
        }
    }
  }
}

TEST_CASE("lstm per-coordinate cell sets grow by at most two per step") {
  Rng rng(29);
  for (int trial = 0; trial < 3; ++trial) {
    nets::NetworkSpec net;
    net.arch = nets::Arch::Lstm;
    net.alphabet = lang::Alphabet::binary();
    net.hidden = 1;
    auto bipolar = [&](int rows, int cols) {
      Tensor t(rows, cols);
      for (double& v : t.v) v = rng.uniform_int(0, 1) ? 1.0 : -1.0;
      return t;
    };
    for (const char* n : {"Wf", "Wi", "Wo", "Wc"}) net.weights[n] = bipolar(1, 2);
    for (const char* n : {"Uf", "Ui", "Uo", "Uc"}) net.weights[n] = Tensor(1, 1);
    for (const char* n : {"bf", "bi", "bo", "bc"}) net.weights[n] = Tensor(1, 1);
    net.weights["Wa"] = Tensor(1, 1, 1.0);
    net.weights["ba"] = Tensor(1, 1, 0.5);

    const asym::LimitEvaluator ev(net);
    // per-step configuration sets of the cell coordinate over all inputs
    std::vector<std::set<Rat>> sets(13);
    const int n_len = 12;
    for (long long idx = 0; idx < (1LL << n_len); ++idx) {
      lang::SentenceMatrix X;
      X.width = 2;
      X.rows.assign(n_len, 0);
      for (int t = 0; t < n_len; ++t) X.rows[t] = (idx >> t) & 1;
      const asym::LimitTrace tr = ev.evaluate(X);
      REQUIRE(tr.state_stable());
      for (int t = 0; t < n_len; ++t) sets[t + 1].insert(tr.c[t][0].value());
    }
    sets[0].insert(Rat(0));
    for (int t = 1; t <= n_len; ++t)
      CHECK(sets[t].size() <= sets[t - 1].size() + 2);
  }
}

TEST_CASE("growth classification") {
  using P = std::vector<std::pair<int, long long>>;
  P constant;
  for (int n = 1; n <= 8; ++n) constant.emplace_back(n, 4);
  CHECK(classify_growth(constant) == GrowthClass::Constant);

  P linear;
  for (int n = 1; n <= 10; ++n) linear.emplace_back(n, n + 1);
  CHECK(classify_growth(linear) == GrowthClass::Linear);

  P expo;
  for (int n = 1; n <= 10; ++n) expo.emplace_back(n, 1LL << n);
  CHECK(classify_growth(expo) == GrowthClass::Exponential);

  P quad;
  for (int n = 1; n <= 10; ++n) quad.emplace_back(n, static_cast<long long>(n) * n);
  CHECK(classify_growth(quad) == GrowthClass::Quadratic);

  P weird;
  for (int n = 1; n <= 10; ++n) weird.emplace_back(n, n % 3 + 1);
  CHECK(classify_growth(weird) == GrowthClass::Inconclusive);

  CHECK_THROWS_AS(classify_growth(P{{1, 1}, {2, 2}, {3, 3}}), ConfigError);
}

TEST_CASE("complexity curves for the bundled constructions") {
  const nets::NetworkSpec plus = compile::counter_cell_spec(compile::counter_params().plus);
  const ComplexityCurve counter = complexity_curve(plus, Selector::Hidden, 1, 10);
  for (const auto& [n, count] : counter.points) CHECK(count == n + 1);
  CHECK(counter.fitted == GrowthClass::Linear);

  Rng rng(3);
  const nets::NetworkSpec srn = random_net(nets::Arch::Srn, 2, rng.next_u64());
  const ComplexityCurve flat = complexity_curve(srn, Selector::Hidden, 1, 8);
  for (const auto& [n, count] : flat.points) CHECK(count <= 4);
  CHECK(flat.fitted == GrowthClass::Constant);

  const nets::NetworkSpec ident = compile::attention_identity_encoder();
  const ComplexityCurve expo = complexity_curve(ident, Selector::Values, 1, 7);
  for (const auto& [n, count] : expo.points) CHECK(count == (1LL << n));
  CHECK(expo.fitted == GrowthClass::Exponential);
}

TEST_CASE("budget and selector errors") {
  const nets::NetworkSpec plus = compile::counter_cell_spec(compile::counter_params().plus);
  EnumOptions opts;
  opts.budget = 8;
  CHECK_THROWS_AS(config_set(plus, Selector::Hidden, 4, opts), BudgetError);
  CHECK_THROWS_AS(config_set(plus, Selector::Cell, 3), ConfigError);
  CHECK_THROWS_AS(config_set(plus, Selector::Values, 3), ConfigError);
  const nets::NetworkSpec attn = compile::attention_counting_encoder();
  CHECK_THROWS_AS(config_set(attn, Selector::Hidden, 3), ConfigError);
  CHECK_THROWS_AS(selector_from_name("x"), ConfigError);
}

TEST_CASE("enumeration results do not depend on the number of jobs") {
  const nets::NetworkSpec net = compile::attention_counting_encoder();
  EnumOptions serial, parallel;
  parallel.jobs = 4;
  for (int n = 3; n <= 6; ++n) {
    const ConfigSet a = config_set(net, Selector::Summary, n, serial);
    const ConfigSet b = config_set(net, Selector::Summary, n, parallel);
    CHECK(a.values == b.values);
    CHECK(a.unstable_count == b.unstable_count);
  }
}
