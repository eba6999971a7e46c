// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>

#include "na/asym.hpp"
#include "na/compile.hpp"

using namespace na;
using namespace na::compile;
using lang::encode_one_hot;

namespace {

std::vector<std::string> strings_up_to(const lang::Alphabet& a, int lo, int hi) {
  std::vector<std::string> out;
  for (int n = lo; n <= hi; ++n) {
    long long total = 1;
    for (int i = 0; i < n; ++i) total *= a.size();
    for (long long idx = 0; idx < total; ++idx) {
      std::string s(n, a.symbol(0));
      long long v = idx;
      for (int t = 0; t < n; ++t) {
        s[t] = a.symbol(static_cast<int>(v % a.size()));
        v /= a.size();
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

void check_dfa_agreement(const DfaCompilation& comp, const lang::Dfa& dfa, int max_len) {
  const asym::LimitEvaluator ev(comp.net);
  for (const std::string& s : strings_up_to(dfa.alphabet, 0, max_len)) {
    const asym::LimitTrace tr = ev.evaluate(encode_one_hot(s, dfa.alphabet));
    REQUIRE_MESSAGE(tr.decision_stable(), "unstable on '", s, "': ", tr.state_witness);
    const bool got = tr.p == asym::AsymScalar(Rat(1));
    CHECK_MESSAGE(got == lang::dfa_accepts(dfa, s), "disagrees on '", s, "'");
  }
}

}  // namespace

TEST_CASE("dfa to srn: exhaustive agreement with the oracle") {
  const lang::Dfa dfas[] = {parity_dfa(), astar_b_astar_dfa(), contains_ab_dfa()};
  for (const lang::Dfa& dfa : dfas) {
    const DfaCompilation comp = compile_dfa_to_srn(dfa);
    CHECK(static_cast<int>(comp.unit_map.size()) ==
          dfa.num_states * dfa.alphabet.size() + 1);
    CHECK(comp.net.hidden == dfa.num_states * dfa.alphabet.size() + 1);
    CHECK(comp.margin > 0);
    check_dfa_agreement(comp, dfa, 6);
  }
}

TEST_CASE("dfa to gru: exhaustive agreement with the oracle") {
  const lang::Dfa dfas[] = {parity_dfa(), astar_b_astar_dfa(), contains_ab_dfa()};
  for (const lang::Dfa& dfa : dfas) {
    const DfaCompilation comp = compile_dfa_to_gru(dfa);
    CHECK(comp.net.hidden == dfa.num_states * dfa.alphabet.size() + 1);
    CHECK(comp.margin > 0);
    check_dfa_agreement(comp, dfa, 6);
  }
}

TEST_CASE("gru compilation forces the gates") {
  const DfaCompilation comp = compile_dfa_to_gru(parity_dfa());
  for (double v : comp.net.tensor("bz").v) CHECK(v == -2.0);
  for (double v : comp.net.tensor("br").v) CHECK(v == 2.0);
}

TEST_CASE("single-state always-accept dfa compiles to an accept-all network") {
  lang::Dfa d;
  d.alphabet = lang::Alphabet::binary();
  d.num_states = 1;
  d.start = 0;
  d.accepting = {0};
  d.delta = {0, 0};
  d.validate();
  const DfaCompilation comp = compile_dfa_to_srn(d);
  CHECK(comp.net.hidden == 3);  // 1*2 + 1
  for (const std::string& s : strings_up_to(d.alphabet, 0, 5))
    CHECK(asym::asym_accept(comp.net, s).outcome == asym::Outcome::Accept);
}

TEST_CASE("sl to cnn: exhaustive agreement with the oracle") {
  const lang::SlGrammar g = no_aa_grammar();
  const CnnCompilation comp = compile_sl_to_cnn(g);
  CHECK(comp.invalid_count == 5);  // grams containing "aa"
  CHECK(static_cast<int>(comp.filter_map.size()) == comp.invalid_count);
  CHECK(comp.net.hidden == comp.invalid_count);
  CHECK(comp.margin > 0);
  const asym::LimitEvaluator ev(comp.net);
  for (const std::string& s : strings_up_to(g.alphabet, 1, 7)) {
    const asym::LimitTrace tr = ev.evaluate(encode_one_hot(s, g.alphabet));
    REQUIRE(tr.decision_stable());
    CHECK((tr.p == asym::AsymScalar(Rat(1))) == lang::sl_accepts(g, s));
  }
}

TEST_CASE("sl to cnn: all-allowed and all-forbidden grammars") {
  lang::SlGrammar all;
  all.k = 3;
  all.alphabet = lang::Alphabet::ab();
  for (const std::string& gram : legal_grams(all.alphabet, 3)) all.allowed.insert(gram);
  const CnnCompilation comp_all = compile_sl_to_cnn(all);
  CHECK(comp_all.invalid_count == 0);
  for (const std::string& s : strings_up_to(all.alphabet, 0, 5))
    CHECK(asym::asym_accept(comp_all.net, s).outcome == asym::Outcome::Accept);

  lang::SlGrammar none;
  none.k = 3;
  none.alphabet = lang::Alphabet::ab();
  const CnnCompilation comp_none = compile_sl_to_cnn(none);
  CHECK(comp_none.invalid_count == static_cast<int>(legal_grams(none.alphabet, 3).size()));
  for (const std::string& s : strings_up_to(none.alphabet, 1, 5))
    CHECK(asym::asym_accept(comp_none.net, s).outcome == asym::Outcome::Reject);
}

TEST_CASE("sl to cnn rejects even gram widths") {
  lang::SlGrammar g;
  g.k = 4;
  g.alphabet = lang::Alphabet::ab();
  for (const std::string& gram : legal_grams(g.alphabet, 4)) g.allowed.insert(gram);
  CHECK_THROWS_AS(compile_sl_to_cnn(g), UnsupportedError);
}

TEST_CASE("legal gram space") {
  // width 3 over {a,b}: 3 placements of one symbol, 2 of two, 1 of three
  const std::vector<std::string> grams = legal_grams(lang::Alphabet::ab(), 3);
  CHECK(grams.size() == 3 * 2 + 2 * 4 + 1 * 8);
  for (const std::string& g : grams) {
    CHECK(g.size() == 3);
    CHECK(g != "###");
  }
  CHECK(std::find(grams.begin(), grams.end(), "#a#") != grams.end());
  CHECK(std::find(grams.begin(), grams.end(), "aba") != grams.end());
}

TEST_CASE("cnn counterexample pair") {
  for (int k : {1, 2}) {
    const auto [s1, s2] = cnn_counterexample_pair(k);
    CHECK(std::count(s1.begin(), s1.end(), 'b') == 1);
    CHECK(std::count(s2.begin(), s2.end(), 'b') == 2);
    // the second b sits farther than the window reach
    const std::size_t b1 = s2.find('b');
    const std::size_t b2 = s2.find('b', b1 + 1);
    CHECK(static_cast<int>(b2 - b1) > 2 * k + 1);
    // deleting the second b of s2 recovers s1
    std::string dropped = s2;
    dropped.erase(b2, 1);
    CHECK(dropped == s1);
  }
  // spec'd separations: 5 for k=1, 7 (> 5) for k=2
  {
    const auto [s1, s2] = cnn_counterexample_pair(1);
    const std::size_t b1 = s2.find('b');
    CHECK(s2.find('b', b1 + 1) - b1 == 5);
  }
  {
    const auto [s1, s2] = cnn_counterexample_pair(2);
    const std::size_t b1 = s2.find('b');
    CHECK(s2.find('b', b1 + 1) - b1 > 5);
  }
}

TEST_CASE("counterexample pair pools identically through the bundled cnns") {
  struct Bundle {
    int k;
    CnnCompilation comp;
  };
  const Bundle bundles[] = {{1, compile_sl_to_cnn(no_aa_grammar())},
                            {2, compile_sl_to_cnn(no_bb_grammar_w5())}};
  for (const Bundle& b : bundles) {
    const auto [s1, s2] = cnn_counterexample_pair(b.k);
    const asym::LimitEvaluator ev(b.comp.net);
    const asym::LimitTrace t1 = ev.evaluate(encode_one_hot(s1, b.comp.net.alphabet));
    const asym::LimitTrace t2 = ev.evaluate(encode_one_hot(s2, b.comp.net.alphabet));
    CHECK(t1.pooled == t2.pooled);
    CHECK(t1.p == t2.p);
  }
}

TEST_CASE("counter parameters and scaled evaluation") {
  const CounterParams p = counter_params();
  CHECK(p.plus[0] == 1.0);
  CHECK(p.plus[1] == 1.0);
  CHECK(p.identity[0] == -1.0);
  CHECK(p.identity[1] == 1.0);

  // one-hot lift of theta+: the hidden value tracks the running count
  const nets::NetworkSpec plus = counter_cell_spec(p.plus);
  const nets::HiddenTrace tr =
      nets::acceptor_forward(plus, encode_one_hot("110", plus.alphabet), 50.0);
  CHECK(tr.h.back()[0] == doctest::Approx(2.0).epsilon(1e-6));

  // theta-id: the hidden value reduces to the current bit
  const nets::NetworkSpec id = counter_cell_spec(p.identity);
  const asym::LimitTrace lt = asym::evaluate_limits(id, encode_one_hot("10", id.alphabet));
  CHECK(lt.h.back()[0] == asym::AsymScalar(Rat(0)));
  CHECK(lt.h.front()[0] == asym::AsymScalar(Rat(1)));
}

TEST_CASE("attention counting encoder") {
  const nets::NetworkSpec net = attention_counting_encoder();
  auto summary = [&](const std::string& s) {
    return asym::evaluate_limits(net, encode_one_hot(s, net.alphabet)).h.back()[0];
  };
  CHECK(summary("1011") == asym::AsymScalar(Rat(3) / 4));
  CHECK(summary("0000") == asym::AsymScalar(Rat(0)));
  CHECK(summary("1111") == asym::AsymScalar(Rat(1)));
}

TEST_CASE("every compiled fixture has positive margin and no zero pre-activations") {
  std::vector<Rat> margins;
  margins.push_back(compile_dfa_to_srn(parity_dfa()).margin);
  margins.push_back(compile_dfa_to_srn(astar_b_astar_dfa()).margin);
  margins.push_back(compile_dfa_to_srn(contains_ab_dfa()).margin);
  margins.push_back(compile_dfa_to_gru(parity_dfa()).margin);
  margins.push_back(compile_sl_to_cnn(no_aa_grammar()).margin);
  margins.push_back(compile_sl_to_cnn(no_bb_grammar_w5()).margin);
  for (const Rat& m : margins) CHECK(m > 0);
}
