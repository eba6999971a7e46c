// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "na/lang.hpp"
#include "na/nets.hpp"
#include "na/rational.hpp"

namespace na::compile {

// A DFA realized as exact network weights. Hidden units are the predicates
// d(i, a) = "previous state was i and the current symbol is a", one per
// (state, symbol) pair, plus a flag unit that switches on after the first
// step. The margin is the smallest |pre-activation| over a probe set and
// certifies that the construction is stable.
struct DfaCompilation {
  nets::NetworkSpec net;
  std::vector<std::string> unit_map;  // unit index -> "d(i,a)" / "flag"
  Rat margin;
};

DfaCompilation compile_dfa_to_srn(const lang::Dfa& dfa);
DfaCompilation compile_dfa_to_gru(const lang::Dfa& dfa);

// A strictly (2k+1)-local grammar as a window-k CNN: one filter per
// forbidden gram, each coming out to +1 exactly when its gram occurs, with
// head weights -1 and bias 1/2 - K.
struct CnnCompilation {
  nets::NetworkSpec net;
  std::vector<std::string> filter_map;  // filter index -> forbidden gram
  int invalid_count = 0;
  Rat margin;
};

CnnCompilation compile_sl_to_cnn(const lang::SlGrammar& g);

// All grams of width w over alphabet + '#' in which '#' appears only as
// contiguous prefix/suffix padding around at least one real symbol.
std::vector<std::string> legal_grams(const lang::Alphabet& alphabet, int width);

// Witness pair for the a*ba* impossibility argument: s1 has one b, s2 has a
// second b farther than the window reach, and both produce identical pooled
// vectors under any window-k CNN evaluated in the limit.
std::pair<std::string, std::string> cnn_counterexample_pair(int k);

struct CounterParams {
  std::array<double, 2> plus;      // <1, 1>: running count
  std::array<double, 2> identity;  // <-1, 1>: reduces to the current bit
};
CounterParams counter_params();

// Counter cell over one-hot binary input. The forget gate reads the
// constant one-hot mass (so its sign is the sign of theta1 on every
// symbol) and the input gate reads the bit bipolar; this keeps every gate
// pre-activation away from zero, which the scalar form sigma(theta*x)
// cannot do at x = 0.
nets::NetworkSpec counter_cell_spec(const std::array<double, 2>& theta);
// The literal scalar lift (gates read the '1' channel only); at x = 0 the
// gate pre-activation is exactly zero and the limit evaluator flags it.
nets::NetworkSpec counter_cell_spec_literal(const std::array<double, 2>& theta);

// Attention encoder with v_t = [x_t = 1] and constant keys: the summary
// is l/n where l counts the ones.
nets::NetworkSpec attention_counting_encoder();
// Attention encoder with v_t = one-hot(x_t): the stacked value matrix
// ranges over all |alphabet|^n configurations.
nets::NetworkSpec attention_identity_encoder();
// Step-counter keys give every prefix a unique score maximum at its last
// position, so the summary stays in a fixed finite set.
nets::NetworkSpec attention_last_value_encoder();

// Bundled fixture automata and grammars.
lang::Dfa parity_dfa();           // even number of '1's over {0,1}
lang::Dfa astar_b_astar_dfa();    // a*ba* over {a,b}, with reject sink
lang::Dfa contains_ab_dfa();      // contains the substring "ab", accepting sink
lang::SlGrammar no_aa_grammar();  // width 3 over {a,b}: forbids any gram containing "aa"
lang::SlGrammar no_bb_grammar_w5();  // width 5 over {a,b}: forbids any gram containing "bb"

}  // namespace na::compile
