// SPDX-License-Identifier: Apache-2.0
#include "na/compile.hpp"

#include <algorithm>

#include "na/asym.hpp"
#include "na/errors.hpp"

namespace na::compile {

namespace {

// Minimum |pre-activation| of a network over all strings of length <=
// probe_len (including the empty string).
Rat probe_margin(const nets::NetworkSpec& net, int probe_len) {
  const asym::LimitEvaluator evaluator(net);
  const int s = net.alphabet.size();
  Rat margin;
  bool have = false;
  for (int n = 0; n <= probe_len; ++n) {
    long long total = 1;
    for (int i = 0; i < n; ++i) total *= s;
    lang::SentenceMatrix X;
    X.width = s;
    X.rows.assign(n, 0);
    for (long long idx = 0; idx < total; ++idx) {
      long long v = idx;
      for (int t = 0; t < n; ++t) {
        X.rows[t] = static_cast<int>(v % s);
        v /= s;
      }
      const asym::LimitTrace tr = evaluator.evaluate(X);
      if (tr.has_min_abs_pre && (!have || tr.min_abs_pre < margin)) {
        margin = tr.min_abs_pre;
        have = true;
      }
    }
  }
  return have ? margin : Rat(0);
}

// Shared d-predicate layer: fills W (k x s), U (k x k), b (k) for the
// recurrence over +1/-1 truth values with all-zero initial state. Unit
// (i, a) fires iff the current symbol is a and some predecessor predicate
// of state i fired; the flag unit distinguishes the first step so that
// transitions out of the start state have a base case and nothing else
// fires spuriously at t = 1.
struct DfaLayer {
  Tensor W, U, b;
  std::vector<std::string> unit_map;
  int flag = 0;  // flag unit index
};

DfaLayer build_dfa_layer(const lang::Dfa& dfa) {
  const int S = dfa.alphabet.size();
  const int Q = dfa.num_states;
  const int k = Q * S + 1;
  DfaLayer L{Tensor(k, S), Tensor(k, k), Tensor(k, 1), {}, Q * S};
  L.unit_map.resize(k);
  const auto inverse = dfa.inverse_transitions();
  for (int i = 0; i < Q; ++i) {
    const int r = static_cast<int>(inverse[i].size());
    const bool is_start = (i == dfa.start);
    for (int a = 0; a < S; ++a) {
      const int unit = i * S + a;
      L.unit_map[unit] =
          "d(" + std::to_string(i) + "," + std::string(1, dfa.alphabet.symbol(a)) + ")";
      // Current-symbol term, predecessor disjunction, flag shift, bias.
      L.W.at(unit, a) = is_start ? 5.0 : 4.0;
      for (const auto& [j, beta] : inverse[i]) L.U.at(unit, j * S + beta) = 2.0;
      L.U.at(unit, L.flag) = is_start ? 2.0 * r - 4.0 : 2.0 * r;
      L.b.at(unit, 0) = is_start ? -3.0 : -6.0;
    }
  }
  L.unit_map[L.flag] = "flag";
  L.b.at(L.flag, 0) = 2.0;  // always rewritten to 1
  return L;
}

// Acceptance head: disjunction over the predicates that land in an
// accepting state, with the flag separating the empty string (where the
// verdict is just whether the start state accepts).
void build_dfa_head(const lang::Dfa& dfa, const DfaLayer& L, Tensor& Wa, Tensor& ba) {
  const int S = dfa.alphabet.size();
  const int k = dfa.num_states * S + 1;
  Wa = Tensor(1, k);
  ba = Tensor(1, 1);
  const auto inverse = dfa.inverse_transitions();
  int r_f = 0;
  for (int f : dfa.accepting)
    for (const auto& [j, beta] : inverse[f]) {
      Wa.at(0, j * S + beta) = 2.0;
      ++r_f;
    }
  const bool start_accepts = dfa.accepting.count(dfa.start) > 0;
  ba.at(0, 0) = start_accepts ? 2.0 : -2.0;
  Wa.at(0, L.flag) = 2.0 * r_f - 2.0 - ba.at(0, 0);
}

}  // namespace

DfaCompilation compile_dfa_to_srn(const lang::Dfa& dfa) {
  dfa.validate();
  DfaLayer L = build_dfa_layer(dfa);
  nets::NetworkSpec net;
  net.arch = nets::Arch::Srn;
  net.alphabet = dfa.alphabet;
  net.hidden = L.W.rows;
  net.weights["W"] = L.W;
  net.weights["U"] = L.U;
  net.weights["b"] = L.b;
  Tensor Wa, ba;
  build_dfa_head(dfa, L, Wa, ba);
  net.weights["Wa"] = Wa;
  net.weights["ba"] = ba;
  net.validate();
  return {net, L.unit_map, probe_margin(net, 5)};
}

DfaCompilation compile_dfa_to_gru(const lang::Dfa& dfa) {
  dfa.validate();
  DfaLayer L = build_dfa_layer(dfa);
  const int k = L.W.rows;
  const int S = dfa.alphabet.size();
  nets::NetworkSpec net;
  net.arch = nets::Arch::Gru;
  net.alphabet = dfa.alphabet;
  net.hidden = k;
  // Update gate forced to 0 (always rewrite), reset gate forced to 1, so
  // the candidate layer carries the same recurrence as the SRN.
  net.weights["Wz"] = Tensor(k, S);
  net.weights["Uz"] = Tensor(k, k);
  net.weights["bz"] = Tensor(k, 1, -2.0);
  net.weights["Wr"] = Tensor(k, S);
  net.weights["Ur"] = Tensor(k, k);
  net.weights["br"] = Tensor(k, 1, 2.0);
  net.weights["Wu"] = L.W;
  net.weights["Uu"] = L.U;
  net.weights["bu"] = L.b;
  Tensor Wa, ba;
  build_dfa_head(dfa, L, Wa, ba);
  net.weights["Wa"] = Wa;
  net.weights["ba"] = ba;
  net.validate();
  return {net, L.unit_map, probe_margin(net, 5)};
}

std::vector<std::string> legal_grams(const lang::Alphabet& alphabet, int width) {
  std::vector<std::string> out;
  const int S = alphabet.size();
  for (int lead = 0; lead < width; ++lead) {
    for (int tail = 0; lead + tail < width; ++tail) {
      const int core = width - lead - tail;
      // enumerate core symbols
      std::vector<int> idx(core, 0);
      while (true) {
        std::string g(lead, lang::kPad);
        for (int i = 0; i < core; ++i) g.push_back(alphabet.symbol(idx[i]));
        g.append(tail, lang::kPad);
        out.push_back(std::move(g));
        int pos = core - 1;
        while (pos >= 0 && idx[pos] == S - 1) idx[pos--] = 0;
        if (pos < 0) break;
        ++idx[pos];
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

CnnCompilation compile_sl_to_cnn(const lang::SlGrammar& g) {
  g.validate();
  if (g.k % 2 == 0)
    throw UnsupportedError("the CNN construction needs an odd gram width (2k+1)");
  if (g.alphabet.size() == 0) throw ConfigError("grammar alphabet is empty");
  const int w = g.k;
  const int k = (w - 1) / 2;
  const int S = g.alphabet.size();

  std::vector<std::string> forbidden;
  for (const std::string& gram : legal_grams(g.alphabet, w))
    if (g.allowed.count(gram) == 0) forbidden.push_back(gram);
  const int K = static_cast<int>(forbidden.size());

  nets::NetworkSpec net;
  net.arch = nets::Arch::Cnn;
  net.alphabet = g.alphabet;
  net.hidden = K;
  net.window = k;
  Tensor Wh(K, (2 * k + 1) * S), bh(K, 1), Wa(1, K), ba(1, 1);

  for (int f = 0; f < K; ++f) {
    const std::string& gram = forbidden[f];
    int lead = 0, tail = 0;
    while (gram[lead] == lang::kPad) ++lead;
    while (gram[w - 1 - tail] == lang::kPad) ++tail;
    const int core = w - lead - tail;

    // Place the gram template inside the window. Grams whose padding fits
    // in the window are matched as the full window; longer paddings are
    // anchored at the first (or last) string position, where the window
    // sees k padding slots.
    //   slot -> requirement: alphabet index, kRequirePad, or kDontCare
    constexpr int kDontCare = -1;
    constexpr int kRequirePad = -2;
    std::vector<int> slot(2 * k + 1, kDontCare);
    auto place = [&](int offset) {
      // gram position p occupies window slot offset + p
      for (int p = 0; p < w; ++p) {
        const int sl = offset + p;
        if (sl < 0 || sl > 2 * k) continue;
        slot[sl] = gram[p] == lang::kPad ? kRequirePad : g.alphabet.index(gram[p]);
      }
    };
    if (lead == 0 && tail == 0) {
      place(0);  // interior gram: full window
    } else if (lead > k) {
      // anchored at t = 1: window starts with exactly k pads, then the gram
      // core (and its + tail pads) from string position 1
      for (int sl = 0; sl < k; ++sl) slot[sl] = kRequirePad;
      for (int p = 0; p < core + tail; ++p) {
        const int sl = k + p;
        if (sl > 2 * k) break;
        slot[sl] = gram[lead + p] == lang::kPad ? kRequirePad : g.alphabet.index(gram[lead + p]);
      }
    } else if (tail > k) {
      // anchored at t = n
      for (int sl = k + 1; sl <= 2 * k; ++sl) slot[sl] = kRequirePad;
      for (int p = 0; p < lead + core; ++p) {
        const int sl = k - (lead + core) + 1 + p;
        if (sl < 0) continue;
        slot[sl] = gram[p] == lang::kPad ? kRequirePad : g.alphabet.index(gram[p]);
      }
    } else {
      place(0);  // both paddings fit: full window
    }

    int positives = 0;
    for (int sl = 0; sl <= 2 * k; ++sl) {
      if (slot[sl] >= 0) {
        Wh.at(f, sl * S + slot[sl]) = 2.0;
        ++positives;
      } else if (slot[sl] == kRequirePad) {
        for (int c = 0; c < S; ++c) Wh.at(f, sl * S + c) = -2.0;
      }
    }
    bh.at(f, 0) = 1.0 - 2.0 * positives;
    Wa.at(0, f) = -1.0;
  }
  ba.at(0, 0) = 0.5 - K;

  net.weights["Wh"] = std::move(Wh);
  net.weights["bh"] = std::move(bh);
  net.weights["Wa"] = std::move(Wa);
  net.weights["ba"] = std::move(ba);
  net.validate();
  CnnCompilation out;
  out.net = std::move(net);
  out.filter_map = std::move(forbidden);
  out.invalid_count = K;
  out.margin = probe_margin(out.net, 6);
  return out;
}

std::pair<std::string, std::string> cnn_counterexample_pair(int k) {
  if (k < 1) throw ConfigError("window size must be >= 1");
  // Runs of a long enough that every window pattern that can occur around
  // either b also occurs around the other, and a full all-a window exists
  // in both strings. Deleting the second b then leaves the window *set*
  // unchanged, so pooled maxima cannot tell the strings apart.
  const int g = 2 * k + 2;
  const std::string run(g, 'a');
  const std::string s2 = run + "b" + run + "b" + run;
  const std::string s1 = run + "b" + run + run;
  return {s1, s2};
}

CounterParams counter_params() { return {{1.0, 1.0}, {-1.0, 1.0}}; }

nets::NetworkSpec counter_cell_spec(const std::array<double, 2>& theta) {
  nets::NetworkSpec net;
  net.arch = nets::Arch::CounterCell;
  net.alphabet = lang::Alphabet::binary();
  net.hidden = 1;
  net.weights["Wf"] = Tensor(1, 2, {theta[0], theta[0]});
  net.weights["bf"] = Tensor(1, 1);
  net.weights["Wi"] = Tensor(1, 2, {-theta[1], theta[1]});
  net.weights["bi"] = Tensor(1, 1);
  net.weights["Wa"] = Tensor(1, 1, {1.0});
  net.weights["ba"] = Tensor(1, 1, {-0.5});
  net.validate();
  return net;
}

nets::NetworkSpec counter_cell_spec_literal(const std::array<double, 2>& theta) {
  nets::NetworkSpec net = counter_cell_spec(theta);
  net.weights["Wf"] = Tensor(1, 2, {0.0, theta[0]});
  net.weights["Wi"] = Tensor(1, 2, {0.0, theta[1]});
  return net;
}

nets::NetworkSpec attention_counting_encoder() {
  nets::NetworkSpec net;
  net.arch = nets::Arch::AttnEnc;
  net.alphabet = lang::Alphabet::binary();
  net.hidden = 1;
  net.weights["Wv"] = Tensor(1, 2, {-1.0, 1.0});  // v_t = [x_t = 1]
  net.weights["bv"] = Tensor(1, 1);
  net.weights["Wk"] = Tensor(1, 2);  // k_t = 1
  net.weights["bk"] = Tensor(1, 1, {1.0});
  net.weights["Wq"] = Tensor(1, 1, {1.0});
  net.weights["Wa"] = Tensor(1, 1, {1.0});
  net.weights["ba"] = Tensor(1, 1, {-0.5});
  net.validate();
  return net;
}

nets::NetworkSpec attention_identity_encoder() {
  nets::NetworkSpec net;
  net.arch = nets::Arch::AttnEnc;
  net.alphabet = lang::Alphabet::binary();
  net.hidden = 2;
  net.weights["Wv"] = Tensor(2, 2, {1.0, -1.0, -1.0, 1.0});  // v_t = x_t
  net.weights["bv"] = Tensor(2, 1);
  net.weights["Wk"] = Tensor(1, 2);
  net.weights["bk"] = Tensor(1, 1, {1.0});
  net.weights["Wq"] = Tensor(1, 2);  // zero query: uniform attention
  net.weights["Wa"] = Tensor(1, 2, {1.0, -1.0});
  net.weights["ba"] = Tensor(1, 1, {0.25});
  net.validate();
  return net;
}

nets::NetworkSpec attention_last_value_encoder() {
  nets::NetworkSpec net;
  net.arch = nets::Arch::AttnEnc;
  net.alphabet = lang::Alphabet::binary();
  net.hidden = 2;
  net.attn_position_keys = true;
  net.weights["Wv"] = Tensor(2, 2, {1.0, -1.0, -1.0, 1.0});  // v_t = x_t
  net.weights["bv"] = Tensor(2, 1);
  net.weights["Wk"] = Tensor(0, 2);  // keys are the step counter only
  net.weights["bk"] = Tensor(0, 0);
  net.weights["Wq"] = Tensor(1, 2, {1.0, 1.0});  // q = N: latest step wins
  net.weights["Wa"] = Tensor(1, 2, {-1.0, 1.0});
  net.weights["ba"] = Tensor(1, 1);
  net.validate();
  return net;
}

lang::Dfa parity_dfa() {
  lang::Dfa d;
  d.alphabet = lang::Alphabet::binary();
  d.num_states = 2;
  d.start = 0;
  d.accepting = {0};
  d.delta = {0, 1,   // state 0: '0' -> 0, '1' -> 1
             1, 0};  // state 1: '0' -> 1, '1' -> 0
  d.validate();
  return d;
}

lang::Dfa astar_b_astar_dfa() {
  lang::Dfa d;
  d.alphabet = lang::Alphabet::ab();
  d.num_states = 3;
  d.start = 0;
  d.accepting = {1};
  d.delta = {0, 1,   // no b yet
             1, 2,   // exactly one b
             2, 2};  // sink: too many b's
  d.validate();
  return d;
}

lang::Dfa contains_ab_dfa() {
  lang::Dfa d;
  d.alphabet = lang::Alphabet::ab();
  d.num_states = 3;
  d.start = 0;
  d.accepting = {2};
  d.delta = {1, 0,   // saw nothing useful; 'a' arms the detector
             1, 2,   // after 'a': 'b' completes "ab"
             2, 2};  // accepting sink
  d.validate();
  return d;
}

namespace {

lang::SlGrammar forbid_substring_grammar(int width, const std::string& bad) {
  lang::SlGrammar g;
  g.k = width;
  g.alphabet = lang::Alphabet::ab();
  for (const std::string& gram : legal_grams(g.alphabet, width))
    if (gram.find(bad) == std::string::npos) g.allowed.insert(gram);
  g.validate();
  return g;
}

}  // namespace

lang::SlGrammar no_aa_grammar() { return forbid_substring_grammar(3, "aa"); }

lang::SlGrammar no_bb_grammar_w5() { return forbid_substring_grammar(5, "bb"); }

}  // namespace na::compile
