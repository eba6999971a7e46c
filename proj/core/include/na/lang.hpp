// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "na/errors.hpp"

namespace na::lang {

// Reserved padding symbol for strictly local grammars. It never belongs to
// an alphabet; in one-hot space it is the all-zeros vector.
inline constexpr char kPad = '#';

// End-of-string marker used in language-model targets.
inline constexpr char kEos = '$';

// Ordered set of distinct single characters; the one-hot index of a symbol
// is its position in the order.
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::string_view symbols);

  int size() const { return static_cast<int>(symbols_.size()); }
  const std::string& symbols() const { return symbols_; }
  char symbol(int index) const { return symbols_.at(static_cast<std::size_t>(index)); }
  bool contains(char c) const { return index_[static_cast<unsigned char>(c)] >= 0; }

  // Throws UnknownSymbolError for characters outside the alphabet.
  int index(char c) const;

  bool operator==(const Alphabet& other) const { return symbols_ == other.symbols_; }

  static const Alphabet& binary();  // "01"
  static const Alphabet& ab();      // "ab"

 private:
  std::string symbols_;
  std::array<int, 256> index_{};  // -1 for absent

  void rebuild_index();
};

// One-hot sentence matrix, stored as the per-row hot index. Rows are
// one-hot by construction.
struct SentenceMatrix {
  int width = 0;
  std::vector<int> rows;

  int length() const { return static_cast<int>(rows.size()); }
  // Materialize row t as a dense one-hot vector.
  std::vector<double> row(int t) const;
};

SentenceMatrix encode_one_hot(std::string_view s, const Alphabet& alphabet);

// Deterministic finite automaton with a total transition function.
struct Dfa {
  Alphabet alphabet;
  int num_states = 0;
  int start = 0;
  std::set<int> accepting;
  // delta[q * |alphabet| + sym] = next state
  std::vector<int> delta;

  int next(int state, int sym) const { return delta[state * alphabet.size() + sym]; }

  // Inverse transition relation: for each state i, the list of (j, sym)
  // with delta(j, sym) = i.
  std::vector<std::vector<std::pair<int, int>>> inverse_transitions() const;

  void validate() const;  // throws ConfigError when not total / out of range

  static Dfa load(std::istream& in);
  static Dfa load_file(const std::string& path);
  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;
};

bool dfa_accepts(const Dfa& dfa, std::string_view s);

// Strictly k-local grammar: a set of allowed k-grams over alphabet + '#'.
struct SlGrammar {
  int k = 0;
  Alphabet alphabet;
  std::set<std::string> allowed;

  void validate() const;  // gram lengths and '#' placement

  static SlGrammar load(std::istream& in);
  static SlGrammar load_file(const std::string& path);
  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;
};

// Pads s with k-1 '#' on each side and checks every width-k window.
bool sl_accepts(const SlGrammar& g, std::string_view s);

enum class Split { Train, Val, Gen };

struct CorpusItem {
  std::string input;
  std::string target;
};

struct Corpus {
  std::vector<CorpusItem> items;
  Split split = Split::Train;
  std::uint64_t seed = 0;

  void save(std::ostream& out) const;  // one item per line, tab separated
  void save_file(const std::string& path) const;
  static Corpus load(std::istream& in);
  static Corpus load_file(const std::string& path);
};

// Language-model corpus of a^n b^n c strings with n uniform in [n_lo, n_hi].
// Targets are the next-symbol sequence closed by the end marker.
Corpus gen_counting_corpus(int n_lo, int n_hi, int count, std::uint64_t seed);

// Transduction corpus of (w, reverse(w)) over {0,1}; lengths are drawn from
// N(len_mean, len_sd^2), rounded to nearest and clamped at 1.
Corpus gen_reversal_corpus(int count, double len_mean, double len_sd, std::uint64_t seed);

}  // namespace na::lang
