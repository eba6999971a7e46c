// SPDX-License-Identifier: Apache-2.0
#include "na/lang.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "na/rng.hpp"

namespace na::lang {

Alphabet::Alphabet(std::string_view symbols) : symbols_(symbols) {
  if (symbols_.empty()) throw ConfigError("alphabet must not be empty");
  for (char c : symbols_) {
    if (c == kPad) throw ConfigError("padding symbol '#' is reserved and cannot be in an alphabet");
  }
  std::string sorted = symbols_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ConfigError("alphabet has duplicate symbols: " + symbols_);
  rebuild_index();
}

void Alphabet::rebuild_index() {
  index_.fill(-1);
  for (int i = 0; i < size(); ++i) index_[static_cast<unsigned char>(symbols_[i])] = i;
}

int Alphabet::index(char c) const {
  const int i = index_[static_cast<unsigned char>(c)];
  if (i < 0) throw UnknownSymbolError(std::string("symbol '") + c + "' is not in alphabet " + symbols_);
  return i;
}

const Alphabet& Alphabet::binary() {
  static const Alphabet a("01");
  return a;
}

const Alphabet& Alphabet::ab() {
  static const Alphabet a("ab");
  return a;
}

std::vector<double> SentenceMatrix::row(int t) const {
  std::vector<double> r(width, 0.0);
  r[rows[t]] = 1.0;
  return r;
}

SentenceMatrix encode_one_hot(std::string_view s, const Alphabet& alphabet) {
  SentenceMatrix m;
  m.width = alphabet.size();
  m.rows.reserve(s.size());
  for (char c : s) m.rows.push_back(alphabet.index(c));
  return m;
}

std::vector<std::vector<std::pair<int, int>>> Dfa::inverse_transitions() const {
  std::vector<std::vector<std::pair<int, int>>> inv(num_states);
  for (int q = 0; q < num_states; ++q)
    for (int a = 0; a < alphabet.size(); ++a) inv[next(q, a)].emplace_back(q, a);
  return inv;
}

void Dfa::validate() const {
  if (num_states <= 0) throw ConfigError("DFA must have at least one state");
  if (start < 0 || start >= num_states) throw ConfigError("DFA start state out of range");
  for (int f : accepting)
    if (f < 0 || f >= num_states) throw ConfigError("DFA accepting state out of range");
  if (static_cast<int>(delta.size()) != num_states * alphabet.size())
    throw ConfigError("DFA transition table is not total");
  for (int t : delta)
    if (t < 0 || t >= num_states) throw ConfigError("DFA transition target out of range");
}

bool dfa_accepts(const Dfa& dfa, std::string_view s) {
  int q = dfa.start;
  for (char c : s) q = dfa.next(q, dfa.alphabet.index(c));
  return dfa.accepting.count(q) > 0;
}

Dfa Dfa::load(std::istream& in) {
  std::string tag;
  in >> tag;
  if (tag != "dfa") throw ParseError("expected 'dfa' header");
  Dfa d;
  in >> d.num_states >> d.start;
  std::string rest;
  std::getline(in, rest);
  std::istringstream fs(rest);
  int f;
  while (fs >> f) d.accepting.insert(f);

  struct Edge {
    int q;
    char sym;
    int to;
  };
  std::vector<Edge> edges;
  std::string syms;
  int q, to;
  std::string sym;
  while (in >> q >> sym >> to) {
    if (sym.size() != 1) throw ParseError("transition symbol must be a single character");
    edges.push_back({q, sym[0], to});
    if (syms.find(sym[0]) == std::string::npos) syms.push_back(sym[0]);
  }
  std::sort(syms.begin(), syms.end());
  d.alphabet = Alphabet(syms);
  d.delta.assign(static_cast<std::size_t>(d.num_states) * d.alphabet.size(), -1);
  for (const Edge& e : edges) {
    if (e.q < 0 || e.q >= d.num_states) throw ParseError("transition source out of range");
    int& slot = d.delta[e.q * d.alphabet.size() + d.alphabet.index(e.sym)];
    if (slot != -1) throw ParseError("duplicate transition in DFA file");
    slot = e.to;
  }
  for (int t : d.delta)
    if (t == -1) throw ParseError("DFA file is missing transitions (table not total)");
  d.validate();
  return d;
}

void Dfa::save(std::ostream& out) const {
  out << "dfa " << num_states << " " << start;
  for (int f : accepting) out << " " << f;
  out << "\n";
  for (int q = 0; q < num_states; ++q)
    for (int a = 0; a < alphabet.size(); ++a)
      out << q << " " << alphabet.symbol(a) << " " << next(q, a) << "\n";
}

Dfa Dfa::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open DFA file: " + path);
  return load(in);
}

void Dfa::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write DFA file: " + path);
  save(out);
}

void SlGrammar::validate() const {
  if (k <= 0) throw ConfigError("gram width must be positive");
  for (const std::string& g : allowed) {
    if (static_cast<int>(g.size()) != k)
      throw ConfigError("gram '" + g + "' does not have width " + std::to_string(k));
    // '#' may appear only as contiguous prefix/suffix padding.
    int lo = 0, hi = k;
    while (lo < k && g[lo] == kPad) ++lo;
    while (hi > lo && g[hi - 1] == kPad) --hi;
    for (int i = lo; i < hi; ++i) {
      if (g[i] == kPad) throw ConfigError("gram '" + g + "' has interior padding");
      if (!alphabet.contains(g[i]))
        throw ConfigError("gram '" + g + "' uses a symbol outside the alphabet");
    }
  }
}

bool sl_accepts(const SlGrammar& g, std::string_view s) {
  for (char c : s) (void)g.alphabet.index(c);  // alphabet check
  const std::string padded =
      std::string(g.k - 1, kPad) + std::string(s) + std::string(g.k - 1, kPad);
  if (static_cast<int>(padded.size()) < g.k) return true;
  for (std::size_t i = 0; i + g.k <= padded.size(); ++i) {
    if (g.allowed.count(padded.substr(i, g.k)) == 0) return false;
  }
  return true;
}

SlGrammar SlGrammar::load(std::istream& in) {
  std::string tag;
  in >> tag;
  if (tag != "sl") throw ParseError("expected 'sl' header");
  SlGrammar g;
  in >> g.k;
  if (!in) throw ParseError("missing gram width in sl header");
  std::string gram, syms;
  while (in >> gram) {
    g.allowed.insert(gram);
    for (char c : gram)
      if (c != kPad && syms.find(c) == std::string::npos) syms.push_back(c);
  }
  std::sort(syms.begin(), syms.end());
  if (!syms.empty()) g.alphabet = Alphabet(syms);
  g.validate();
  return g;
}

void SlGrammar::save(std::ostream& out) const {
  out << "sl " << k << "\n";
  for (const std::string& g : allowed) out << g << "\n";
}

SlGrammar SlGrammar::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open grammar file: " + path);
  return load(in);
}

void SlGrammar::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write grammar file: " + path);
  save(out);
}

void Corpus::save(std::ostream& out) const {
  for (const CorpusItem& it : items) out << it.input << "\t" << it.target << "\n";
}

Corpus Corpus::load(std::istream& in) {
  Corpus c;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("corpus line has no tab separator");
    c.items.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return c;
}

void Corpus::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write corpus file: " + path);
  save(out);
}

Corpus Corpus::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus file: " + path);
  return load(in);
}

Corpus gen_counting_corpus(int n_lo, int n_hi, int count, std::uint64_t seed) {
  if (count <= 0) throw ConfigError("corpus count must be positive");
  if (n_lo < 1 || n_lo > n_hi) throw ConfigError("require 1 <= n_lo <= n_hi");
  Rng rng(seed);
  Corpus c;
  c.seed = seed;
  c.items.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int n = static_cast<int>(rng.uniform_int(n_lo, n_hi));
    std::string s = std::string(n, 'a') + std::string(n, 'b') + "c";
    std::string target = s.substr(1) + kEos;
    c.items.push_back({std::move(s), std::move(target)});
  }
  return c;
}

Corpus gen_reversal_corpus(int count, double len_mean, double len_sd, std::uint64_t seed) {
  if (count <= 0) throw ConfigError("corpus count must be positive");
  if (len_mean <= 0) throw ConfigError("mean length must be positive");
  Rng rng(seed);
  Corpus c;
  c.seed = seed;
  c.items.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int len = std::max(1, static_cast<int>(std::lround(rng.normal(len_mean, len_sd))));
    std::string w(len, '0');
    for (char& ch : w) ch = rng.uniform_int(0, 1) ? '1' : '0';
    std::string rev(w.rbegin(), w.rend());
    c.items.push_back({std::move(w), std::move(rev)});
  }
  return c;
}

}  // namespace na::lang
