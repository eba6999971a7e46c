// SPDX-License-Identifier: Apache-2.0
#include "na/train.hpp"

#include <algorithm>
#include <cmath>

#include "na/errors.hpp"
#include "na/tape.hpp"

namespace na::train {

void TrainConfig::apply_scale() {
  if (!full_scale) return;
  train_lo = 5;
  train_hi = 1000;
  test_lo = 2000;
  test_hi = 2200;
}

std::vector<double> inject_noise(const std::vector<double>& state, double sd, Rng& rng) {
  if (sd < 0) throw ConfigError("noise sd must be >= 0");
  if (sd == 0.0) return state;
  std::vector<double> out(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) out[i] = state[i] + rng.normal(0.0, sd);
  return out;
}

namespace {

const char* block_names_srn[] = {"W", "U", "b"};
const char* block_names_gru[] = {"Wz", "Uz", "bz", "Wr", "Ur", "br", "Wu", "Uu", "bu"};
const char* block_names_lstm[] = {"Wf", "Uf", "bf", "Wi", "Ui", "bi",
                                  "Wo", "Uo", "bo", "Wc", "Uc", "bc"};

struct ParamView {
  const double* p = nullptr;
  int rows = 0, cols = 0;
  double at(int r, int c) const { return p[r * cols + c]; }
};

template <typename Layout>
ParamView view(const std::vector<double>& params, const Layout& layout, const std::string& name) {
  const auto& b = layout.block(name);
  return {params.data() + b.offset, b.rows, b.cols};
}

std::vector<double> dense_matvec(const ParamView& m, const std::vector<double>& x) {
  std::vector<double> y(m.rows, 0.0);
  for (int r = 0; r < m.rows; ++r) {
    double acc = 0.0;
    for (int c = 0; c < m.cols; ++c) acc += m.at(r, c) * x[c];
    y[r] = acc;
  }
  return y;
}

}  // namespace

const LmModel::Layout::Block& LmModel::Layout::block(const std::string& name) const {
  for (const auto& [n, b] : blocks)
    if (n == name) return b;
  throw ShapeError("no parameter block named " + name);
}

const Seq2Seq::Layout::Block& Seq2Seq::Layout::block(const std::string& name) const {
  for (const auto& [n, b] : blocks)
    if (n == name) return b;
  throw ShapeError("no parameter block named " + name);
}

LmModel::LmModel(nets::Arch arch, int hidden, const lang::Alphabet& alphabet,
                 std::uint64_t init_seed)
    : arch_(arch), hidden_(hidden), alphabet_(alphabet) {
  if (arch != nets::Arch::Srn && arch != nets::Arch::Gru && arch != nets::Arch::Lstm)
    throw ConfigError("language models support srn/gru/lstm");
  build_layout();
  params_.resize(layout_.total);
  Rng rng(init_seed);
  for (double& p : params_) p = rng.uniform(-0.5, 0.5);
}

void LmModel::build_layout() {
  layout_.blocks.clear();
  layout_.total = 0;
  const int in = alphabet_.size();
  const int k = hidden_;
  const int out = vocab();
  auto add = [&](const std::string& name, int rows, int cols) {
    layout_.blocks.push_back({name, {layout_.total, rows, cols}});
    layout_.total += rows * cols;
  };
  auto add_gates = [&](const char* const* names, int count) {
    for (int g = 0; g < count; ++g) {
      add(names[3 * g], k, in);
      add(names[3 * g + 1], k, k);
      add(names[3 * g + 2], k, 1);
    }
  };
  switch (arch_) {
    case nets::Arch::Srn: add_gates(block_names_srn, 1); break;
    case nets::Arch::Gru: add_gates(block_names_gru, 3); break;
    case nets::Arch::Lstm: add_gates(block_names_lstm, 4); break;
    default: break;
  }
  add("Wout", out, k);
  add("bout", out, 1);
}

namespace {

// Plain-double recurrent step over the flat parameter vector.
struct LmEval {
  const LmModel& m;
  std::vector<double> h, c;

  explicit LmEval(const LmModel& model)
      : m(model), h(model.hidden(), 0.0), c(model.hidden(), 0.0) {}

  static double sgm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

  void step(const std::vector<double>& x) {
    const int k = m.hidden();
    const auto& P = m.params();
    const auto& L = m.layout();
    auto pre = [&](const char* w, const char* u, const char* b, const std::vector<double>& state) {
      std::vector<double> acc = dense_matvec(view(P, L, w), x);
      const std::vector<double> rec = dense_matvec(view(P, L, u), state);
      const ParamView bias = view(P, L, b);
      for (int i = 0; i < k; ++i) acc[i] += rec[i] + bias.at(i, 0);
      return acc;
    };
    switch (m.arch()) {
      case nets::Arch::Srn: {
        std::vector<double> p = pre("W", "U", "b", h);
        for (int i = 0; i < k; ++i) h[i] = std::tanh(p[i]);
        break;
      }
      case nets::Arch::Gru: {
        std::vector<double> z = pre("Wz", "Uz", "bz", h);
        std::vector<double> r = pre("Wr", "Ur", "br", h);
        for (int i = 0; i < k; ++i) {
          z[i] = sgm(z[i]);
          r[i] = sgm(r[i]);
        }
        std::vector<double> rh(k);
        for (int i = 0; i < k; ++i) rh[i] = r[i] * h[i];
        std::vector<double> acc = dense_matvec(view(P, L, "Wu"), x);
        const std::vector<double> rec = dense_matvec(view(P, L, "Uu"), rh);
        const ParamView bias = view(P, L, "bu");
        for (int i = 0; i < k; ++i) {
          const double u = std::tanh(acc[i] + rec[i] + bias.at(i, 0));
          h[i] = z[i] * h[i] + (1.0 - z[i]) * u;
        }
        break;
      }
      case nets::Arch::Lstm: {
        std::vector<double> f = pre("Wf", "Uf", "bf", h);
        std::vector<double> i_g = pre("Wi", "Ui", "bi", h);
        std::vector<double> o = pre("Wo", "Uo", "bo", h);
        std::vector<double> ct = pre("Wc", "Uc", "bc", h);
        for (int i = 0; i < k; ++i) {
          c[i] = sgm(f[i]) * c[i] + sgm(i_g[i]) * std::tanh(ct[i]);
          h[i] = sgm(o[i]) * c[i];  // identity output nonlinearity
        }
        break;
      }
      default: break;
    }
  }

  int argmax_logit() const {
    const auto& P = m.params();
    const auto& L = m.layout();
    const ParamView Wout = view(P, L, "Wout");
    const ParamView bout = view(P, L, "bout");
    int best = 0;
    double best_v = 0.0;
    for (int j = 0; j < Wout.rows; ++j) {
      double v = bout.at(j, 0);
      for (int i = 0; i < m.hidden(); ++i) v += Wout.at(j, i) * h[i];
      if (j == 0 || v > best_v) {
        best = j;
        best_v = v;
      }
    }
    return best;
  }
};

// Builds the mean next-symbol cross entropy of one sequence on the tape.
// Parameters occupy nodes [0, P); noise (if sd > 0) is drawn from rng and
// added to h (srn/gru) or c (lstm) before each cell update.
int build_lm_loss(Tape& t, const LmModel& m, const lang::CorpusItem& item, double noise_sd,
                  Rng* rng) {
  t.clear();
  const int P = static_cast<int>(m.params().size());
  for (int i = 0; i < P; ++i) t.constant(m.params()[i]);
  const int k = m.hidden();
  const int in = m.alphabet().size();
  const int out = m.vocab();
  const auto& L = m.layout();
  auto off = [&](const char* name) { return L.block(name).offset; };
  auto target_index = [&](char ch) {
    return ch == lang::kEos ? m.alphabet().size() : m.alphabet().index(ch);
  };

  std::vector<int> h_idx(k), c_idx(k);
  int h_base = t.size();
  for (int i = 0; i < k; ++i) h_idx[i] = t.constant(0.0);
  int c_base = t.size();
  if (m.arch() == nets::Arch::Lstm)
    for (int i = 0; i < k; ++i) c_idx[i] = t.constant(0.0);
  (void)c_base;

  int loss_sum = t.constant(0.0);
  const int n = static_cast<int>(item.input.size());
  for (int step = 0; step < n; ++step) {
    const int x_base = t.size();
    for (int j = 0; j < in; ++j)
      t.constant(j == m.alphabet().index(item.input[step]) ? 1.0 : 0.0);

    if (noise_sd > 0.0) {
      // constants first so the add nodes land contiguously
      std::vector<int> eps(k);
      for (int i = 0; i < k; ++i) eps[i] = t.constant(rng->normal(0.0, noise_sd));
      if (m.arch() == nets::Arch::Lstm) {
        for (int i = 0; i < k; ++i) c_idx[i] = t.add(c_idx[i], eps[i]);
      } else {
        for (int i = 0; i < k; ++i) h_idx[i] = t.add(h_idx[i], eps[i]);
        h_base = h_idx[0];
      }
    }

    auto gate_pre = [&](const char* w, const char* u, const char* b, int state_base, int row) {
      const int d1 = t.dot(off(w) + row * in, x_base, in);
      const int d2 = t.dot(off(u) + row * k, state_base, k);
      return t.add(t.add(d1, d2), off(b) + row);
    };

    switch (m.arch()) {
      case nets::Arch::Srn: {
        std::vector<int> next(k);
        for (int i = 0; i < k; ++i) next[i] = t.tanh_(gate_pre("W", "U", "b", h_base, i));
        h_base = t.copy_range(next);
        for (int i = 0; i < k; ++i) h_idx[i] = h_base + i;
        break;
      }
      case nets::Arch::Gru: {
        std::vector<int> z(k), r(k), rh(k), next(k);
        for (int i = 0; i < k; ++i) z[i] = t.sigmoid(gate_pre("Wz", "Uz", "bz", h_base, i));
        for (int i = 0; i < k; ++i) r[i] = t.sigmoid(gate_pre("Wr", "Ur", "br", h_base, i));
        for (int i = 0; i < k; ++i) rh[i] = t.mul(r[i], h_idx[i]);
        const int rh_base = t.copy_range(rh);
        const int one = t.constant(1.0);
        for (int i = 0; i < k; ++i) {
          const int u = t.tanh_(gate_pre("Wu", "Uu", "bu", rh_base, i));
          next[i] = t.add(t.mul(z[i], h_idx[i]), t.mul(t.sub(one, z[i]), u));
        }
        h_base = t.copy_range(next);
        for (int i = 0; i < k; ++i) h_idx[i] = h_base + i;
        break;
      }
      case nets::Arch::Lstm: {
        // the c indices may be non-contiguous after a noise step; gates only
        // need h contiguous
        std::vector<int> nc(k), nh(k);
        for (int i = 0; i < k; ++i) {
          const int f = t.sigmoid(gate_pre("Wf", "Uf", "bf", h_base, i));
          const int ig = t.sigmoid(gate_pre("Wi", "Ui", "bi", h_base, i));
          const int og = t.sigmoid(gate_pre("Wo", "Uo", "bo", h_base, i));
          const int ct = t.tanh_(gate_pre("Wc", "Uc", "bc", h_base, i));
          nc[i] = t.add(t.mul(f, c_idx[i]), t.mul(ig, ct));
          nh[i] = t.mul(og, nc[i]);  // identity output nonlinearity
        }
        for (int i = 0; i < k; ++i) c_idx[i] = nc[i];
        h_base = t.copy_range(nh);
        for (int i = 0; i < k; ++i) h_idx[i] = h_base + i;
        break;
      }
      default: break;
    }

    std::vector<int> logits(out);
    for (int j = 0; j < out; ++j)
      logits[j] = t.add(t.dot(off("Wout") + j * k, h_base, k), off("bout") + j);
    const int logit_base = t.copy_range(logits);
    loss_sum = t.add(loss_sum, t.softmax_xent(logit_base, out, target_index(item.target[step])));
  }
  // summed (not averaged) over positions: gradient clipping normalizes the
  // step size, and the one 'c' position per string keeps its full weight
  return loss_sum;
}

}  // namespace

std::string LmModel::predict(const std::string& input) const {
  LmEval ev(*this);
  std::string out;
  out.reserve(input.size());
  for (char ch : input) {
    std::vector<double> x(alphabet_.size(), 0.0);
    x[alphabet_.index(ch)] = 1.0;
    ev.step(x);
    const int j = ev.argmax_logit();
    out.push_back(j < alphabet_.size() ? alphabet_.symbol(j) : lang::kEos);
  }
  return out;
}

Checkpoint LmModel::to_checkpoint() const {
  Checkpoint ck;
  ck.kind = nets::arch_name(arch_);
  ck.set_meta("alphabet", alphabet_.symbols());
  ck.set_meta("hidden", std::to_string(hidden_));
  if (arch_ == nets::Arch::Lstm) ck.set_meta("output", "identity");
  ck.set_meta("task", "lm");
  for (const auto& [name, b] : layout_.blocks) {
    Tensor t(b.rows, b.cols);
    std::copy(params_.begin() + b.offset, params_.begin() + b.offset + b.rows * b.cols,
              t.v.begin());
    ck.tensors.emplace_back(name, std::move(t));
  }
  // Placeholder scalar head so the checkpoint also loads as a NetworkSpec
  // for the state-complexity tools.
  ck.tensors.emplace_back("Wa", Tensor(1, hidden_));
  ck.tensors.emplace_back("ba", Tensor(1, 1));
  return ck;
}

LmModel LmModel::from_checkpoint(const Checkpoint& ck) {
  LmModel m;
  m.arch_ = nets::arch_from_name(ck.kind);
  const std::string* alpha = ck.meta_value("alphabet");
  const std::string* hidden = ck.meta_value("hidden");
  if (!alpha || !hidden) throw ParseError("lm checkpoint missing alphabet/hidden");
  m.alphabet_ = lang::Alphabet(*alpha);
  m.hidden_ = std::stoi(*hidden);
  m.build_layout();
  m.params_.assign(m.layout_.total, 0.0);
  for (const auto& [name, b] : m.layout_.blocks) {
    const Tensor* t = ck.find(name);
    if (!t) throw ParseError("lm checkpoint missing tensor " + name);
    if (!t->same_shape(b.rows, b.cols)) throw ShapeError("lm tensor shape mismatch: " + name);
    std::copy(t->v.begin(), t->v.end(), m.params_.begin() + b.offset);
  }
  return m;
}

double lm_loss_and_grad(const LmModel& model, const lang::CorpusItem& item,
                        std::vector<double>* grads) {
  Tape t;
  const int loss = build_lm_loss(t, model, item, 0.0, nullptr);
  const double loss_v = t.val(loss);
  if (grads) {
    t.backward(loss);
    grads->resize(model.params().size());
    for (std::size_t i = 0; i < model.params().size(); ++i)
      (*grads)[i] = t.grad(static_cast<int>(i));
  }
  return loss_v;
}

// ---------------------------------------------------------------------------
// LM training
// ---------------------------------------------------------------------------

namespace {

class SgdDriver {
 public:
  SgdDriver(std::vector<double>& params, double lr, double clip)
      : params_(params), lr_(lr), lr_floor_(lr / 64.0), clip_(clip) {}

  void step(const Tape& t) {
    const int P = static_cast<int>(params_.size());
    double norm2 = 0.0;
    for (int i = 0; i < P; ++i) norm2 += t.grad(i) * t.grad(i);
    const double norm = std::sqrt(norm2);
    const double scale = norm > clip_ ? clip_ / norm : 1.0;
    for (int i = 0; i < P; ++i) params_[i] -= lr_ * scale * t.grad(i);
  }

  void halve_lr() { lr_ = std::max(lr_floor_, lr_ * 0.5); }

 private:
  std::vector<double>& params_;
  double lr_;
  double lr_floor_;
  double clip_;
};

// Plateau detector: halve after `patience` epochs without improving the
// best loss by at least 0.1%.
class Plateau {
 public:
  explicit Plateau(int patience) : patience_(patience) {}

  bool should_halve(double loss) {
    if (first_ || loss < best_ * 0.999) {
      best_ = loss;
      first_ = false;
      stale_ = 0;
      return false;
    }
    if (++stale_ >= patience_) {
      stale_ = 0;
      return true;
    }
    return false;
  }

 private:
  int patience_;
  bool first_ = true;
  double best_ = 0.0;
  int stale_ = 0;
};

void shuffle(std::vector<int>& order, Rng& rng) {
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.uniform_int(0, static_cast<std::int64_t>(i) - 1)]);
}

}  // namespace

LmModel train_lm(const lang::Corpus& corpus, const TrainConfig& cfg,
                 std::vector<double>* loss_curve) {
  if (corpus.items.empty()) throw ConfigError("empty training corpus");
  lang::Alphabet alphabet("abc");
  LmModel model(cfg.arch, cfg.hidden, alphabet, cfg.seed * 0x9e3779b97f4a7c15ULL + 1);
  Rng rng(cfg.seed);
  SgdDriver sgd(model.params(), cfg.lr, cfg.clip_norm);
  Plateau plateau(3);
  Tape tape;
  std::vector<int> order(corpus.items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  long long positions = 0;
  for (const auto& item : corpus.items) positions += static_cast<long long>(item.input.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    double total = 0.0;
    for (int idx : order) {
      const int loss = build_lm_loss(tape, model, corpus.items[idx], cfg.noise_sd, &rng);
      total += tape.val(loss);
      tape.backward(loss);
      sgd.step(tape);
    }
    const double mean_loss = total / static_cast<double>(positions);
    if (!std::isfinite(mean_loss))
      throw AbortedRunError("loss diverged at epoch " + std::to_string(epoch), epoch);
    if (loss_curve) loss_curve->push_back(mean_loss);
    if (plateau.should_halve(mean_loss)) sgd.halve_lr();
  }
  return model;
}

Metrics eval_counting_with(const lang::Corpus& corpus,
                           const std::function<std::string(const std::string&)>& predict) {
  long long total = 0, correct = 0, c_total = 0, c_correct = 0;
  for (const lang::CorpusItem& item : corpus.items) {
    const std::string pred = predict(item.input);
    if (pred.size() != item.target.size()) throw ConfigError("prediction length mismatch");
    for (std::size_t i = 0; i < pred.size(); ++i) {
      ++total;
      const bool ok = pred[i] == item.target[i];
      correct += ok;
      if (item.target[i] == 'c') {
        ++c_total;
        c_correct += ok;
      }
    }
  }
  Metrics m;
  m.overall_acc = total ? 100.0 * static_cast<double>(correct) / total : 0.0;
  m.acc_on_c = c_total ? 100.0 * static_cast<double>(c_correct) / c_total : 0.0;
  return m;
}

Metrics eval_counting(const LmModel& model, const lang::Corpus& corpus) {
  return eval_counting_with(corpus, [&](const std::string& in) { return model.predict(in); });
}

// ---------------------------------------------------------------------------
// Seq2seq reversal
// ---------------------------------------------------------------------------

namespace {
constexpr int kSeqIn = 2;   // '0', '1'
constexpr int kDecIn = 3;   // '0', '1', BOS
constexpr int kDecOut = 3;  // '0', '1', EOS
constexpr int kBos = 2;
constexpr int kEosIdx = 2;

const char* enc_gates[] = {"EWf", "EUf", "Ebf", "EWi", "EUi", "Ebi",
                           "EWo", "EUo", "Ebo", "EWc", "EUc", "Ebc"};
const char* dec_gates[] = {"DWf", "DUf", "Dbf", "DWi", "DUi", "Dbi",
                           "DWo", "DUo", "Dbo", "DWc", "DUc", "Dbc"};
}  // namespace

Seq2Seq::Seq2Seq(bool attention, int hidden, std::uint64_t init_seed)
    : attention_(attention), hidden_(hidden) {
  build_layout();
  params_.resize(layout_.total);
  Rng rng(init_seed);
  for (double& p : params_) p = rng.uniform(-0.5, 0.5);
}

void Seq2Seq::build_layout() {
  layout_.blocks.clear();
  layout_.total = 0;
  const int k = hidden_;
  auto add = [&](const std::string& name, int rows, int cols) {
    layout_.blocks.push_back({name, {layout_.total, rows, cols}});
    layout_.total += rows * cols;
  };
  for (int g = 0; g < 4; ++g) {
    add(enc_gates[3 * g], k, kSeqIn);
    add(enc_gates[3 * g + 1], k, k);
    add(enc_gates[3 * g + 2], k, 1);
  }
  for (int g = 0; g < 4; ++g) {
    add(dec_gates[3 * g], k, kDecIn);
    add(dec_gates[3 * g + 1], k, k);
    add(dec_gates[3 * g + 2], k, 1);
  }
  if (attention_) add("Wq", k, k);
  add("Wout", kDecOut, attention_ ? 2 * k : k);
  add("bout", kDecOut, 1);
}

namespace {

struct LstmCellEval {
  int k;
  std::vector<double> h, c;

  explicit LstmCellEval(int hidden) : k(hidden), h(hidden, 0.0), c(hidden, 0.0) {}

  static double sgm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

  void step(const std::vector<double>& x, const std::vector<double>& params,
            const Seq2Seq::Layout& L, const char* const* gates) {
    auto pre = [&](int g) {
      const ParamView W = view(params, L, gates[3 * g]);
      const ParamView U = view(params, L, gates[3 * g + 1]);
      const ParamView B = view(params, L, gates[3 * g + 2]);
      std::vector<double> acc = dense_matvec(W, x);
      const std::vector<double> rec = dense_matvec(U, h);
      for (int i = 0; i < k; ++i) acc[i] += rec[i] + B.at(i, 0);
      return acc;
    };
    const std::vector<double> f = pre(0), ig = pre(1), o = pre(2), ct = pre(3);
    for (int i = 0; i < k; ++i) {
      c[i] = sgm(f[i]) * c[i] + sgm(ig[i]) * std::tanh(ct[i]);
      h[i] = sgm(o[i]) * std::tanh(c[i]);
    }
  }
};

// Tape construction for one teacher-forced sequence.
int build_s2s_loss(Tape& t, const Seq2Seq& m, const lang::CorpusItem& item) {
  t.clear();
  const int P = static_cast<int>(m.params().size());
  for (int i = 0; i < P; ++i) t.constant(m.params()[i]);
  const int k = m.hidden();
  const auto& L = m.layout();
  auto off = [&](const char* name) { return L.block(name).offset; };

  struct TapeLstm {
    std::vector<int> h, c;
    int h_base = 0;
  };
  auto lstm_step = [&](TapeLstm& st, int x_base, int in_dim, const char* const* gates) {
    std::vector<int> nc(k), nh(k);
    for (int i = 0; i < k; ++i) {
      auto pre = [&](int g) {
        const int d1 = t.dot(off(gates[3 * g]) + i * in_dim, x_base, in_dim);
        const int d2 = t.dot(off(gates[3 * g + 1]) + i * k, st.h_base, k);
        return t.add(t.add(d1, d2), off(gates[3 * g + 2]) + i);
      };
      const int f = t.sigmoid(pre(0));
      const int ig = t.sigmoid(pre(1));
      const int og = t.sigmoid(pre(2));
      const int ct = t.tanh_(pre(3));
      nc[i] = t.add(t.mul(f, st.c[i]), t.mul(ig, ct));
      nh[i] = t.mul(og, t.tanh_(nc[i]));
    }
    for (int i = 0; i < k; ++i) st.c[i] = nc[i];
    st.h_base = t.copy_range(nh);
    for (int i = 0; i < k; ++i) st.h[i] = st.h_base + i;
  };

  TapeLstm enc{std::vector<int>(k), std::vector<int>(k), 0};
  enc.h_base = t.size();
  for (int i = 0; i < k; ++i) enc.h[i] = t.constant(0.0);
  for (int i = 0; i < k; ++i) enc.c[i] = t.constant(0.0);

  std::vector<int> enc_h_bases;
  for (char ch : item.input) {
    const int x_base = t.size();
    for (int j = 0; j < kSeqIn; ++j) t.constant(j == ch - '0' ? 1.0 : 0.0);
    lstm_step(enc, x_base, kSeqIn, enc_gates);
    enc_h_bases.push_back(enc.h_base);
  }

  TapeLstm dec = enc;  // decoder starts from the encoder state
  int loss_sum = t.constant(0.0);
  const int m_len = static_cast<int>(item.target.size());
  for (int step = 0; step <= m_len; ++step) {
    const int prev = step == 0 ? kBos : item.target[step - 1] - '0';
    const int target = step == m_len ? kEosIdx : item.target[step] - '0';
    const int x_base = t.size();
    for (int j = 0; j < kDecIn; ++j) t.constant(j == prev ? 1.0 : 0.0);
    lstm_step(dec, x_base, kDecIn, dec_gates);

    int feat_base = dec.h_base;
    int feat_len = k;
    if (m.attention() && !enc_h_bases.empty()) {
      std::vector<int> q(k);
      for (int j = 0; j < k; ++j) q[j] = t.dot(off("Wq") + j * k, dec.h_base, k);
      const int q_base = t.copy_range(q);
      const int n_enc = static_cast<int>(enc_h_bases.size());
      std::vector<int> scores(n_enc);
      double mx = -1e300;
      for (int u = 0; u < n_enc; ++u) {
        scores[u] = t.dot(q_base, enc_h_bases[u], k);
        mx = std::max(mx, t.val(scores[u]));
      }
      const int mx_node = t.constant(mx);  // detached; softmax is shift invariant
      std::vector<int> e(n_enc);
      int z = -1;
      for (int u = 0; u < n_enc; ++u) {
        e[u] = t.exp_(t.sub(scores[u], mx_node));
        z = u == 0 ? e[u] : t.add(z, e[u]);
      }
      std::vector<int> ctx(k, -1);
      for (int u = 0; u < n_enc; ++u) {
        const int w = t.div(e[u], z);
        for (int j = 0; j < k; ++j) {
          const int term = t.mul(w, enc_h_bases[u] + j);
          ctx[j] = u == 0 ? term : t.add(ctx[j], term);
        }
      }
      std::vector<int> feat(2 * k);
      for (int j = 0; j < k; ++j) feat[j] = dec.h_base + j;
      for (int j = 0; j < k; ++j) feat[k + j] = ctx[j];
      feat_base = t.copy_range(feat);
      feat_len = 2 * k;
    }

    std::vector<int> logits(kDecOut);
    for (int j = 0; j < kDecOut; ++j)
      logits[j] = t.add(t.dot(off("Wout") + j * feat_len, feat_base, feat_len), off("bout") + j);
    const int logit_base = t.copy_range(logits);
    loss_sum = t.add(loss_sum, t.softmax_xent(logit_base, kDecOut, target));
  }
  return t.mul(loss_sum, t.constant(1.0 / (m_len + 1)));
}

}  // namespace

std::string Seq2Seq::decode(const std::string& input, int max_steps) const {
  LstmCellEval enc(hidden_);
  std::vector<std::vector<double>> enc_h;
  for (char ch : input) {
    std::vector<double> x(kSeqIn, 0.0);
    x[ch - '0'] = 1.0;
    enc.step(x, params_, layout_, enc_gates);
    enc_h.push_back(enc.h);
  }
  LstmCellEval dec(hidden_);
  dec.h = enc.h;
  dec.c = enc.c;
  std::string out;
  int prev = kBos;
  for (int step = 0; step < max_steps; ++step) {
    std::vector<double> x(kDecIn, 0.0);
    x[prev] = 1.0;
    dec.step(x, params_, layout_, dec_gates);
    std::vector<double> feat = dec.h;
    if (attention_ && !enc_h.empty()) {
      const ParamView Wq = view(params_, layout_, "Wq");
      const std::vector<double> q = dense_matvec(Wq, dec.h);
      std::vector<double> scores(enc_h.size(), 0.0);
      double mx = -1e300;
      for (std::size_t u = 0; u < enc_h.size(); ++u) {
        for (int i = 0; i < hidden_; ++i) scores[u] += q[i] * enc_h[u][i];
        mx = std::max(mx, scores[u]);
      }
      double z = 0.0;
      for (double& s : scores) {
        s = std::exp(s - mx);
        z += s;
      }
      std::vector<double> ctx(hidden_, 0.0);
      for (std::size_t u = 0; u < enc_h.size(); ++u)
        for (int i = 0; i < hidden_; ++i) ctx[i] += scores[u] / z * enc_h[u][i];
      feat.insert(feat.end(), ctx.begin(), ctx.end());
    } else if (attention_) {
      feat.insert(feat.end(), hidden_, 0.0);
    }
    const ParamView Wout = view(params_, layout_, "Wout");
    const ParamView bout = view(params_, layout_, "bout");
    int best = 0;
    double best_v = 0.0;
    for (int j = 0; j < kDecOut; ++j) {
      double v = bout.at(j, 0);
      for (std::size_t i = 0; i < feat.size(); ++i) v += Wout.at(j, static_cast<int>(i)) * feat[i];
      if (j == 0 || v > best_v) {
        best = j;
        best_v = v;
      }
    }
    if (best == kEosIdx) break;
    out.push_back(static_cast<char>('0' + best));
    prev = best;
  }
  return out;
}

Checkpoint Seq2Seq::to_checkpoint() const {
  Checkpoint ck;
  ck.kind = attention_ ? "seq2seq-lstm-attn" : "seq2seq-lstm";
  ck.set_meta("hidden", std::to_string(hidden_));
  for (const auto& [name, b] : layout_.blocks) {
    Tensor t(b.rows, b.cols);
    std::copy(params_.begin() + b.offset, params_.begin() + b.offset + b.rows * b.cols,
              t.v.begin());
    ck.tensors.emplace_back(name, std::move(t));
  }
  return ck;
}

Seq2Seq Seq2Seq::from_checkpoint(const Checkpoint& ck) {
  Seq2Seq m;
  if (ck.kind == "seq2seq-lstm-attn")
    m.attention_ = true;
  else if (ck.kind == "seq2seq-lstm")
    m.attention_ = false;
  else
    throw ParseError("not a seq2seq checkpoint: " + ck.kind);
  const std::string* hidden = ck.meta_value("hidden");
  if (!hidden) throw ParseError("seq2seq checkpoint missing hidden");
  m.hidden_ = std::stoi(*hidden);
  m.build_layout();
  m.params_.assign(m.layout_.total, 0.0);
  for (const auto& [name, b] : m.layout_.blocks) {
    const Tensor* t = ck.find(name);
    if (!t) throw ParseError("seq2seq checkpoint missing tensor " + name);
    std::copy(t->v.begin(), t->v.end(), m.params_.begin() + b.offset);
  }
  return m;
}

double seq2seq_loss_and_grad(const Seq2Seq& model, const lang::CorpusItem& item,
                             std::vector<double>* grads) {
  Tape t;
  const int loss = build_s2s_loss(t, model, item);
  const double loss_v = t.val(loss);
  if (grads) {
    t.backward(loss);
    grads->resize(model.params().size());
    for (std::size_t i = 0; i < model.params().size(); ++i)
      (*grads)[i] = t.grad(static_cast<int>(i));
  }
  return loss_v;
}

namespace {

double exact_match_pct(const Seq2Seq& model, const lang::Corpus& corpus) {
  long long hits = 0;
  for (const lang::CorpusItem& item : corpus.items) {
    const int cap = 2 * static_cast<int>(item.input.size()) + 10;
    if (model.decode(item.input, cap) == item.target) ++hits;
  }
  return corpus.items.empty() ? 0.0 : 100.0 * static_cast<double>(hits) / corpus.items.size();
}

}  // namespace

ReversalOutcome train_seq2seq_reversal(bool with_attention, const ReversalConfig& cfg) {
  const lang::Corpus train_set =
      lang::gen_reversal_corpus(cfg.train_count, cfg.train_mean, cfg.train_sd, cfg.seed * 3 + 1);
  const lang::Corpus val =
      lang::gen_reversal_corpus(cfg.val_count, cfg.train_mean, cfg.train_sd, cfg.seed * 3 + 2);
  const lang::Corpus gen =
      lang::gen_reversal_corpus(cfg.gen_count, cfg.gen_mean, cfg.gen_sd, cfg.seed * 3 + 3);

  ReversalOutcome out;
  out.model = Seq2Seq(with_attention, cfg.hidden, cfg.seed * 0x9e3779b97f4a7c15ULL + 7);
  Rng rng(cfg.seed);
  SgdDriver sgd(out.model.params(), cfg.lr, cfg.clip_norm);
  Plateau plateau(3);
  Tape tape;
  std::vector<int> order(train_set.items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    double total = 0.0;
    for (int idx : order) {
      const int loss = build_s2s_loss(tape, out.model, train_set.items[idx]);
      total += tape.val(loss);
      tape.backward(loss);
      sgd.step(tape);
    }
    const double mean_loss = total / static_cast<double>(order.size());
    if (!std::isfinite(mean_loss))
      throw AbortedRunError("loss diverged at epoch " + std::to_string(epoch), epoch);
    out.metrics.loss_curve.push_back(mean_loss);
    if (plateau.should_halve(mean_loss)) sgd.halve_lr();
  }
  out.metrics.val_exact = exact_match_pct(out.model, val);
  out.metrics.gen_exact = exact_match_pct(out.model, gen);
  return out;
}

}  // namespace na::train
