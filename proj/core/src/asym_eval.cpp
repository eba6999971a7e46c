// SPDX-License-Identifier: Apache-2.0
//
// Symbolic evaluation of networks in the large-weight limit. Every gate
// pre-activation has the form N*(w.v + b) with v a finite limit value, so
// its limit is decided by the exact rational sign of w.v + b. Exactly-zero
// pre-activations are recorded as instability witnesses and the midpoint
// value (1/2 for sigmoid, 0 for tanh) is carried forward.

#include <string>
#include <vector>

#include "na/asym.hpp"
#include "na/errors.hpp"

namespace na::asym {

namespace {

struct RatTensor {
  int rows = 0, cols = 0;
  std::vector<Rat> v;
  const Rat& at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
};

RatTensor rationalize(const Tensor& t) {
  RatTensor rt;
  rt.rows = t.rows;
  rt.cols = t.cols;
  rt.v.reserve(t.v.size());
  for (double d : t.v) rt.v.emplace_back(d);
  return rt;
}

using RatVec = std::vector<Rat>;

AsymVector wrap(const RatVec& v) {
  AsymVector out;
  out.reserve(v.size());
  for (const Rat& r : v) out.emplace_back(r);
  return out;
}

int sgn(const Rat& r) { return r.sign(); }

}  // namespace

struct LimitEvaluator::Impl {
  nets::Arch arch;
  int hidden = 0;
  int window = 0;
  int alphabet_size = 0;
  bool squash_output = false;
  bool position_keys = false;
  std::map<std::string, RatTensor> w;
  RatVec h0, c0;

  const RatTensor& t(const std::string& name) const { return w.at(name); }

  // w.x_onehot + U.h + b for one row; x enters as its hot index.
  Rat pre(const RatTensor& W, const RatTensor* U, const RatTensor& b, int row, int hot,
          const RatVec* h) const {
    Rat acc = b.at(row, 0);
    if (hot >= 0) acc += W.at(row, hot);
    if (U && h)
      for (int j = 0; j < U->cols; ++j) {
        if (U->at(row, j) == 0) continue;
        acc += U->at(row, j) * (*h)[j];
      }
    return acc;
  }

  void note(LimitTrace& tr, const std::string& witness) const {
    if (tr.state_witness.empty()) tr.state_witness = witness;
  }

  void track(LimitTrace& tr, const Rat& slope) const {
    Rat mag = slope < 0 ? Rat(-slope) : slope;
    if (!tr.has_min_abs_pre || mag < tr.min_abs_pre) {
      tr.min_abs_pre = std::move(mag);
      tr.has_min_abs_pre = true;
    }
  }

  // sigmoid limit of N*slope with instability bookkeeping
  Rat gate(LimitTrace& tr, const Rat& slope, int t, const char* name, int unit) const {
    track(tr, slope);
    const int s = sgn(slope);
    if (s > 0) return Rat(1);
    if (s < 0) return Rat(0);
    note(tr, "t=" + std::to_string(t + 1) + " " + name + "[" + std::to_string(unit) + "]");
    return Rat(1) / 2;
  }

  Rat squash(LimitTrace& tr, const Rat& slope, int t, const char* name, int unit) const {
    track(tr, slope);
    const int s = sgn(slope);
    if (s == 0)
      note(tr, "t=" + std::to_string(t + 1) + " " + name + "[" + std::to_string(unit) + "]");
    return Rat(s);
  }

  void head(LimitTrace& tr, const RatVec& state) const {
    const RatTensor& Wa = t("Wa");
    Rat acc = t("ba").at(0, 0);
    for (int j = 0; j < Wa.cols; ++j) acc += Wa.at(0, j) * state[j];
    track(tr, acc);
    const int s = sgn(acc);
    if (s > 0) {
      tr.p = AsymScalar(Rat(1));
    } else if (s < 0) {
      tr.p = AsymScalar(Rat(0));
    } else {
      tr.p = AsymScalar(Rat(1) / 2);
      tr.head_witness = "head";
    }
  }

  LimitTrace eval_srn(const lang::SentenceMatrix& X) const {
    LimitTrace tr;
    RatVec h = h0;
    for (int t_idx = 0; t_idx < X.length(); ++t_idx) {
      RatVec next(hidden);
      for (int i = 0; i < hidden; ++i)
        next[i] = squash(tr, pre(t("W"), &t("U"), t("b"), i, X.rows[t_idx], &h), t_idx, "tanh", i);
      h = std::move(next);
      tr.h.push_back(wrap(h));
    }
    head(tr, h);
    return tr;
  }

  LimitTrace eval_gru(const lang::SentenceMatrix& X) const {
    LimitTrace tr;
    RatVec h = h0;
    for (int t_idx = 0; t_idx < X.length(); ++t_idx) {
      RatVec z(hidden), r(hidden);
      for (int i = 0; i < hidden; ++i) {
        z[i] = gate(tr, pre(t("Wz"), &t("Uz"), t("bz"), i, X.rows[t_idx], &h), t_idx, "z", i);
        r[i] = gate(tr, pre(t("Wr"), &t("Ur"), t("br"), i, X.rows[t_idx], &h), t_idx, "r", i);
      }
      RatVec rh(hidden);
      for (int i = 0; i < hidden; ++i) rh[i] = r[i] * h[i];
      RatVec next(hidden);
      for (int i = 0; i < hidden; ++i) {
        const Rat u = squash(tr, pre(t("Wu"), &t("Uu"), t("bu"), i, X.rows[t_idx], &rh), t_idx, "u", i);
        next[i] = z[i] * h[i] + (1 - z[i]) * u;
      }
      h = std::move(next);
      tr.h.push_back(wrap(h));
    }
    head(tr, h);
    return tr;
  }

  LimitTrace eval_lstm(const lang::SentenceMatrix& X) const {
    if (squash_output)
      throw UnsupportedError(
          "limit evaluation requires the identity output nonlinearity; tanh of an "
          "unscaled cell value is not exactly representable");
    LimitTrace tr;
    RatVec h = h0, c = c0;
    for (int t_idx = 0; t_idx < X.length(); ++t_idx) {
      RatVec next_c(hidden), next_h(hidden);
      for (int i = 0; i < hidden; ++i) {
        const Rat f = gate(tr, pre(t("Wf"), &t("Uf"), t("bf"), i, X.rows[t_idx], &h), t_idx, "f", i);
        const Rat in = gate(tr, pre(t("Wi"), &t("Ui"), t("bi"), i, X.rows[t_idx], &h), t_idx, "i", i);
        const Rat o = gate(tr, pre(t("Wo"), &t("Uo"), t("bo"), i, X.rows[t_idx], &h), t_idx, "o", i);
        const Rat ct = squash(tr, pre(t("Wc"), &t("Uc"), t("bc"), i, X.rows[t_idx], &h), t_idx, "c~", i);
        next_c[i] = f * c[i] + in * ct;
        next_h[i] = o * next_c[i];
      }
      c = std::move(next_c);
      h = std::move(next_h);
      tr.h.push_back(wrap(h));
      tr.c.push_back(wrap(c));
    }
    head(tr, h);
    return tr;
  }

  LimitTrace eval_counter(const lang::SentenceMatrix& X) const {
    LimitTrace tr;
    Rat h = h0.empty() ? Rat(0) : h0[0];
    for (int t_idx = 0; t_idx < X.length(); ++t_idx) {
      const Rat f = gate(tr, pre(t("Wf"), nullptr, t("bf"), 0, X.rows[t_idx], nullptr), t_idx, "f", 0);
      const Rat in = gate(tr, pre(t("Wi"), nullptr, t("bi"), 0, X.rows[t_idx], nullptr), t_idx, "i", 0);
      h = f * h + in;
      tr.h.push_back(wrap(RatVec{h}));
    }
    head(tr, RatVec{h});
    return tr;
  }

  LimitTrace eval_cnn(const lang::SentenceMatrix& X) const {
    LimitTrace tr;
    const RatTensor& Wh = t("Wh");
    const RatTensor& bh = t("bh");
    const int n = X.length();
    const int s = alphabet_size;
    RatVec pooled(hidden, Rat(-1));
    for (int t_idx = 0; t_idx < n; ++t_idx) {
      RatVec row(hidden);
      for (int f = 0; f < hidden; ++f) {
        Rat acc = bh.at(f, 0);
        for (int d = -window; d <= window; ++d) {
          const int src = t_idx + d;
          if (src < 0 || src >= n) continue;  // zero padding, contributes nothing
          acc += Wh.at(f, (d + window) * s + X.rows[src]);
        }
        row[f] = squash(tr, acc, t_idx, "filter", f);
        if (t_idx == 0 || row[f] > pooled[f]) pooled[f] = row[f];
      }
      tr.h.push_back(wrap(row));
    }
    tr.pooled = wrap(pooled);
    head(tr, pooled);
    return tr;
  }

  LimitTrace eval_attn(const lang::SentenceMatrix& X) const {
    LimitTrace tr;
    const RatTensor& Wv = t("Wv");
    const RatTensor& bv = t("bv");
    const RatTensor& Wk = t("Wk");
    const RatTensor& bk = t("bk");
    const RatTensor& Wq = t("Wq");
    const int n = X.length();
    const int dv = hidden;
    const int dk = Wk.rows;
    const int key_dim = dk + (position_keys ? 1 : 0);
    std::vector<RatVec> values, keys;
    for (int t_idx = 0; t_idx < n; ++t_idx) {
      RatVec v(dv);
      for (int j = 0; j < dv; ++j)
        v[j] = gate(tr, pre(Wv, nullptr, bv, j, X.rows[t_idx], nullptr), t_idx, "v", j);
      RatVec k(key_dim);
      for (int j = 0; j < dk; ++j)
        k[j] = gate(tr, pre(Wk, nullptr, bk, j, X.rows[t_idx], nullptr), t_idx, "k", j);
      if (position_keys) k[dk] = Rat(t_idx + 1);  // saturated step counter
      values.push_back(std::move(v));
      keys.push_back(std::move(k));
      tr.values.push_back(wrap(values.back()));

      // Attend over the prefix with query N*(Wq v_t): all scores share the
      // factor N, so the footnote order reduces to comparing the rational
      // score coefficients.
      RatVec q(key_dim);
      for (int j = 0; j < key_dim; ++j) {
        Rat acc = 0;
        for (int c = 0; c < dv; ++c) acc += Wq.at(j, c) * values.back()[c];
        q[j] = acc;
      }
      std::vector<Rat> scores(t_idx + 1);
      for (int u = 0; u <= t_idx; ++u) {
        Rat acc = 0;
        for (int j = 0; j < key_dim; ++j) acc += q[j] * keys[u][j];
        scores[u] = acc;
      }
      Rat mx = scores[0];
      for (const Rat& sc : scores) mx = std::max(mx, sc);
      long long m = 0;
      RatVec sum(dv, Rat(0));
      for (int u = 0; u <= t_idx; ++u) {
        if (scores[u] != mx) continue;
        ++m;
        for (int j = 0; j < dv; ++j) sum[j] += values[u][j];
      }
      if (m > 1) ++tr.constant_tie_count;
      for (int j = 0; j < dv; ++j) sum[j] /= m;
      tr.h.push_back(wrap(sum));
    }
    RatVec summary(dv, Rat(0));
    if (n > 0)
      for (int j = 0; j < dv; ++j) summary[j] = tr.h.back()[j].value();
    head(tr, summary);
    return tr;
  }

  LimitTrace evaluate(const lang::SentenceMatrix& X) const {
    if (X.width != alphabet_size) throw ShapeError("input width mismatch");
    switch (arch) {
      case nets::Arch::Srn: return eval_srn(X);
      case nets::Arch::Gru: return eval_gru(X);
      case nets::Arch::Lstm: return eval_lstm(X);
      case nets::Arch::CounterCell: return eval_counter(X);
      case nets::Arch::Cnn: return eval_cnn(X);
      case nets::Arch::AttnEnc: return eval_attn(X);
    }
    throw ShapeError("unreachable architecture");
  }
};

LimitEvaluator::LimitEvaluator(const nets::NetworkSpec& net) : impl_(new Impl) {
  net.validate();
  impl_->arch = net.arch;
  impl_->hidden = net.hidden;
  impl_->window = net.window;
  impl_->alphabet_size = net.alphabet.size();
  impl_->squash_output = net.lstm_squash_output;
  impl_->position_keys = net.attn_position_keys;
  for (const auto& [name, tensor] : net.weights) impl_->w.emplace(name, rationalize(tensor));
  impl_->h0.assign(net.hidden, Rat(0));
  for (std::size_t i = 0; i < net.h0.size(); ++i) impl_->h0[i] = Rat(net.h0[i]);
  impl_->c0.assign(net.hidden, Rat(0));
  for (std::size_t i = 0; i < net.c0.size(); ++i) impl_->c0[i] = Rat(net.c0[i]);
}

LimitEvaluator::~LimitEvaluator() = default;
LimitEvaluator::LimitEvaluator(LimitEvaluator&&) noexcept = default;
LimitEvaluator& LimitEvaluator::operator=(LimitEvaluator&&) noexcept = default;

LimitTrace LimitEvaluator::evaluate(const lang::SentenceMatrix& X) const {
  return impl_->evaluate(X);
}

LimitTrace evaluate_limits(const nets::NetworkSpec& net, const lang::SentenceMatrix& X) {
  return LimitEvaluator(net).evaluate(X);
}

}  // namespace na::asym
