// SPDX-License-Identifier: Apache-2.0
#include "na/nets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "na/errors.hpp"

namespace na::nets {

const char* arch_name(Arch a) {
  switch (a) {
    case Arch::Srn: return "srn";
    case Arch::Gru: return "gru";
    case Arch::Lstm: return "lstm";
    case Arch::Cnn: return "cnn";
    case Arch::AttnEnc: return "attn-enc";
    case Arch::CounterCell: return "counter-cell";
  }
  return "?";
}

Arch arch_from_name(const std::string& name) {
  if (name == "srn") return Arch::Srn;
  if (name == "gru") return Arch::Gru;
  if (name == "lstm") return Arch::Lstm;
  if (name == "cnn") return Arch::Cnn;
  if (name == "attn-enc") return Arch::AttnEnc;
  if (name == "counter-cell") return Arch::CounterCell;
  throw ParseError("unknown architecture: " + name);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

const Tensor& NetworkSpec::tensor(const std::string& name) const {
  auto it = weights.find(name);
  if (it == weights.end()) throw ShapeError("missing tensor '" + name + "' for " + arch_name(arch));
  return it->second;
}

void NetworkSpec::require_shape(const std::string& name, int rows, int cols) const {
  const Tensor& t = tensor(name);
  if (!t.same_shape(rows, cols))
    throw ShapeError("tensor '" + name + "' has shape " + std::to_string(t.rows) + "x" +
                     std::to_string(t.cols) + ", expected " + std::to_string(rows) + "x" +
                     std::to_string(cols));
}

void NetworkSpec::validate() const {
  const int s = alphabet.size();
  const int k = hidden;
  // A CNN may legitimately have zero filters (a grammar with no forbidden
  // patterns); every other architecture needs at least one unit.
  if (k < 0 || (k == 0 && arch != Arch::Cnn)) throw ShapeError("hidden size must be positive");
  auto gate = [&](const std::string& w, const std::string& u, const std::string& b) {
    require_shape(w, k, s);
    require_shape(u, k, k);
    require_shape(b, k, 1);
  };
  switch (arch) {
    case Arch::Srn:
      gate("W", "U", "b");
      require_shape("Wa", 1, k);
      require_shape("ba", 1, 1);
      break;
    case Arch::Gru:
      gate("Wz", "Uz", "bz");
      gate("Wr", "Ur", "br");
      gate("Wu", "Uu", "bu");
      require_shape("Wa", 1, k);
      require_shape("ba", 1, 1);
      break;
    case Arch::Lstm:
      gate("Wf", "Uf", "bf");
      gate("Wi", "Ui", "bi");
      gate("Wo", "Uo", "bo");
      gate("Wc", "Uc", "bc");
      require_shape("Wa", 1, k);
      require_shape("ba", 1, 1);
      break;
    case Arch::Cnn: {
      if (window < 0) throw ShapeError("cnn window must be >= 0");
      const int cols = (2 * window + 1) * s;
      const Tensor& wh = tensor("Wh");
      if (wh.rows != k || wh.cols != cols) throw ShapeError("Wh shape inconsistent with window");
      require_shape("bh", k, 1);
      require_shape("Wa", 1, k);
      require_shape("ba", 1, 1);
      break;
    }
    case Arch::AttnEnc: {
      const Tensor& wv = tensor("Wv");
      if (wv.rows != k || wv.cols != s) throw ShapeError("Wv shape mismatch");
      require_shape("bv", k, 1);
      const Tensor& wk = tensor("Wk");
      if (wk.cols != s && wk.rows != 0) throw ShapeError("Wk shape mismatch");
      require_shape("bk", wk.rows, wk.rows == 0 ? 0 : 1);
      const int key_dim = wk.rows + (attn_position_keys ? 1 : 0);
      if (key_dim <= 0) throw ShapeError("attention keys have dimension 0");
      require_shape("Wq", key_dim, k);
      require_shape("Wa", 1, k);
      require_shape("ba", 1, 1);
      break;
    }
    case Arch::CounterCell:
      if (k != 1) throw ShapeError("counter cell has exactly one hidden unit");
      require_shape("Wf", 1, s);
      require_shape("bf", 1, 1);
      require_shape("Wi", 1, s);
      require_shape("bi", 1, 1);
      require_shape("Wa", 1, 1);
      require_shape("ba", 1, 1);
      break;
  }
  if (!h0.empty() && static_cast<int>(h0.size()) != k) throw ShapeError("h0 size mismatch");
  if (!c0.empty() && (arch != Arch::Lstm || static_cast<int>(c0.size()) != k))
    throw ShapeError("c0 only valid for lstm with matching size");
}

Checkpoint NetworkSpec::to_checkpoint() const {
  Checkpoint ck;
  ck.kind = arch_name(arch);
  ck.set_meta("alphabet", alphabet.symbols());
  ck.set_meta("hidden", std::to_string(hidden));
  if (arch == Arch::Cnn) ck.set_meta("window", std::to_string(window));
  if (arch == Arch::Lstm) ck.set_meta("output", lstm_squash_output ? "tanh" : "identity");
  if (arch == Arch::AttnEnc) ck.set_meta("position_keys", attn_position_keys ? "1" : "0");
  for (const auto& [name, t] : weights) ck.tensors.emplace_back(name, t);
  if (!h0.empty()) ck.tensors.emplace_back("h0", Tensor(static_cast<int>(h0.size()), 1, h0));
  if (!c0.empty()) ck.tensors.emplace_back("c0", Tensor(static_cast<int>(c0.size()), 1, c0));
  return ck;
}

NetworkSpec NetworkSpec::from_checkpoint(const Checkpoint& ck) {
  NetworkSpec net;
  net.arch = arch_from_name(ck.kind);
  const std::string* alpha = ck.meta_value("alphabet");
  const std::string* hidden = ck.meta_value("hidden");
  if (!alpha || !hidden) throw ParseError("checkpoint missing alphabet/hidden metadata");
  net.alphabet = lang::Alphabet(*alpha);
  net.hidden = std::stoi(*hidden);
  if (const std::string* w = ck.meta_value("window")) net.window = std::stoi(*w);
  if (const std::string* o = ck.meta_value("output")) net.lstm_squash_output = (*o == "tanh");
  if (const std::string* p = ck.meta_value("position_keys")) net.attn_position_keys = (*p == "1");
  for (const auto& [name, t] : ck.tensors) {
    if (name == "h0") {
      net.h0 = t.v;
    } else if (name == "c0") {
      net.c0 = t.v;
    } else {
      net.weights.emplace(name, t);
    }
  }
  net.validate();
  return net;
}

void NetworkSpec::save_file(const std::string& path) const { to_checkpoint().save_file(path); }

NetworkSpec NetworkSpec::load_file(const std::string& path) {
  return from_checkpoint(Checkpoint::load_file(path));
}

namespace {

std::vector<double> gate_pre(const Tensor& W, const Tensor& U, const Tensor& b,
                             const std::vector<double>& x, const std::vector<double>& h,
                             double scale) {
  std::vector<double> pre = matvec(W, x);
  const std::vector<double> rec = matvec(U, h);
  for (int i = 0; i < static_cast<int>(pre.size()); ++i)
    pre[i] = scale * (pre[i] + rec[i] + b.v[i]);
  return pre;
}

std::vector<double> state_or_zeros(const std::vector<double>& s, int k) {
  return s.empty() ? std::vector<double>(k, 0.0) : s;
}

}  // namespace

std::vector<double> srn_step(const std::vector<double>& x, const std::vector<double>& h_prev,
                             const Tensor& W, const Tensor& U, const Tensor& b, double scale) {
  if (static_cast<int>(h_prev.size()) != U.cols) throw ShapeError("h_prev size mismatch");
  std::vector<double> h = gate_pre(W, U, b, x, h_prev, scale);
  for (double& v : h) v = std::tanh(v);
  return h;
}

std::vector<double> gru_step(const std::vector<double>& x, const std::vector<double>& h_prev,
                             const NetworkSpec& net, double scale) {
  const int k = net.hidden;
  if (static_cast<int>(h_prev.size()) != k) throw ShapeError("h_prev size mismatch");
  std::vector<double> z = gate_pre(net.tensor("Wz"), net.tensor("Uz"), net.tensor("bz"), x, h_prev, scale);
  std::vector<double> r = gate_pre(net.tensor("Wr"), net.tensor("Ur"), net.tensor("br"), x, h_prev, scale);
  for (double& v : z) v = sigmoid(v);
  for (double& v : r) v = sigmoid(v);
  std::vector<double> rh(k);
  for (int i = 0; i < k; ++i) rh[i] = r[i] * h_prev[i];
  std::vector<double> u = gate_pre(net.tensor("Wu"), net.tensor("Uu"), net.tensor("bu"), x, rh, scale);
  for (double& v : u) v = std::tanh(v);
  std::vector<double> h(k);
  for (int i = 0; i < k; ++i) h[i] = z[i] * h_prev[i] + (1.0 - z[i]) * u[i];
  return h;
}

LstmState lstm_step(const std::vector<double>& x, const LstmState& prev, const NetworkSpec& net,
                    double scale) {
  const int k = net.hidden;
  if (static_cast<int>(prev.h.size()) != k || static_cast<int>(prev.c.size()) != k)
    throw ShapeError("lstm state size mismatch");
  auto gate = [&](const char* w, const char* u, const char* b) {
    return gate_pre(net.tensor(w), net.tensor(u), net.tensor(b), x, prev.h, scale);
  };
  std::vector<double> f = gate("Wf", "Uf", "bf");
  std::vector<double> i = gate("Wi", "Ui", "bi");
  std::vector<double> o = gate("Wo", "Uo", "bo");
  std::vector<double> ct = gate("Wc", "Uc", "bc");
  for (double& v : f) v = sigmoid(v);
  for (double& v : i) v = sigmoid(v);
  for (double& v : o) v = sigmoid(v);
  for (double& v : ct) v = std::tanh(v);
  LstmState next;
  next.c.resize(k);
  next.h.resize(k);
  for (int j = 0; j < k; ++j) {
    next.c[j] = f[j] * prev.c[j] + i[j] * ct[j];
    const double out = net.lstm_squash_output ? std::tanh(next.c[j]) : next.c[j];
    next.h[j] = o[j] * out;
  }
  return next;
}

double counter_cell_step(int x_bit, double h_prev, const std::array<double, 2>& theta,
                         double scale) {
  const double f = sigmoid(scale * theta[0] * x_bit);
  const double i = sigmoid(scale * theta[1] * x_bit);
  return f * h_prev + i;
}

std::vector<double> attention(const std::vector<double>& q, const Tensor& K, const Tensor& V) {
  if (K.rows == 0 || V.rows == 0) throw EvalError("attention over zero steps is undefined");
  if (K.rows != V.rows) throw ShapeError("K and V must have the same number of rows");
  if (static_cast<int>(q.size()) != K.cols) throw ShapeError("query/key dimension mismatch");
  const int n = K.rows;
  std::vector<double> scores(n, 0.0);
  for (int t = 0; t < n; ++t)
    for (int j = 0; j < K.cols; ++j) scores[t] += q[j] * K.at(t, j);
  const double mx = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double& s : scores) {
    s = std::exp(s - mx);
    z += s;
  }
  std::vector<double> out(V.cols, 0.0);
  for (int t = 0; t < n; ++t) {
    const double w = scores[t] / z;
    for (int j = 0; j < V.cols; ++j) out[j] += w * V.at(t, j);
  }
  return out;
}

CnnOut cnn_forward(const lang::SentenceMatrix& X, const NetworkSpec& net, double scale) {
  if (X.width != net.alphabet.size()) throw ShapeError("input width mismatch");
  const Tensor& Wh = net.tensor("Wh");
  const Tensor& bh = net.tensor("bh");
  const int K = net.hidden;
  const int w = net.window;
  const int s = X.width;
  const int n = X.length();
  CnnOut out;
  if (n == 0) {
    // Max over an empty set of positions: define the pooled value as the
    // filter minimum, so no pattern counts as detected.
    out.pooled.assign(K, -1.0);
  } else {
    out.pooled.assign(K, -std::numeric_limits<double>::infinity());
    std::vector<double> win(static_cast<std::size_t>(2 * w + 1) * s, 0.0);
    for (int t = 0; t < n; ++t) {
      std::fill(win.begin(), win.end(), 0.0);
      for (int d = -w; d <= w; ++d) {
        const int src = t + d;
        if (src < 0 || src >= n) continue;  // zero-vector padding
        win[static_cast<std::size_t>(d + w) * s + X.rows[src]] = 1.0;
      }
      std::vector<double> act = matvec(Wh, win);
      for (int f = 0; f < K; ++f) {
        act[f] = std::tanh(scale * (act[f] + bh.v[f]));
        out.pooled[f] = std::max(out.pooled[f], act[f]);
      }
      out.H.push_back(std::move(act));
    }
  }
  const Tensor& Wa = net.tensor("Wa");
  double pre = net.tensor("ba").v[0];
  for (int f = 0; f < K; ++f) pre += Wa.v[f] * out.pooled[f];
  out.p = sigmoid(scale * pre);
  return out;
}

namespace {

// Continuous attention-encoder forward pass; see asym_eval.cpp for the
// matching limit semantics.
HiddenTrace attn_forward(const NetworkSpec& net, const lang::SentenceMatrix& X, double scale) {
  const int n = X.length();
  const Tensor& Wv = net.tensor("Wv");
  const Tensor& bv = net.tensor("bv");
  const Tensor& Wk = net.tensor("Wk");
  const Tensor& bk = net.tensor("bk");
  const Tensor& Wq = net.tensor("Wq");
  const int dv = Wv.rows;
  const int dk = Wk.rows;
  const int key_dim = dk + (net.attn_position_keys ? 1 : 0);
  HiddenTrace trace;
  Tensor V(n, dv), Km(n, key_dim);
  const double step_count_unit = nets::sigmoid(scale);  // counter increment, saturates to 1
  for (int t = 0; t < n; ++t) {
    const std::vector<double> x = X.row(t);
    std::vector<double> v = matvec(Wv, x);
    for (int j = 0; j < dv; ++j) V.at(t, j) = sigmoid(scale * (v[j] + bv.v[j]));
    if (dk > 0) {
      std::vector<double> kk = matvec(Wk, x);
      for (int j = 0; j < dk; ++j) Km.at(t, j) = sigmoid(scale * (kk[j] + bk.v[j]));
    }
    if (net.attn_position_keys) Km.at(t, dk) = step_count_unit * (t + 1);
  }
  for (int t = 0; t < n; ++t) {
    std::vector<double> vt(dv);
    for (int j = 0; j < dv; ++j) vt[j] = V.at(t, j);
    std::vector<double> q = matvec(Wq, vt);
    for (double& s : q) s *= scale;
    Tensor Kt(t + 1, key_dim), Vt(t + 1, dv);
    for (int u = 0; u <= t; ++u) {
      for (int j = 0; j < key_dim; ++j) Kt.at(u, j) = Km.at(u, j);
      for (int j = 0; j < dv; ++j) Vt.at(u, j) = V.at(u, j);
    }
    trace.h.push_back(attention(q, Kt, Vt));
  }
  const Tensor& Wa = net.tensor("Wa");
  double pre = net.tensor("ba").v[0];
  const std::vector<double> hn = n > 0 ? trace.h.back() : std::vector<double>(dv, 0.0);
  for (int j = 0; j < dv; ++j) pre += Wa.v[j] * hn[j];
  trace.p = sigmoid(scale * pre);
  return trace;
}

}  // namespace

HiddenTrace acceptor_forward(const NetworkSpec& net, const lang::SentenceMatrix& X, double scale) {
  if (X.width != net.alphabet.size()) throw ShapeError("input width mismatch");
  net.validate();
  const int n = X.length();
  const int k = net.hidden;
  HiddenTrace trace;
  switch (net.arch) {
    case Arch::Srn: {
      std::vector<double> h = state_or_zeros(net.h0, k);
      for (int t = 0; t < n; ++t) {
        h = srn_step(X.row(t), h, net.tensor("W"), net.tensor("U"), net.tensor("b"), scale);
        trace.h.push_back(h);
      }
      double pre = net.tensor("ba").v[0];
      for (int j = 0; j < k; ++j) pre += net.tensor("Wa").v[j] * h[j];
      trace.p = sigmoid(scale * pre);
      return trace;
    }
    case Arch::Gru: {
      std::vector<double> h = state_or_zeros(net.h0, k);
      for (int t = 0; t < n; ++t) {
        h = gru_step(X.row(t), h, net, scale);
        trace.h.push_back(h);
      }
      double pre = net.tensor("ba").v[0];
      for (int j = 0; j < k; ++j) pre += net.tensor("Wa").v[j] * h[j];
      trace.p = sigmoid(scale * pre);
      return trace;
    }
    case Arch::Lstm: {
      LstmState st{state_or_zeros(net.h0, k), state_or_zeros(net.c0, k)};
      for (int t = 0; t < n; ++t) {
        st = lstm_step(X.row(t), st, net, scale);
        trace.h.push_back(st.h);
        trace.c.push_back(st.c);
      }
      double pre = net.tensor("ba").v[0];
      for (int j = 0; j < k; ++j) pre += net.tensor("Wa").v[j] * st.h[j];
      trace.p = sigmoid(scale * pre);
      return trace;
    }
    case Arch::CounterCell: {
      double h = net.h0.empty() ? 0.0 : net.h0[0];
      const Tensor& Wf = net.tensor("Wf");
      const Tensor& Wi = net.tensor("Wi");
      const double bf = net.tensor("bf").v[0];
      const double bi = net.tensor("bi").v[0];
      for (int t = 0; t < n; ++t) {
        const std::vector<double> x = X.row(t);
        double fpre = bf, ipre = bi;
        for (int j = 0; j < X.width; ++j) {
          fpre += Wf.v[j] * x[j];
          ipre += Wi.v[j] * x[j];
        }
        h = sigmoid(scale * fpre) * h + sigmoid(scale * ipre);
        trace.h.push_back({h});
      }
      trace.p = sigmoid(scale * (net.tensor("Wa").v[0] * h + net.tensor("ba").v[0]));
      return trace;
    }
    case Arch::Cnn: {
      CnnOut out = cnn_forward(X, net, scale);
      trace.h = std::move(out.H);
      trace.p = out.p;
      return trace;
    }
    case Arch::AttnEnc:
      return attn_forward(net, X, scale);
  }
  throw ShapeError("unreachable architecture");
}

}  // namespace na::nets
