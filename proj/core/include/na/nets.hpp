// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "na/checkpoint.hpp"
#include "na/lang.hpp"
#include "na/tensor.hpp"

namespace na::nets {

enum class Arch { Srn, Gru, Lstm, Cnn, AttnEnc, CounterCell };

const char* arch_name(Arch a);
Arch arch_from_name(const std::string& name);

// A concrete network: architecture tag plus named weight tensors. Weights
// are the quantities that get scaled in the large-weight limit; the optional
// initial state h0/c0 is a limit value and is never scaled.
//
// Tensor names by architecture (alphabet size s, hidden size k):
//   srn:          W(k,s) U(k,k) b(k,1) Wa(1,k) ba(1,1)
//   gru:          Wz Uz bz Wr Ur br Wu Uu bu (shapes as srn) Wa ba
//   lstm:         Wf Uf bf Wi Ui bi Wo Uo bo Wc Uc bc Wa ba
//   cnn:          Wh(K,(2*window+1)*s) bh(K,1) Wa(1,K) ba, window >= 0
//   attn-enc:     Wv(dv,s) bv Wk(dk,s) bk Wq(dk+pos,dv) Wa(1,dv) ba
//   counter-cell: Wf(1,s) bf Wi(1,s) bi Wa(1,1) ba, hidden = 1
struct NetworkSpec {
  Arch arch = Arch::Srn;
  lang::Alphabet alphabet;
  int hidden = 0;
  int window = 0;                   // cnn only
  bool lstm_squash_output = false;  // output nonlinearity: identity (default) or tanh
  bool attn_position_keys = false;  // append a step-count coordinate to every key
  std::map<std::string, Tensor> weights;
  std::vector<double> h0;  // empty means zeros
  std::vector<double> c0;  // lstm only; empty means zeros

  const Tensor& tensor(const std::string& name) const;
  void require_shape(const std::string& name, int rows, int cols) const;
  void validate() const;

  Checkpoint to_checkpoint() const;
  static NetworkSpec from_checkpoint(const Checkpoint& ck);
  void save_file(const std::string& path) const;
  static NetworkSpec load_file(const std::string& path);
};

double sigmoid(double x);

// Single recurrent steps. `scale` multiplies every weight, mirroring the
// theta -> N*theta substitution.
std::vector<double> srn_step(const std::vector<double>& x, const std::vector<double>& h_prev,
                             const Tensor& W, const Tensor& U, const Tensor& b,
                             double scale = 1.0);
std::vector<double> gru_step(const std::vector<double>& x, const std::vector<double>& h_prev,
                             const NetworkSpec& net, double scale = 1.0);
struct LstmState {
  std::vector<double> h;
  std::vector<double> c;
};
LstmState lstm_step(const std::vector<double>& x, const LstmState& prev, const NetworkSpec& net,
                    double scale = 1.0);

// The two-parameter counter cell, taken literally: h' = sigmoid(theta1*x)*h
// + sigmoid(theta2*x) with a scalar bit x in {0,1}.
double counter_cell_step(int x_bit, double h_prev, const std::array<double, 2>& theta,
                         double scale = 1.0);

// Dot-product attention: softmax(q K^T) V. K and V have one row per step.
std::vector<double> attention(const std::vector<double>& q, const Tensor& K, const Tensor& V);

struct CnnOut {
  std::vector<std::vector<double>> H;  // per-position filter activations
  std::vector<double> pooled;          // per-filter max over positions
  double p = 0.0;
};
CnnOut cnn_forward(const lang::SentenceMatrix& X, const NetworkSpec& net, double scale = 1.0);

struct HiddenTrace {
  std::vector<std::vector<double>> h;  // per-step hidden state (summary h_t for attention)
  std::vector<std::vector<double>> c;  // lstm cell states
  double p = 0.0;                      // acceptance probability, strictly in (0,1)
};

HiddenTrace acceptor_forward(const NetworkSpec& net, const lang::SentenceMatrix& X,
                             double scale = 1.0);

}  // namespace na::nets
