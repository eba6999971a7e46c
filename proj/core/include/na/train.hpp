// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "na/checkpoint.hpp"
#include "na/lang.hpp"
#include "na/nets.hpp"
#include "na/rng.hpp"

namespace na::train {

// Configuration of one counting-LM run. Together with the corpus seeds it
// fully determines the run.
struct TrainConfig {
  nets::Arch arch = nets::Arch::Lstm;
  int hidden = 2;
  double lr = 0.5;
  int epochs = 30;
  double noise_sd = 0.0;  // 0 disables the noise layer entirely
  double clip_norm = 5.0;
  std::uint64_t seed = 1;

  int train_count = 400;
  int train_lo = 2, train_hi = 64;
  int test_count = 128;
  int test_lo = 96, test_hi = 128;

  // The full-scale ranges from the counting task; off by default because a
  // run takes hours rather than seconds.
  bool full_scale = false;

  void apply_scale();  // rewrites ranges when full_scale is set
};

struct Metrics {
  double overall_acc = 0.0;  // percent
  double acc_on_c = 0.0;     // percent, positions whose gold symbol is 'c'
  double val_exact = 0.0;    // percent, reversal validation exact match
  double gen_exact = 0.0;    // percent, reversal generalization exact match
  std::vector<double> loss_curve;
};

// state + iid Gaussian noise; sd = 0 returns the input unchanged without
// consuming randomness.
std::vector<double> inject_noise(const std::vector<double>& state, double sd, Rng& rng);

// Language model with a recurrent core (srn/gru/lstm) and a softmax head
// over alphabet + end marker. Parameters live in one flat vector; the
// layout is shared by the tape builder and the plain evaluator.
class LmModel {
 public:
  LmModel() = default;
  LmModel(nets::Arch arch, int hidden, const lang::Alphabet& alphabet, std::uint64_t init_seed);

  nets::Arch arch() const { return arch_; }
  int hidden() const { return hidden_; }
  const lang::Alphabet& alphabet() const { return alphabet_; }
  int vocab() const { return alphabet_.size() + 1; }  // + end marker
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Greedy next-symbol predictions for every position of `input`
  // (characters, with lang::kEos for the end marker).
  std::string predict(const std::string& input) const;

  Checkpoint to_checkpoint() const;
  static LmModel from_checkpoint(const Checkpoint& ck);

  // Parameter block offsets; exposed for the trainer.
  struct Layout {
    struct Block {
      int offset, rows, cols;
    };
    std::vector<std::pair<std::string, Block>> blocks;
    int total = 0;
    const Block& block(const std::string& name) const;
  };
  const Layout& layout() const { return layout_; }

 private:
  nets::Arch arch_ = nets::Arch::Lstm;
  int hidden_ = 0;
  lang::Alphabet alphabet_;
  std::vector<double> params_;
  Layout layout_;

  void build_layout();
  friend class LmTrainer;
};

// Trains a language model on next-symbol cross entropy with plain SGD,
// gradient-norm clipping and learning-rate halving on plateau. Throws
// AbortedRunError on NaN loss.
LmModel train_lm(const lang::Corpus& corpus, const TrainConfig& cfg,
                 std::vector<double>* loss_curve = nullptr);

// Greedy evaluation on a held-out corpus: overall next-symbol accuracy and
// accuracy restricted to positions whose gold symbol is 'c'.
Metrics eval_counting(const LmModel& model, const lang::Corpus& corpus);

// Same scoring against an arbitrary predictor (used by oracle tests):
// predict(input) returns one character per position.
Metrics eval_counting_with(const lang::Corpus& corpus,
                           const std::function<std::string(const std::string&)>& predict);

// Encoder-decoder reversal task.
struct ReversalConfig {
  bool attention = true;
  int hidden = 10;
  double lr = 0.25;
  int epochs = 30;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;

  int train_count = 800;
  double train_mean = 10.0, train_sd = 2.0;
  int val_count = 200;
  double gen_mean = 30.0, gen_sd = 3.0;
  int gen_count = 200;
};

class Seq2Seq {
 public:
  Seq2Seq() = default;
  Seq2Seq(bool attention, int hidden, std::uint64_t init_seed);

  bool attention() const { return attention_; }
  int hidden() const { return hidden_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Greedy decode; stops at the end marker or after max_steps.
  std::string decode(const std::string& input, int max_steps) const;

  Checkpoint to_checkpoint() const;
  static Seq2Seq from_checkpoint(const Checkpoint& ck);

  struct Layout {
    struct Block {
      int offset, rows, cols;
    };
    std::vector<std::pair<std::string, Block>> blocks;
    int total = 0;
    const Block& block(const std::string& name) const;
  };
  const Layout& layout() const { return layout_; }

 private:
  bool attention_ = true;
  int hidden_ = 0;
  std::vector<double> params_;
  Layout layout_;

  void build_layout();
  friend class Seq2SeqTrainer;
};

struct ReversalOutcome {
  Metrics metrics;
  Seq2Seq model;
};

// Trains the reversal transducer (teacher forcing; evaluation feeds the
// decoder its own previous prediction) and reports per-sequence exact-match
// accuracy on the validation and generalization corpora.
ReversalOutcome train_seq2seq_reversal(bool with_attention, const ReversalConfig& cfg);

// Diagnostic hooks: the exact per-sequence training losses with analytic
// gradients, for finite-difference comparison.
double lm_loss_and_grad(const LmModel& model, const lang::CorpusItem& item,
                        std::vector<double>* grads);
double seq2seq_loss_and_grad(const Seq2Seq& model, const lang::CorpusItem& item,
                             std::vector<double>* grads);

}  // namespace na::train
