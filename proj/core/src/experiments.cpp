// SPDX-License-Identifier: Apache-2.0
#include "na/experiments.hpp"

#include <ostream>
#include <sstream>

#include <json.hpp>

#include "na/errors.hpp"

namespace na::experiments {

CountingRun run_counting(const train::TrainConfig& cfg_in) {
  train::TrainConfig cfg = cfg_in;
  cfg.apply_scale();
  const lang::Corpus train_set =
      lang::gen_counting_corpus(cfg.train_lo, cfg.train_hi, cfg.train_count, cfg.seed * 7 + 1);
  const lang::Corpus test_set =
      lang::gen_counting_corpus(cfg.test_lo, cfg.test_hi, cfg.test_count, cfg.seed * 7 + 2);
  CountingRun run;
  run.cfg = cfg;
  run.model = train::train_lm(train_set, cfg, &run.metrics.loss_curve);
  const train::Metrics eval = train::eval_counting(run.model, test_set);
  run.metrics.overall_acc = eval.overall_acc;
  run.metrics.acc_on_c = eval.acc_on_c;
  return run;
}

CountingBest run_counting_best_of(train::TrainConfig base, int num_seeds, std::ostream* log) {
  if (num_seeds < 1) throw ConfigError("need at least one seed");
  CountingBest out;
  bool have = false;
  for (int s = 0; s < num_seeds; ++s) {
    train::TrainConfig cfg = base;
    cfg.seed = base.seed + static_cast<std::uint64_t>(s);
    CountingRun run = run_counting(cfg);
    if (log)
      (*log) << "  seed " << cfg.seed << ": acc " << run.metrics.overall_acc << "% acc-on-c "
             << run.metrics.acc_on_c << "%\n";
    out.all.push_back(run.metrics);
    const auto key = std::make_pair(run.metrics.acc_on_c, run.metrics.overall_acc);
    const auto best_key = std::make_pair(out.best.metrics.acc_on_c, out.best.metrics.overall_acc);
    if (!have || key > best_key) {
      out.best = std::move(run);
      have = true;
    }
  }
  return out;
}

ReversalTrials run_reversal_trials(train::ReversalConfig base, int trials, std::ostream* log) {
  if (trials < 1) throw ConfigError("need at least one trial");
  ReversalTrials out;
  double best_val = -1.0;
  for (int s = 0; s < trials; ++s) {
    train::ReversalConfig cfg = base;
    cfg.seed = base.seed + static_cast<std::uint64_t>(s);
    train::ReversalOutcome run = train::train_seq2seq_reversal(base.attention, cfg);
    if (log)
      (*log) << "  trial " << s << ": val " << run.metrics.val_exact << "% gen "
             << run.metrics.gen_exact << "%\n";
    out.max_val = std::max(out.max_val, run.metrics.val_exact);
    out.max_gen = std::max(out.max_gen, run.metrics.gen_exact);
    if (run.metrics.val_exact > best_val) {
      best_val = run.metrics.val_exact;
      out.best_model = std::move(run.model);
    }
    out.all.push_back(run.metrics);
  }
  return out;
}

std::string metrics_json(const train::Metrics& m) {
  nlohmann::json j;
  j["overall_acc"] = m.overall_acc;
  j["acc_on_c"] = m.acc_on_c;
  j["val_exact"] = m.val_exact;
  j["gen_exact"] = m.gen_exact;
  j["loss_curve"] = m.loss_curve;
  return j.dump(2);
}

std::string metrics_csv(const train::Metrics& m) {
  std::ostringstream os;
  os << "metric,value\n";
  os << "overall_acc," << m.overall_acc << "\n";
  os << "acc_on_c," << m.acc_on_c << "\n";
  os << "val_exact," << m.val_exact << "\n";
  os << "gen_exact," << m.gen_exact << "\n";
  return os.str();
}

}  // namespace na::experiments
