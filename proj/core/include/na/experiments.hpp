// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "na/train.hpp"

namespace na::experiments {

struct CountingRun {
  train::TrainConfig cfg;
  train::Metrics metrics;
  train::LmModel model;
};

// One training run on a freshly generated corpus plus held-out evaluation.
CountingRun run_counting(const train::TrainConfig& cfg);

// Best of `num_seeds` seeded runs, selected by (acc on c, overall acc) on
// the held-out range; mirrors the max-over-trials reporting of the
// reversal table.
struct CountingBest {
  CountingRun best;
  std::vector<train::Metrics> all;
};
CountingBest run_counting_best_of(train::TrainConfig base, int num_seeds,
                                  std::ostream* log = nullptr);

struct ReversalTrials {
  double max_val = 0.0;  // max validation exact match over trials
  double max_gen = 0.0;  // max generalization exact match over trials
  std::vector<train::Metrics> all;
  train::Seq2Seq best_model;  // model of the best-validation trial
};
ReversalTrials run_reversal_trials(train::ReversalConfig base, int trials,
                                   std::ostream* log = nullptr);

// metrics.json / metrics.csv emission shared by the CLI and the reports.
std::string metrics_json(const train::Metrics& m);
std::string metrics_csv(const train::Metrics& m);

}  // namespace na::experiments
