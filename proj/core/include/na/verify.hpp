// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace na::verify {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  bool skipped = false;
  std::string detail;
  double seconds = 0.0;
};

// Runs one acceptance criterion (1..9).
CriterionResult run_criterion(int id);

// Runs the full acceptance matrix, printing one pass/fail line per
// criterion. Criteria 7 and 8 (the training experiments) are skipped when
// skip_training is set.
std::vector<CriterionResult> run_acceptance(bool skip_training, std::ostream& log);

// True iff every non-skipped criterion passed.
bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace na::verify
