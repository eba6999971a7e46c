// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace na {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad user-supplied configuration (counts, ranges, duplicate symbols, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file (DFA, grammar, corpus, checkpoint).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Tensor dimensions inconsistent with the declared architecture.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A symbol outside the declared alphabet.
class UnknownSymbolError : public Error {
 public:
  using Error::Error;
};

// Ill-defined value arithmetic in the limit semantics (0*inf, inf-inf).
class EvalError : public Error {
 public:
  using Error::Error;
};

// Network configuration the limit evaluator refuses to guess about
// (for example an infinity-valued state feeding a scaled affine map).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Enumeration would exceed the configured input budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

// The scale search exhausted its doubling schedule.
class NoConvergenceError : public Error {
 public:
  using Error::Error;
};

// Training run hit a NaN loss; carries the epoch where it happened.
class AbortedRunError : public Error {
 public:
  AbortedRunError(const std::string& what, int epoch) : Error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

}  // namespace na
