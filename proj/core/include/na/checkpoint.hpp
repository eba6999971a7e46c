// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "na/tensor.hpp"

namespace na {

// Line-oriented text container for model weights. Numbers are written with
// the shortest decimal form that parses back to the identical double, so a
// write -> read -> write cycle is byte-identical.
struct Checkpoint {
  std::string kind;
  std::vector<std::pair<std::string, std::string>> meta;    // ordered key/value
  std::vector<std::pair<std::string, Tensor>> tensors;      // ordered name/tensor

  const Tensor* find(const std::string& name) const;
  const std::string* meta_value(const std::string& key) const;
  void set_meta(const std::string& key, const std::string& value);

  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;
  static Checkpoint load(std::istream& in);
  static Checkpoint load_file(const std::string& path);
};

// Shortest round-tripping decimal form of a double.
std::string format_double(double d);

}  // namespace na
