// SPDX-License-Identifier: Apache-2.0
#include "na/checkpoint.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "na/errors.hpp"

namespace na {

std::string format_double(double d) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), d);
  return std::string(buf, res.ptr);
}

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

const std::string* Checkpoint::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return &v;
  return nullptr;
}

void Checkpoint::set_meta(const std::string& key, const std::string& value) {
  for (auto& [k, v] : meta) {
    if (k == key) {
      v = value;
      return;
    }
  }
  meta.emplace_back(key, value);
}

void Checkpoint::save(std::ostream& out) const {
  out << "na-checkpoint 1\n";
  out << "kind " << kind << "\n";
  for (const auto& [k, v] : meta) out << "meta " << k << " " << v << "\n";
  for (const auto& [name, t] : tensors) {
    out << "tensor " << name << " " << t.rows << " " << t.cols << "\n";
    for (int r = 0; r < t.rows; ++r) {
      for (int c = 0; c < t.cols; ++c) {
        if (c) out << " ";
        out << format_double(t.at(r, c));
      }
      out << "\n";
    }
  }
  out << "end\n";
}

Checkpoint Checkpoint::load(std::istream& in) {
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "na-checkpoint" || version != 1) throw ParseError("not a na-checkpoint v1 file");
  Checkpoint ck;
  std::string tok;
  while (in >> tok) {
    if (tok == "kind") {
      in >> ck.kind;
    } else if (tok == "meta") {
      std::string k, v;
      in >> k >> v;
      if (!in) throw ParseError("malformed meta line");
      ck.meta.emplace_back(k, v);
    } else if (tok == "tensor") {
      std::string name;
      int rows = 0, cols = 0;
      in >> name >> rows >> cols;
      if (!in || rows < 0 || cols < 0) throw ParseError("malformed tensor header");
      Tensor t(rows, cols);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          std::string num;
          in >> num;
          if (!in) throw ParseError("tensor '" + name + "' is truncated");
          double d = 0.0;
          const auto res = std::from_chars(num.data(), num.data() + num.size(), d);
          if (res.ec != std::errc() || res.ptr != num.data() + num.size())
            throw ParseError("bad number '" + num + "' in tensor '" + name + "'");
          t.at(r, c) = d;
        }
      ck.tensors.emplace_back(name, std::move(t));
    } else if (tok == "end") {
      return ck;
    } else {
      throw ParseError("unexpected token '" + tok + "' in checkpoint");
    }
  }
  throw ParseError("checkpoint missing 'end' marker");
}

void Checkpoint::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write checkpoint: " + path);
  save(out);
}

Checkpoint Checkpoint::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open checkpoint: " + path);
  return load(in);
}

}  // namespace na
