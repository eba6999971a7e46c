// SPDX-License-Identifier: Apache-2.0
#include "na/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "na/asym.hpp"
#include "na/compile.hpp"
#include "na/errors.hpp"
#include "na/experiments.hpp"
#include "na/statecomp.hpp"
#include "na/verify.hpp"

namespace na::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct ManifestWriter {
  std::string subcommand;
  json config = json::object();
  std::vector<std::string> inputs, outputs;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write(const std::string& out_dir) {
    json j;
    j["tool"] = "na";
    j["version"] = kVersion;
    j["subcommand"] = subcommand;
    j["config"] = config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream f(fs::path(out_dir) / "manifest.json");
    f << j.dump(2) << "\n";
  }
};

// Exhaustive agreement table between a compiled network and its oracle.
template <typename Oracle>
bool print_verify_table(std::ostream& out, const nets::NetworkSpec& net, const Oracle& oracle,
                        int max_len, int min_len) {
  const asym::LimitEvaluator ev(net);
  bool all_ok = true;
  out << "len   strings   agree   status\n";
  for (int n = min_len; n <= max_len; ++n) {
    long long total = 1;
    for (int i = 0; i < n; ++i) total *= net.alphabet.size();
    long long agree = 0;
    std::string s(n, net.alphabet.symbol(0));
    for (long long idx = 0; idx < total; ++idx) {
      long long v = idx;
      for (int t = 0; t < n; ++t) {
        s[t] = net.alphabet.symbol(static_cast<int>(v % net.alphabet.size()));
        v /= net.alphabet.size();
      }
      const asym::LimitTrace tr = ev.evaluate(lang::encode_one_hot(s, net.alphabet));
      const bool got = tr.decision_stable() && tr.p == asym::AsymScalar(Rat(1));
      if (tr.decision_stable() && got == oracle(s)) ++agree;
    }
    const bool ok = agree == total;
    all_ok = all_ok && ok;
    out << n << "     " << total << "       " << agree << "     " << (ok ? "pass" : "FAIL")
        << "\n";
  }
  return all_ok;
}

int cmd_compile(const std::string& mode, const std::string& in_path, const std::string& out_path,
                int verify_len, std::ostream& out) {
  ManifestWriter manifest;
  manifest.subcommand = "compile " + mode;
  manifest.config = {{"in", in_path}, {"out", out_path}, {"verify_len", verify_len}};
  manifest.inputs = {in_path};
  manifest.outputs = {out_path};

  bool ok = true;
  if (mode == "dfa2srn" || mode == "dfa2gru") {
    const lang::Dfa dfa = lang::Dfa::load_file(in_path);
    const compile::DfaCompilation comp =
        mode == "dfa2srn" ? compile::compile_dfa_to_srn(dfa) : compile::compile_dfa_to_gru(dfa);
    comp.net.save_file(out_path);
    out << "compiled " << comp.unit_map.size() << " hidden units (margin "
        << rat_to_string(comp.margin) << ")\n";
    for (std::size_t i = 0; i < comp.unit_map.size(); ++i)
      out << "  unit " << i << ": " << comp.unit_map[i] << "\n";
    if (verify_len >= 0)
      ok = print_verify_table(
          out, comp.net, [&](const std::string& s) { return lang::dfa_accepts(dfa, s); },
          verify_len, 0);
  } else if (mode == "sl2cnn") {
    const lang::SlGrammar g = lang::SlGrammar::load_file(in_path);
    const compile::CnnCompilation comp = compile::compile_sl_to_cnn(g);
    comp.net.save_file(out_path);
    out << "compiled " << comp.invalid_count << " filters (margin " << rat_to_string(comp.margin)
        << ")\n";
    if (verify_len >= 0)
      ok = print_verify_table(
          out, comp.net, [&](const std::string& s) { return lang::sl_accepts(g, s); }, verify_len,
          1);
  } else {
    throw ConfigError("unknown compile mode " + mode);
  }
  const fs::path dir = fs::path(out_path).parent_path();
  manifest.write(dir.empty() ? "." : dir.string());
  out << (ok ? "verification passed" : "verification FAILED") << "\n";
  return ok ? 0 : 1;
}

nets::NetworkSpec builtin_spec(const std::string& name) {
  if (name == "counter-plus") return compile::counter_cell_spec(compile::counter_params().plus);
  if (name == "counter-id")
    return compile::counter_cell_spec(compile::counter_params().identity);
  if (name == "counter-plus-literal")
    return compile::counter_cell_spec_literal(compile::counter_params().plus);
  if (name == "attention-counting") return compile::attention_counting_encoder();
  if (name == "attention-identity") return compile::attention_identity_encoder();
  if (name == "attention-last") return compile::attention_last_value_encoder();
  throw ConfigError(
      "unknown builtin '" + name +
      "' (counter-plus, counter-id, counter-plus-literal, attention-counting, "
      "attention-identity, attention-last)");
}

int cmd_compile_builtin(const std::string& name, const std::string& out_path, std::ostream& out) {
  const nets::NetworkSpec net = builtin_spec(name);
  net.save_file(out_path);
  out << "wrote " << name << " (" << nets::arch_name(net.arch) << ", " << net.hidden
      << " hidden) to " << out_path << "\n";
  ManifestWriter manifest;
  manifest.subcommand = "compile builtin";
  manifest.config = {{"name", name}, {"out", out_path}};
  manifest.outputs = {out_path};
  const fs::path dir = fs::path(out_path).parent_path();
  manifest.write(dir.empty() ? "." : dir.string());
  return 0;
}

int cmd_asym_accept(const std::string& model_path, const std::string& input, std::ostream& out) {
  const nets::NetworkSpec net = nets::NetworkSpec::load_file(model_path);
  const asym::AsymDecision d = asym::asym_accept(net, input);
  out << asym::outcome_name(d.outcome);
  if (d.outcome == asym::Outcome::Unstable) out << " (witness: " << d.witness << ")";
  out << "\n";
  switch (d.outcome) {
    case asym::Outcome::Accept: return 0;
    case asym::Outcome::Reject: return 1;
    case asym::Outcome::Unstable: return 2;
  }
  return 2;
}

int cmd_statecomp(const std::string& model_path, const std::string& selector_name, int n_min,
                  int n_max, long long budget, int jobs, const std::string& out_dir,
                  std::ostream& out) {
  const nets::NetworkSpec net = nets::NetworkSpec::load_file(model_path);
  const statecomp::Selector selector = statecomp::selector_from_name(selector_name);
  statecomp::EnumOptions opts;
  opts.budget = budget;
  opts.jobs = jobs;

  std::ostringstream csv;
  csv << "n,count,unstable_count\n";
  std::vector<std::pair<int, long long>> points;
  long long ties = 0;
  for (int n = n_min; n <= n_max; ++n) {
    const statecomp::ConfigSet cs = statecomp::config_set(net, selector, n, opts);
    csv << n << "," << cs.count() << "," << cs.unstable_count << "\n";
    points.emplace_back(n, cs.count());
    ties += cs.tie_note_count;
  }
  csv << "class," << statecomp::growth_name(statecomp::classify_growth(points)) << "\n";
  if (ties > 0) csv << "# note: attention averaged tied scores on " << ties << " inputs\n";
  out << csv.str();

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream f(fs::path(out_dir) / "statecomp.csv");
    f << csv.str();
    ManifestWriter manifest;
    manifest.subcommand = "statecomp";
    manifest.config = {{"model", model_path}, {"selector", selector_name}, {"n_min", n_min},
                       {"n_max", n_max},      {"budget", budget},          {"jobs", jobs}};
    manifest.inputs = {model_path};
    manifest.outputs = {(fs::path(out_dir) / "statecomp.csv").string()};
    manifest.write(out_dir);
  }
  return 0;
}

int cmd_train_counting(const std::string& arch_name, double noise, std::uint64_t seed,
                       bool full_scale, int epochs, double lr, const std::string& out_dir,
                       std::ostream& out) {
  train::TrainConfig cfg;
  cfg.arch = nets::arch_from_name(arch_name);
  cfg.noise_sd = noise;
  cfg.seed = seed;
  cfg.full_scale = full_scale;
  if (epochs > 0) cfg.epochs = epochs;
  if (lr > 0) cfg.lr = lr;

  const experiments::CountingRun run = experiments::run_counting(cfg);
  out << "overall accuracy: " << run.metrics.overall_acc << "%\n";
  out << "accuracy on c:    " << run.metrics.acc_on_c << "%\n";

  fs::create_directories(out_dir);
  std::ofstream(fs::path(out_dir) / "metrics.json") << experiments::metrics_json(run.metrics);
  std::ofstream(fs::path(out_dir) / "metrics.csv") << experiments::metrics_csv(run.metrics);
  run.model.to_checkpoint().save_file((fs::path(out_dir) / "model.ckpt").string());
  ManifestWriter manifest;
  manifest.subcommand = "train counting";
  manifest.config = {{"arch", arch_name},   {"noise", noise},        {"seed", seed},
                     {"epochs", cfg.epochs}, {"lr", cfg.lr},         {"hidden", cfg.hidden},
                     {"train_lo", cfg.train_lo}, {"train_hi", cfg.train_hi},
                     {"test_lo", cfg.test_lo},   {"test_hi", cfg.test_hi},
                     {"full_scale", full_scale}};
  manifest.outputs = {(fs::path(out_dir) / "metrics.json").string(),
                      (fs::path(out_dir) / "metrics.csv").string(),
                      (fs::path(out_dir) / "model.ckpt").string()};
  manifest.write(out_dir);
  return 0;
}

int cmd_train_reversal(bool attention, std::uint64_t seed, int epochs, double lr,
                       const std::string& out_dir, std::ostream& out) {
  train::ReversalConfig cfg;
  cfg.attention = attention;
  cfg.seed = seed;
  if (epochs > 0) cfg.epochs = epochs;
  if (lr > 0) cfg.lr = lr;

  const train::ReversalOutcome run = train::train_seq2seq_reversal(attention, cfg);
  out << "validation exact match:     " << run.metrics.val_exact << "%\n";
  out << "generalization exact match: " << run.metrics.gen_exact << "%\n";

  fs::create_directories(out_dir);
  std::ofstream(fs::path(out_dir) / "metrics.json") << experiments::metrics_json(run.metrics);
  std::ofstream(fs::path(out_dir) / "metrics.csv") << experiments::metrics_csv(run.metrics);
  run.model.to_checkpoint().save_file((fs::path(out_dir) / "model.ckpt").string());
  ManifestWriter manifest;
  manifest.subcommand = "train reversal";
  manifest.config = {{"attention", attention}, {"seed", seed}, {"epochs", cfg.epochs},
                     {"lr", cfg.lr},           {"hidden", cfg.hidden}};
  manifest.outputs = {(fs::path(out_dir) / "metrics.json").string(),
                      (fs::path(out_dir) / "metrics.csv").string(),
                      (fs::path(out_dir) / "model.ckpt").string()};
  manifest.write(out_dir);
  return 0;
}

int cmd_verify(bool skip_training, const std::string& out_dir, std::ostream& out) {
  const std::vector<verify::CriterionResult> results = verify::run_acceptance(skip_training, out);
  const bool ok = verify::all_passed(results);
  out << (ok ? "ALL CRITERIA PASSED" : "SOME CRITERIA FAILED") << "\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    json j = json::array();
    for (const auto& r : results)
      j.push_back({{"id", r.id},
                   {"name", r.name},
                   {"status", r.skipped ? "skip" : r.pass ? "pass" : "fail"},
                   {"detail", r.detail},
                   {"seconds", r.seconds}});
    std::ofstream(fs::path(out_dir) / "acceptance.json") << j.dump(2) << "\n";
    ManifestWriter manifest;
    manifest.subcommand = "verify";
    manifest.config = {{"skip_training", skip_training}};
    manifest.outputs = {(fs::path(out_dir) / "acceptance.json").string()};
    manifest.write(out_dir);
  }
  return ok ? 0 : 1;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& out_file,
               std::ostream& out) {
  std::ostringstream csv;
  csv << "run,subcommand,overall_acc,acc_on_c,val_exact,gen_exact\n";
  for (const std::string& dir : dirs) {
    const fs::path mpath = fs::path(dir) / "metrics.json";
    const fs::path manifest_path = fs::path(dir) / "manifest.json";
    if (!fs::exists(mpath)) throw ParseError("no metrics.json under " + dir);
    json m, manifest;
    std::ifstream(mpath) >> m;
    std::string sub = "?";
    if (fs::exists(manifest_path)) {
      std::ifstream(manifest_path) >> manifest;
      sub = manifest.value("subcommand", "?");
    }
    csv << dir << "," << sub << "," << m.value("overall_acc", 0.0) << ","
        << m.value("acc_on_c", 0.0) << "," << m.value("val_exact", 0.0) << ","
        << m.value("gen_exact", 0.0) << "\n";
  }
  out << csv.str();
  if (!out_file.empty()) std::ofstream(out_file) << csv.str();
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"neural sequence acceptors as automata"};
  app.set_config("--config", "", "key = value configuration file");
  app.require_subcommand(1);

  // compile
  auto* compile_cmd = app.add_subcommand("compile", "emit exact network weights for an automaton");
  compile_cmd->require_subcommand(1);
  std::string in_path, out_path;
  int verify_len = -1;
  for (const char* mode : {"dfa2srn", "dfa2gru", "sl2cnn"}) {
    auto* sub = compile_cmd->add_subcommand(mode);
    sub->add_option("--in", in_path, "automaton file")->required();
    sub->add_option("--out", out_path, "checkpoint to write")->required();
    sub->add_option("--verify-len", verify_len,
                    "exhaustively verify against the oracle up to this length");
  }
  auto* builtin_cmd =
      compile_cmd->add_subcommand("builtin", "emit one of the bundled constructions");
  std::string builtin_name;
  builtin_cmd->add_option("--name", builtin_name, "construction name")->required();
  builtin_cmd->add_option("--out", out_path, "checkpoint to write")->required();

  // asym accept
  auto* asym_cmd = app.add_subcommand("asym", "limit-semantics evaluation");
  auto* accept_cmd = asym_cmd->add_subcommand("accept", "asymptotic acceptance decision");
  std::string model_path, input_string;
  accept_cmd->add_option("--model", model_path, "checkpoint file")->required();
  accept_cmd->add_option("--input", input_string, "input string (may be empty)")->required();

  // statecomp
  auto* statecomp_cmd =
      app.add_subcommand("statecomp", "enumerate configuration sets by brute force");
  std::string sc_model, sc_selector = "h", sc_out;
  int sc_nmin = 1, sc_nmax = 8, sc_jobs = 1;
  long long sc_budget = 1LL << 20;
  statecomp_cmd->add_option("--model", sc_model, "checkpoint file")->required();
  statecomp_cmd->add_option("--selector", sc_selector, "h | c | V | summary");
  statecomp_cmd->add_option("--n-max", sc_nmax, "maximum input length")->required();
  statecomp_cmd->add_option("--n-min", sc_nmin, "minimum input length");
  statecomp_cmd->add_option("--budget", sc_budget, "maximum inputs per length");
  statecomp_cmd->add_option("--jobs", sc_jobs, "worker threads for the enumeration");
  statecomp_cmd->add_option("--out", sc_out, "directory for statecomp.csv and manifest");

  // train
  auto* train_cmd = app.add_subcommand("train", "run a training experiment");
  train_cmd->require_subcommand(1);
  auto* counting_cmd = train_cmd->add_subcommand("counting", "language model on a^n b^n c");
  std::string tr_arch = "lstm", tr_out = "run";
  double tr_noise = 0.0, tr_lr = 0.0;
  std::uint64_t tr_seed = 1;
  int tr_epochs = 0;
  bool tr_full = false;
  counting_cmd->add_option("--arch", tr_arch, "srn | gru | lstm");
  counting_cmd->add_option("--noise", tr_noise, "state noise sd (0 disables)");
  counting_cmd->add_option("--seed", tr_seed, "run seed")->envname("NA_SEED");
  counting_cmd->add_option("--epochs", tr_epochs, "override epoch count");
  counting_cmd->add_option("--lr", tr_lr, "override learning rate");
  counting_cmd->add_flag("--full-scale", tr_full, "use the full-size length ranges");
  counting_cmd->add_option("--out", tr_out, "output directory")->required();

  auto* reversal_cmd = train_cmd->add_subcommand("reversal", "seq2seq string reversal");
  bool rv_attention = false;
  std::string rv_out = "run";
  std::uint64_t rv_seed = 1;
  double rv_lr = 0.0;
  int rv_epochs = 0;
  reversal_cmd->add_flag("--attention", rv_attention, "attend over encoder states");
  reversal_cmd->add_option("--seed", rv_seed, "run seed")->envname("NA_SEED");
  reversal_cmd->add_option("--epochs", rv_epochs, "override epoch count");
  reversal_cmd->add_option("--lr", rv_lr, "override learning rate");
  reversal_cmd->add_option("--out", rv_out, "output directory")->required();

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "run the acceptance criteria");
  bool skip_training = false;
  std::string verify_out;
  verify_cmd->add_flag("--skip-training", skip_training,
                       "only the exact/enumerative criteria (1-6, 9)");
  verify_cmd->add_option("--out", verify_out, "directory for acceptance.json and manifest");

  // report
  auto* report_cmd = app.add_subcommand("report", "aggregate run metrics into a table");
  std::vector<std::string> report_dirs;
  std::string report_out;
  report_cmd->add_option("--dir", report_dirs, "run output directories")->required();
  report_cmd->add_option("--out", report_out, "CSV file to write");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (compile_cmd->parsed()) {
      if (builtin_cmd->parsed()) return cmd_compile_builtin(builtin_name, out_path, out);
      for (const char* mode : {"dfa2srn", "dfa2gru", "sl2cnn"})
        if (compile_cmd->get_subcommand(mode)->parsed())
          return cmd_compile(mode, in_path, out_path, verify_len, out);
    }
    if (accept_cmd->parsed()) return cmd_asym_accept(model_path, input_string, out);
    if (statecomp_cmd->parsed())
      return cmd_statecomp(sc_model, sc_selector, sc_nmin, sc_nmax, sc_budget, sc_jobs, sc_out,
                           out);
    if (counting_cmd->parsed())
      return cmd_train_counting(tr_arch, tr_noise, tr_seed, tr_full, tr_epochs, tr_lr, tr_out,
                                out);
    if (reversal_cmd->parsed())
      return cmd_train_reversal(rv_attention, rv_seed, rv_epochs, rv_lr, rv_out, out);
    if (verify_cmd->parsed()) return cmd_verify(skip_training, verify_out, out);
    if (report_cmd->parsed()) return cmd_report(report_dirs, report_out, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  err << "error: no subcommand\n";
  return 2;
}

}  // namespace na::cli
