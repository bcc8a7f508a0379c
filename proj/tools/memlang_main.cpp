// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

// memlang command-line tool.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime or numeric error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "memlang/config.hpp"
#include "memlang/error.hpp"
#include "memlang/grammar.hpp"
#include "memlang/harness.hpp"
#include "memlang/report.hpp"

namespace {

using memlang::ConfigError;
using memlang::ExperimentConfig;
namespace fs = std::filesystem;

struct CommonFlags {
  std::string grammar;
  std::string config;
  std::optional<memlang::Seed> seed;
  std::string out_dir;
  std::optional<std::size_t> workers;
  bool quiet = false;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--grammar", f.grammar, "PCFG grammar file");
  sub->add_option("--config", f.config, "experiment config (JSON)");
  sub->add_option("--seed", f.seed, "master seed");
  sub->add_option("--out-dir", f.out_dir, "output directory");
  sub->add_option("--workers", f.workers, "parallel training jobs");
  sub->add_flag("-q,--quiet", f.quiet, "suppress progress lines");
}

// Config file first, then command-line overrides on top.
ExperimentConfig resolve_config(const CommonFlags& f) {
  ExperimentConfig cfg;
  if (!f.config.empty()) cfg = memlang::load_experiment_config(f.config);
  if (!f.grammar.empty()) cfg.grammar = f.grammar;
  if (cfg.grammar.empty()) throw ConfigError("a grammar is required (--grammar or config \"grammar\")");
  if (f.seed) cfg.seed = *f.seed;
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  if (f.workers) cfg.workers = *f.workers;
  cfg.validate();
  return cfg;
}

memlang::HarnessOptions harness_options(const ExperimentConfig& cfg, bool quiet) {
  memlang::HarnessOptions o;
  o.workers = cfg.workers;
  if (!quiet) o.log = [](std::string_view line) { std::cerr << line << '\n'; };
  return o;
}

void print_artifacts(const memlang::RunArtifacts& a) {
  std::cout << "fingerprint " << a.fingerprint << '\n' << "summary " << a.summary.string() << '\n';
  for (const auto& p : a.csv) std::cout << "csv " << p.string() << '\n';
  for (const auto& p : a.plots) std::cout << "plot " << p.string() << '\n';
}

memlang::ProbabilisticGrammar grammar_of(const CommonFlags& f) {
  if (!f.grammar.empty()) return memlang::load_grammar(f.grammar);
  if (!f.config.empty()) return memlang::load_grammar(memlang::load_experiment_config(f.config).grammar);
  throw ConfigError("a grammar is required (--grammar or --config)");
}

int cmd_sample(const CommonFlags& f, std::size_t n, bool dedupe_probs) {
  const auto g = grammar_of(f);
  const memlang::Seed seed = f.seed.value_or(0);
  const auto data = memlang::sample_dataset(
      g, n, memlang::derive_seed(seed, memlang::SeedStream::kSampling));
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!f.out_dir.empty()) {
    fs::create_directories(f.out_dir);
    file.open(fs::path(f.out_dir) / "samples.csv", std::ios::binary);
    if (!file) throw memlang::RuntimeError("cannot write samples.csv");
    out = &file;
  }
  *out << "string_id,frequency,logprob,tokens\n";
  const auto strings = dedupe_probs ? data.unique_strings() : data.strings();
  for (std::size_t i = 0; i < strings.size(); ++i)
    *out << 's' << i << ',' << data.count(strings[i]) << ','
         << memlang::format_double(memlang::string_logprob(g, strings[i])) << ','
         << g.decode(strings[i]) << '\n';
  return 0;
}

int cmd_entropy(const CommonFlags& f, std::size_t max_len, std::size_t samples) {
  const auto g = grammar_of(f);
  nlohmann::ordered_json j;
  if (max_len > 0) j["exact_nats"] = memlang::entropy_exact(g, max_len);
  if (samples > 0) {
    const auto mc = memlang::entropy_monte_carlo(
        g, samples, memlang::derive_seed(f.seed.value_or(0), memlang::SeedStream::kSampling));
    j["monte_carlo"] = {{"samples", samples}, {"estimate_nats", mc.estimate}, {"std_error", mc.std_error}};
  }
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (!f.out_dir.empty()) {
    fs::create_directories(f.out_dir);
    std::ofstream(fs::path(f.out_dir) / "entropy.json", std::ios::binary) << text;
  }
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"memlang: memorization measures on formal languages"};
  app.require_subcommand(1);
  CommonFlags f;

  std::size_t n_samples = 10;
  bool distinct = false;
  auto* sample = app.add_subcommand("sample", "sample strings from a grammar");
  add_common(sample, f);
  sample->add_option("-n,--count", n_samples, "number of strings");
  sample->add_flag("--distinct", distinct, "list each distinct string once");

  std::size_t max_len = 0, mc_samples = 10000;
  auto* entropy = app.add_subcommand("entropy", "exact and Monte Carlo entropy (nats)");
  add_common(entropy, f);
  entropy->add_option("--max-len", max_len, "exact enumeration up to this length (0: skip)");
  entropy->add_option("--samples", mc_samples, "Monte Carlo samples (0: skip)");

  auto* train = app.add_subcommand("train", "one training run; loss-curve CSV and checkpoint");
  add_common(train, f);
  auto* probe = app.add_subcommand("probe-study", "paired-dataset study of probe strings");
  add_common(probe, f);
  std::optional<std::size_t> size;
  auto* language = app.add_subcommand("language-study", "dataset-level memorization study");
  add_common(language, f);
  language->add_option("--size", size, "dataset size (default: first of config sizes)");
  auto* sweep = app.add_subcommand("size-sweep", "language study over the configured sizes");
  add_common(sweep, f);
  auto* report = app.add_subcommand("report", "re-render plots of an output directory");
  report->add_option("--out-dir", f.out_dir, "study output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (sample->parsed()) return cmd_sample(f, n_samples, distinct);
  if (entropy->parsed()) return cmd_entropy(f, max_len, mc_samples);
  if (report->parsed()) {
    for (const auto& p : memlang::render_reports(f.out_dir)) std::cout << "plot " << p.string() << '\n';
    return 0;
  }

  const auto cfg = resolve_config(f);
  const auto opts = harness_options(cfg, f.quiet);
  if (train->parsed()) {
    print_artifacts(memlang::emit_train_run(memlang::run_single_training(cfg, opts), cfg.out_dir));
  } else if (probe->parsed()) {
    print_artifacts(memlang::emit_probe_study(memlang::run_paired_probe_study(cfg, opts), cfg.out_dir));
  } else if (language->parsed()) {
    const auto res = size ? memlang::run_language_study(cfg, *size, opts)
                          : memlang::run_language_study(cfg, opts);
    print_artifacts(memlang::emit_language_study(res, cfg.out_dir));
  } else if (sweep->parsed()) {
    print_artifacts(memlang::emit_size_sweep(memlang::run_size_sweep(cfg, opts), cfg.out_dir));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const memlang::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
