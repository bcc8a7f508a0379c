// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment configuration and its JSON form.

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "memlang/model.hpp"
#include "memlang/random.hpp"
#include "memlang/training.hpp"

namespace memlang {

enum class ProbeRule {
  kTopMidBottom,  // most frequent, median distinct frequency, least frequent
  kExplicit,
};

struct ExperimentConfig {
  std::filesystem::path grammar;
  ModelConfig model;  // vocab_size is derived from the grammar
  TrainConfig train;
  std::vector<std::size_t> sizes{16, 64, 256};
  std::size_t n_test = 256;

  ProbeRule probe_rule = ProbeRule::kTopMidBottom;
  std::vector<std::string> probe_strings;  // space-separated terminals
  std::size_t probe_dataset_size = 64;     // |D| in the paired probe study
  std::size_t K = 3;
  std::vector<double> taus{0.2};
  std::size_t loo_budget = 8;

  Seed seed = 0;
  std::filesystem::path out_dir = "out";
  std::size_t workers = 1;

  /// Throws ConfigError on any inconsistency.
  void validate() const;
};

/// Parses JSON text. Relative grammar paths resolve against `base_dir`.
/// Unknown keys are rejected.
ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Canonical JSON of every field that influences results (out_dir and
/// workers excluded).
std::string canonical_json(const ExperimentConfig& cfg);

/// 16 hex digits of FNV-1a over canonical_json plus the grammar file bytes.
std::string fingerprint(const ExperimentConfig& cfg);

}  // namespace memlang
