// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment designs: paired probe study, language study and size sweep.

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memlang/config.hpp"
#include "memlang/grammar.hpp"
#include "memlang/memorization.hpp"
#include "memlang/training.hpp"

namespace memlang {

struct HarnessOptions {
  std::size_t workers = 1;
  std::function<void(std::string_view)> log;  // progress lines; may be empty
};

/// Counters that are reported, never silently dropped.
struct AuditCounts {
  std::size_t clamp_events = 0;
  std::size_t assumption_violations = 0;  // epochs with train > held-out loss
  std::size_t proxy_assumption_violations = 0;  // same, proxy held-out curves
  std::size_t lemma1_checked = 0;
  std::size_t lemma1_violations = 0;

  AuditCounts& operator+=(const AuditCounts& o);
};

/// Measure kinds evaluated by every study: one recollection kind per tau,
/// then counterfactual, then contextual.
std::vector<MeasureKind> study_kinds(const ExperimentConfig& cfg);

/// Model config with vocab_size set from the grammar.
ModelConfig resolved_model(const ExperimentConfig& cfg,
                           const ProbabilisticGrammar& g);

struct Probe {
  std::string label;  // s0, s1, ...
  TerminalString string;
  std::size_t frequency = 0;  // occurrences inserted into D
  double logprob = 0.0;
};

/// Strings of `data` at the top, median-distinct and bottom frequency
/// levels (ties go to first occurrence), or the explicit strings.
std::vector<Probe> select_probes(const ExperimentConfig& cfg,
                                 const ProbabilisticGrammar& g,
                                 const StringDataset& data);

// --------------------------------------------------------------------------

struct ProbeStudyResult {
  ExperimentConfig config;
  std::vector<MeasureKind> kinds;
  std::vector<Probe> probes;
  std::vector<std::vector<PairedLossCurves>> paired;  // [probe][k]
  std::vector<std::vector<std::vector<MemorizationRecord>>> records;  // [probe][kind][k]
  std::vector<std::vector<MemorizationRecord>> expected;  // [probe][kind]
  AuditCounts audit;
};

ProbeStudyResult run_paired_probe_study(const ExperimentConfig& cfg,
                                        const HarnessOptions& opts = {});

// --------------------------------------------------------------------------

struct ProxyGap {
  std::size_t probes = 0;
  std::size_t epoch = 0;  // evaluation epoch (optimal learning epoch)
  double exact_weighted = 0.0;
  double proxy_weighted = 0.0;
  double gap = 0.0;             // |exact - proxy| at `epoch`
  double max_gap = 0.0;         // max over epochs
};

struct ReferenceCheck {
  TerminalString string;
  double target_acc = 0.0;     // full model, after the last epoch
  double reference_acc = 0.0;  // model trained without the string
  bool not_contextual_candidate = false;
};

struct FrequencySplit {
  std::size_t group_size = 0;
  std::vector<double> top_frac;     // per kind, at the optimal epoch
  std::vector<double> bottom_frac;
};

struct LanguageStudyResult {
  ExperimentConfig config;
  std::size_t size = 0;
  std::vector<MeasureKind> kinds;
  StringDataset dataset;
  TrainRun run;                           // full run on D (test curves included)
  std::vector<TerminalString> strings;    // distinct strings of D
  std::vector<std::size_t> frequency;
  std::vector<double> logprob;
  std::vector<bool> exact;                // leave-one-out vs proxy
  std::vector<std::string> heldout_source;  // label of the held-out curve origin
  std::vector<std::vector<double>> heldout;  // curve used as held-out, per string
  std::vector<std::vector<MemorizationRecord>> records;  // [kind][string]
  std::vector<DatasetMemorization> scores;               // per kind
  std::size_t optimal_epoch = 0;
  double optimal_test_loss = 0.0;
  std::optional<ProxyGap> proxy_gap;
  std::vector<ReferenceCheck> reference;
  FrequencySplit split;
  AuditCounts audit;

  std::size_t kind_index(MeasureType type) const;
  double weighted_at_optimum(std::size_t kind) const;
};

LanguageStudyResult run_language_study(const ExperimentConfig& cfg,
                                       const HarnessOptions& opts = {});
/// Same design at an explicit dataset size (used by the sweep).
LanguageStudyResult run_language_study(const ExperimentConfig& cfg,
                                       std::size_t size,
                                       const HarnessOptions& opts = {});

struct SizeSweepResult {
  ExperimentConfig config;
  std::vector<LanguageStudyResult> points;  // ascending size order of config
};

SizeSweepResult run_size_sweep(const ExperimentConfig& cfg,
                               const HarnessOptions& opts = {});

// --------------------------------------------------------------------------

/// Single training run on a sampled dataset of size cfg.sizes.front().
struct SingleRunResult {
  ExperimentConfig config;
  TrainRun run;
};

SingleRunResult run_single_training(const ExperimentConfig& cfg,
                                    const HarnessOptions& opts = {});

}  // namespace memlang
