// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

// Epoch-based training with per-string loss curves recorded after every
// epoch.

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "memlang/grammar.hpp"
#include "memlang/model.hpp"
#include "memlang/random.hpp"

namespace memlang {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 8;
  double peak_lr = 1e-3;
  double warmup_ratio = 0.05;
  AdamConfig adam;
  Seed shuffle_seed = 0;

  void validate() const;
  std::size_t steps_per_epoch(std::size_t n) const;
  std::size_t warmup_steps(std::size_t total_steps) const;
  /// Learning rate for 0-based update `step` out of `total_steps`.
  double learning_rate(std::size_t step, std::size_t total_steps) const;
};

enum class CurveRole { kTrainMember, kHeldOut };

const char* to_string(CurveRole role);

struct LossCurve {
  TerminalString string;
  std::vector<double> losses;  // losses[e - 1] is the loss after epoch e
  CurveRole role = CurveRole::kHeldOut;
};

struct TrainRun {
  StringDataset dataset;
  TrainConfig config;
  ModelConfig model;
  Seed seed = 0;
  /// One curve per distinct dataset string, in first-occurrence order.
  std::vector<LossCurve> dataset_curves;
  /// One curve per probe, in argument order.
  std::vector<LossCurve> probe_curves;
  /// One curve per test string, in argument order.
  std::vector<LossCurve> test_curves;
  std::vector<double> test_curve_mean;
  ModelParameters final_params;

  /// Curve of a string in any of the three groups (dataset first).
  const LossCurve* curve(std::span<const TerminalId> s) const;
};

/// Per-epoch hook; receives the 1-based epoch just completed.
using EpochCallback = std::function<void(std::size_t)>;

TrainRun train(const StringDataset& dataset,
               std::span<const TerminalString> probes,
               std::span<const TerminalString> test_set,
               const ModelConfig& mcfg, const TrainConfig& tcfg, Seed seed,
               const EpochCallback& on_epoch = {});

/// 1-based argmin of the mean test curve; ties go to the earliest epoch.
std::size_t optimal_learning_epoch(std::span<const double> test_curve_mean);
std::size_t optimal_learning_epoch(const TrainRun& run);

/// Minimum loss over the epochs of a held-out curve.
double optimal_contextual_loss(const LossCurve& curve);

}  // namespace memlang
