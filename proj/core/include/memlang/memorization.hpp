// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

// Recollection, counterfactual and contextual memorization scores computed
// from per-epoch loss curves.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memlang/grammar.hpp"
#include "memlang/training.hpp"

namespace memlang {

enum class MeasureType { kRecollection, kCounterfactual, kContextual };

struct MeasureKind {
  MeasureType type = MeasureType::kCounterfactual;
  double tau = 0.0;  // recollection threshold in nats; unused otherwise

  static MeasureKind recollection(double tau);
  static MeasureKind counterfactual() { return {MeasureType::kCounterfactual, 0.0}; }
  static MeasureKind contextual() { return {MeasureType::kContextual, 0.0}; }

  /// "recollection", "counterfactual" or "contextual".
  const char* name() const;

  friend bool operator==(const MeasureKind&, const MeasureKind&) = default;
};

/// Losses of one string under D (train) and under D' without it (heldout).
struct PairedLossCurves {
  TerminalString string;
  std::vector<double> train;
  std::vector<double> heldout;

  /// Throws ConfigError unless both curves are nonempty, equally long,
  /// finite and nonnegative.
  void validate() const;
};

struct MemorizationRecord {
  TerminalString string;
  MeasureKind kind;
  std::optional<std::size_t> start_epoch;  // 1-based
  std::vector<double> scores;              // scores[e - 1] for epoch e
  std::size_t clamp_events = 0;
};

struct DatasetMemorization {
  MeasureKind kind;
  std::vector<double> frac;
  std::vector<double> weighted;
};

/// Held-out losses below this are rejected by the ratio measures.
inline constexpr double kMinHeldoutLoss = 1e-12;

MemorizationRecord recollection_measure(const LossCurve& curve, double tau);
MemorizationRecord recollection_measure(const TerminalString& string,
                                        std::span<const double> losses,
                                        double tau);

/// Eq. 1: (heldout[e] - train[e]) / heldout[e] from the first epoch where
/// train < heldout, clamped to [0, 1].
MemorizationRecord counterfactual_measure(const PairedLossCurves& paired);

/// Eq. 3: threshold T = min_e heldout[e]; (T - train[e]) / T from the first
/// epoch where train < T, clamped to [0, 1].
MemorizationRecord contextual_measure(const PairedLossCurves& paired);

MemorizationRecord measure(const PairedLossCurves& paired, MeasureKind kind);

/// Eq. 2: pointwise mean over records of one string and kind.
MemorizationRecord expected_measure(std::span<const MemorizationRecord> records,
                                    MeasureKind kind);

DatasetMemorization dataset_memorization(
    std::span<const MemorizationRecord> records);

struct Lemma1Report {
  MemorizationRecord counterfactual;
  MemorizationRecord contextual;
  bool ordering_ok = false;
  bool bound_ok = false;
  bool ok() const { return ordering_ok && bound_ok; }
};

inline constexpr double kLemma1Tolerance = 1e-12;

Lemma1Report lemma1_check(const PairedLossCurves& paired);

/// The same two conditions on already computed records (e.g. Eq. 2 means).
bool lemma1_holds(const MemorizationRecord& counterfactual,
                  const MemorizationRecord& contextual);

/// Epochs where the train-member loss exceeds the held-out loss.
std::size_t assumption_violations(const PairedLossCurves& paired);

struct ProxyCandidate {
  TerminalString string;
  double logprob = 0.0;
  std::vector<double> heldout;
};

/// Index of the candidate with the nearest log-probability; ties go to the
/// lowest index.
std::size_t proxy_index(double target_logprob,
                        std::span<const ProxyCandidate> pool);
const ProxyCandidate& proxy_pair(double target_logprob,
                                 std::span<const ProxyCandidate> pool);

/// True when a reference model trained on disjoint data recollects the
/// string at least as accurately as the target model.
bool reference_upper_bound(double target_acc, double reference_acc);

}  // namespace memlang
