// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

#include "memlang/memorization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "memlang/error.hpp"

namespace memlang {

MeasureKind MeasureKind::recollection(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw ConfigError("recollection threshold tau must be finite and > 0");
  return {MeasureType::kRecollection, tau};
}

const char* MeasureKind::name() const {
  switch (type) {
    case MeasureType::kRecollection: return "recollection";
    case MeasureType::kCounterfactual: return "counterfactual";
    case MeasureType::kContextual: return "contextual";
  }
  return "?";
}

void PairedLossCurves::validate() const {
  if (train.empty() || train.size() != heldout.size())
    throw ConfigError("paired curves must be nonempty and of equal length");
  for (const auto* c : {&train, &heldout})
    for (const double x : *c)
      if (!std::isfinite(x) || x < 0.0)
        throw ConfigError("loss curves must be finite and nonnegative");
}

namespace {

void set_start(MemorizationRecord& r) {
  r.start_epoch.reset();
  for (std::size_t e = 0; e < r.scores.size(); ++e)
    if (r.scores[e] > 0.0) {
      r.start_epoch = e + 1;
      return;
    }
}

// Scores (threshold[e] - train[e]) / threshold[e] from the first epoch
// where train < threshold.
MemorizationRecord ratio_measure(const PairedLossCurves& p, MeasureKind kind,
                                 std::span<const double> threshold) {
  p.validate();
  for (const double h : threshold)
    if (h < kMinHeldoutLoss)
      throw NumericError("held-out loss below 1e-12 makes the " +
                         std::string(kind.name()) + " ratio unstable");
  MemorizationRecord r{p.string, kind, std::nullopt,
                       std::vector<double>(p.train.size(), 0.0), 0};
  for (std::size_t e = 0; e < p.train.size(); ++e) {
    if (!r.start_epoch) {
      if (!(p.train[e] < threshold[e])) continue;
      r.start_epoch = e + 1;
    }
    const double raw = (threshold[e] - p.train[e]) / threshold[e];
    const double clamped = std::clamp(raw, 0.0, 1.0);
    if (clamped != raw) ++r.clamp_events;
    r.scores[e] = clamped;
  }
  return r;
}

// Per-epoch mean of the scores; each column is summed in ascending order so
// the result does not depend on record order.
std::vector<double> sorted_means(std::span<const MemorizationRecord> records) {
  const std::size_t epochs = records.front().scores.size();
  std::vector<double> out(epochs), column(records.size());
  for (std::size_t e = 0; e < epochs; ++e) {
    for (std::size_t i = 0; i < records.size(); ++i) column[i] = records[i].scores[e];
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (const double s : column) sum += s;
    out[e] = sum / static_cast<double>(records.size());
  }
  return out;
}

}  // namespace

MemorizationRecord recollection_measure(const TerminalString& string,
                                        std::span<const double> losses,
                                        double tau) {
  const auto kind = MeasureKind::recollection(tau);
  MemorizationRecord r{string, kind, std::nullopt,
                       std::vector<double>(losses.size(), 0.0), 0};
  for (std::size_t e = 0; e < losses.size(); ++e)
    r.scores[e] = losses[e] < tau ? 1.0 : 0.0;
  set_start(r);
  return r;
}

MemorizationRecord recollection_measure(const LossCurve& curve, double tau) {
  return recollection_measure(curve.string, curve.losses, tau);
}

MemorizationRecord counterfactual_measure(const PairedLossCurves& paired) {
  return ratio_measure(paired, MeasureKind::counterfactual(), paired.heldout);
}

MemorizationRecord contextual_measure(const PairedLossCurves& paired) {
  paired.validate();
  const double t = *std::min_element(paired.heldout.begin(), paired.heldout.end());
  const std::vector<double> threshold(paired.heldout.size(), t);
  return ratio_measure(paired, MeasureKind::contextual(), threshold);
}

MemorizationRecord measure(const PairedLossCurves& paired, MeasureKind kind) {
  switch (kind.type) {
    case MeasureType::kRecollection:
      paired.validate();
      return recollection_measure(paired.string, paired.train, kind.tau);
    case MeasureType::kCounterfactual: return counterfactual_measure(paired);
    case MeasureType::kContextual: return contextual_measure(paired);
  }
  throw ConfigError("unknown measure kind");
}

MemorizationRecord expected_measure(std::span<const MemorizationRecord> records,
                                    MeasureKind kind) {
  if (records.empty()) throw ConfigError("expected_measure needs >= 1 record");
  const auto& first = records.front();
  MemorizationRecord out{first.string, kind, std::nullopt,
                         std::vector<double>(first.scores.size(), 0.0), 0};
  for (const auto& r : records) {
    if (!(r.kind == kind)) throw ConfigError("expected_measure: mixed measure kinds");
    if (r.string != first.string) throw ConfigError("expected_measure: mixed strings");
    if (r.scores.size() != out.scores.size())
      throw ConfigError("expected_measure: mixed epoch counts");
    out.clamp_events += r.clamp_events;
  }
  out.scores = sorted_means(records);
  set_start(out);
  return out;
}

DatasetMemorization dataset_memorization(
    std::span<const MemorizationRecord> records) {
  if (records.empty()) throw ConfigError("dataset_memorization needs >= 1 record");
  const auto& first = records.front();
  const std::size_t epochs = first.scores.size();
  DatasetMemorization out{first.kind, std::vector<double>(epochs, 0.0),
                          std::vector<double>(epochs, 0.0)};
  for (const auto& r : records) {
    if (!(r.kind == first.kind)) throw ConfigError("dataset_memorization: mixed measure kinds");
    if (r.scores.size() != epochs) throw ConfigError("dataset_memorization: mixed epoch counts");
  }
  const auto means = sorted_means(records);
  const double n = static_cast<double>(records.size());
  for (std::size_t e = 0; e < epochs; ++e) {
    std::size_t hits = 0;
    for (const auto& r : records) hits += r.scores[e] > 0.0;
    out.frac[e] = static_cast<double>(hits) / n;
    out.weighted[e] = means[e];
  }
  return out;
}

namespace {

bool ordering_ok(const MemorizationRecord& cf, const MemorizationRecord& ctx) {
  return !ctx.start_epoch || (cf.start_epoch && *cf.start_epoch <= *ctx.start_epoch);
}

bool bound_ok(const MemorizationRecord& cf, const MemorizationRecord& ctx) {
  if (cf.scores.size() != ctx.scores.size()) return false;
  for (std::size_t e = 0; e < cf.scores.size(); ++e)
    if (ctx.scores[e] > cf.scores[e] + kLemma1Tolerance) return false;
  return true;
}

}  // namespace

Lemma1Report lemma1_check(const PairedLossCurves& paired) {
  Lemma1Report rep{counterfactual_measure(paired), contextual_measure(paired),
                   false, false};
  rep.ordering_ok = ordering_ok(rep.counterfactual, rep.contextual);
  rep.bound_ok = bound_ok(rep.counterfactual, rep.contextual);
  return rep;
}

bool lemma1_holds(const MemorizationRecord& counterfactual,
                  const MemorizationRecord& contextual) {
  return ordering_ok(counterfactual, contextual) && bound_ok(counterfactual, contextual);
}

std::size_t assumption_violations(const PairedLossCurves& paired) {
  paired.validate();
  std::size_t n = 0;
  for (std::size_t e = 0; e < paired.train.size(); ++e)
    n += paired.train[e] > paired.heldout[e];
  return n;
}

std::size_t proxy_index(double target_logprob,
                        std::span<const ProxyCandidate> pool) {
  if (pool.empty()) throw ConfigError("proxy pool is empty");
  std::size_t best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const double gap = std::abs(pool[i].logprob - target_logprob);
    if (gap < best_gap) {
      best = i;
      best_gap = gap;
    }
  }
  return best;
}

const ProxyCandidate& proxy_pair(double target_logprob,
                                 std::span<const ProxyCandidate> pool) {
  return pool[proxy_index(target_logprob, pool)];
}

bool reference_upper_bound(double target_acc, double reference_acc) {
  if (!(target_acc >= 0.0 && target_acc <= 1.0) ||
      !(reference_acc >= 0.0 && reference_acc <= 1.0))
    throw ConfigError("recollection accuracies must lie in [0, 1]");
  return reference_acc >= target_acc;
}

}  // namespace memlang
