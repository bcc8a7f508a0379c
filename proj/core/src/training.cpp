// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

#include "memlang/training.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "memlang/error.hpp"

namespace memlang {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train batch_size must be >= 1");
  if (!(peak_lr >= 0.0) || !std::isfinite(peak_lr))
    throw ConfigError("train peak_lr must be finite and >= 0");
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0))
    throw ConfigError("train warmup_ratio must lie in [0, 1)");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
      !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
    throw ConfigError("adam betas must lie in [0, 1)");
  if (!(adam.eps > 0.0)) throw ConfigError("adam eps must be > 0");
}

std::size_t TrainConfig::steps_per_epoch(std::size_t n) const {
  return (n + batch_size - 1) / batch_size;
}

std::size_t TrainConfig::warmup_steps(std::size_t total_steps) const {
  return static_cast<std::size_t>(
      std::ceil(warmup_ratio * static_cast<double>(total_steps)));
}

double TrainConfig::learning_rate(std::size_t step,
                                  std::size_t total_steps) const {
  const std::size_t warmup = warmup_steps(total_steps);
  if (step < warmup)
    return peak_lr * static_cast<double>(step) / static_cast<double>(warmup);
  if (total_steps <= warmup) return 0.0;
  return peak_lr * static_cast<double>(total_steps - step) /
         static_cast<double>(total_steps - warmup);
}

const char* to_string(CurveRole role) {
  return role == CurveRole::kTrainMember ? "train" : "heldout";
}

const LossCurve* TrainRun::curve(std::span<const TerminalId> s) const {
  for (const auto* group : {&dataset_curves, &probe_curves, &test_curves})
    for (const auto& c : *group)
      if (std::equal(c.string.begin(), c.string.end(), s.begin(), s.end()))
        return &c;
  return nullptr;
}

namespace {

class Adam {
 public:
  Adam(std::size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grad,
            double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
      const double mhat = m_[i] / c1;
      const double vhat = v_[i] / c2;
      params[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }

 private:
  AdamConfig cfg_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

void check_string(const ModelConfig& mcfg, const TerminalString& s,
                  const char* what) {
  if (s.empty()) throw ConfigError(std::string("empty ") + what + " string");
  mcfg.require_fits(s.size());
  for (const auto t : s)
    if (t < 0 || static_cast<std::size_t>(t) + 3 >= mcfg.vocab_size)
      throw ConfigError(std::string(what) + " string has a token outside the model vocabulary");
}

}  // namespace

TrainRun train(const StringDataset& dataset,
               std::span<const TerminalString> probes,
               std::span<const TerminalString> test_set,
               const ModelConfig& mcfg, const TrainConfig& tcfg, Seed seed,
               const EpochCallback& on_epoch) {
  mcfg.validate();
  tcfg.validate();
  if (dataset.empty()) throw ConfigError("training dataset is empty");
  for (const auto& s : dataset.strings()) check_string(mcfg, s, "dataset");
  for (const auto& s : probes) check_string(mcfg, s, "probe");
  for (const auto& s : test_set) check_string(mcfg, s, "test");

  TrainRun run;
  run.dataset = dataset;
  run.config = tcfg;
  run.model = mcfg;
  run.seed = seed;

  // Distinct strings to evaluate, each scored once per epoch.
  std::map<TerminalString, std::size_t> slot;
  std::vector<const TerminalString*> distinct;
  auto intern = [&](const TerminalString& s) {
    auto [it, fresh] = slot.try_emplace(s, distinct.size());
    if (fresh) distinct.push_back(&it->first);
    return it->second;
  };
  std::vector<std::size_t> dataset_slots, probe_slots, test_slots;
  for (const auto& s : dataset.unique_strings()) {
    dataset_slots.push_back(intern(s));
    run.dataset_curves.push_back({s, {}, CurveRole::kTrainMember});
  }
  for (const auto& s : probes) {
    probe_slots.push_back(intern(s));
    run.probe_curves.push_back(
        {s, {}, dataset.count(s) > 0 ? CurveRole::kTrainMember : CurveRole::kHeldOut});
  }
  for (const auto& s : test_set) {
    test_slots.push_back(intern(s));
    run.test_curves.push_back(
        {s, {}, dataset.count(s) > 0 ? CurveRole::kTrainMember : CurveRole::kHeldOut});
  }

  ModelParameters params = init_params(mcfg, derive_seed(seed, SeedStream::kInit));
  Adam adam(params.size(), tcfg.adam);

  const auto& strings = dataset.strings();
  std::vector<std::size_t> order(strings.size());
  const std::size_t per_epoch = tcfg.steps_per_epoch(strings.size());
  const std::size_t total_steps = per_epoch * tcfg.epochs;
  std::size_t step = 0;
  std::vector<double> losses(distinct.size());
  std::vector<std::vector<TokenId>> batch;

  for (std::size_t epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle(derive_seed(tcfg.shuffle_seed, SeedStream::kShuffle, epoch));
    shuffle.shuffle(order.begin(), order.end());
    for (std::size_t b = 0; b < per_epoch; ++b, ++step) {
      batch.clear();
      const std::size_t end = std::min(order.size(), (b + 1) * tcfg.batch_size);
      for (std::size_t i = b * tcfg.batch_size; i < end; ++i)
        batch.push_back(strings[order[i]]);
      std::vector<double> grad;
      double loss = 0.0;
      try {
        grad = loss_gradient(params, batch, &loss);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b + 1) + ": " + e.what());
      }
      if (!std::isfinite(loss))
        throw NumericError("non-finite training loss at epoch " +
                           std::to_string(epoch) + ", batch " +
                           std::to_string(b + 1));
      adam.step(params.values, grad, tcfg.learning_rate(step, total_steps));
    }
    for (std::size_t i = 0; i < distinct.size(); ++i) {
      try {
        losses[i] = sequence_loss(params, *distinct[i]);
      } catch (const NumericError& e) {
        throw NumericError("evaluation after epoch " + std::to_string(epoch) +
                           ": " + e.what());
      }
    }
    for (std::size_t i = 0; i < dataset_slots.size(); ++i)
      run.dataset_curves[i].losses.push_back(losses[dataset_slots[i]]);
    for (std::size_t i = 0; i < probe_slots.size(); ++i)
      run.probe_curves[i].losses.push_back(losses[probe_slots[i]]);
    double mean = 0.0;
    for (std::size_t i = 0; i < test_slots.size(); ++i) {
      run.test_curves[i].losses.push_back(losses[test_slots[i]]);
      mean += losses[test_slots[i]];
    }
    run.test_curve_mean.push_back(
        test_slots.empty() ? 0.0 : mean / static_cast<double>(test_slots.size()));
    if (on_epoch) on_epoch(epoch);
  }
  run.final_params = std::move(params);
  return run;
}

std::size_t optimal_learning_epoch(std::span<const double> test_curve_mean) {
  if (test_curve_mean.empty())
    throw ConfigError("optimal_learning_epoch needs a nonempty test curve");
  const auto it = std::min_element(test_curve_mean.begin(), test_curve_mean.end());
  return static_cast<std::size_t>(it - test_curve_mean.begin()) + 1;
}

std::size_t optimal_learning_epoch(const TrainRun& run) {
  return optimal_learning_epoch(run.test_curve_mean);
}

double optimal_contextual_loss(const LossCurve& curve) {
  if (curve.losses.empty()) throw ConfigError("empty loss curve");
  return *std::min_element(curve.losses.begin(), curve.losses.end());
}

}  // namespace memlang
