// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

#include "memlang/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "memlang/error.hpp"
#include "memlang/parallel.hpp"

namespace memlang {

AuditCounts& AuditCounts::operator+=(const AuditCounts& o) {
  clamp_events += o.clamp_events;
  assumption_violations += o.assumption_violations;
  proxy_assumption_violations += o.proxy_assumption_violations;
  lemma1_checked += o.lemma1_checked;
  lemma1_violations += o.lemma1_violations;
  return *this;
}

std::vector<MeasureKind> study_kinds(const ExperimentConfig& cfg) {
  std::vector<MeasureKind> kinds;
  for (const double t : cfg.taus) kinds.push_back(MeasureKind::recollection(t));
  kinds.push_back(MeasureKind::counterfactual());
  kinds.push_back(MeasureKind::contextual());
  return kinds;
}

ModelConfig resolved_model(const ExperimentConfig& cfg,
                           const ProbabilisticGrammar& g) {
  ModelConfig m = cfg.model;
  m.vocab_size = g.num_terminals() + 3;
  m.validate();
  return m;
}

namespace {

// Index offset separating language-study seeds from probe-study resamples.
constexpr std::uint64_t kLanguageStream = 1ULL << 32;

Seed language_data_seed(Seed master, std::size_t size) {
  return derive_seed(master, SeedStream::kSampling, kLanguageStream | size);
}

class Logger {
 public:
  explicit Logger(const HarnessOptions& opts) : sink_(opts.log) {}
  void operator()(const std::string& line) {
    if (!sink_) return;
    std::lock_guard lock(mu_);
    sink_(line);
  }

 private:
  std::function<void(std::string_view)> sink_;
  std::mutex mu_;
};

struct TrainJob {
  std::string label;
  StringDataset data;
  std::vector<TerminalString> probes;
  std::vector<TerminalString> test;
  Seed init = 0;
  Seed shuffle = 0;
};

std::vector<TrainRun> run_jobs(const std::vector<TrainJob>& jobs,
                               const ModelConfig& mcfg, const TrainConfig& tcfg,
                               const HarnessOptions& opts) {
  Logger log(opts);
  std::mutex mu;
  std::size_t done = 0;
  return parallel_map(jobs.size(), opts.workers, [&](std::size_t i) {
    TrainConfig t = tcfg;
    t.shuffle_seed = jobs[i].shuffle;
    auto run = train(jobs[i].data, jobs[i].probes, jobs[i].test, mcfg, t, jobs[i].init);
    std::size_t k;
    {
      std::lock_guard lock(mu);
      k = ++done;
    }
    log("[" + std::to_string(k) + "/" + std::to_string(jobs.size()) + "] " +
        jobs[i].label + " done");
    return run;
  });
}

// Distinct strings of `data` ordered by decreasing frequency, ties by first
// occurrence.
std::vector<TerminalString> by_frequency(const StringDataset& data) {
  auto u = data.unique_strings();
  std::stable_sort(u.begin(), u.end(), [&](const auto& a, const auto& b) {
    return data.count(a) > data.count(b);
  });
  return u;
}

// Counterfactual and contextual records plus the Lemma 1 audit of a pair.
void audit_pair(const PairedLossCurves& p, bool exact, AuditCounts& audit) {
  const auto rep = lemma1_check(p);
  ++audit.lemma1_checked;
  audit.lemma1_violations += !rep.ok();
  audit.clamp_events += rep.counterfactual.clamp_events + rep.contextual.clamp_events;
  (exact ? audit.assumption_violations : audit.proxy_assumption_violations) +=
      assumption_violations(p);
}

}  // namespace

std::vector<Probe> select_probes(const ExperimentConfig& cfg,
                                 const ProbabilisticGrammar& g,
                                 const StringDataset& data) {
  std::vector<Probe> out;
  if (cfg.probe_rule == ProbeRule::kExplicit) {
    for (const auto& text : cfg.probe_strings) {
      auto s = g.encode(text);
      const double lp = string_logprob(g, s);
      if (!std::isfinite(lp))
        throw ConfigError("probe '" + text + "' is not in the language");
      const std::size_t f = std::max<std::size_t>(1, data.count(s));
      out.push_back({"s" + std::to_string(out.size()), std::move(s), f, lp});
    }
    return out;
  }
  const auto ranked = by_frequency(data);
  std::vector<std::size_t> levels;
  for (const auto& s : ranked)
    if (levels.empty() || levels.back() != data.count(s)) levels.push_back(data.count(s));
  auto first_at = [&](std::size_t level) {
    return &*std::find_if(ranked.begin(), ranked.end(),
                          [&](const TerminalString& s) { return data.count(s) == level; });
  };
  for (const auto* s : {&ranked.front(), first_at(levels[levels.size() / 2]), first_at(levels.back())})
    out.push_back({"s" + std::to_string(out.size()), *s, data.count(*s),
                   string_logprob(g, *s)});
  return out;
}

// --------------------------------------------------------------------------
// Paired probe study

ProbeStudyResult run_paired_probe_study(const ExperimentConfig& cfg,
                                        const HarnessOptions& opts) {
  cfg.validate();
  const auto g = load_grammar(cfg.grammar);
  const auto mcfg = resolved_model(cfg, g);
  ProbeStudyResult res;
  res.config = cfg;
  res.kinds = study_kinds(cfg);
  const auto reference = sample_dataset(
      g, cfg.probe_dataset_size, derive_seed(cfg.seed, SeedStream::kProbeSelection));
  res.probes = select_probes(cfg, g, reference);

  // Jobs: for probe p and resample k, index 2 * (p * K + k) trains on D and
  // the next index on D'.
  std::vector<TrainJob> jobs;
  for (const auto& probe : res.probes) {
    if (probe.frequency >= cfg.probe_dataset_size)
      throw ConfigError("probe " + probe.label + " fills the whole dataset");
    for (std::size_t k = 0; k < cfg.K; ++k) {
      const auto without = sample_dataset(g, cfg.probe_dataset_size - probe.frequency,
                                          derive_seed(cfg.seed, SeedStream::kSampling, k),
                                          probe.string);
      const Seed init = derive_seed(cfg.seed, SeedStream::kInit, k);
      const Seed shuffle = derive_seed(cfg.seed, SeedStream::kShuffle, k);
      const std::string tag = probe.label + " k" + std::to_string(k);
      jobs.push_back({tag + " D", without.with_inserted(probe.string, probe.frequency),
                      {probe.string}, {}, init, shuffle});
      jobs.push_back({tag + " D'", without, {probe.string}, {}, init, shuffle});
    }
  }
  const auto runs = run_jobs(jobs, mcfg, cfg.train, opts);

  const std::size_t n_kinds = res.kinds.size();
  for (std::size_t p = 0; p < res.probes.size(); ++p) {
    const auto& s = res.probes[p].string;
    res.paired.emplace_back();
    res.records.emplace_back(n_kinds);
    for (std::size_t k = 0; k < cfg.K; ++k) {
      const auto& with = runs[2 * (p * cfg.K + k)];
      const auto& without = runs[2 * (p * cfg.K + k) + 1];
      PairedLossCurves pair{s, with.probe_curves.at(0).losses,
                            without.probe_curves.at(0).losses};
      audit_pair(pair, true, res.audit);
      for (std::size_t m = 0; m < n_kinds; ++m)
        res.records[p][m].push_back(measure(pair, res.kinds[m]));
      res.paired[p].push_back(std::move(pair));
    }
    res.expected.emplace_back();
    for (std::size_t m = 0; m < n_kinds; ++m)
      res.expected[p].push_back(expected_measure(res.records[p][m], res.kinds[m]));
    const auto& cf = res.expected[p][n_kinds - 2];
    const auto& ctx = res.expected[p][n_kinds - 1];
    ++res.audit.lemma1_checked;
    res.audit.lemma1_violations += !lemma1_holds(cf, ctx);
  }
  return res;
}

// --------------------------------------------------------------------------
// Language study

std::size_t LanguageStudyResult::kind_index(MeasureType type) const {
  for (std::size_t i = 0; i < kinds.size(); ++i)
    if (kinds[i].type == type) return i;
  throw ConfigError("measure kind not evaluated");
}

double LanguageStudyResult::weighted_at_optimum(std::size_t kind) const {
  return scores.at(kind).weighted.at(optimal_epoch - 1);
}

namespace {

struct LanguagePlan {
  std::size_t size = 0;
  StringDataset dataset;
  std::vector<TerminalString> test;
  std::vector<TerminalString> ranked;   // distinct strings by frequency
  std::vector<TerminalString> loo;      // subset trained out one at a time
  std::size_t first_job = 0;            // full run; LOO runs follow
};

LanguagePlan plan_language(const ExperimentConfig& cfg, const ProbabilisticGrammar& g,
                           std::size_t size, std::vector<TrainJob>& jobs) {
  LanguagePlan plan;
  plan.size = size;
  plan.dataset = sample_dataset(g, size, language_data_seed(cfg.seed, size));
  plan.test = sample_dataset(g, cfg.n_test, derive_seed(cfg.seed, SeedStream::kTestSet)).strings();
  plan.ranked = by_frequency(plan.dataset);
  const std::size_t m = plan.ranked.size();
  const std::size_t b = std::min(cfg.loo_budget, m);
  // Evenly spaced frequency ranks, always including the top one.
  for (std::size_t j = 0; j < b; ++j) {
    const std::size_t idx = b == 1 ? 0 : (j * (m - 1) * 2 + (b - 1)) / (2 * (b - 1));
    plan.loo.push_back(plan.ranked[idx]);
  }
  const Seed init = derive_seed(cfg.seed, SeedStream::kInit, kLanguageStream);
  const Seed shuffle = derive_seed(cfg.seed, SeedStream::kShuffle, kLanguageStream);
  plan.first_job = jobs.size();
  const std::string tag = "n=" + std::to_string(size);
  jobs.push_back({tag + " full", plan.dataset, plan.loo, plan.test, init, shuffle});
  for (std::size_t j = 0; j < plan.loo.size(); ++j) {
    const auto without = plan.dataset.without(plan.loo[j]);
    if (without.empty())
      throw ConfigError("leave-one-out of the only string in the dataset is impossible");
    jobs.push_back({tag + " loo" + std::to_string(j), without, {plan.loo[j]}, {}, init, shuffle});
  }
  return plan;
}

LanguageStudyResult assemble_language(const ExperimentConfig& cfg,
                                      const ProbabilisticGrammar& g,
                                      const LanguagePlan& plan,
                                      const std::vector<TrainRun>& runs) {
  LanguageStudyResult res;
  res.config = cfg;
  res.size = plan.size;
  res.kinds = study_kinds(cfg);
  res.dataset = plan.dataset;
  res.run = runs[plan.first_job];
  const auto& full = res.run;
  res.optimal_epoch = optimal_learning_epoch(full);
  res.optimal_test_loss = full.test_curve_mean[res.optimal_epoch - 1];

  // Proxy pool: distinct test strings never trained on, in test-set order.
  std::vector<ProxyCandidate> pool;
  std::vector<std::size_t> pool_test_index;
  {
    std::map<TerminalString, bool> seen;
    for (std::size_t i = 0; i < full.test_curves.size(); ++i) {
      const auto& c = full.test_curves[i];
      if (c.role != CurveRole::kHeldOut || seen[c.string]) continue;
      seen[c.string] = true;
      pool.push_back({c.string, string_logprob(g, c.string), c.losses});
      pool_test_index.push_back(i);
    }
  }
  auto proxy_for = [&](const TerminalString& s, double lp) -> std::pair<std::vector<double>, std::string> {
    if (pool.empty())
      throw RuntimeError("every test string occurs in D; no proxy held-out curves available");
    const std::size_t i = proxy_index(lp, pool);
    return {pool[i].heldout, "proxy:t" + std::to_string(pool_test_index[i])};
  };

  std::map<TerminalString, std::size_t> loo_index;
  for (std::size_t j = 0; j < plan.loo.size(); ++j) loo_index[plan.loo[j]] = j;

  const std::size_t n_kinds = res.kinds.size();
  res.records.assign(n_kinds, {});
  std::vector<MemorizationRecord> exact_ctx, proxy_ctx;
  for (const auto& c : full.dataset_curves) {
    const auto& s = c.string;
    const double lp = string_logprob(g, s);
    res.strings.push_back(s);
    res.frequency.push_back(plan.dataset.count(s));
    res.logprob.push_back(lp);
    PairedLossCurves pair{s, c.losses, {}};
    const auto it = loo_index.find(s);
    if (it != loo_index.end()) {
      const auto& loo_run = runs[plan.first_job + 1 + it->second];
      pair.heldout = loo_run.probe_curves.at(0).losses;
      res.exact.push_back(true);
      res.heldout_source.push_back("loo");
      // The same string under the proxy, for the gap report.
      PairedLossCurves approx{s, c.losses, proxy_for(s, lp).first};
      audit_pair(approx, false, res.audit);
      exact_ctx.push_back(contextual_measure(pair));
      proxy_ctx.push_back(contextual_measure(approx));
      res.reference.push_back({s, sequence_accuracy(full.final_params, s),
                               sequence_accuracy(loo_run.final_params, s), false});
      res.reference.back().not_contextual_candidate =
          reference_upper_bound(res.reference.back().target_acc,
                                res.reference.back().reference_acc);
    } else {
      auto [curve, source] = proxy_for(s, lp);
      pair.heldout = std::move(curve);
      res.exact.push_back(false);
      res.heldout_source.push_back(source);
    }
    audit_pair(pair, res.exact.back(), res.audit);
    for (std::size_t m = 0; m < n_kinds; ++m)
      res.records[m].push_back(measure(pair, res.kinds[m]));
    res.heldout.push_back(std::move(pair.heldout));
  }
  for (std::size_t m = 0; m < n_kinds; ++m)
    res.scores.push_back(dataset_memorization(res.records[m]));

  if (!exact_ctx.empty()) {
    const auto e = dataset_memorization(exact_ctx), p = dataset_memorization(proxy_ctx);
    ProxyGap gap;
    gap.probes = exact_ctx.size();
    gap.epoch = res.optimal_epoch;
    gap.exact_weighted = e.weighted[res.optimal_epoch - 1];
    gap.proxy_weighted = p.weighted[res.optimal_epoch - 1];
    gap.gap = std::abs(gap.exact_weighted - gap.proxy_weighted);
    for (std::size_t t = 0; t < e.weighted.size(); ++t)
      gap.max_gap = std::max(gap.max_gap, std::abs(e.weighted[t] - p.weighted[t]));
    res.proxy_gap = gap;
  }

  // Top and bottom 10% of distinct strings by frequency.
  const std::size_t m = plan.ranked.size();
  res.split.group_size = std::max<std::size_t>(1, (m + 5) / 10);
  std::map<TerminalString, std::size_t> pos;
  for (std::size_t i = 0; i < res.strings.size(); ++i) pos[res.strings[i]] = i;
  for (std::size_t k = 0; k < n_kinds; ++k) {
    double top = 0.0, bottom = 0.0;
    for (std::size_t i = 0; i < res.split.group_size; ++i) {
      top += res.records[k][pos[plan.ranked[i]]].scores[res.optimal_epoch - 1] > 0.0;
      bottom += res.records[k][pos[plan.ranked[m - 1 - i]]].scores[res.optimal_epoch - 1] > 0.0;
    }
    const double n = static_cast<double>(res.split.group_size);
    res.split.top_frac.push_back(top / n);
    res.split.bottom_frac.push_back(bottom / n);
  }
  return res;
}

}  // namespace

LanguageStudyResult run_language_study(const ExperimentConfig& cfg, std::size_t size,
                                       const HarnessOptions& opts) {
  cfg.validate();
  const auto g = load_grammar(cfg.grammar);
  const auto mcfg = resolved_model(cfg, g);
  std::vector<TrainJob> jobs;
  const auto plan = plan_language(cfg, g, size, jobs);
  const auto runs = run_jobs(jobs, mcfg, cfg.train, opts);
  return assemble_language(cfg, g, plan, runs);
}

LanguageStudyResult run_language_study(const ExperimentConfig& cfg,
                                       const HarnessOptions& opts) {
  return run_language_study(cfg, cfg.sizes.front(), opts);
}

SizeSweepResult run_size_sweep(const ExperimentConfig& cfg, const HarnessOptions& opts) {
  cfg.validate();
  const auto g = load_grammar(cfg.grammar);
  const auto mcfg = resolved_model(cfg, g);
  std::vector<TrainJob> jobs;
  std::vector<LanguagePlan> plans;
  for (const auto n : cfg.sizes) plans.push_back(plan_language(cfg, g, n, jobs));
  const auto runs = run_jobs(jobs, mcfg, cfg.train, opts);
  SizeSweepResult res;
  res.config = cfg;
  for (const auto& plan : plans) res.points.push_back(assemble_language(cfg, g, plan, runs));
  return res;
}

SingleRunResult run_single_training(const ExperimentConfig& cfg, const HarnessOptions& opts) {
  cfg.validate();
  const auto g = load_grammar(cfg.grammar);
  const auto mcfg = resolved_model(cfg, g);
  const std::size_t n = cfg.sizes.front();
  std::vector<TerminalString> probes;
  for (const auto& text : cfg.probe_strings) probes.push_back(g.encode(text));
  std::vector<TrainJob> jobs{{"n=" + std::to_string(n) + " train",
                              sample_dataset(g, n, language_data_seed(cfg.seed, n)),
                              probes,
                              sample_dataset(g, cfg.n_test, derive_seed(cfg.seed, SeedStream::kTestSet)).strings(),
                              derive_seed(cfg.seed, SeedStream::kInit, kLanguageStream),
                              derive_seed(cfg.seed, SeedStream::kShuffle, kLanguageStream)}};
  auto runs = run_jobs(jobs, mcfg, cfg.train, opts);
  return {cfg, std::move(runs.front())};
}

}  // namespace memlang
