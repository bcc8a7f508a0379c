// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Usage: memlang_acceptance [criterion...] [--work-dir DIR]
// Prints one PASS/FAIL line per criterion; exit status 1 if any failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "memlang/config.hpp"
#include "memlang/error.hpp"
#include "memlang/grammar.hpp"
#include "memlang/harness.hpp"
#include "memlang/memorization.hpp"
#include "memlang/model.hpp"
#include "memlang/random.hpp"
#include "memlang/report.hpp"
#include "memlang/training.hpp"
#include "oracles/derivation_oracle.hpp"
#include "oracles/finite_difference.hpp"

using namespace memlang;
namespace fs = std::filesystem;

namespace {

const fs::path kAssets = MEMLANG_ASSET_DIR;
const fs::path kConfigs = MEMLANG_CONFIG_DIR;
fs::path g_work = fs::temp_directory_path() / "memlang_acceptance";

constexpr Seed kSeeds[] = {1, 2, 3};

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects named boolean checks; the first few failures go into the detail.
class Checks {
 public:
  void operator()(bool ok, const std::string& what) {
    ++total_;
    if (!ok) {
      ++failed_;
      if (failed_ <= 5) failures_ += (failures_.empty() ? "" : "; ") + what;
    }
  }
  bool ok() const { return failed_ == 0; }
  std::string summary() const {
    std::string s = std::to_string(total_ - failed_) + "/" + std::to_string(total_) + " checks";
    if (failed_) s += ", failed: " + failures_;
    return s;
  }

 private:
  std::size_t total_ = 0, failed_ = 0;
  std::string failures_;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

ExperimentConfig desk(const std::string& name, Seed seed) {
  auto cfg = load_experiment_config(kConfigs / (name + ".json"));
  cfg.seed = seed;
  return cfg;
}

double start_or_inf(const std::optional<std::size_t>& s) {
  return s ? static_cast<double>(*s) : std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// 1. Lemma 1

// Train curves include exact zeros; held-out curves stay above the 1e-12
// guard on the ratio denominator.
std::vector<double> random_curve(Rng& rng, std::size_t n, double scale, bool zeros) {
  std::vector<double> c(n);
  for (auto& v : c) v = zeros && rng.below(10) == 0 ? 0.0 : scale * (1e-9 + rng.uniform());
  return c;
}

std::size_t lemma1_on_language(const LanguageStudyResult& r, std::size_t& checked) {
  std::size_t bad = 0;
  for (std::size_t i = 0; i < r.strings.size(); ++i) {
    const PairedLossCurves p{r.strings[i], r.run.dataset_curves[i].losses, r.heldout[i]};
    ++checked;
    bad += !lemma1_check(p).ok();
  }
  return bad;
}

std::size_t lemma1_on_probe(const ProbeStudyResult& r, std::size_t& checked) {
  std::size_t bad = 0;
  const std::size_t n = r.kinds.size();
  for (std::size_t p = 0; p < r.probes.size(); ++p) {
    for (const auto& pair : r.paired[p]) {
      ++checked;
      bad += !lemma1_check(pair).ok();
    }
    ++checked;
    bad += !lemma1_holds(r.expected[p][n - 2], r.expected[p][n - 1]);
  }
  return bad;
}

// Reduced-scale versions of the experiment designs, so that the suite stays
// within budget; the full-scale studies are audited again in criteria 6-8.
ExperimentConfig reduced(const std::string& name) {
  auto cfg = desk(name, 1);
  cfg.model.d_model = 8;
  cfg.model.n_layers = 1;
  cfg.model.n_heads = 1;
  cfg.train.epochs = 12;
  cfg.sizes = {16};
  cfg.n_test = 16;
  cfg.probe_dataset_size = 16;
  cfg.K = 2;
  return cfg;
}

Outcome criterion1() {
  Rng rng(20260101);
  std::size_t random_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + rng.below(60);
    const double scale = std::pow(10.0, -3.0 + 6.0 * rng.uniform());
    auto train = random_curve(rng, n, scale, true);
    auto held = random_curve(rng, n, scale, false);
    if (i % 7 == 0) train = held;
    for (std::size_t e = 0; e < n; ++e)
      if (rng.below(5) == 0) train[e] = held[e];
    random_bad += !lemma1_check({{}, train, held}).ok();
  }
  std::size_t checked = 0, exp_bad = 0;
  for (const char* g : {"desk_low", "desk_high"}) {
    const auto cfg = reduced(g);
    exp_bad += lemma1_on_probe(run_paired_probe_study(cfg), checked);
    exp_bad += lemma1_on_language(run_language_study(cfg), checked);
  }
  return {random_bad == 0 && exp_bad == 0 && checked > 0,
          "random pairs 1000, violations " + std::to_string(random_bad) +
              "; experiment pairs " + std::to_string(checked) + ", violations " +
              std::to_string(exp_bad)};
}

// ---------------------------------------------------------------------------
// 2. Grammar oracle

constexpr const char* kFairCoin = "S -> a [0.5]\nS -> b [0.5]\n";
constexpr const char* kSkewedCoin = "S -> a [0.95]\nS -> b [0.05]\n";
constexpr const char* kPreterminal = "S -> A B [1]\nA -> x [0.95]\nA -> y [0.05]\nB -> z [1]\n";
constexpr const char* kAmbiguous = "S -> a S [0.5]\nS -> S a [0.3]\nS -> a [0.2]\n";
constexpr const char* kTangled =
    "S -> B [0.3]\nS -> A B [0.7]\nB -> A [0.25]\nB -> A [0.25]\nB -> b [0.5]\n"
    "A -> a [0.5]\nA -> a b [0.5]\n";
constexpr const char* kLayered =
    "S -> X Y [0.6]\nS -> Y X Y [0.4]\nX -> p q [0.7]\nX -> q [0.3]\nY -> X [0.2]\nY -> r [0.8]\n";

Outcome criterion2() {
  Checks check;
  std::size_t grammars = 0, strings = 0;
  auto oracle_suite = [&](const std::string& name, const ProbabilisticGrammar& g,
                          const std::vector<TerminalString>& words) {
    ++grammars;
    for (const auto& w : words) {
      ++strings;
      const double lp = string_logprob(g, w);
      const double oracle = std::log(testing::derivation_probability(g, w));
      check(std::abs(lp - oracle) <= 1e-12, name + " '" + g.decode(w) + "'");
    }
  };
  for (const auto& [name, text] : std::vector<std::pair<std::string, const char*>>{
           {"fair", kFairCoin}, {"skewed", kSkewedCoin}, {"preterminal", kPreterminal},
           {"ambiguous", kAmbiguous}, {"tangled", kTangled}, {"layered", kLayered}}) {
    const auto g = parse_grammar(text);
    std::vector<TerminalString> words;
    for (const auto& e : enumerate_language(g, 7)) words.push_back(e.tokens);
    oracle_suite(name, g, words);
  }
  {
    const auto g = load_grammar(kAssets / "grammars" / "desk_low.pcfg");
    std::vector<TerminalString> words;
    for (Seed s = 0; s < 40; ++s) words.push_back(sample_string(g, s).tokens);
    oracle_suite("desk_low", g, words);
  }
  double worst_mass = 0.0;
  for (const char* text : {kFairCoin, kSkewedCoin, kPreterminal, kTangled, kLayered}) {
    double mass = 0.0;
    for (const auto& e : enumerate_language(parse_grammar(text), 16)) mass += e.probability;
    worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
  }
  for (const char* f : {"desk_low.pcfg", "desk_high.pcfg"}) {
    double mass = 0.0;
    for (const auto& e : enumerate_language(load_grammar(kAssets / "grammars" / f), 12))
      mass += e.probability;
    worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
  }
  check(worst_mass <= 1e-12, "enumeration mass");
  const double h_fair = entropy_exact(parse_grammar(kFairCoin), 1);
  const double h_skew = entropy_exact(parse_grammar(kSkewedCoin), 1);
  const double binary = -(0.95 * std::log(0.95) + 0.05 * std::log(0.05));
  check(std::abs(h_fair - std::log(2.0)) <= 1e-9, "ln 2");
  check(std::abs(h_skew - binary) <= 1e-9, "binary entropy 0.95/0.05");
  check(std::abs(h_skew - 0.1985) < 5e-5, "binary entropy ~0.1985");
  return {check.ok(), std::to_string(grammars) + " grammars (incl. ambiguous), " +
                          std::to_string(strings) + " strings; worst |mass-1| " +
                          fmt(worst_mass, 3) + "; H(fair) " + fmt(h_fair, 12) + ", H(0.95) " +
                          fmt(h_skew, 12) + "; " + check.summary()};
}

// ---------------------------------------------------------------------------
// 3. Monte Carlo entropy

Outcome criterion3() {
  Checks check;
  double worst_z = 0.0;
  std::vector<std::pair<std::string, ProbabilisticGrammar>> finite;
  for (const auto& [n, t] : std::vector<std::pair<std::string, const char*>>{
           {"fair", kFairCoin}, {"skewed", kSkewedCoin}, {"tangled", kTangled}, {"layered", kLayered}})
    finite.emplace_back(n, parse_grammar(t));
  for (const char* f : {"desk_low", "desk_high"})
    finite.emplace_back(f, load_grammar(kAssets / "grammars" / (std::string(f) + ".pcfg")));
  for (const auto& [name, g] : finite) {
    const double exact = entropy_exact(g, 16);
    for (const Seed s : kSeeds) {
      const auto est = entropy_monte_carlo(g, 10000, s);
      const double z = std::abs(est.estimate - exact) / est.std_error;
      worst_z = std::max(worst_z, z);
      check(std::abs(est.estimate - exact) <= 3.0 * est.std_error, name + " seed " + std::to_string(s));
    }
  }
  const auto g1 = load_grammar(kAssets / "grammars" / "g1.pcfg");
  const auto g2 = load_grammar(kAssets / "grammars" / "g2.pcfg");
  std::string g12;
  for (const Seed s : kSeeds) {
    const auto a = entropy_monte_carlo(g1, 10000, s);
    const auto b = entropy_monte_carlo(g2, 10000, s);
    check(a.estimate > b.estimate, "G1 > G2 seed " + std::to_string(s));
    g12 += (g12.empty() ? "" : ", ") + fmt(a.estimate) + ">" + fmt(b.estimate);
  }
  return {check.ok(), std::to_string(finite.size()) + " finite grammars x 3 seeds, worst |z| " +
                          fmt(worst_z, 3) + "; G1 vs G2 nats: " + g12 + "; " + check.summary()};
}

// ---------------------------------------------------------------------------
// 4. Gradient check

Outcome criterion4() {
  ModelConfig c;
  c.vocab_size = 9 + 3;
  c.d_model = 8;
  c.n_layers = 2;
  c.n_heads = 2;
  c.context_len = 14;
  c.init_scale = 0.3;
  std::size_t compared = 0, small = 0, bad = 0;
  double worst = 0.0;
  for (const Seed seed : kSeeds) {
    const auto p = init_params(c, seed);
    Rng rng(seed * 7919);
    std::vector<std::vector<TokenId>> batch;
    for (int b = 0; b < 3; ++b) {
      std::vector<TokenId> s(2 + rng.below(10));
      for (auto& t : s) t = static_cast<TokenId>(rng.below(9));
      batch.push_back(s);
    }
    const auto g = loss_gradient(p, batch);
    std::size_t here = 0;
    while (here < 40) {
      const auto coord = static_cast<std::size_t>(rng.below(p.size()));
      const double numeric = testing::central_difference(p, coord, batch, 1e-6);
      if (std::max(std::abs(g[coord]), std::abs(numeric)) < 1e-4) {
        ++small;
        bad += std::abs(g[coord] - numeric) >= 1e-9;
        continue;
      }
      const double rel = testing::relative_error(g[coord], numeric);
      worst = std::max(worst, rel);
      bad += rel >= 1e-5;
      ++here;
    }
    compared += here;
  }
  return {bad == 0 && compared >= 100,
          std::to_string(compared) + " coordinates over 3 seeds, worst relative error " +
              fmt(worst, 3) + " (h=1e-6); " + std::to_string(small) +
              " near-zero coordinates checked absolutely; " + std::to_string(bad) + " failures"};
}

// ---------------------------------------------------------------------------
// 5. Determinism of CLI subcommands

std::map<std::string, std::string> csv_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") {
      std::ifstream in(e.path(), std::ios::binary);
      std::ostringstream s;
      s << in.rdbuf();
      out[fs::relative(e.path(), dir).string()] = s.str();
    }
  return out;
}

Outcome criterion5() {
  const fs::path base = g_work / "c5";
  fs::remove_all(base);
  fs::create_directories(base);
  const auto smoke = (kConfigs / "smoke.json").string();
  const auto low = (kConfigs / "desk_low.json").string();
  const std::vector<std::pair<std::string, std::string>> commands{
      {"train", "train --config " + low + " --seed 1"},
      {"language-study", "language-study --config " + low + " --seed 1 --size 16"},
      {"probe-study", "probe-study --config " + smoke + " --seed 1"},
      {"size-sweep", "size-sweep --config " + smoke + " --seed 1 --workers 2"},
  };
  Checks check;
  std::string timing;
  std::size_t files = 0;
  for (const auto& [name, args] : commands) {
    double secs[2];
    for (int rep = 0; rep < 2; ++rep) {
      const auto dir = base / (name + "_" + std::to_string(rep));
      const std::string cmd =
          std::string("\"") + MEMLANG_CLI_PATH + "\" " + args + " -q --out-dir \"" + dir.string() + "\" > /dev/null";
      const auto t0 = std::chrono::steady_clock::now();
      const int rc = std::system(cmd.c_str());
      secs[rep] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      check(rc == 0, name + " exit status");
    }
    const auto a = csv_bytes(base / (name + "_0")), b = csv_bytes(base / (name + "_1"));
    files += a.size();
    check(!a.empty() && a == b, name + " CSVs differ");
    check(secs[1] <= 2.0 * secs[0] + 1.0, name + " repeat slower than 2x");
    timing += (timing.empty() ? "" : ", ") + name + " " + fmt(secs[0], 3) + "s/" + fmt(secs[1], 3) + "s";
  }
  return {check.ok(), std::to_string(files) + " CSV files byte-identical across repeats (" + timing +
                          "); " + check.summary()};
}

// ---------------------------------------------------------------------------
// 6. RQ1: order of memorization

// Sign of start(i) - start(j) over probe pairs (i < j); absent = +inf.
std::vector<int> order_signature(const std::vector<double>& starts) {
  std::vector<int> sig;
  for (std::size_t i = 0; i < starts.size(); ++i)
    for (std::size_t j = i + 1; j < starts.size(); ++j)
      sig.push_back(starts[i] < starts[j] ? -1 : starts[i] > starts[j] ? 1 : 0);
  return sig;
}

std::string starts_text(const std::vector<double>& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i)
    out += (i ? "," : "") + (std::isinf(s[i]) ? std::string("-") : fmt(s[i], 3));
  return out + ")";
}

Outcome criterion6() {
  int follows = 0, differs = 0;
  std::size_t violations = 0, checked = 0;
  std::string detail;
  for (const Seed seed : kSeeds) {
    const auto cfg = desk("desk_low", seed);
    const auto r = run_paired_probe_study(cfg);
    emit_probe_study(r, g_work / "c6" / ("seed_" + std::to_string(seed)));
    violations += lemma1_on_probe(r, checked);
    const std::size_t n = r.kinds.size();
    std::vector<double> rec, ctx, cf;
    for (std::size_t p = 0; p < r.probes.size(); ++p) {
      rec.push_back(start_or_inf(r.expected[p][0].start_epoch));
      cf.push_back(start_or_inf(r.expected[p][n - 2].start_epoch));
      ctx.push_back(start_or_inf(r.expected[p][n - 1].start_epoch));
    }
    // Probes are ordered top, median, bottom frequency.
    bool freq_ok = std::isfinite(rec[0]);
    for (std::size_t p = 1; p < rec.size(); ++p)
      freq_ok = freq_ok && r.probes[p - 1].frequency > r.probes[p].frequency && rec[p - 1] <= rec[p];
    const bool diff_ok = order_signature(ctx) != order_signature(rec);
    follows += freq_ok;
    differs += diff_ok;
    std::string freqs;
    for (const auto& p : r.probes) freqs += (freqs.empty() ? "" : "/") + std::to_string(p.frequency);
    detail += " | seed " + std::to_string(seed) + " freq " + freqs + " rec" + starts_text(rec) +
              " cf" + starts_text(cf) + " ctx" + starts_text(ctx);
  }
  return {follows >= 2 && differs >= 2 && violations == 0,
          "recollection follows frequency " + std::to_string(follows) +
              "/3, contextual order differs " + std::to_string(differs) + "/3, Lemma 1 violations " +
              std::to_string(violations) + "/" + std::to_string(checked) + detail};
}

// ---------------------------------------------------------------------------
// 7. RQ3: memorization at optimal learning

Outcome criterion7() {
  std::string detail;
  bool pass = true;
  std::size_t violations = 0, checked = 0;
  for (const char* g : {"desk_high", "desk_low"}) {
    int positive = 0;
    std::string vals;
    for (const Seed seed : kSeeds) {
      const auto cfg = desk(g, seed);
      const auto r = run_language_study(cfg, cfg.sizes.back());
      emit_language_study(r, g_work / "c7" / g / ("seed_" + std::to_string(seed)));
      violations += lemma1_on_language(r, checked);
      const double w = r.weighted_at_optimum(r.kind_index(MeasureType::kContextual));
      positive += w > 0.0;
      vals += (vals.empty() ? "" : ", ") + fmt(w, 3) + "@e" + std::to_string(r.optimal_epoch);
    }
    pass = pass && positive >= 2;
    detail += std::string(" | ") + g + " |D|=256 weighted contextual " + vals + " (" +
              std::to_string(positive) + "/3 > 0)";
  }
  return {pass && violations == 0,
          "Lemma 1 violations " + std::to_string(violations) + "/" + std::to_string(checked) + detail};
}

// ---------------------------------------------------------------------------
// 8. RQ5: dataset size

Outcome criterion8() {
  int ok = 0, loss_ok = 0;
  std::size_t violations = 0, checked = 0;
  std::string detail;
  for (const Seed seed : kSeeds) {
    auto cfg = desk("desk_high", seed);
    cfg.sizes = {16, 64, 256};
    const auto r = run_size_sweep(cfg);
    emit_size_sweep(r, g_work / "c8" / ("seed_" + std::to_string(seed)));
    bool ctx_ok = true, rec_ok = true, lo_ok = true;
    std::string ctx_v, rec_v;
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      const auto& p = r.points[i];
      violations += lemma1_on_language(p, checked);
      const double ctx = p.weighted_at_optimum(p.kind_index(MeasureType::kContextual));
      const double rec = p.weighted_at_optimum(0);
      ctx_v += (i ? "," : "") + fmt(ctx, 3);
      rec_v += (i ? "," : "") + fmt(rec, 3);
      if (i) {
        const auto& q = r.points[i - 1];
        ctx_ok = ctx_ok && ctx <= q.weighted_at_optimum(q.kind_index(MeasureType::kContextual));
        rec_ok = rec_ok && rec >= q.weighted_at_optimum(0);
        lo_ok = lo_ok && p.optimal_test_loss <= q.optimal_test_loss;
      }
    }
    ok += ctx_ok && rec_ok;
    loss_ok += lo_ok;
    detail += " | seed " + std::to_string(seed) + " ctx(" + ctx_v + ") rec(" + rec_v + ")" +
              (ctx_ok && rec_ok ? " ok" : " no");
  }
  return {ok >= 2 && violations == 0,
          "desk_high sizes 16/64/256, recollection tau " + fmt(desk("desk_high", 0).taus[0], 3) +
              ": trend holds " + std::to_string(ok) + "/3 seeds; optimal test loss non-increasing " +
              std::to_string(loss_ok) + "/3; Lemma 1 violations " + std::to_string(violations) +
              "/" + std::to_string(checked) + detail};
}

// ---------------------------------------------------------------------------
// 9. Exact examples

ModelConfig tiny_model(double init_scale) {
  ModelConfig c;
  c.vocab_size = 3 + 3;
  c.d_model = 4;
  c.n_layers = 1;
  c.n_heads = 1;
  c.context_len = 8;
  c.init_scale = init_scale;
  return c;
}

std::size_t slot(const ModelConfig& c, const std::string& name) {
  for (const auto& s : parameter_layout(c))
    if (s.name == name) return s.offset;
  throw RuntimeError("no slot " + name);
}

template <class F>
bool throws(F f) {
  try {
    f();
  } catch (const Error&) {
    return true;
  }
  return false;
}

bool close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}

Outcome criterion9() {
  Checks check;
  // Grammar
  {
    const auto g = parse_grammar("S -> a [1.0]");
    check(g.rules().size() == 1 && g.terminal_names() == std::vector<std::string>{"a"}, "minimal grammar");
    check(throws([] { parse_grammar("S -> a [0.6]\nS -> b [0.3]"); }), "probability sum error");
    const auto ab = parse_grammar("S -> a b [1.0]");
    for (Seed s : {0ULL, 9ULL}) {
      const auto x = sample_string(ab, s);
      check(ab.decode(x.tokens) == "a b" && x.derivation_logprob == 0.0, "deterministic sample");
    }
    const auto fair = parse_grammar(kFairCoin);
    const auto s1 = sample_string(fair, 5), s2 = sample_string(fair, 5);
    check(s1.tokens == s2.tokens && s1.derivation_logprob == s2.derivation_logprob, "sample determinism");
    const auto pre = parse_grammar(kPreterminal);
    check(string_logprob(pre, "x z") == std::log(0.95), "ln 0.95");
    check(throws([&] { string_logprob(pre, "q"); }), "unknown terminal");
    const auto e1 = enumerate_language(fair, 1);
    check(e1.size() == 2 && fair.decode(e1[0].tokens) == "a" && e1[0].probability == 0.5 &&
              fair.decode(e1[1].tokens) == "b" && e1[1].probability == 0.5,
          "enumerate fair coin");
    double mass = 0.0;
    for (const auto& e : enumerate_language(pre, 4)) mass += e.probability;
    check(std::abs(mass - 1.0) <= 1e-12, "finite mass");
    const auto chain = parse_grammar("S -> a S [0.5]\nS -> a [0.5]");
    const auto e3 = enumerate_language(chain, 3);
    check(e3.size() == 3 && chain.decode(e3[2].tokens) == "a a a" && e3[0].probability == 0.5 &&
              e3[1].probability == 0.25 && e3[2].probability == 0.125,
          "geometric chain");
    check(std::abs(entropy_exact(fair, 1) - std::log(2.0)) < 1e-12, "ln 2");
    check(std::abs(entropy_exact(parse_grammar(kSkewedCoin), 1) - 0.1985) < 5e-5, "0.1985");
    check(entropy_exact(g, 1) == 0.0, "degenerate entropy");
    const auto mc = entropy_monte_carlo(g, 100, 1);
    check(mc.estimate == 0.0 && mc.std_error == 0.0, "degenerate MC");
    const auto d4 = sample_dataset(g, 4, 1);
    check(d4.freq().size() == 1 && d4.freq().begin()->second == 4, "deterministic dataset");
    const auto ex = sample_dataset(fair, 1000, 2, fair.encode("a"));
    check(ex.freq().size() == 1 && fair.decode(ex.freq().begin()->first) == "b", "exclusion");
    check(sample_dataset(fair, 50, 3).strings() == sample_dataset(fair, 50, 3).strings(),
          "dataset determinism");
  }
  // Model
  {
    const auto c = tiny_model(0.5);
    const auto p = init_params(c, 3);
    const std::vector<TokenId> prefix{static_cast<TokenId>(c.vocab_size - 3), 0, 1};
    const auto probs = forward(p, prefix);
    double sum = 0.0;
    for (const double q : probs) sum += q;
    check(std::abs(sum - 1.0) <= 1e-12, "softmax normalization");
    check(forward(p, prefix) == probs, "forward determinism");
    const auto z = init_params(tiny_model(0.0), 3);
    bool uniform = true;
    for (const double q : forward(z, prefix)) uniform = uniform && std::abs(q - 1.0 / 6.0) < 1e-15;
    check(uniform, "uniform at zero init");
    const std::vector<TokenId> s{0, 2, 1};
    check(std::abs(sequence_loss(z, s) - std::log(6.0)) < 1e-12, "ln V");
    // Pointer model: residual at position t is 50 e_t, head maps e_t to target.
    const std::vector<TokenId> targets{0, 2, 1, static_cast<TokenId>(c.vocab_size - 2)};
    auto pointer = init_params(tiny_model(0.0), 0);
    for (std::size_t t = 0; t < targets.size(); ++t) {
      pointer.values[slot(c, "pos_emb") + t * c.d_model + t] = 50.0;
      pointer.values[slot(c, "head.weight") + t * c.vocab_size + targets[t]] = 1000.0;
    }
    check(sequence_loss(pointer, s) == 0.0, "certain model loss 0");
    check(sequence_accuracy(pointer, s) == 1.0, "perfect recollection accuracy");
    check(sequence_accuracy(pointer, std::vector<TokenId>{1, 0}) == 0.0, "always wrong accuracy");
    // Closed-form output gradient at zero logits.
    const std::vector<std::vector<TokenId>> single{{1}};
    const auto g = loss_gradient(z, single);
    bool closed = true;
    const auto bias = slot(c, "head.bias");
    for (std::size_t v = 0; v < c.vocab_size; ++v) {
      // two positions: predict token 1 then EOS, each weight 1/2
      double expect = 1.0 / 6.0;
      if (v == 1 || v == c.vocab_size - 2) expect -= 0.5;
      closed = closed && std::abs(g[bias + v] - expect) <= 1e-10;
    }
    check(closed, "closed-form output gradient");
    const std::vector<std::vector<TokenId>> one{s}, two{s, s};
    check(close(loss_gradient(p, one), loss_gradient(p, two), 1e-12), "duplicated batch");
    check(init_params(c, 4).values == init_params(c, 4).values, "init determinism");
    bool zeros = true;
    for (const double v : z.values) zeros = zeros && v == 0.0;
    check(zeros, "init scale 0");
    check(init_params(c, 4).values != init_params(c, 5).values, "different seeds");
  }
  // Training
  {
    const auto g = parse_grammar("S -> A B [1]\nA -> x [0.7]\nA -> y [0.3]\nB -> z [0.6]\nB -> z z [0.4]");
    const auto data = sample_dataset(g, 10, 4);
    ModelConfig m = tiny_model(0.1);
    m.vocab_size = g.num_terminals() + 3;
    TrainConfig t;
    t.epochs = 4;
    t.peak_lr = 0.0;
    const auto flat = train(data, {}, {}, m, t, 1);
    bool constant = true;
    for (const auto& c : flat.dataset_curves)
      for (const double l : c.losses) constant = constant && l == c.losses.front();
    check(constant, "peak_lr 0 constant curves");
    t.peak_lr = 1e-2;
    const auto a = train(data, {}, {}, m, t, 1), b = train(data, {}, {}, m, t, 1);
    check(a.final_params.values == b.final_params.values && a.dataset_curves[0].losses == b.dataset_curves[0].losses,
          "train determinism");
    check(optimal_learning_epoch(std::vector<double>{3.0, 2.0, 1.5, 1.7}) == 3, "optimal epoch 3");
    check(optimal_learning_epoch(std::vector<double>{2.0, 2.0}) == 1, "optimal epoch tie");
    std::vector<double> dec(50);
    for (std::size_t i = 0; i < 50; ++i) dec[i] = 50.0 - static_cast<double>(i);
    check(optimal_learning_epoch(dec) == 50, "decreasing curve");
    check(optimal_contextual_loss({{}, {2.0, 1.1, 1.4}, CurveRole::kHeldOut}) == 1.1, "optimal contextual 1.1");
    check(optimal_contextual_loss({{}, {0.7, 0.7, 0.7}, CurveRole::kHeldOut}) == 0.7, "constant curve");
  }
  // Measures
  {
    const auto r1 = recollection_measure(TerminalString{}, std::vector<double>{0.5, 0.3, 0.19, 0.1}, 0.2);
    check(r1.start_epoch == 3 && r1.scores == std::vector<double>{0, 0, 1, 1}, "recollection start 3");
    const auto r2 = recollection_measure(TerminalString{}, std::vector<double>{0.5, 0.4}, 0.2);
    check(!r2.start_epoch && r2.scores == std::vector<double>{0, 0}, "recollection none");
    const auto r3 = recollection_measure(TerminalString{}, std::vector<double>{0.19, 0.25, 0.15}, 0.2);
    check(r3.start_epoch == 1 && r3.scores == std::vector<double>{1, 0, 1}, "recollection non-sticky");
    const auto cf1 = counterfactual_measure({{}, {3.0, 0.5}, {2.0, 2.0}});
    check(cf1.start_epoch == 2 && std::abs(cf1.scores[1] - 0.75) <= 1e-12, "Eq. 1 gives 0.75");
    const auto cf2 = counterfactual_measure({{}, {1.0, 2.0}, {1.0, 2.0}});
    check(!cf2.start_epoch && cf2.scores == std::vector<double>{0, 0}, "cf identity");
    const auto cf3 = counterfactual_measure({{}, {1.0, 0.8, 0.4}, {1.0, 1.0, 1.0}});
    check(cf3.start_epoch == 2 && close(cf3.scores, {0, 0.2, 0.6}, 1e-12), "Eq. 1 per epoch");
    const auto ctx = contextual_measure({{}, {1.5, 0.8, 0.6}, {2.0, 1.0, 1.5}});
    check(ctx.start_epoch == 2 && close(ctx.scores, {0, 0.2, 0.4}, 1e-12), "Eq. 3 gives 0.2/0.4");
    const auto ctx2 = contextual_measure({{}, {1.5, 1.2}, {2.0, 1.0}});
    check(!ctx2.start_epoch, "contextual none");
    MemorizationRecord one{{}, MeasureKind::contextual(), 2, {0.0, 0.3}, 0};
    check(expected_measure(std::vector<MemorizationRecord>{one}, MeasureKind::contextual()).scores == one.scores, "K=1 identity");
    MemorizationRecord a{{}, MeasureKind::contextual(), 1, {1.0}, 0}, b{{}, MeasureKind::contextual(), {}, {0.0}, 0};
    check(expected_measure(std::vector<MemorizationRecord>{a, b}, MeasureKind::contextual()).scores[0] == 0.5, "mean 0.5");
    std::vector<MemorizationRecord> four;
    for (const double s : {0.2, 0.0, 0.5, 0.0})
      four.push_back({{}, MeasureKind::contextual(), s > 0 ? std::optional<std::size_t>(1) : std::nullopt, {s}, 0});
    const auto dm = dataset_memorization(four);
    check(dm.frac[0] == 0.5 && std::abs(dm.weighted[0] - 0.175) <= 1e-15, "frac 0.5 weighted 0.175");
    for (auto& r : four) r.scores = {0.0};
    const auto dz = dataset_memorization(four);
    check(dz.frac[0] == 0.0 && dz.weighted[0] == 0.0, "all zero");
    for (auto& r : four) r.scores = {1.0};
    const auto d1 = dataset_memorization(four);
    check(d1.frac[0] == 1.0 && d1.weighted[0] == 1.0, "all ones");
    const auto l = lemma1_check({{}, {1.0, 2.0}, {1.0, 2.0}});
    check(l.ok() && !l.counterfactual.start_epoch && !l.contextual.start_epoch, "Lemma 1 identity");
    const std::vector<ProxyCandidate> pool{{{}, -5.0, {}}, {{}, -3.0, {}}, {{}, -1.2, {}}};
    check(proxy_index(-3.1, pool) == 1, "proxy nearest");
    const std::vector<ProxyCandidate> twin{{{}, -5.0, {}}, {{}, -3.1, {}}, {{}, -3.0, {}}};
    check(proxy_index(-3.1, twin) == 1, "proxy twin");
    check(!reference_upper_bound(1.0, 0.3), "reference 1.0 vs 0.3");
    check(reference_upper_bound(0.0, 0.7), "reference boundary");
  }
  // Harness
  {
    auto cfg = reduced("desk_low");
    cfg.K = 1;
    cfg.train.peak_lr = 0.0;
    const auto r = run_paired_probe_study(cfg);
    bool none = r.audit.lemma1_violations == 0;
    for (const auto& per_probe : r.expected)
      for (const auto& rec : per_probe) none = none && !rec.start_epoch;
    check(none, "K=1 lr=0 no starts");
    cfg.loo_budget = cfg.sizes.front();
    const auto lang = run_language_study(cfg);
    bool zero = true;
    for (const auto& s : lang.scores)
      for (std::size_t e = 0; e < s.frac.size(); ++e) zero = zero && s.frac[e] == 0.0 && s.weighted[e] == 0.0;
    check(zero, "all-zero scores give zero frac/weighted");
    ProbeStudyResult empty;
    empty.config = cfg;
    empty.kinds = study_kinds(cfg);
    const auto dir = g_work / "c9_empty";
    emit_probe_study(empty, dir);
    const auto t = read_csv(dir / "measures.csv");
    check(t.rows.empty() && t.header.size() == 7, "empty measure set header-only");
    auto single = cfg;
    single.train.peak_lr = 1e-2;
    const auto sweep = run_size_sweep(single);
    const auto sdir = g_work / "c9_sweep";
    emit_size_sweep(sweep, sdir);
    std::ifstream in(sdir / "summary.json");
    const auto js = nlohmann::json::parse(in);
    check(read_csv(sdir / "sweep.csv").rows.size() == empty.kinds.size() && js["points"].size() == 1 &&
              js["trends"].is_null(),
          "single size, one row per kind, no trend");
  }
  return {check.ok(), check.summary() + " (SVG parse and byte-identical re-runs: unit tests and criterion 5)"};
}

// ---------------------------------------------------------------------------
// 10. Proxy vs leave-one-out

Outcome criterion10() {
  const auto cfg = desk("desk_low", 1);
  const auto dir = g_work / "c10";
  emit_language_study(run_language_study(cfg, 64), dir);
  std::ifstream in(dir / "summary.json");
  const auto j = nlohmann::json::parse(in);
  const auto& gap = j["proxy_gap"];
  const bool present = gap.is_object() && gap.contains("gap") && gap["gap"].is_number() &&
                       gap["exact_weighted"].is_number() && gap["proxy_weighted"].is_number();
  if (!present) return {false, "proxy_gap missing from summary.json"};
  const double g = gap["gap"].get<double>();
  const auto probes = gap["probes"].get<std::size_t>();
  const bool ok = std::isfinite(g) && std::isfinite(gap["exact_weighted"].get<double>()) &&
                  std::isfinite(gap["proxy_weighted"].get<double>()) && probes >= 1 && probes <= 8;
  return {ok, "desk_low |D|=64: " + std::to_string(probes) + " leave-one-out probes, exact " +
                  fmt(gap["exact_weighted"].get<double>()) + ", proxy " +
                  fmt(gap["proxy_weighted"].get<double>()) + ", gap " + fmt(g) + " at epoch " +
                  std::to_string(gap["epoch"].get<std::size_t>()) + " (max over epochs " +
                  fmt(gap["max_gap_over_epochs"].get<double>()) + ")"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "Lemma 1 suite", 10, criterion1},
      {2, "grammar oracle", 30, criterion2},
      {3, "entropy estimator", 120, criterion3},
      {4, "gradient check", 120, criterion4},
      {5, "determinism", 600, criterion5},
      {6, "RQ1 order of memorization", 1800, criterion6},
      {7, "RQ3 memorization at optimal learning", 1800, criterion7},
      {8, "RQ5 dataset size", 5400, criterion8},
      {9, "exact examples", 5, criterion9},
      {10, "proxy sanity", 1800, criterion10},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work-dir" && i + 1 < argc) {
      g_work = argv[++i];
    } else {
      selected.push_back(std::atoi(a.c_str()));
    }
  }
  fs::create_directories(g_work);
  int failed = 0;
  for (const auto& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end())
      continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs <= c.budget_s;
    const bool pass = o.pass && in_budget;
    failed += !pass;
    std::printf("%s criterion %d (%s): %s [%.1f s, budget %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id,
                c.name, o.detail.c_str(), secs, c.budget_s, in_budget ? "" : ", OVER BUDGET");
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
