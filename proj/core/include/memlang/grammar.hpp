// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

// Probabilistic context-free grammars: parsing from text, validation,
// sampling, exact string probabilities (inside algorithm), brute-force
// enumeration and language entropy.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "memlang/random.hpp"

namespace memlang {

using TerminalId = std::int32_t;
using NonterminalId = std::int32_t;

/// A string of the language, as terminal ids of its grammar.
using TerminalString = std::vector<TerminalId>;

struct Symbol {
  bool terminal = false;
  std::int32_t id = 0;

  friend bool operator==(const Symbol&, const Symbol&) = default;
};

struct ProductionRule {
  NonterminalId lhs = 0;
  std::vector<Symbol> rhs;  // never empty
  double prob = 1.0;        // in (0, 1]
};

namespace detail {
struct InsideTables;
}

/// A validated PCFG. Construction enforces: every rule probability in (0,1],
/// per-nonterminal sums equal to 1 within 1e-9, no epsilon rules, and no
/// useless symbols (every nonterminal reachable and productive).
class ProbabilisticGrammar {
 public:
  static constexpr double kSumTolerance = 1e-9;

  ProbabilisticGrammar(std::vector<std::string> nonterminals,
                       std::vector<std::string> terminals,
                       std::vector<ProductionRule> rules, NonterminalId start);

  const std::vector<std::string>& nonterminal_names() const {
    return nonterminals_;
  }
  const std::vector<std::string>& terminal_names() const { return terminals_; }
  const std::vector<ProductionRule>& rules() const { return rules_; }
  NonterminalId start() const { return start_; }

  std::size_t num_nonterminals() const { return nonterminals_.size(); }
  std::size_t num_terminals() const { return terminals_.size(); }

  /// Rule indices with the given left-hand side, in file order.
  std::span<const std::size_t> rules_for(NonterminalId lhs) const {
    return by_lhs_[static_cast<std::size_t>(lhs)];
  }
  /// Sum of rule probabilities per nonterminal (1 up to rounding).
  double lhs_mass(NonterminalId lhs) const {
    return lhs_mass_[static_cast<std::size_t>(lhs)];
  }

  std::optional<TerminalId> terminal_id(std::string_view name) const;

  /// Whitespace-separated token names -> ids. Throws ConfigError on a token
  /// outside the alphabet.
  TerminalString encode(std::string_view words) const;
  std::string decode(std::span<const TerminalId> tokens) const;

  const detail::InsideTables& inside_tables() const { return *inside_; }

 private:
  std::vector<std::string> nonterminals_;
  std::vector<std::string> terminals_;
  std::vector<ProductionRule> rules_;
  NonterminalId start_;
  std::vector<std::vector<std::size_t>> by_lhs_;
  std::vector<double> lhs_mass_;
  std::shared_ptr<const detail::InsideTables> inside_;
};

/// Parses the `LHS -> SYM SYM ... [p]` text format. `#` starts a comment,
/// a symbol is a terminal iff it never appears as a left-hand side, and the
/// first rule's left-hand side is the start symbol. Throws GrammarError.
ProbabilisticGrammar parse_grammar(std::string_view text);
ProbabilisticGrammar load_grammar(const std::filesystem::path& path);

struct SampledString {
  TerminalString tokens;
  double derivation_logprob = 0.0;  // nats, <= 0
};

struct SamplingLimits {
  std::size_t max_rewrites = 512;
};

/// Leftmost rewriting from the start symbol. Deterministic given the seed.
/// Throws BudgetExceeded past `limits.max_rewrites` rewriting steps.
SampledString sample_string(const ProbabilisticGrammar& g, Seed seed,
                            const SamplingLimits& limits = {});
SampledString sample_string(const ProbabilisticGrammar& g, Rng& rng,
                            const SamplingLimits& limits = {});

/// log P_L(tokens) in nats: the log of the summed probability of all
/// derivations. Returns -infinity for strings outside the language; throws
/// ConfigError on ids outside the alphabet or an empty string.
double string_logprob(const ProbabilisticGrammar& g,
                      std::span<const TerminalId> tokens);
double string_logprob(const ProbabilisticGrammar& g, std::string_view words);

struct EnumeratedString {
  TerminalString tokens;
  double probability = 0.0;
};

struct EnumerationLimits {
  std::size_t max_states = 2'000'000;
};

/// Every string of length <= max_len with nonzero probability, found by
/// depth-first enumeration of leftmost derivations. Sorted by length, then
/// lexicographically by terminal id. Throws BudgetExceeded beyond
/// `limits.max_states` expanded sentential forms.
std::vector<EnumeratedString> enumerate_language(
    const ProbabilisticGrammar& g, std::size_t max_len,
    const EnumerationLimits& limits = {});

/// Exact Shannon entropy (nats) of the language truncated at max_len; throws
/// RuntimeError unless the captured mass is at least 1 - 1e-9.
double entropy_exact(const ProbabilisticGrammar& g, std::size_t max_len,
                     const EnumerationLimits& limits = {});

struct EntropyEstimate {
  double estimate = 0.0;   // nats
  double std_error = 0.0;  // nats
};

/// Monte Carlo entropy: -mean(log P_L(s)) over i.i.d. samples, using exact
/// inside probabilities so that ambiguous grammars are handled correctly.
EntropyEstimate entropy_monte_carlo(const ProbabilisticGrammar& g,
                                    std::size_t n_samples, Seed seed);

/// A multiset of sampled strings.
class StringDataset {
 public:
  StringDataset() = default;
  StringDataset(std::vector<TerminalString> strings, Seed seed);

  const std::vector<TerminalString>& strings() const { return strings_; }
  const std::map<TerminalString, std::size_t>& freq() const { return freq_; }
  Seed seed() const { return seed_; }
  std::size_t size() const { return strings_.size(); }
  bool empty() const { return strings_.empty(); }

  std::size_t count(const TerminalString& s) const;

  /// Distinct strings in order of first occurrence.
  std::vector<TerminalString> unique_strings() const;

  /// Multiset difference removing every occurrence of `s`.
  StringDataset without(const TerminalString& s) const;

  /// Multiset sum with `copies` occurrences of `s`, appended at the end.
  StringDataset with_inserted(const TerminalString& s,
                              std::size_t copies) const;

 private:
  std::vector<TerminalString> strings_;
  std::map<TerminalString, std::size_t> freq_;
  Seed seed_ = 0;
};

struct DatasetOptions {
  SamplingLimits sampling;
  std::size_t rejection_factor = 100;  // budget = factor * n draws
};

/// n i.i.d. strings; any draw equal to `exclude` is rejected and redrawn.
StringDataset sample_dataset(const ProbabilisticGrammar& g, std::size_t n,
                             Seed seed,
                             const std::optional<TerminalString>& exclude = {},
                             const DatasetOptions& options = {});

}  // namespace memlang
