// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

#include "memlang/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <set>
#include <unordered_set>

#include "inside_tables.hpp"
#include "memlang/error.hpp"

namespace memlang {

ProbabilisticGrammar::ProbabilisticGrammar(std::vector<std::string> nonterminals,
                                           std::vector<std::string> terminals,
                                           std::vector<ProductionRule> rules,
                                           NonterminalId start)
    : nonterminals_(std::move(nonterminals)),
      terminals_(std::move(terminals)),
      rules_(std::move(rules)),
      start_(start) {
  const auto n_nt = nonterminals_.size();
  if (n_nt == 0 || rules_.empty()) throw GrammarError("grammar has no rules");
  if (start_ < 0 || static_cast<std::size_t>(start_) >= n_nt)
    throw GrammarError("start symbol out of range");

  by_lhs_.assign(n_nt, {});
  lhs_mass_.assign(n_nt, 0.0);
  for (std::size_t r = 0; r < rules_.size(); ++r) {
    const auto& rule = rules_[r];
    if (rule.lhs < 0 || static_cast<std::size_t>(rule.lhs) >= n_nt)
      throw GrammarError("rule left-hand side out of range");
    if (rule.rhs.empty())
      throw GrammarError("epsilon rule for " + nonterminals_[rule.lhs] +
                         " is not supported");
    if (!(rule.prob > 0.0 && rule.prob <= 1.0))
      throw GrammarError("rule probability for " + nonterminals_[rule.lhs] +
                         " must lie in (0, 1]");
    for (const auto& sym : rule.rhs) {
      const auto bound = sym.terminal ? terminals_.size() : n_nt;
      if (sym.id < 0 || static_cast<std::size_t>(sym.id) >= bound)
        throw GrammarError("rule symbol out of range");
    }
    by_lhs_[rule.lhs].push_back(r);
    lhs_mass_[rule.lhs] += rule.prob;
  }

  for (std::size_t a = 0; a < n_nt; ++a) {
    if (by_lhs_[a].empty())
      throw GrammarError("nonterminal " + nonterminals_[a] + " has no rules");
    if (std::abs(lhs_mass_[a] - 1.0) > kSumTolerance) {
      std::ostringstream os;
      os.precision(12);
      os << "probabilities of rules for " << nonterminals_[a] << " sum to "
         << lhs_mass_[a] << ", expected 1";
      throw GrammarError(os.str());
    }
  }

  // Productive: some rule whose right-hand side is all terminals or
  // productive nonterminals. Least fixed point.
  std::vector<bool> productive(n_nt, false);
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& rule : rules_) {
      if (productive[rule.lhs]) continue;
      const bool ok = std::all_of(rule.rhs.begin(), rule.rhs.end(),
                                  [&](const Symbol& s) {
                                    return s.terminal || productive[s.id];
                                  });
      if (ok) productive[rule.lhs] = changed = true;
    }
  }
  for (std::size_t a = 0; a < n_nt; ++a)
    if (!productive[a])
      throw GrammarError("nonterminal " + nonterminals_[a] +
                         " derives no terminal string");

  std::vector<bool> reachable(n_nt, false);
  std::vector<NonterminalId> frontier{start_};
  reachable[start_] = true;
  while (!frontier.empty()) {
    const auto a = frontier.back();
    frontier.pop_back();
    for (const auto r : by_lhs_[a])
      for (const auto& s : rules_[r].rhs)
        if (!s.terminal && !reachable[s.id]) {
          reachable[s.id] = true;
          frontier.push_back(s.id);
        }
  }
  for (std::size_t a = 0; a < n_nt; ++a)
    if (!reachable[a])
      throw GrammarError("nonterminal " + nonterminals_[a] +
                         " is unreachable from " + nonterminals_[start_]);

  std::vector<bool> used(terminals_.size(), false);
  for (const auto& rule : rules_)
    for (const auto& s : rule.rhs)
      if (s.terminal) used[s.id] = true;
  for (std::size_t t = 0; t < terminals_.size(); ++t)
    if (!used[t])
      throw GrammarError("terminal " + terminals_[t] + " is never produced");

  inside_ = std::make_shared<const detail::InsideTables>(
      detail::InsideTables::build(*this));
}

std::optional<TerminalId> ProbabilisticGrammar::terminal_id(
    std::string_view name) const {
  const auto it = std::find(terminals_.begin(), terminals_.end(), name);
  if (it == terminals_.end()) return std::nullopt;
  return static_cast<TerminalId>(it - terminals_.begin());
}

TerminalString ProbabilisticGrammar::encode(std::string_view words) const {
  TerminalString out;
  std::istringstream in{std::string(words)};
  std::string w;
  while (in >> w) {
    const auto id = terminal_id(w);
    if (!id) throw ConfigError("token '" + w + "' is not in the alphabet");
    out.push_back(*id);
  }
  return out;
}

std::string ProbabilisticGrammar::decode(
    std::span<const TerminalId> tokens) const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] < 0 || static_cast<std::size_t>(tokens[i]) >= terminals_.size())
      throw ConfigError("terminal id out of range");
    if (i) out.push_back(' ');
    out += terminals_[tokens[i]];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

struct RawToken {
  std::string text;
  int column;
};

std::vector<RawToken> split_line(std::string_view line) {
  std::vector<RawToken> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    if (i >= line.size()) break;
    const auto begin = i;
    while (i < line.size() &&
           !std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    out.push_back({std::string(line.substr(begin, i - begin)),
                   static_cast<int>(begin) + 1});
  }
  return out;
}

struct RawRule {
  std::string lhs;
  std::vector<std::string> rhs;
  double prob;
  int line;
};

}  // namespace

ProbabilisticGrammar parse_grammar(std::string_view text) {
  std::vector<RawRule> raw;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    const auto toks = split_line(line);
    if (toks.empty()) continue;

    if (toks.size() < 2 || toks[1].text != "->") {
      const int col = toks.size() < 2
                          ? toks[0].column + static_cast<int>(toks[0].text.size())
                          : toks[1].column;
      throw GrammarError("expected '->' after left-hand side", line_no, col);
    }
    const auto& lhs = toks[0];
    if (lhs.text.front() == '[')
      throw GrammarError("left-hand side must be a symbol", line_no, lhs.column);

    const auto& last = toks.back();
    if (toks.size() < 3 || last.text.front() != '[' || last.text.back() != ']' ||
        last.text.size() < 3)
      throw GrammarError("expected '[probability]' at end of rule", line_no,
                         last.column + static_cast<int>(last.text.size()));
    if (toks.size() == 3)
      throw GrammarError("epsilon rule (empty right-hand side) is not supported",
                         line_no, toks[2].column);

    const std::string_view body(last.text.data() + 1, last.text.size() - 2);
    double p = 0.0;
    const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), p);
    if (ec != std::errc{} || ptr != body.data() + body.size() || !std::isfinite(p))
      throw GrammarError("malformed probability '" + std::string(body) + "'",
                         line_no, last.column + 1);
    if (!(p > 0.0 && p <= 1.0))
      throw GrammarError("probability must lie in (0, 1]", line_no,
                         last.column + 1);

    RawRule rule{lhs.text, {}, p, line_no};
    for (std::size_t i = 2; i + 1 < toks.size(); ++i) {
      if (toks[i].text == "->" || toks[i].text.front() == '[')
        throw GrammarError("unexpected '" + toks[i].text + "'", line_no,
                           toks[i].column);
      rule.rhs.push_back(toks[i].text);
    }
    raw.push_back(std::move(rule));
  }
  if (raw.empty()) throw GrammarError("grammar has no rules");

  std::vector<std::string> nonterminals;
  std::unordered_map<std::string, NonterminalId> nt_index;
  for (const auto& r : raw)
    if (nt_index.emplace(r.lhs, static_cast<NonterminalId>(nonterminals.size()))
            .second)
      nonterminals.push_back(r.lhs);

  std::vector<std::string> terminals;
  std::unordered_map<std::string, TerminalId> t_index;
  std::vector<ProductionRule> rules;
  rules.reserve(raw.size());
  for (const auto& r : raw) {
    ProductionRule rule{nt_index.at(r.lhs), {}, r.prob};
    for (const auto& s : r.rhs) {
      if (const auto it = nt_index.find(s); it != nt_index.end()) {
        rule.rhs.push_back({false, it->second});
      } else {
        const auto [it2, inserted] =
            t_index.emplace(s, static_cast<TerminalId>(terminals.size()));
        if (inserted) terminals.push_back(s);
        rule.rhs.push_back({true, it2->second});
      }
    }
    rules.push_back(std::move(rule));
  }
  return ProbabilisticGrammar(std::move(nonterminals), std::move(terminals),
                              std::move(rules), 0);
}

ProbabilisticGrammar load_grammar(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open grammar file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_grammar(ss.str());
  } catch (const GrammarError& e) {
    throw GrammarError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Sampling

SampledString sample_string(const ProbabilisticGrammar& g, Rng& rng,
                            const SamplingLimits& limits) {
  SampledString out;
  std::vector<Symbol> stack{{false, g.start()}};
  std::size_t rewrites = 0;
  while (!stack.empty()) {
    const Symbol top = stack.back();
    stack.pop_back();
    if (top.terminal) {
      out.tokens.push_back(top.id);
      continue;
    }
    if (++rewrites > limits.max_rewrites)
      throw BudgetExceeded("expansion exceeded " +
                           std::to_string(limits.max_rewrites) +
                           " rewriting steps; grammar may not terminate");
    const auto candidates = g.rules_for(top.id);
    const double u = rng.uniform() * g.lhs_mass(top.id);
    std::size_t chosen = candidates.back();
    double acc = 0.0;
    for (const auto r : candidates) {
      acc += g.rules()[r].prob;
      if (u < acc) {
        chosen = r;
        break;
      }
    }
    const auto& rule = g.rules()[chosen];
    out.derivation_logprob += std::log(rule.prob);
    for (auto it = rule.rhs.rbegin(); it != rule.rhs.rend(); ++it)
      stack.push_back(*it);
  }
  return out;
}

SampledString sample_string(const ProbabilisticGrammar& g, Seed seed,
                            const SamplingLimits& limits) {
  Rng rng(seed);
  return sample_string(g, rng, limits);
}

// ---------------------------------------------------------------------------
// Enumeration and entropy

std::vector<EnumeratedString> enumerate_language(
    const ProbabilisticGrammar& g, std::size_t max_len,
    const EnumerationLimits& limits) {
  struct Form {
    TerminalString prefix;
    std::vector<Symbol> pending;  // top of stack = back = leftmost symbol
    double prob;
  };
  std::map<TerminalString, double> mass;
  std::vector<Form> work;
  work.push_back({{}, {{false, g.start()}}, 1.0});
  std::size_t states = 0;

  while (!work.empty()) {
    Form f = std::move(work.back());
    work.pop_back();
    while (!f.pending.empty() && f.pending.back().terminal) {
      f.prefix.push_back(f.pending.back().id);
      f.pending.pop_back();
    }
    if (f.pending.empty()) {
      mass[f.prefix] += f.prob;
      continue;
    }
    if (++states > limits.max_states)
      throw BudgetExceeded("language enumeration exceeded " +
                           std::to_string(limits.max_states) + " states");
    const auto nt = f.pending.back().id;
    for (const auto r : g.rules_for(nt)) {
      const auto& rule = g.rules()[r];
      // Every symbol yields at least one terminal.
      if (f.prefix.size() + f.pending.size() - 1 + rule.rhs.size() > max_len)
        continue;
      Form next{f.prefix, f.pending, f.prob * rule.prob};
      next.pending.pop_back();
      for (auto it = rule.rhs.rbegin(); it != rule.rhs.rend(); ++it)
        next.pending.push_back(*it);
      work.push_back(std::move(next));
    }
  }

  std::vector<EnumeratedString> out;
  out.reserve(mass.size());
  for (auto& [s, p] : mass) out.push_back({s, p});
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.tokens.size() < b.tokens.size();
  });
  return out;
}

double entropy_exact(const ProbabilisticGrammar& g, std::size_t max_len,
                     const EnumerationLimits& limits) {
  const auto strings = enumerate_language(g, max_len, limits);
  double total = 0.0;
  double h = 0.0;
  for (const auto& s : strings) {
    total += s.probability;
    h -= s.probability * std::log(s.probability);
  }
  if (total < 1.0 - 1e-9) {
    std::ostringstream os;
    os.precision(12);
    os << "strings up to length " << max_len << " capture mass " << total
       << " < 1 - 1e-9; language is effectively infinite at this bound";
    throw RuntimeError(os.str());
  }
  return h;
}

EntropyEstimate entropy_monte_carlo(const ProbabilisticGrammar& g,
                                    std::size_t n_samples, Seed seed) {
  if (n_samples < 2) throw ConfigError("entropy_monte_carlo needs n >= 2");
  Rng rng(seed);
  std::map<TerminalString, double> cache;
  std::vector<double> values;
  values.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    auto s = sample_string(g, rng);
    auto [it, inserted] = cache.try_emplace(std::move(s.tokens), 0.0);
    if (inserted) it->second = string_logprob(g, it->first);
    values.push_back(-it->second);
  }
  // Shifted two-pass moments: exact when every sample has the same value.
  const double n = static_cast<double>(n_samples);
  const double shift = values.front();
  double offset = 0.0;
  for (const double v : values) offset += v - shift;
  offset /= n;
  double ss = 0.0;
  for (const double v : values) {
    const double d = (v - shift) - offset;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / (n - 1.0));
  return {shift + offset, sd / std::sqrt(n)};
}

// ---------------------------------------------------------------------------
// Datasets

StringDataset::StringDataset(std::vector<TerminalString> strings, Seed seed)
    : strings_(std::move(strings)), seed_(seed) {
  for (const auto& s : strings_) ++freq_[s];
}

std::size_t StringDataset::count(const TerminalString& s) const {
  const auto it = freq_.find(s);
  return it == freq_.end() ? 0 : it->second;
}

std::vector<TerminalString> StringDataset::unique_strings() const {
  std::vector<TerminalString> out;
  std::set<TerminalString> seen;
  for (const auto& s : strings_)
    if (seen.insert(s).second) out.push_back(s);
  return out;
}

StringDataset StringDataset::without(const TerminalString& s) const {
  std::vector<TerminalString> kept;
  kept.reserve(strings_.size());
  for (const auto& x : strings_)
    if (x != s) kept.push_back(x);
  return StringDataset(std::move(kept), seed_);
}

StringDataset StringDataset::with_inserted(const TerminalString& s,
                                           std::size_t copies) const {
  auto all = strings_;
  all.insert(all.end(), copies, s);
  return StringDataset(std::move(all), seed_);
}

StringDataset sample_dataset(const ProbabilisticGrammar& g, std::size_t n,
                             Seed seed,
                             const std::optional<TerminalString>& exclude,
                             const DatasetOptions& options) {
  if (n < 1) throw ConfigError("dataset size must be >= 1");
  Rng rng(seed);
  std::vector<TerminalString> strings;
  strings.reserve(n);
  const std::size_t budget = options.rejection_factor * n;
  std::size_t draws = 0;
  while (strings.size() < n) {
    if (++draws > budget)
      throw BudgetExceeded("rejection budget of " + std::to_string(budget) +
                           " draws exhausted while excluding a string");
    auto s = sample_string(g, rng, options.sampling);
    if (exclude && s.tokens == *exclude) continue;
    strings.push_back(std::move(s.tokens));
  }
  return StringDataset(std::move(strings), seed);
}

}  // namespace memlang
