// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

// Test-only brute-force oracles. Deliberately share no code with the
// library's inside algorithm or enumerator.

#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "memlang/grammar.hpp"

namespace memlang::testing {

/// P(X =>* w) by direct recursion over every rule and every way to split w
/// among the rule's right-hand side. Exponential; requires a grammar without
/// unit-rule cycles.
inline double derivation_probability(const ProbabilisticGrammar& g,
                                     const Symbol& x,
                                     std::span<const TerminalId> w) {
  if (x.terminal) return (w.size() == 1 && w[0] == x.id) ? 1.0 : 0.0;
  double total = 0.0;
  for (const auto r : g.rules_for(x.id)) {
    const auto& rule = g.rules()[r];
    if (rule.rhs.size() > w.size()) continue;
    // Assign consecutive nonempty pieces of w to rhs symbols.
    std::function<double(std::size_t, std::size_t)> split =
        [&](std::size_t sym, std::size_t offset) -> double {
      const std::size_t remaining_syms = rule.rhs.size() - sym;
      if (remaining_syms == 1)
        return derivation_probability(g, rule.rhs[sym], w.subspan(offset));
      double acc = 0.0;
      for (std::size_t len = 1; offset + len + (remaining_syms - 1) <= w.size();
           ++len) {
        const double head =
            derivation_probability(g, rule.rhs[sym], w.subspan(offset, len));
        if (head == 0.0) continue;
        acc += head * split(sym + 1, offset + len);
      }
      return acc;
    };
    total += rule.prob * split(0, 0);
  }
  return total;
}

inline double derivation_probability(const ProbabilisticGrammar& g,
                                     std::span<const TerminalId> w) {
  return derivation_probability(g, Symbol{false, g.start()}, w);
}

}  // namespace memlang::testing
