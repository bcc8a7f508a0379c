// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>

#include "inside_tables.hpp"
#include "memlang/error.hpp"
#include "memlang/grammar.hpp"

namespace memlang {
namespace detail {

namespace {

// Inverse of (I - P) by Gauss-Jordan elimination with partial pivoting.
std::vector<double> unit_closure(const std::vector<double>& p, std::size_t n) {
  std::vector<double> a(n * n, 0.0);
  std::vector<double> inv(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] = (i == j) - p[i * n + j];
    inv[i * n + i] = 1.0;
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
    if (std::abs(a[pivot * n + col]) < 1e-300)
      throw NumericError("unit-rule closure is singular");
    if (pivot != col)
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(a[pivot * n + j], a[col * n + j]);
        std::swap(inv[pivot * n + j], inv[col * n + j]);
      }
    const double d = a[col * n + col];
    for (std::size_t j = 0; j < n; ++j) {
      a[col * n + j] /= d;
      inv[col * n + j] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r * n + col];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a[r * n + j] -= f * a[col * n + j];
        inv[r * n + j] -= f * inv[col * n + j];
      }
    }
  }
  return inv;
}

}  // namespace

InsideTables InsideTables::build(const ProbabilisticGrammar& g) {
  InsideTables t;
  const auto n_orig = static_cast<std::int32_t>(g.num_nonterminals());
  const auto n_term = static_cast<std::int32_t>(g.num_terminals());
  t.num_original = n_orig;
  t.start = g.start();

  std::int32_t next = n_orig + n_term;  // preterminal of terminal a: n_orig + a
  struct PendingBinary {
    std::int32_t parent, left, right;
    double prob;
  };
  std::vector<PendingBinary> binaries;
  std::vector<std::pair<std::int32_t, InsideTables::Lexical>> lexicals;
  std::vector<double> unit(static_cast<std::size_t>(n_orig) * n_orig, 0.0);

  for (std::int32_t a = 0; a < n_term; ++a)
    lexicals.push_back({a, {n_orig + a, 1.0}});

  auto as_node = [&](const Symbol& s) {
    return s.terminal ? n_orig + s.id : s.id;
  };
  for (const auto& rule : g.rules()) {
    const auto k = rule.rhs.size();
    if (k == 1) {
      const auto& s = rule.rhs[0];
      if (s.terminal)
        lexicals.push_back({s.id, {rule.lhs, rule.prob}});
      else
        unit[static_cast<std::size_t>(rule.lhs) * n_orig + s.id] += rule.prob;
      continue;
    }
    // A -> Y1 C1 [p], C1 -> Y2 C2 [1], ..., C_{k-2} -> Y_{k-1} Y_k [1]
    std::int32_t parent = rule.lhs;
    double prob = rule.prob;
    for (std::size_t i = 0; i + 2 < k; ++i) {
      const std::int32_t chain = next++;
      binaries.push_back({parent, as_node(rule.rhs[i]), chain, prob});
      parent = chain;
      prob = 1.0;
    }
    binaries.push_back(
        {parent, as_node(rule.rhs[k - 2]), as_node(rule.rhs[k - 1]), prob});
  }

  t.num_symbols = next;
  t.binary_by_left.assign(static_cast<std::size_t>(next), {});
  for (const auto& b : binaries)
    t.binary_by_left[b.left].push_back({b.parent, b.right, b.prob});
  t.lexical_by_terminal.assign(static_cast<std::size_t>(n_term), {});
  for (const auto& [a, lex] : lexicals) t.lexical_by_terminal[a].push_back(lex);

  const auto closure = unit_closure(unit, static_cast<std::size_t>(n_orig));
  t.closure_by_child.assign(static_cast<std::size_t>(next), {});
  for (std::int32_t b = 0; b < n_orig; ++b)
    for (std::int32_t a = 0; a < n_orig; ++a) {
      const double w = closure[static_cast<std::size_t>(a) * n_orig + b];
      if (w != 0.0) t.closure_by_child[b].push_back({a, w});
    }
  for (std::int32_t b = n_orig; b < next; ++b)
    t.closure_by_child[b].push_back({b, 1.0});
  return t;
}

}  // namespace detail

namespace {

// Chart cell: dense values plus the list of nonzero symbols.
struct Cell {
  std::vector<double> value;
  std::vector<std::int32_t> nonzero;
};

void close_cell(const detail::InsideTables& t, const std::vector<double>& base,
                const std::vector<std::int32_t>& base_nz, Cell& cell) {
  for (const auto b : base_nz) {
    const double v = base[b];
    for (const auto& e : t.closure_by_child[b]) {
      double& slot = cell.value[e.ancestor];
      if (slot == 0.0) cell.nonzero.push_back(e.ancestor);
      slot += e.weight * v;
    }
  }
}

}  // namespace

double string_logprob(const ProbabilisticGrammar& g,
                      std::span<const TerminalId> tokens) {
  if (tokens.empty()) throw ConfigError("string_logprob needs a nonempty string");
  for (const auto a : tokens)
    if (a < 0 || static_cast<std::size_t>(a) >= g.num_terminals())
      throw ConfigError("token id " + std::to_string(a) +
                        " is outside the alphabet");

  const auto& t = g.inside_tables();
  const std::size_t n = tokens.size();
  const auto width = static_cast<std::size_t>(t.num_symbols);
  // cells[i * (n + 1) + j] spans tokens [i, j)
  std::vector<Cell> cells((n + 1) * (n + 1));
  auto cell = [&](std::size_t i, std::size_t j) -> Cell& {
    return cells[i * (n + 1) + j];
  };

  std::vector<double> base(width, 0.0);
  std::vector<std::int32_t> base_nz;
  auto reset_base = [&] {
    for (const auto x : base_nz) base[x] = 0.0;
    base_nz.clear();
  };
  auto add_base = [&](std::int32_t x, double v) {
    if (base[x] == 0.0) base_nz.push_back(x);
    base[x] += v;
  };

  for (std::size_t i = 0; i < n; ++i) {
    reset_base();
    for (const auto& lex : t.lexical_by_terminal[tokens[i]])
      add_base(lex.parent, lex.prob);
    Cell& c = cell(i, i + 1);
    c.value.assign(width, 0.0);
    close_cell(t, base, base_nz, c);
  }

  for (std::size_t len = 2; len <= n; ++len) {
    for (std::size_t i = 0; i + len <= n; ++i) {
      const std::size_t j = i + len;
      reset_base();
      for (std::size_t k = i + 1; k < j; ++k) {
        const Cell& left = cell(i, k);
        const Cell& right = cell(k, j);
        if (left.nonzero.empty() || right.nonzero.empty()) continue;
        for (const auto b : left.nonzero) {
          const double lv = left.value[b];
          for (const auto& rule : t.binary_by_left[b]) {
            const double rv = right.value[rule.right];
            if (rv != 0.0) add_base(rule.parent, rule.prob * lv * rv);
          }
        }
      }
      Cell& c = cell(i, j);
      if (base_nz.empty()) continue;
      c.value.assign(width, 0.0);
      close_cell(t, base, base_nz, c);
    }
  }

  const Cell& root = cell(0, n);
  const double p = root.value.empty() ? 0.0 : root.value[t.start];
  if (!(p > 0.0)) return -std::numeric_limits<double>::infinity();
  return std::log(p);
}

double string_logprob(const ProbabilisticGrammar& g, std::string_view words) {
  return string_logprob(g, g.encode(words));
}

}  // namespace memlang
