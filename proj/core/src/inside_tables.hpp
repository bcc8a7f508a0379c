// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace memlang {
class ProbabilisticGrammar;
}

namespace memlang::detail {

/// Binarized form of a grammar for the inside algorithm.
///
/// Nonterminal ids [0, N) are the grammar's own; after them come one
/// preterminal per terminal (used where a terminal sits in a rule of arity
/// >= 2) and one fresh chain node per extra position of each long rule.
/// Unit rules exist only among original nonterminals and are folded into a
/// closure matrix (I - P_unit)^-1 applied after every cell.
struct InsideTables {
  struct Binary {
    std::int32_t parent;
    std::int32_t right;
    double prob;
  };
  struct Lexical {
    std::int32_t parent;
    double prob;
  };
  struct ClosureEntry {
    std::int32_t ancestor;
    double weight;
  };

  std::int32_t num_symbols = 0;
  std::int32_t num_original = 0;
  std::int32_t start = 0;

  /// binary_by_left[B] lists rules A -> B C.
  std::vector<std::vector<Binary>> binary_by_left;
  /// lexical_by_terminal[a] lists rules X -> a.
  std::vector<std::vector<Lexical>> lexical_by_terminal;
  /// closure_by_child[B] lists (A, U[A][B]) with U[A][B] != 0, for
  /// B < num_original; chain and preterminal nodes close onto themselves.
  std::vector<std::vector<ClosureEntry>> closure_by_child;

  static InsideTables build(const ProbabilisticGrammar& g);
};

}  // namespace memlang::detail
