// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

// A small reverse-mode automatic differentiation tape over row-major
// matrices. Each operation computes its value eagerly and, when the tape is
// recording, appends a closure that propagates adjoints to its inputs.
// Operations are coarse (matmul, layer norm, attention, ...) so the tape
// stays short: a full transformer forward pass records a few dozen nodes.

#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace memlang::ad {

struct Var {
  std::size_t index = 0;
};

class Tape {
 public:
  /// A non-recording tape only evaluates values; gradients are unavailable.
  explicit Tape(bool recording = true) : recording_(recording) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }

  /// A leaf aliasing external storage. When `grad` is nonempty, adjoints
  /// are accumulated into it during backward().
  Var leaf(std::span<const double> value, std::span<double> grad,
           std::size_t rows, std::size_t cols);

  std::size_t rows(Var v) const { return nodes_[v.index].rows; }
  std::size_t cols(Var v) const { return nodes_[v.index].cols; }
  std::span<const double> value(Var v) const;
  std::span<const double> grad(Var v) const;

  /// Label used in error messages for subsequently recorded operations.
  void set_location(std::string location) { location_ = std::move(location); }

  // --- operations -------------------------------------------------------

  /// out[t] = table[ids[t]] + positions[t]; table is V x d, positions C x d.
  Var embed(std::span<const std::int32_t> ids, Var table, Var positions);

  /// x (T x in) * w (in x out) + bias (1 x out).
  Var linear(Var x, Var w, Var bias);

  Var add(Var a, Var b);

  /// Row-wise layer norm with gain (1 + gain_offset) and bias, both 1 x d.
  Var layer_norm(Var x, Var gain_offset, Var bias, double eps = 1e-5);

  /// Exact GELU, x * Phi(x).
  Var gelu(Var x);

  /// Causal multi-head self-attention over a packed [Q | K | V] input of
  /// shape T x 3d. Returns the concatenated heads, T x d.
  Var causal_attention(Var qkv, std::size_t n_heads);

  /// Mean over rows of -log softmax(logits[t])[targets[t]]. Returns 1 x 1.
  Var cross_entropy(Var logits, std::span<const std::int32_t> targets);

  /// Seeds d(out)/d(out) = 1 for a 1 x 1 output and runs every closure in
  /// reverse order.
  void backward(Var out);

 private:
  struct Node {
    std::size_t rows = 0;
    std::size_t cols = 0;
    const double* value = nullptr;
    double* grad = nullptr;
    std::vector<double> value_store;
    std::vector<double> grad_store;
  };

  // Allocates an owned node; returns its index.
  Var make(std::size_t rows, std::size_t cols);
  double* mutable_value(Var v) { return nodes_[v.index].value_store.data(); }
  double* grad_ptr(Var v) { return nodes_[v.index].grad; }
  const double* value_ptr(Var v) const { return nodes_[v.index].value; }
  void check_finite(Var v, const char* op) const;

  bool recording_;
  std::string location_;
  std::deque<Node> nodes_;
  std::vector<std::function<void()>> backward_;
};

}  // namespace memlang::ad
