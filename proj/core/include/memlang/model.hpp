// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

// Decoder-only pre-norm transformer over one token per grammar terminal,
// in 64-bit floating point, trained through the tape in autodiff.hpp.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "memlang/grammar.hpp"
#include "memlang/random.hpp"

namespace memlang {

using TokenId = std::int32_t;

/// Terminals keep their grammar ids 0..T-1; BOS, EOS and PAD follow.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> terminals);
  static Vocabulary for_grammar(const ProbabilisticGrammar& g);

  std::size_t size() const { return terminals_.size() + 3; }
  std::size_t num_terminals() const { return terminals_.size(); }
  TokenId bos() const { return static_cast<TokenId>(terminals_.size()); }
  TokenId eos() const { return bos() + 1; }
  TokenId pad() const { return bos() + 2; }
  const std::vector<std::string>& terminals() const { return terminals_; }

  std::vector<TokenId> encode(std::span<const TerminalId> s) const;
  TerminalString decode(std::span<const TokenId> ids) const;
  std::string token_name(TokenId id) const;

 private:
  std::vector<std::string> terminals_;
};

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 2;
  std::size_t context_len = 128;
  double init_scale = 0.02;

  /// Throws ConfigError on an inconsistent configuration.
  void validate() const;
  /// Throws ConfigError unless a string of this many terminals fits
  /// (BOS + tokens + EOS must fit the context).
  void require_fits(std::size_t n_tokens) const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Location of one named tensor inside the flat parameter array.
struct TensorSlot {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
};

/// Declaration order: token embedding, position embedding, then per layer
/// {ln1 gain, ln1 bias, qkv weight, qkv bias, projection weight, projection
/// bias, ln2 gain, ln2 bias, fc weight, fc bias, fc-out weight, fc-out bias},
/// then final norm gain, final norm bias, head weight, head bias.
/// Layer-norm gains are stored as offsets from 1.
std::vector<TensorSlot> parameter_layout(const ModelConfig& cfg);

struct ModelParameters {
  ModelConfig config;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool all_finite() const;
};

/// Every scalar ~ N(0, init_scale^2), deterministic per seed.
ModelParameters init_params(const ModelConfig& cfg, Seed seed);

/// Next-token distribution after `prefix` (1 <= |prefix| <= context_len).
std::vector<double> forward(const ModelParameters& params,
                            std::span<const TokenId> prefix);

struct SequenceScore {
  double loss = 0.0;      // mean nats per predicted position
  double accuracy = 0.0;  // fraction of argmax hits
};

/// Teacher-forced score of BOS + tokens predicting tokens + EOS.
/// `tokens` are terminal token ids (no specials).
SequenceScore score_sequence(const ModelParameters& params,
                             std::span<const TokenId> tokens);

double sequence_loss(const ModelParameters& params,
                     std::span<const TokenId> tokens);

/// Argmax ties resolve to the lowest token id.
double sequence_accuracy(const ModelParameters& params,
                         std::span<const TokenId> tokens);

/// Exact gradient of the mean of sequence_loss over the batch, in the flat
/// parameter order. Returns the mean loss through `mean_loss` when non-null.
std::vector<double> loss_gradient(
    const ModelParameters& params,
    std::span<const std::vector<TokenId>> batch, double* mean_loss = nullptr);

/// Versioned little-endian binary checkpoint: magic, version, config, then
/// the flat parameter array in declaration order. Round trips exactly.
void save_checkpoint(const ModelParameters& params,
                     const std::filesystem::path& path);
ModelParameters load_checkpoint(const std::filesystem::path& path);

}  // namespace memlang
