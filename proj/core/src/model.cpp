// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

#include "memlang/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "memlang/autodiff.hpp"
#include "memlang/error.hpp"

namespace memlang {

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(std::vector<std::string> terminals)
    : terminals_(std::move(terminals)) {}

Vocabulary Vocabulary::for_grammar(const ProbabilisticGrammar& g) {
  return Vocabulary(g.terminal_names());
}

std::vector<TokenId> Vocabulary::encode(std::span<const TerminalId> s) const {
  std::vector<TokenId> out(s.begin(), s.end());
  for (const auto t : out)
    if (t < 0 || static_cast<std::size_t>(t) >= terminals_.size())
      throw ConfigError("terminal id outside vocabulary");
  return out;
}

TerminalString Vocabulary::decode(std::span<const TokenId> ids) const {
  TerminalString out;
  for (const auto t : ids) {
    if (t < 0 || static_cast<std::size_t>(t) >= terminals_.size())
      throw ConfigError("token id is not a terminal");
    out.push_back(t);
  }
  return out;
}

std::string Vocabulary::token_name(TokenId id) const {
  if (id == bos()) return "<bos>";
  if (id == eos()) return "<eos>";
  if (id == pad()) return "<pad>";
  if (id < 0 || id > pad()) throw ConfigError("token id out of range");
  return terminals_[id];
}

// ---------------------------------------------------------------------------
// Config and layout

void ModelConfig::validate() const {
  if (vocab_size < 4)
    throw ConfigError("model vocab_size must cover >= 1 terminal plus 3 specials");
  if (d_model < 1 || n_layers < 1 || n_heads < 1)
    throw ConfigError("model d_model, n_layers and n_heads must be >= 1");
  if (d_model % n_heads != 0)
    throw ConfigError("model d_model must be divisible by n_heads");
  if (context_len < 2) throw ConfigError("model context_len must be >= 2");
  if (!(init_scale >= 0.0) || !std::isfinite(init_scale))
    throw ConfigError("model init_scale must be finite and >= 0");
}

void ModelConfig::require_fits(std::size_t n_tokens) const {
  if (n_tokens + 2 > context_len)
    throw ConfigError("string of " + std::to_string(n_tokens) +
                      " tokens does not fit context_len " +
                      std::to_string(context_len) + " (needs tokens + 2)");
}

std::vector<TensorSlot> parameter_layout(const ModelConfig& cfg) {
  std::vector<TensorSlot> out;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
    out.push_back({std::move(name), offset, rows, cols});
    offset += rows * cols;
  };
  const auto d = cfg.d_model, v = cfg.vocab_size;
  add("tok_emb", v, d);
  add("pos_emb", cfg.context_len, d);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const auto p = "layer" + std::to_string(l) + ".";
    add(p + "ln1.gain", 1, d);
    add(p + "ln1.bias", 1, d);
    add(p + "attn.qkv.weight", d, 3 * d);
    add(p + "attn.qkv.bias", 1, 3 * d);
    add(p + "attn.proj.weight", d, d);
    add(p + "attn.proj.bias", 1, d);
    add(p + "ln2.gain", 1, d);
    add(p + "ln2.bias", 1, d);
    add(p + "mlp.fc.weight", d, 4 * d);
    add(p + "mlp.fc.bias", 1, 4 * d);
    add(p + "mlp.out.weight", 4 * d, d);
    add(p + "mlp.out.bias", 1, d);
  }
  add("ln_f.gain", 1, d);
  add("ln_f.bias", 1, d);
  add("head.weight", d, v);
  add("head.bias", 1, v);
  return out;
}

bool ModelParameters::all_finite() const {
  return std::all_of(values.begin(), values.end(),
                     [](double x) { return std::isfinite(x); });
}

ModelParameters init_params(const ModelConfig& cfg, Seed seed) {
  cfg.validate();
  const auto layout = parameter_layout(cfg);
  ModelParameters p{cfg, std::vector<double>(layout.back().offset +
                                             layout.back().size())};
  Rng rng(seed);
  for (double& x : p.values) x = cfg.init_scale * rng.normal();
  return p;
}

// ---------------------------------------------------------------------------
// Forward graph

namespace {

constexpr std::size_t kSlotsPerLayer = 12;

// Records the network on `tape` and returns the logits node (T x V).
// `grads` is empty for evaluation-only passes.
ad::Var build_network(ad::Tape& tape, const ModelParameters& params,
                      std::span<double> grads, std::span<const TokenId> input) {
  const auto& cfg = params.config;
  if (input.empty() || input.size() > cfg.context_len)
    throw ConfigError("input of length " + std::to_string(input.size()) +
                      " outside [1, context_len=" +
                      std::to_string(cfg.context_len) + "]");
  for (const auto t : input)
    if (t < 0 || static_cast<std::size_t>(t) >= cfg.vocab_size)
      throw ConfigError("token id outside vocabulary");

  const auto layout = parameter_layout(cfg);
  if (layout.back().offset + layout.back().size() != params.values.size())
    throw ConfigError("parameter array does not match model config");

  auto leaf = [&](std::size_t slot) {
    const auto& s = layout[slot];
    const std::span<const double> val(params.values.data() + s.offset, s.size());
    std::span<double> g;
    if (!grads.empty()) g = grads.subspan(s.offset, s.size());
    return tape.leaf(val, g, s.rows, s.cols);
  };

  tape.set_location("embedding");
  const auto tok = leaf(0);
  const auto pos = leaf(1);
  ad::Var x = tape.embed(input, tok, pos);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const std::size_t b = 2 + l * kSlotsPerLayer;
    tape.set_location("layer " + std::to_string(l) + " attention");
    const auto h = tape.layer_norm(x, leaf(b + 0), leaf(b + 1));
    const auto qkv = tape.linear(h, leaf(b + 2), leaf(b + 3));
    const auto att = tape.causal_attention(qkv, cfg.n_heads);
    x = tape.add(x, tape.linear(att, leaf(b + 4), leaf(b + 5)));
    tape.set_location("layer " + std::to_string(l) + " mlp");
    const auto h2 = tape.layer_norm(x, leaf(b + 6), leaf(b + 7));
    const auto fc = tape.gelu(tape.linear(h2, leaf(b + 8), leaf(b + 9)));
    x = tape.add(x, tape.linear(fc, leaf(b + 10), leaf(b + 11)));
  }
  const std::size_t f = 2 + cfg.n_layers * kSlotsPerLayer;
  tape.set_location("output head");
  const auto hf = tape.layer_norm(x, leaf(f + 0), leaf(f + 1));
  return tape.linear(hf, leaf(f + 2), leaf(f + 3));
}

struct TeacherForced {
  std::vector<TokenId> input;    // BOS + tokens
  std::vector<TokenId> targets;  // tokens + EOS
};

TeacherForced teacher_forced(const ModelConfig& cfg,
                             std::span<const TokenId> tokens) {
  cfg.require_fits(tokens.size());
  // Specials sit at vocab_size - 3 .. vocab_size - 1.
  const auto bos = static_cast<TokenId>(cfg.vocab_size - 3);
  TeacherForced tf;
  tf.input.reserve(tokens.size() + 1);
  tf.input.push_back(bos);
  for (const auto t : tokens) {
    if (t < 0 || t >= bos) throw ConfigError("sequence contains a non-terminal token");
    tf.input.push_back(t);
  }
  tf.targets.assign(tokens.begin(), tokens.end());
  tf.targets.push_back(bos + 1);
  return tf;
}

}  // namespace

std::vector<double> forward(const ModelParameters& params,
                            std::span<const TokenId> prefix) {
  ad::Tape tape(false);
  const auto logits = build_network(tape, params, {}, prefix);
  const auto v = params.config.vocab_size;
  const auto all = tape.value(logits);
  const double* row = all.data() + (prefix.size() - 1) * v;
  for (std::size_t j = 0; j < v; ++j)
    if (!std::isfinite(row[j]))
      throw NumericError("non-finite logits; parameters are not finite");
  const double mx = *std::max_element(row, row + v);
  std::vector<double> probs(v);
  double z = 0.0;
  for (std::size_t j = 0; j < v; ++j) {
    probs[j] = std::exp(row[j] - mx);
    z += probs[j];
  }
  for (double& p : probs) p /= z;
  return probs;
}

SequenceScore score_sequence(const ModelParameters& params,
                             std::span<const TokenId> tokens) {
  const auto tf = teacher_forced(params.config, tokens);
  ad::Tape tape(false);
  const auto logits = build_network(tape, params, {}, tf.input);
  const auto v = params.config.vocab_size;
  const auto all = tape.value(logits);
  double nll = 0.0;
  std::size_t hits = 0;
  for (std::size_t t = 0; t < tf.targets.size(); ++t) {
    const double* row = all.data() + t * v;
    std::size_t best = 0;
    for (std::size_t j = 1; j < v; ++j)
      if (row[j] > row[best]) best = j;
    const double mx = row[best];
    double z = 0.0;
    for (std::size_t j = 0; j < v; ++j) z += std::exp(row[j] - mx);
    nll -= row[tf.targets[t]] - mx - std::log(z);
    hits += static_cast<TokenId>(best) == tf.targets[t];
  }
  const double n = static_cast<double>(tf.targets.size());
  SequenceScore s{nll / n, static_cast<double>(hits) / n};
  if (!std::isfinite(s.loss)) throw NumericError("non-finite sequence loss");
  return s;
}

double sequence_loss(const ModelParameters& params,
                     std::span<const TokenId> tokens) {
  return score_sequence(params, tokens).loss;
}

double sequence_accuracy(const ModelParameters& params,
                         std::span<const TokenId> tokens) {
  return score_sequence(params, tokens).accuracy;
}

std::vector<double> loss_gradient(const ModelParameters& params,
                                  std::span<const std::vector<TokenId>> batch,
                                  double* mean_loss) {
  if (batch.empty()) throw ConfigError("loss_gradient needs a nonempty batch");
  std::vector<double> grad(params.values.size(), 0.0);
  std::vector<double> seq_grad(params.values.size());
  double total = 0.0;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const auto& seq : batch) {
    const auto tf = teacher_forced(params.config, seq);
    std::fill(seq_grad.begin(), seq_grad.end(), 0.0);
    ad::Tape tape(true);
    const auto logits = build_network(tape, params, seq_grad, tf.input);
    tape.set_location("loss");
    const auto loss = tape.cross_entropy(logits, tf.targets);
    tape.backward(loss);
    total += tape.value(loss)[0];
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += inv_b * seq_grad[i];
  }
  if (mean_loss) *mean_loss = total * inv_b;
  return grad;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'M', 'L', 'C', 'K', 'P', 'T', '\0', '\n'};
constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw ConfigError("truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const ModelParameters& params,
                     const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw RuntimeError("cannot write checkpoint " + path.string());
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, kCheckpointVersion);
  const auto& c = params.config;
  put<std::uint64_t>(os, c.vocab_size);
  put<std::uint64_t>(os, c.d_model);
  put<std::uint64_t>(os, c.n_layers);
  put<std::uint64_t>(os, c.n_heads);
  put<std::uint64_t>(os, c.context_len);
  put<double>(os, c.init_scale);
  put<std::uint64_t>(os, params.values.size());
  os.write(reinterpret_cast<const char*>(params.values.data()),
           static_cast<std::streamsize>(params.values.size() * sizeof(double)));
  if (!os) throw RuntimeError("failed writing checkpoint " + path.string());
}

ModelParameters load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint " + path.string());
  char magic[sizeof kMagic];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic))
    throw ConfigError("not a memlang checkpoint: " + path.string());
  if (const auto v = get<std::uint32_t>(is); v != kCheckpointVersion)
    throw ConfigError("unsupported checkpoint version " + std::to_string(v));
  ModelParameters p;
  auto& c = p.config;
  c.vocab_size = get<std::uint64_t>(is);
  c.d_model = get<std::uint64_t>(is);
  c.n_layers = get<std::uint64_t>(is);
  c.n_heads = get<std::uint64_t>(is);
  c.context_len = get<std::uint64_t>(is);
  c.init_scale = get<double>(is);
  c.validate();
  const auto n = get<std::uint64_t>(is);
  const auto layout = parameter_layout(c);
  if (n != layout.back().offset + layout.back().size())
    throw ConfigError("checkpoint parameter count does not match its config");
  p.values.resize(n);
  if (!is.read(reinterpret_cast<char*>(p.values.data()),
               static_cast<std::streamsize>(n * sizeof(double))))
    throw ConfigError("truncated checkpoint");
  return p;
}

}  // namespace memlang
