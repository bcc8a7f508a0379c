// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

#include "memlang/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "memlang/error.hpp"

namespace memlang {

using nlohmann::json;

void ExperimentConfig::validate() const {
  if (grammar.empty()) throw ConfigError("config: grammar path is required");
  if (sizes.empty()) throw ConfigError("config: sizes must be nonempty");
  for (const auto n : sizes)
    if (n < 1) throw ConfigError("config: dataset sizes must be >= 1");
  if (n_test < 1) throw ConfigError("config: n_test must be >= 1");
  if (K < 1) throw ConfigError("config: K must be >= 1");
  if (probe_dataset_size < 2)
    throw ConfigError("config: probe_dataset_size must be >= 2");
  if (probe_rule == ProbeRule::kExplicit && probe_strings.empty())
    throw ConfigError("config: explicit probe rule needs probe strings");
  for (const double t : taus)
    if (!(t > 0.0) || !std::isfinite(t))
      throw ConfigError("config: every tau must be finite and > 0");
  if (workers < 1) throw ConfigError("config: workers must be >= 1");
  train.validate();
}

namespace {

// Reads an optional field into `out`, converting type errors to ConfigError.
template <class T>
void read(const json& obj, const char* key, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: field '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
  if (!obj.is_object()) throw ConfigError("config: " + where + " must be an object");
  std::set<std::string> ok(known.begin(), known.end());
  for (const auto& [key, value] : obj.items())
    if (!ok.count(key)) throw ConfigError("config: unknown key '" + key + "' in " + where);
}

json model_json(const ModelConfig& m) {
  return {{"d_model", m.d_model},         {"n_layers", m.n_layers},
          {"n_heads", m.n_heads},         {"context_len", m.context_len},
          {"init_scale", m.init_scale}};
}

json train_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"peak_lr", t.peak_lr},
          {"warmup_ratio", t.warmup_ratio},
          {"adam", {{"beta1", t.adam.beta1}, {"beta2", t.adam.beta2}, {"eps", t.adam.eps}}}};
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  reject_unknown(j,
                 {"grammar", "model", "train", "sizes", "n_test", "probes", "K",
                  "taus", "loo_budget", "seed", "out_dir", "workers"},
                 "config");
  ExperimentConfig cfg;
  std::string grammar;
  read(j, "grammar", grammar);
  cfg.grammar = grammar;
  if (!grammar.empty() && cfg.grammar.is_relative() && !base_dir.empty())
    cfg.grammar = base_dir / cfg.grammar;

  if (j.contains("model")) {
    const auto& m = j["model"];
    reject_unknown(m, {"d_model", "n_layers", "n_heads", "context_len", "init_scale"}, "model");
    read(m, "d_model", cfg.model.d_model);
    read(m, "n_layers", cfg.model.n_layers);
    read(m, "n_heads", cfg.model.n_heads);
    read(m, "context_len", cfg.model.context_len);
    read(m, "init_scale", cfg.model.init_scale);
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    reject_unknown(t, {"epochs", "batch_size", "peak_lr", "warmup_ratio", "adam"}, "train");
    read(t, "epochs", cfg.train.epochs);
    read(t, "batch_size", cfg.train.batch_size);
    read(t, "peak_lr", cfg.train.peak_lr);
    read(t, "warmup_ratio", cfg.train.warmup_ratio);
    if (t.contains("adam")) {
      const auto& a = t["adam"];
      reject_unknown(a, {"beta1", "beta2", "eps"}, "train.adam");
      read(a, "beta1", cfg.train.adam.beta1);
      read(a, "beta2", cfg.train.adam.beta2);
      read(a, "eps", cfg.train.adam.eps);
    }
  }
  read(j, "sizes", cfg.sizes);
  read(j, "n_test", cfg.n_test);
  if (j.contains("probes")) {
    const auto& p = j["probes"];
    reject_unknown(p, {"rule", "strings", "dataset_size"}, "probes");
    std::string rule = "top_mid_bottom";
    read(p, "rule", rule);
    if (rule == "top_mid_bottom") cfg.probe_rule = ProbeRule::kTopMidBottom;
    else if (rule == "explicit") cfg.probe_rule = ProbeRule::kExplicit;
    else throw ConfigError("config: unknown probe rule '" + rule + "'");
    read(p, "strings", cfg.probe_strings);
    read(p, "dataset_size", cfg.probe_dataset_size);
  }
  read(j, "K", cfg.K);
  read(j, "taus", cfg.taus);
  read(j, "loo_budget", cfg.loo_budget);
  read(j, "seed", cfg.seed);
  std::string out_dir = cfg.out_dir.string();
  read(j, "out_dir", out_dir);
  cfg.out_dir = out_dir;
  read(j, "workers", cfg.workers);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str(), path.parent_path());
}

std::string canonical_json(const ExperimentConfig& cfg) {
  json j = {{"grammar", cfg.grammar.filename().string()},
            {"model", model_json(cfg.model)},
            {"train", train_json(cfg.train)},
            {"sizes", cfg.sizes},
            {"n_test", cfg.n_test},
            {"probes",
             {{"rule", cfg.probe_rule == ProbeRule::kExplicit ? "explicit" : "top_mid_bottom"},
              {"strings", cfg.probe_strings},
              {"dataset_size", cfg.probe_dataset_size}}},
            {"K", cfg.K},
            {"taus", cfg.taus},
            {"loo_budget", cfg.loo_budget},
            {"seed", cfg.seed}};
  return j.dump();
}

std::string fingerprint(const ExperimentConfig& cfg) {
  std::string material = canonical_json(cfg);
  std::ifstream in(cfg.grammar, std::ios::binary);
  if (in) {
    std::stringstream buf;
    buf << in.rdbuf();
    material += '\n';
    material += buf.str();
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a64(material)));
  return hex;
}

}  // namespace memlang
