// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

#include "memlang/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "memlang/error.hpp"
#include "memlang/svg.hpp"

namespace memlang {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string kind_label(const MeasureKind& kind) {
  if (kind.type == MeasureType::kRecollection)
    return std::string("recollection:") + format_double(kind.tau);
  return kind.name();
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw RuntimeError("CSV column '" + name + "' missing");
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, std::vector<std::string> header) : out_(path, std::ios::binary) {
    if (!out_) throw RuntimeError("cannot write " + path.string());
    row(header);
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }
  ~CsvWriter() { out_.flush(); }

 private:
  std::ofstream out_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write " + path.string());
  out << text;
  if (!out) throw RuntimeError("write failed for " + path.string());
}

void write_json(const fs::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

ordered_json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeError("cannot read " + path.string());
  try {
    return ordered_json::parse(in);
  } catch (const json::exception& e) {
    throw RuntimeError("malformed " + path.string() + ": " + e.what());
  }
}

std::string tokens_text(const ProbabilisticGrammar& g, const TerminalString& s) {
  std::string out;
  for (const auto t : s) {
    if (!out.empty()) out += ' ';
    out += g.terminal_names()[t];
  }
  return out;
}

std::string padded(char prefix, std::size_t i, std::size_t n) {
  std::string digits = std::to_string(i);
  const std::size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
  return std::string(1, prefix) + std::string(width - std::min(width, digits.size()), '0') + digits;
}

ordered_json audit_json(const AuditCounts& a) {
  return {{"clamp_events", a.clamp_events},
          {"assumption_violations", a.assumption_violations},
          {"proxy_assumption_violations", a.proxy_assumption_violations},
          {"lemma1_checked", a.lemma1_checked},
          {"lemma1_violations", a.lemma1_violations}};
}

ordered_json start_json(const std::optional<std::size_t>& s) {
  return s ? ordered_json(*s) : ordered_json(nullptr);
}

void require_lemma1(const AuditCounts& audit) {
  if (audit.lemma1_violations > 0)
    throw RuntimeError(std::to_string(audit.lemma1_violations) +
                       " contextual/counterfactual record pairs violate Lemma 1");
}

void write_curve_rows(CsvWriter& w, const std::string& id, const char* role,
                      const std::vector<double>& losses) {
  for (std::size_t e = 0; e < losses.size(); ++e)
    w.row({id, role, std::to_string(e + 1), format_double(losses[e])});
}

void write_measure_rows(CsvWriter& w, const std::string& id, const MemorizationRecord& r) {
  const std::string tau =
      r.kind.type == MeasureType::kRecollection ? format_double(r.kind.tau) : std::string();
  for (std::size_t e = 0; e < r.scores.size(); ++e) {
    const bool started = r.start_epoch && e + 1 >= *r.start_epoch;
    w.row({id, r.kind.name(), tau, std::to_string(e + 1), format_double(r.scores[e]),
           started ? "1" : "0", std::to_string(r.clamp_events)});
  }
}

const std::vector<std::string> kCurveHeader{"string_id", "role", "epoch", "loss"};
const std::vector<std::string> kMeasureHeader{"string_id", "kind", "tau", "epoch",
                                              "score", "started", "clamp_events"};
const std::vector<std::string> kStringHeader{"string_id", "frequency", "logprob", "tokens"};

ordered_json config_json(const ExperimentConfig& cfg) {
  return ordered_json::parse(canonical_json(cfg));
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RuntimeError("cannot create " + dir.string() + ": " + ec.message());
}

// --------------------------------------------------------------------------
// Plot rendering from CSV

double parse_number(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw RuntimeError("malformed number '" + s + "' in CSV");
  return v;
}

fs::path save_plot(const fs::path& dir, const std::string& name, const svg::Chart& chart) {
  const auto path = dir / name;
  write_text(path, svg::render(chart));
  return path;
}

// Mean train-member and held-out test curves of a train or language study.
std::vector<fs::path> render_loss_overview(const fs::path& dir, const std::string& title,
                                           std::optional<double> optimal_epoch) {
  const auto t = read_csv(dir / "curves.csv");
  const auto id = t.column("string_id"), role = t.column("role"), ep = t.column("epoch"),
             loss = t.column("loss");
  std::map<std::size_t, std::pair<double, double>> train, test;  // sum, count
  for (const auto& r : t.rows) {
    const std::size_t e = static_cast<std::size_t>(parse_number(r[ep]));
    const double l = parse_number(r[loss]);
    if (r[id][0] == 'd' && r[role] == "train") {
      train[e].first += l;
      train[e].second += 1;
    } else if (r[id][0] == 't') {
      test[e].first += l;
      test[e].second += 1;
    }
  }
  svg::Chart c{title, "epoch", "mean loss (nats/token)", {}, {}, {}};
  for (const auto* m : {&train, &test}) {
    if (m->empty()) continue;
    svg::Series s{m == &train ? "train strings" : "test strings", {}, {}, m == &test};
    for (const auto& [e, v] : *m) {
      s.x.push_back(static_cast<double>(e));
      s.y.push_back(v.first / v.second);
    }
    c.series.push_back(std::move(s));
  }
  if (optimal_epoch) c.vertical.push_back({*optimal_epoch, "optimal learning"});
  return {save_plot(dir, "loss_curves.svg", c)};
}

std::vector<fs::path> render_language(const fs::path& dir, const ordered_json& summary) {
  std::vector<fs::path> out;
  const double opt = summary.at("optimal_epoch").get<double>();
  const std::string n = std::to_string(summary.at("size").get<std::size_t>());
  auto loss = render_loss_overview(dir, "Loss curves, |D| = " + n, opt);
  out.insert(out.end(), loss.begin(), loss.end());
  const auto t = read_csv(dir / "dataset.csv");
  const auto kind = t.column("kind"), tau = t.column("tau"), ep = t.column("epoch"),
             frac = t.column("frac"), weighted = t.column("weighted");
  for (const auto& [col, name] : {std::pair{frac, "frac"}, std::pair{weighted, "weighted"}}) {
    std::map<std::string, svg::Series> series;
    std::vector<std::string> order;
    for (const auto& r : t.rows) {
      const std::string label = r[tau].empty() ? r[kind] : r[kind] + " (" + r[tau] + ")";
      if (!series.count(label)) {
        order.push_back(label);
        series[label].label = label;
      }
      series[label].x.push_back(parse_number(r[ep]));
      series[label].y.push_back(parse_number(r[col]));
    }
    svg::Chart c{std::string("Dataset memorization (") + name + "), |D| = " + n, "epoch",
                 std::string("mem_") + name, {}, {{opt, "optimal learning"}}, {}};
    for (const auto& l : order) c.series.push_back(series[l]);
    out.push_back(save_plot(dir, std::string("memorization_") + name + ".svg", c));
  }
  return out;
}

std::vector<fs::path> render_probe(const fs::path& dir, const ordered_json& summary) {
  std::vector<fs::path> out;
  const auto curves = read_csv(dir / "curves_k0.csv");
  const auto id = curves.column("string_id"), role = curves.column("role"),
             ep = curves.column("epoch"), loss = curves.column("loss");
  std::vector<double> taus;
  for (const auto& t : summary.at("config").at("taus")) taus.push_back(t.get<double>());
  for (const auto& probe : summary.at("probes")) {
    const std::string pid = probe.at("string_id").get<std::string>();
    svg::Series train{"train (D)", {}, {}, false}, held{"held-out (D')", {}, {}, true};
    for (const auto& r : curves.rows) {
      if (r[id] != pid) continue;
      auto& s = r[role] == "train" ? train : held;
      s.x.push_back(parse_number(r[ep]));
      s.y.push_back(parse_number(r[loss]));
    }
    svg::Chart c{"Loss of " + pid + " (freq " + std::to_string(probe.at("frequency").get<std::size_t>()) + ", resample 0)",
                 "epoch", "loss (nats/token)", {train, held}, {}, {}};
    for (const double t : taus) c.horizontal.push_back({t, "tau " + format_double(t)});
    if (!held.y.empty())
      c.horizontal.push_back({*std::min_element(held.y.begin(), held.y.end()), "optimal contextual loss"});
    for (const auto& [label, start] : probe.at("start_epochs").items())
      if (!start.is_null()) c.vertical.push_back({start.get<double>(), label});
    out.push_back(save_plot(dir, "loss_" + pid + ".svg", c));
  }
  const auto m = read_csv(dir / "measures.csv");
  const auto mid = m.column("string_id"), kind = m.column("kind"), tau = m.column("tau"),
             mep = m.column("epoch"), score = m.column("score");
  std::map<std::string, std::map<std::string, svg::Series>> by_kind;
  std::vector<std::string> kinds;
  for (const auto& r : m.rows) {
    const std::string label = r[tau].empty() ? r[kind] : r[kind] + "_" + r[tau];
    if (!by_kind.count(label)) kinds.push_back(label);
    auto& s = by_kind[label][r[mid]];
    s.label = r[mid];
    s.x.push_back(parse_number(r[mep]));
    s.y.push_back(parse_number(r[score]));
  }
  for (const auto& k : kinds) {
    svg::Chart c{"Expected memorization score: " + k, "epoch", "score", {}, {}, {}};
    for (auto& [pid, s] : by_kind[k]) c.series.push_back(s);
    out.push_back(save_plot(dir, "scores_" + k + ".svg", c));
  }
  return out;
}

std::vector<fs::path> render_sweep(const fs::path& dir) {
  std::vector<fs::path> out;
  const auto t = read_csv(dir / "sweep.csv");
  const auto size = t.column("size"), loss = t.column("test_loss"), kind = t.column("kind"),
             w = t.column("weighted_at_optimum");
  std::map<std::string, svg::Series> series;
  std::vector<std::string> order;
  for (const auto& r : t.rows) {
    if (!series.count(r[kind])) {
      order.push_back(r[kind]);
      series[r[kind]].label = r[kind];
      series[r[kind]].markers = true;
    }
    auto& s = series[r[kind]];
    s.x.push_back(parse_number(r[loss]));
    s.y.push_back(parse_number(r[w]));
    s.marker_size.push_back(2.0 + std::sqrt(parse_number(r[size])) / 2.0);
  }
  svg::Chart c{"Memorization at optimal learning vs test loss (marker: |D|)",
               "optimal test loss", "weighted memorization", {}, {}, {}};
  for (const auto& k : order) c.series.push_back(series[k]);
  out.push_back(save_plot(dir, "sweep.svg", c));
  return out;
}

}  // namespace

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeError("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw RuntimeError("empty CSV " + path.string());
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split(line);
    if (fields.size() != t.header.size())
      throw RuntimeError("ragged row in " + path.string());
    t.rows.push_back(std::move(fields));
  }
  return t;
}

std::vector<fs::path> render_reports(const fs::path& out_dir) {
  const auto summary = read_json(out_dir / "summary.json");
  const std::string study = summary.at("study").get<std::string>();
  if (study == "train") {
    std::optional<double> opt;
    if (summary.contains("optimal_epoch") && !summary["optimal_epoch"].is_null())
      opt = summary["optimal_epoch"].get<double>();
    return render_loss_overview(out_dir, "Training run", opt);
  }
  if (study == "probe-study") return render_probe(out_dir, summary);
  if (study == "language-study") return render_language(out_dir, summary);
  if (study == "size-sweep") {
    auto out = render_sweep(out_dir);
    for (const auto& p : summary.at("points")) {
      auto sub = render_reports(out_dir / p.at("dir").get<std::string>());
      out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
  }
  throw RuntimeError("unknown study '" + study + "' in summary.json");
}

// --------------------------------------------------------------------------
// Emission

RunArtifacts emit_train_run(const SingleRunResult& result, const fs::path& out_dir) {
  prepare_dir(out_dir);
  const auto& cfg = result.config;
  const auto g = load_grammar(cfg.grammar);
  const auto& run = result.run;
  RunArtifacts art;
  art.fingerprint = fingerprint(cfg);

  std::vector<std::pair<std::string, const LossCurve*>> ids;
  for (std::size_t i = 0; i < run.dataset_curves.size(); ++i)
    ids.push_back({padded('d', i, run.dataset_curves.size()), &run.dataset_curves[i]});
  for (std::size_t i = 0; i < run.probe_curves.size(); ++i)
    ids.push_back({padded('p', i, run.probe_curves.size()), &run.probe_curves[i]});
  for (std::size_t i = 0; i < run.test_curves.size(); ++i)
    ids.push_back({padded('t', i, run.test_curves.size()), &run.test_curves[i]});
  {
    CsvWriter s(out_dir / "strings.csv", kStringHeader);
    CsvWriter c(out_dir / "curves.csv", kCurveHeader);
    for (const auto& [id, curve] : ids) {
      s.row({id, std::to_string(run.dataset.count(curve->string)),
             format_double(string_logprob(g, curve->string)), tokens_text(g, curve->string)});
      write_curve_rows(c, id, to_string(curve->role), curve->losses);
    }
  }
  art.csv = {out_dir / "curves.csv", out_dir / "strings.csv"};
  save_checkpoint(run.final_params, out_dir / "model.ckpt");

  const std::optional<std::size_t> opt =
      run.test_curve_mean.empty() ? std::nullopt
                                  : std::optional<std::size_t>(optimal_learning_epoch(run));
  ordered_json sidecar{{"fingerprint", art.fingerprint},
                       {"config", config_json(cfg)},
                       {"dataset_size", run.dataset.size()},
                       {"seeds",
                        {{"master", cfg.seed},
                         {"dataset", run.dataset.seed()},
                         {"init", run.seed},
                         {"shuffle", run.config.shuffle_seed}}},
                       {"checkpoint", "model.ckpt"}};
  write_json(out_dir / "run.json", sidecar);
  ordered_json summary{{"study", "train"},
                       {"fingerprint", art.fingerprint},
                       {"optimal_epoch", start_json(opt)},
                       {"optimal_test_loss",
                        opt ? ordered_json(run.test_curve_mean[*opt - 1]) : ordered_json(nullptr)},
                       {"final_mean_train_loss", nullptr}};
  double mean = 0.0;
  for (const auto& c : run.dataset_curves) mean += c.losses.back();
  summary["final_mean_train_loss"] = mean / static_cast<double>(run.dataset_curves.size());
  art.summary = out_dir / "summary.json";
  write_json(art.summary, summary);
  art.plots = render_reports(out_dir);
  return art;
}

RunArtifacts emit_probe_study(const ProbeStudyResult& res, const fs::path& out_dir) {
  require_lemma1(res.audit);
  prepare_dir(out_dir);
  const auto& cfg = res.config;
  const auto g = load_grammar(cfg.grammar);
  RunArtifacts art;
  art.fingerprint = fingerprint(cfg);
  const std::size_t n_kinds = res.kinds.size();
  for (const auto& per_probe : res.expected)
    if (!lemma1_holds(per_probe[n_kinds - 2], per_probe[n_kinds - 1]))
      throw RuntimeError("expected contextual/counterfactual records violate Lemma 1");

  {
    CsvWriter s(out_dir / "strings.csv", kStringHeader);
    for (const auto& p : res.probes)
      s.row({p.label, std::to_string(p.frequency), format_double(p.logprob),
             tokens_text(g, p.string)});
  }
  art.csv.push_back(out_dir / "strings.csv");
  for (std::size_t k = 0; k < cfg.K; ++k) {
    const auto name = "curves_k" + std::to_string(k) + ".csv";
    CsvWriter c(out_dir / name, kCurveHeader);
    for (std::size_t p = 0; p < res.probes.size(); ++p) {
      write_curve_rows(c, res.probes[p].label, "train", res.paired[p][k].train);
      write_curve_rows(c, res.probes[p].label, "heldout", res.paired[p][k].heldout);
    }
    art.csv.push_back(out_dir / name);
    const auto mname = "measures_k" + std::to_string(k) + ".csv";
    CsvWriter m(out_dir / mname, kMeasureHeader);
    for (std::size_t p = 0; p < res.probes.size(); ++p)
      for (std::size_t j = 0; j < n_kinds; ++j)
        write_measure_rows(m, res.probes[p].label, res.records[p][j][k]);
    art.csv.push_back(out_dir / mname);
  }
  {
    CsvWriter m(out_dir / "measures.csv", kMeasureHeader);
    CsvWriter s(out_dir / "starts.csv", {"string_id", "frequency", "kind", "tau", "start_epoch"});
    for (std::size_t p = 0; p < res.probes.size(); ++p)
      for (std::size_t j = 0; j < n_kinds; ++j) {
        const auto& r = res.expected[p][j];
        write_measure_rows(m, res.probes[p].label, r);
        s.row({res.probes[p].label, std::to_string(res.probes[p].frequency), r.kind.name(),
               r.kind.type == MeasureType::kRecollection ? format_double(r.kind.tau) : "",
               r.start_epoch ? std::to_string(*r.start_epoch) : ""});
      }
  }
  art.csv.push_back(out_dir / "measures.csv");
  art.csv.push_back(out_dir / "starts.csv");

  ordered_json probes = ordered_json::array();
  for (std::size_t p = 0; p < res.probes.size(); ++p) {
    ordered_json starts = ordered_json::object(), per_k = ordered_json::object();
    for (std::size_t j = 0; j < n_kinds; ++j) {
      const auto label = kind_label(res.kinds[j]);
      starts[label] = start_json(res.expected[p][j].start_epoch);
      ordered_json ks = ordered_json::array();
      for (const auto& r : res.records[p][j]) ks.push_back(start_json(r.start_epoch));
      per_k[label] = ks;
    }
    probes.push_back({{"string_id", res.probes[p].label},
                      {"tokens", tokens_text(g, res.probes[p].string)},
                      {"frequency", res.probes[p].frequency},
                      {"logprob", res.probes[p].logprob},
                      {"start_epochs", starts},
                      {"start_epochs_per_resample", per_k}});
  }
  ordered_json summary{
      {"study", "probe-study"},
      {"fingerprint", art.fingerprint},
      {"config", config_json(cfg)},
      {"probes", probes},
      {"audit", audit_json(res.audit)},
      {"notes",
       "each resample k draws an independent D' and an independent model initialization "
       "from split seeds; D and D' of the same k share initialization and shuffle seeds"}};
  art.summary = out_dir / "summary.json";
  write_json(art.summary, summary);
  art.plots = render_reports(out_dir);
  return art;
}

namespace {

ordered_json language_summary(const LanguageStudyResult& res, const std::string& fp) {
  const auto g = load_grammar(res.config.grammar);
  ordered_json at_opt = ordered_json::object();
  const std::size_t e = res.optimal_epoch - 1;
  for (std::size_t k = 0; k < res.kinds.size(); ++k)
    at_opt[kind_label(res.kinds[k])] = {{"frac", res.scores[k].frac[e]},
                                        {"weighted", res.scores[k].weighted[e]}};
  ordered_json gap = nullptr;
  if (res.proxy_gap)
    gap = {{"kind", "contextual"},
           {"probes", res.proxy_gap->probes},
           {"epoch", res.proxy_gap->epoch},
           {"exact_weighted", res.proxy_gap->exact_weighted},
           {"proxy_weighted", res.proxy_gap->proxy_weighted},
           {"gap", res.proxy_gap->gap},
           {"max_gap_over_epochs", res.proxy_gap->max_gap}};
  ordered_json refs = ordered_json::array();
  for (const auto& r : res.reference)
    refs.push_back({{"tokens", tokens_text(g, r.string)},
                    {"target_accuracy", r.target_acc},
                    {"reference_accuracy", r.reference_acc},
                    {"not_contextually_memorized_candidate", r.not_contextual_candidate}});
  ordered_json split = {{"group_size", res.split.group_size},
                        {"top", ordered_json::object()},
                        {"bottom", ordered_json::object()}};
  for (std::size_t k = 0; k < res.kinds.size(); ++k) {
    split["top"][kind_label(res.kinds[k])] = res.split.top_frac[k];
    split["bottom"][kind_label(res.kinds[k])] = res.split.bottom_frac[k];
  }
  std::size_t exact = 0;
  for (const bool b : res.exact) exact += b;
  return {{"study", "language-study"},
          {"fingerprint", fp},
          {"config", config_json(res.config)},
          {"size", res.size},
          {"distinct_strings", res.strings.size()},
          {"exact_heldout_strings", exact},
          {"optimal_epoch", res.optimal_epoch},
          {"optimal_test_loss", res.optimal_test_loss},
          {"at_optimal_epoch", at_opt},
          {"proxy_gap", gap},
          {"reference_checks", refs},
          {"frequency_split", split},
          {"audit", audit_json(res.audit)}};
}

}  // namespace

RunArtifacts emit_language_study(const LanguageStudyResult& res, const fs::path& out_dir) {
  require_lemma1(res.audit);
  prepare_dir(out_dir);
  const auto g = load_grammar(res.config.grammar);
  RunArtifacts art;
  art.fingerprint = fingerprint(res.config);
  const std::size_t n_kinds = res.kinds.size();
  const std::size_t n = res.strings.size();
  for (std::size_t i = 0; i < n; ++i)
    if (!lemma1_holds(res.records[n_kinds - 2][i], res.records[n_kinds - 1][i]))
      throw RuntimeError("contextual/counterfactual records violate Lemma 1");

  {
    CsvWriter s(out_dir / "strings.csv",
                {"string_id", "frequency", "logprob", "heldout_source", "tokens"});
    for (std::size_t i = 0; i < n; ++i)
      s.row({padded('d', i, n), std::to_string(res.frequency[i]), format_double(res.logprob[i]),
             res.heldout_source[i], tokens_text(g, res.strings[i])});
    const auto& test = res.run.test_curves;
    CsvWriter t(out_dir / "test_strings.csv", kStringHeader);
    for (std::size_t i = 0; i < test.size(); ++i)
      t.row({padded('t', i, test.size()), std::to_string(res.dataset.count(test[i].string)),
             format_double(string_logprob(g, test[i].string)), tokens_text(g, test[i].string)});
  }
  {
    CsvWriter c(out_dir / "curves.csv", kCurveHeader);
    for (std::size_t i = 0; i < n; ++i) {
      write_curve_rows(c, padded('d', i, n), "train", res.run.dataset_curves[i].losses);
      if (res.exact[i]) write_curve_rows(c, padded('d', i, n), "heldout", res.heldout[i]);
    }
    const auto& test = res.run.test_curves;
    for (std::size_t i = 0; i < test.size(); ++i)
      write_curve_rows(c, padded('t', i, test.size()), to_string(test[i].role), test[i].losses);
  }
  {
    CsvWriter m(out_dir / "measures.csv", kMeasureHeader);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n_kinds; ++k) write_measure_rows(m, padded('d', i, n), res.records[k][i]);
  }
  {
    CsvWriter d(out_dir / "dataset.csv", {"kind", "tau", "epoch", "frac", "weighted"});
    for (std::size_t k = 0; k < n_kinds; ++k) {
      const auto& s = res.scores[k];
      const std::string tau = s.kind.type == MeasureType::kRecollection ? format_double(s.kind.tau) : "";
      for (std::size_t e = 0; e < s.frac.size(); ++e)
        d.row({s.kind.name(), tau, std::to_string(e + 1), format_double(s.frac[e]),
               format_double(s.weighted[e])});
    }
  }
  for (const char* f : {"strings.csv", "test_strings.csv", "curves.csv", "measures.csv", "dataset.csv"})
    art.csv.push_back(out_dir / f);
  art.summary = out_dir / "summary.json";
  write_json(art.summary, language_summary(res, art.fingerprint));
  art.plots = render_reports(out_dir);
  return art;
}

RunArtifacts emit_size_sweep(const SizeSweepResult& res, const fs::path& out_dir) {
  prepare_dir(out_dir);
  RunArtifacts art;
  art.fingerprint = fingerprint(res.config);
  AuditCounts audit;
  ordered_json points = ordered_json::array();
  {
    CsvWriter w(out_dir / "sweep.csv",
                {"size", "optimal_epoch", "test_loss", "kind", "weighted_at_optimum"});
    for (const auto& p : res.points) {
      const std::string dir = "size_" + std::to_string(p.size);
      auto sub = emit_language_study(p, out_dir / dir);
      art.csv.insert(art.csv.end(), sub.csv.begin(), sub.csv.end());
      audit += p.audit;
      ordered_json weighted = ordered_json::object();
      for (std::size_t k = 0; k < p.kinds.size(); ++k) {
        w.row({std::to_string(p.size), std::to_string(p.optimal_epoch),
               format_double(p.optimal_test_loss), kind_label(p.kinds[k]),
               format_double(p.weighted_at_optimum(k))});
        weighted[kind_label(p.kinds[k])] = p.weighted_at_optimum(k);
      }
      points.push_back({{"size", p.size},
                        {"dir", dir},
                        {"optimal_epoch", p.optimal_epoch},
                        {"optimal_test_loss", p.optimal_test_loss},
                        {"weighted_at_optimum", weighted}});
    }
  }
  art.csv.push_back(out_dir / "sweep.csv");
  ordered_json trends = nullptr;
  if (res.points.size() >= 2) {
    trends = ordered_json::object();
    auto monotone = [&](auto value, bool increasing) {
      for (std::size_t i = 1; i < res.points.size(); ++i) {
        const double a = value(res.points[i - 1]), b = value(res.points[i]);
        if (increasing ? b < a : b > a) return false;
      }
      return true;
    };
    trends["test_loss_non_increasing"] =
        monotone([](const auto& p) { return p.optimal_test_loss; }, false);
    for (std::size_t k = 0; k < res.points.front().kinds.size(); ++k) {
      const auto label = kind_label(res.points.front().kinds[k]);
      trends[label + "_non_increasing"] =
          monotone([k](const auto& p) { return p.weighted_at_optimum(k); }, false);
      trends[label + "_non_decreasing"] =
          monotone([k](const auto& p) { return p.weighted_at_optimum(k); }, true);
    }
  }
  ordered_json summary{{"study", "size-sweep"},
                       {"fingerprint", art.fingerprint},
                       {"config", config_json(res.config)},
                       {"points", points},
                       {"trends", trends},
                       {"audit", audit_json(audit)}};
  art.summary = out_dir / "summary.json";
  write_json(art.summary, summary);
  art.plots = render_reports(out_dir);
  return art;
}

}  // namespace memlang
