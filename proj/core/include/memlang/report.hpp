// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

// CSV, JSON and SVG outputs of the studies.
//
// Every study directory holds a summary.json whose "study" field names the
// design; plots are always rendered from the CSV files so that
// render_reports() regenerates them identically.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "memlang/harness.hpp"

namespace memlang {

struct RunArtifacts {
  std::string fingerprint;
  std::filesystem::path summary;
  std::vector<std::filesystem::path> csv;
  std::vector<std::filesystem::path> plots;
};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// "recollection:<tau>" for recollection, the plain name otherwise.
std::string kind_label(const MeasureKind& kind);

RunArtifacts emit_train_run(const SingleRunResult& result,
                            const std::filesystem::path& out_dir);
RunArtifacts emit_probe_study(const ProbeStudyResult& result,
                              const std::filesystem::path& out_dir);
RunArtifacts emit_language_study(const LanguageStudyResult& result,
                                 const std::filesystem::path& out_dir);
RunArtifacts emit_size_sweep(const SizeSweepResult& result,
                             const std::filesystem::path& out_dir);

/// Re-renders the SVG plots of a study directory (recursing into the
/// per-size directories of a sweep) from its CSV files.
std::vector<std::filesystem::path> render_reports(
    const std::filesystem::path& out_dir);

/// Parsed CSV: header plus rows of fields. Fields never contain commas.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace memlang
