// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal standalone SVG line and scatter charts.

#pragma once

#include <string>
#include <vector>

namespace memlang::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
  bool markers = false;                 // scatter points instead of a line
  std::vector<double> marker_size;      // optional per-point radius
};

struct Rule {
  double at = 0.0;
  std::string label;
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<Rule> vertical;    // dotted vertical markers
  std::vector<Rule> horizontal;  // dash-dot threshold lines
  double width = 640;
  double height = 400;
};

/// Renders a complete SVG document. Non-finite points are skipped.
std::string render(const Chart& chart);

/// Escapes &, <, >, " and ' for XML text and attributes.
std::string escape(const std::string& text);

}  // namespace memlang::svg
