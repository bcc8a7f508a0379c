// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

#include "memlang/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace memlang::svg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
  }
};

}  // namespace

std::string escape(const std::string& text) {
  std::string out;
  for (const char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string render(const Chart& c) {
  const double left = 64, right = 150, top = 36, bottom = 48;
  const double pw = c.width - left - right, ph = c.height - top - bottom;
  Range xr, yr;
  for (const auto& s : c.series) {
    for (const double v : s.x) xr.add(v);
    for (const double v : s.y) yr.add(v);
  }
  for (const auto& r : c.vertical) xr.add(r.at);
  for (const auto& r : c.horizontal) yr.add(r.at);
  xr.finish();
  yr.finish();
  const double pad = 0.05 * (yr.hi - yr.lo);
  yr.lo -= pad;
  yr.hi += pad;
  auto sx = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto sy = [&](double y) { return top + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  std::string o;
  o += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(c.width) +
       "\" height=\"" + num(c.height) + "\" viewBox=\"0 0 " + num(c.width) + " " +
       num(c.height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + num(c.width / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
       escape(c.title) + "</text>\n";
  o += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) +
       "\" height=\"" + num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    o += "<text x=\"" + num(sx(xv)) + "\" y=\"" + num(top + ph + 16) +
         "\" text-anchor=\"middle\">" + tick(xv) + "</text>\n";
    o += "<text x=\"" + num(left - 6) + "\" y=\"" + num(sy(yv) + 4) +
         "\" text-anchor=\"end\">" + tick(yv) + "</text>\n";
  }
  o += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(c.height - 10) +
       "\" text-anchor=\"middle\">" + escape(c.x_label) + "</text>\n";
  o += "<text transform=\"translate(16," + num(top + ph / 2) +
       ") rotate(-90)\" text-anchor=\"middle\">" + escape(c.y_label) + "</text>\n";

  for (const auto& r : c.vertical) {
    o += "<line x1=\"" + num(sx(r.at)) + "\" y1=\"" + num(top) + "\" x2=\"" + num(sx(r.at)) +
         "\" y2=\"" + num(top + ph) + "\" stroke=\"gray\" stroke-dasharray=\"2,3\"/>\n";
    o += "<text x=\"" + num(sx(r.at) + 3) + "\" y=\"" + num(top + 12) + "\" fill=\"gray\">" +
         escape(r.label) + "</text>\n";
  }
  for (const auto& r : c.horizontal) {
    o += "<line x1=\"" + num(left) + "\" y1=\"" + num(sy(r.at)) + "\" x2=\"" + num(left + pw) +
         "\" y2=\"" + num(sy(r.at)) + "\" stroke=\"red\" stroke-dasharray=\"6,3,1,3\"/>\n";
    o += "<text x=\"" + num(left + pw - 3) + "\" y=\"" + num(sy(r.at) - 3) +
         "\" text-anchor=\"end\" fill=\"red\">" + escape(r.label) + "</text>\n";
  }

  std::size_t color = 0;
  for (std::size_t k = 0; k < c.series.size(); ++k) {
    const auto& s = c.series[k];
    const std::string stroke = kPalette[color++ % std::size(kPalette)];
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.markers) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        const double r = i < s.marker_size.size() ? s.marker_size[i] : 3.0;
        o += "<circle cx=\"" + num(sx(s.x[i])) + "\" cy=\"" + num(sy(s.y[i])) + "\" r=\"" +
             num(r) + "\" fill=\"" + stroke + "\" fill-opacity=\"0.6\"/>\n";
      }
    } else {
      std::string pts;
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        if (!pts.empty()) pts += ' ';
        pts += num(sx(s.x[i])) + "," + num(sy(s.y[i]));
      }
      o += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"1.5\"" +
           std::string(s.dashed ? " stroke-dasharray=\"4,3\"" : "") + " points=\"" + pts +
           "\"/>\n";
    }
    const double ly = top + 14.0 * static_cast<double>(k) + 8;
    o += "<line x1=\"" + num(left + pw + 10) + "\" y1=\"" + num(ly) + "\" x2=\"" +
         num(left + pw + 28) + "\" y2=\"" + num(ly) + "\" stroke=\"" + stroke +
         "\" stroke-width=\"2\"" + std::string(s.dashed ? " stroke-dasharray=\"4,3\"" : "") +
         "/>\n";
    o += "<text x=\"" + num(left + pw + 32) + "\" y=\"" + num(ly + 4) + "\">" +
         escape(s.label) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

}  // namespace memlang::svg
