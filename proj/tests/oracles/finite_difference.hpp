// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "memlang/model.hpp"

namespace memlang::testing {

/// Mean batch loss recomputed through the evaluation path only.
inline double batch_loss(const ModelParameters& p,
                         std::span<const std::vector<TokenId>> batch) {
  double total = 0.0;
  for (const auto& s : batch) total += sequence_loss(p, s);
  return total / static_cast<double>(batch.size());
}

/// Central difference (f(x + h) - f(x - h)) / 2h along one coordinate.
inline double central_difference(ModelParameters p, std::size_t coord,
                                 std::span<const std::vector<TokenId>> batch,
                                 double h = 1e-6) {
  const double x = p.values[coord];
  p.values[coord] = x + h;
  const double up = batch_loss(p, batch);
  p.values[coord] = x - h;
  const double down = batch_loss(p, batch);
  return (up - down) / (2.0 * h);
}

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  return scale == 0.0 ? 0.0 : std::abs(analytic - numeric) / scale;
}

}  // namespace memlang::testing
