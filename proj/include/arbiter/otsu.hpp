// Copyright 2026 The Arbiter Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "arbiter/error.hpp"

namespace arbiter {

inline constexpr int kOtsuBins = 256;

/// Histogram bin of a [0,1] value; 1.0 falls into the last bin.
inline int otsu_bin(double v) {
  const double scaled = std::floor(std::clamp(v, 0.0, 1.0) * kOtsuBins);
  return std::min(kOtsuBins - 1, static_cast<int>(scaled));
}

/// Between-class variance of a two-class split, kept as an unreduced fraction
/// numerator / denominator over integer bin statistics so candidates compare exactly.
struct SplitScore {
  long double numerator = 0;
  long double denominator = 1;
  unsigned __int128 exact_num = 0;
  unsigned __int128 exact_den = 1;
  bool exact = true;
};

namespace detail {

inline SplitScore split_score(std::int64_t total, std::int64_t total_sum, std::int64_t below, std::int64_t below_sum,
                              bool exact) {
  SplitScore s;
  s.exact = exact;
  const std::int64_t above = total - below;
  const __int128 diff = static_cast<__int128>(total) * below_sum - static_cast<__int128>(below) * total_sum;
  const unsigned __int128 mag = static_cast<unsigned __int128>(diff < 0 ? -diff : diff);
  if (exact) {
    s.exact_num = mag * mag;
    s.exact_den = static_cast<unsigned __int128>(below) * static_cast<unsigned __int128>(above);
  } else {
    const auto d = static_cast<long double>(mag);
    s.numerator = d * d;
    s.denominator = static_cast<long double>(below) * static_cast<long double>(above);
  }
  return s;
}

/// a > b
inline bool better(const SplitScore& a, const SplitScore& b) {
  if (a.exact) return a.exact_num * b.exact_den > b.exact_num * a.exact_den;
  return a.numerator * b.denominator > b.numerator * a.denominator;
}

}  // namespace detail

/// Values up to this length are scored in exact integer arithmetic.
inline constexpr std::size_t kOtsuExactLimit = std::size_t{1} << 16;

/// Otsu threshold over 256 uniform bins on [0,1]. The returned gamma is a bin
/// edge k/256; foreground is v >= gamma. Ties resolve to the smallest gamma.
/// When every value falls into one bin, gamma is the minimum value so that
/// all entries binarize to 1.
inline double otsu(std::span<const double> values) {
  if (values.empty()) throw InputError("otsu: empty vector");
  std::array<std::int64_t, kOtsuBins> hist{};
  for (const double v : values) ++hist[static_cast<std::size_t>(otsu_bin(v))];

  const auto total = static_cast<std::int64_t>(values.size());
  std::int64_t total_sum = 0;
  for (int b = 0; b < kOtsuBins; ++b) total_sum += hist[static_cast<std::size_t>(b)] * b;
  const bool exact = values.size() <= kOtsuExactLimit;

  int best_k = -1;
  SplitScore best;
  std::int64_t below = 0;
  std::int64_t below_sum = 0;
  for (int k = 1; k < kOtsuBins; ++k) {
    below += hist[static_cast<std::size_t>(k - 1)];
    below_sum += hist[static_cast<std::size_t>(k - 1)] * (k - 1);
    if (below == 0 || below == total) continue;
    const SplitScore s = detail::split_score(total, total_sum, below, below_sum, exact);
    if (best_k < 0 || detail::better(s, best)) {
      best = s;
      best_k = k;
    }
  }
  if (best_k < 0) return *std::min_element(values.begin(), values.end());
  return static_cast<double>(best_k) / kOtsuBins;
}

/// Foreground labels: 1 iff value >= threshold.
inline std::vector<std::uint8_t> binarize(std::span<const double> values, double threshold) {
  std::vector<std::uint8_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] >= threshold ? 1 : 0;
  return out;
}

}  // namespace arbiter
