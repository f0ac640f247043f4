// moosenet/binning.hpp

// Copyright 2026 The MooseNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Equal-count MOS bins over [1, 5]. Bin i covers [start_i, end_i), the last
// bin is closed at 5. A bin's representative value is its interval midpoint.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "moosenet/error.hpp"
#include "moosenet/io.hpp"

namespace moosenet {

inline constexpr double kMosMin = 1.0;
inline constexpr double kMosMax = 5.0;

struct BinSpec {
  std::vector<double> edges;    // N + 1 values, edges.front() == 1, edges.back() == 5
  std::vector<double> centers;  // N midpoints
  std::vector<std::size_t> counts;
  std::size_t min_count = 5;

  std::size_t size() const { return centers.size(); }
  double start(std::size_t i) const { return edges[i]; }
  double end(std::size_t i) const { return edges[i + 1]; }

  bool operator==(const BinSpec&) const = default;
};

inline BinSpec make_bin_spec(std::vector<double> edges, std::vector<std::size_t> counts, std::size_t min_count) {
  BinSpec spec;
  spec.edges = std::move(edges);
  spec.counts = std::move(counts);
  spec.min_count = min_count;
  for (std::size_t i = 0; i + 1 < spec.edges.size(); ++i) {
    spec.centers.push_back(0.5 * (spec.edges[i] + spec.edges[i + 1]));
  }
  return spec;
}

/// Quantile bins over the sorted MOS values. Cuts fall between distinct
/// values (at their midpoint), each placed as close as possible to an equal
/// share of the samples not yet assigned. With `strict` every bin must hold
/// more than `min_count` samples, otherwise at least `min_count`.
inline BinSpec fit_bins(std::span<const double> mos_values, std::size_t n_bins = 32, std::size_t min_count = 5,
                        bool strict = false) {
  if (n_bins == 0) throw Error(Errc::InvalidConfig, "bin count must be positive");
  for (const double v : mos_values) {
    if (!(v >= kMosMin && v <= kMosMax)) throw Error(Errc::OutOfRange, "MOS value " + io::format_double(v) + " outside [1, 5]");
  }
  std::map<double, std::size_t> hist;
  for (const double v : mos_values) ++hist[v];
  std::vector<double> distinct;
  std::vector<std::size_t> cum{0};  // cum[k] = samples among the first k distinct values
  for (const auto& [v, c] : hist) {
    distinct.push_back(v);
    cum.push_back(cum.back() + c);
  }
  const std::size_t K = distinct.size();
  const std::size_t n = mos_values.size();
  const std::size_t needed = strict ? min_count + 1 : min_count;
  if (n < n_bins * std::max<std::size_t>(needed, 1)) {
    throw Error(Errc::TooFewSamples, std::to_string(n) + " samples cannot fill " + std::to_string(n_bins) +
                                         " bins of at least " + std::to_string(needed));
  }
  if (K < n_bins) {
    throw Error(Errc::TooFewDistinctValues, std::to_string(K) + " distinct MOS values for " +
                                                std::to_string(n_bins) + " bins");
  }

  // cut[j] = number of distinct values in bins 0..j-1
  std::vector<std::size_t> cut(n_bins + 1, 0);
  cut[n_bins] = K;
  for (std::size_t j = 1; j < n_bins; ++j) {
    const std::size_t lo = cut[j - 1] + 1;
    const std::size_t hi = K - (n_bins - j);
    const double remaining = static_cast<double>(n - cum[cut[j - 1]]);
    const double target = static_cast<double>(cum[cut[j - 1]]) + remaining / static_cast<double>(n_bins - j + 1);
    std::size_t best = lo;
    double best_err = std::abs(static_cast<double>(cum[lo]) - target);
    for (std::size_t k = lo + 1; k <= hi; ++k) {
      const double err = std::abs(static_cast<double>(cum[k]) - target);
      if (err < best_err) {
        best = k;
        best_err = err;
      }
      if (static_cast<double>(cum[k]) > target) break;
    }
    cut[j] = best;
  }

  std::vector<double> edges{kMosMin};
  std::vector<std::size_t> counts;
  for (std::size_t j = 1; j <= n_bins; ++j) {
    counts.push_back(cum[cut[j]] - cum[cut[j - 1]]);
    edges.push_back(j == n_bins ? kMosMax : 0.5 * (distinct[cut[j] - 1] + distinct[cut[j]]));
  }
  for (std::size_t i = 0; i < n_bins; ++i) {
    if (counts[i] < needed) {
      throw Error(Errc::TooFewSamples, "bin " + std::to_string(i) + " holds " + std::to_string(counts[i]) +
                                           " samples, fewer than " + std::to_string(needed));
    }
  }
  return make_bin_spec(std::move(edges), std::move(counts), min_count);
}

/// Index i with start_i <= mos < end_i; 5 falls in the last bin.
inline std::size_t assign_bin(const BinSpec& spec, double mos) {
  if (!(mos >= spec.edges.front() && mos <= spec.edges.back())) {
    throw Error(Errc::OutOfRange, "MOS " + io::format_double(mos) + " outside [1, 5]");
  }
  const auto it = std::upper_bound(spec.edges.begin() + 1, spec.edges.end() - 1, mos);
  return static_cast<std::size_t>(it - (spec.edges.begin() + 1));
}

/// Posterior-weighted bin center, sum_i C_i * p_i.
inline double expected_mos(const BinSpec& spec, std::span<const double> posterior) {
  if (posterior.size() != spec.size()) throw Error(Errc::LengthMismatch, "posterior length differs from bin count");
  double total = 0.0;
  for (const double p : posterior) {
    if (!(p >= 0.0)) throw Error(Errc::NotNormalized, "negative posterior entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(Errc::NotNormalized, "posterior sums to " + io::format_double(total));
  double mos = 0.0;
  for (std::size_t i = 0; i < posterior.size(); ++i) mos += spec.centers[i] * posterior[i];
  return std::clamp(mos, spec.centers.front(), spec.centers.back());
}

inline constexpr std::string_view kBinCsvHeader = "index,start,end,center,count";

inline std::string bins_to_csv(const BinSpec& spec) {
  std::ostringstream os;
  os << kBinCsvHeader << '\n';
  for (std::size_t i = 0; i < spec.size(); ++i) {
    os << i << ',' << io::format_double(spec.start(i)) << ',' << io::format_double(spec.end(i)) << ','
       << io::format_double(spec.centers[i]) << ',' << spec.counts[i] << '\n';
  }
  return os.str();
}

inline BinSpec bins_from_csv(const std::string& text, std::size_t min_count) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kBinCsvHeader) throw Error(Errc::MalformedRow, "bin table header");
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c = io::split_csv_line(line);
    const auto ctx = "bin table line " + std::to_string(line_no);
    if (c.size() != 5) throw Error(Errc::MalformedRow, ctx + ": expected 5 fields");
    if (static_cast<std::size_t>(io::parse_int(c[0], ctx)) != counts.size()) {
      throw Error(Errc::MalformedRow, ctx + ": bins out of order");
    }
    if (edges.empty()) edges.push_back(io::parse_double(c[1], ctx));
    edges.push_back(io::parse_double(c[2], ctx));
    counts.push_back(static_cast<std::size_t>(io::parse_int(c[4], ctx)));
  }
  if (counts.empty()) throw Error(Errc::MalformedRow, "bin table has no rows");
  return make_bin_spec(std::move(edges), std::move(counts), min_count);
}

}  // namespace moosenet
