// moosenet/metrics.hpp

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

// Utterance- and system-level evaluation, prediction ensembling and the
// annotator-subsampling analysis.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "moosenet/dataset.hpp"
#include "moosenet/error.hpp"
#include "moosenet/io.hpp"
#include "moosenet/random.hpp"

namespace moosenet {

inline void require_pairs(std::span<const double> x, std::span<const double> y, std::size_t min_len) {
  if (x.size() != y.size()) throw Error(Errc::LengthMismatch, "sequences differ in length");
  if (x.size() < min_len) {
    throw Error(x.empty() ? Errc::Empty : Errc::DegenerateInput,
                "need at least " + std::to_string(min_len) + " values, got " + std::to_string(x.size()));
  }
}

inline double mse(std::span<const double> preds, std::span<const double> targets) {
  require_pairs(preds, targets, 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) acc += (preds[i] - targets[i]) * (preds[i] - targets[i]);
  return acc / static_cast<double>(preds.size());
}

inline double pcc(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y, 2);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(Errc::DegenerateInput, "correlation of a constant sequence");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// 1-based ranks; tied values share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double srcc(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y, 2);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pcc(rx, ry);
}

namespace detail {

// Number of tied pairs within runs of equal values in a sorted sequence.
template <typename Equal>
std::uint64_t tied_pairs(const std::vector<std::size_t>& order, Equal eq) {
  std::uint64_t ties = 0, run = 1;
  for (std::size_t k = 1; k <= order.size(); ++k) {
    if (k < order.size() && eq(order[k - 1], order[k])) {
      ++run;
    } else {
      ties += run * (run - 1) / 2;
      run = 1;
    }
  }
  return ties;
}

// Counts inversions of `seq` while merge-sorting it.
inline std::uint64_t count_swaps(std::vector<double>& seq) {
  std::vector<double> buf(seq.size());
  std::uint64_t swaps = 0;
  for (std::size_t width = 1; width < seq.size(); width *= 2) {
    for (std::size_t lo = 0; lo < seq.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, seq.size());
      const std::size_t hi = std::min(lo + 2 * width, seq.size());
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (seq[j] < seq[i]) {
          swaps += mid - i;
          buf[k++] = seq[j++];
        } else {
          buf[k++] = seq[i++];
        }
      }
      while (i < mid) buf[k++] = seq[i++];
      while (j < hi) buf[k++] = seq[j++];
    }
    seq.swap(buf);
  }
  return swaps;
}

}  // namespace detail

/// Kendall tau-b in O(n log n) (Knight's algorithm).
inline double ktau(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y, 2);
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });
  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const auto n1 = detail::tied_pairs(order, [&](std::size_t a, std::size_t b) { return x[a] == x[b]; });
  const auto n3 = detail::tied_pairs(order, [&](std::size_t a, std::size_t b) { return x[a] == x[b] && y[a] == y[b]; });
  std::vector<double> ys(n);
  for (std::size_t k = 0; k < n; ++k) ys[k] = y[order[k]];
  const auto swaps = detail::count_swaps(ys);
  std::vector<std::size_t> sorted_y(n);
  std::iota(sorted_y.begin(), sorted_y.end(), 0);
  const auto n2 = detail::tied_pairs(sorted_y, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });
  if (n1 == n0 || n2 == n0) throw Error(Errc::DegenerateInput, "correlation of a constant sequence");
  // concordant - discordant = n0 - n1 - n2 + n3 - 2 * swaps
  const double s = static_cast<double>(n0) - static_cast<double>(n1) - static_cast<double>(n2) +
                   static_cast<double>(n3) - 2.0 * static_cast<double>(swaps);
  const double denom = std::sqrt(static_cast<double>(n0 - n1)) * std::sqrt(static_cast<double>(n0 - n2));
  return std::clamp(s / denom, -1.0, 1.0);
}

// ---------------------------------------------------------------------------

struct Prediction {
  double mos = 0.0;
  std::optional<double> variance;

  bool operator==(const Prediction&) const = default;
};

struct PredictionSet {
  std::string model_id;
  std::map<std::string, Prediction> items;

  bool operator==(const PredictionSet&) const = default;
};

enum class Level { utterance, system };

inline std::string_view level_name(Level l) { return l == Level::utterance ? "utterance" : "system"; }

struct EvalReport {
  Level level = Level::utterance;
  double mse = 0.0;
  double srcc = 0.0;
  double pcc = 0.0;
  double ktau = 0.0;
  std::size_t n = 0;
};

struct PairedScores {
  std::vector<std::string> keys;
  std::vector<double> predicted;
  std::vector<double> truth;
};

namespace detail {

inline const UtteranceRecord& lookup(const std::unordered_map<std::string, const UtteranceRecord*>& index,
                                     const std::string& utt_id) {
  const auto it = index.find(utt_id);
  if (it == index.end()) throw Error(Errc::MissingRecord, "no record for predicted utterance '" + utt_id + "'");
  if (!it->second->mos) throw Error(Errc::MissingRecord, "utterance '" + utt_id + "' has no true MOS");
  return *it->second;
}

inline std::unordered_map<std::string, const UtteranceRecord*> index_records(
    const std::vector<UtteranceRecord>& records) {
  std::unordered_map<std::string, const UtteranceRecord*> index;
  for (const auto& r : records) index.emplace(r.utt_id, &r);
  return index;
}

}  // namespace detail

/// Per-utterance (prediction, truth) pairs in utterance id order.
inline PairedScores utterance_pairs(const PredictionSet& preds, const std::vector<UtteranceRecord>& records) {
  const auto index = detail::index_records(records);
  PairedScores out;
  for (const auto& [utt, p] : preds.items) {
    const auto& rec = detail::lookup(index, utt);
    out.keys.push_back(utt);
    out.predicted.push_back(p.mos);
    out.truth.push_back(*rec.mos);
  }
  return out;
}

/// Per-system means of predictions and of true MOS, in system id order.
inline PairedScores system_aggregate(const PredictionSet& preds, const std::vector<UtteranceRecord>& records) {
  const auto index = detail::index_records(records);
  struct Acc {
    double pred = 0.0, truth = 0.0;
    std::size_t n = 0;
  };
  std::map<std::string, Acc> systems;
  for (const auto& [utt, p] : preds.items) {
    const auto& rec = detail::lookup(index, utt);
    auto& a = systems[rec.system_id];
    a.pred += p.mos;
    a.truth += *rec.mos;
    ++a.n;
  }
  PairedScores out;
  for (const auto& [sys, a] : systems) {
    out.keys.push_back(sys);
    out.predicted.push_back(a.pred / static_cast<double>(a.n));
    out.truth.push_back(a.truth / static_cast<double>(a.n));
  }
  return out;
}

inline EvalReport evaluate_pairs(const PairedScores& s, Level level) {
  EvalReport r;
  r.level = level;
  r.n = s.predicted.size();
  r.mse = mse(s.predicted, s.truth);
  r.srcc = srcc(s.predicted, s.truth);
  r.pcc = pcc(s.predicted, s.truth);
  r.ktau = ktau(s.predicted, s.truth);
  return r;
}

inline EvalReport evaluate(const PredictionSet& preds, const std::vector<UtteranceRecord>& records, Level level) {
  if (preds.items.empty()) throw Error(Errc::Empty, "no predictions to evaluate");
  return evaluate_pairs(level == Level::utterance ? utterance_pairs(preds, records) : system_aggregate(preds, records),
                        level);
}

// ---------------------------------------------------------------------------

/// Per-utterance mean of the members. When every member carries a variance
/// the ensemble variance is the mixture variance (mean variance plus the
/// spread of the member means).
inline PredictionSet ensemble(std::span<const PredictionSet> sets, std::string model_id = "ensemble") {
  if (sets.empty()) throw Error(Errc::TooFewMembers, "ensemble of zero prediction sets");
  PredictionSet out;
  out.model_id = std::move(model_id);
  for (const auto& s : sets) {
    if (s.items.size() != sets.front().items.size()) throw Error(Errc::KeyMismatch, "prediction sets cover different utterances");
  }
  const double k = static_cast<double>(sets.size());
  for (const auto& [utt, first] : sets.front().items) {
    double sum = 0.0, sum_var = 0.0;
    bool all_var = true;
    std::vector<double> member_means;
    for (const auto& s : sets) {
      const auto it = s.items.find(utt);
      if (it == s.items.end()) throw Error(Errc::KeyMismatch, "utterance '" + utt + "' missing from " + s.model_id);
      sum += it->second.mos;
      member_means.push_back(it->second.mos);
      if (it->second.variance) sum_var += *it->second.variance;
      else all_var = false;
    }
    Prediction p;
    p.mos = sum / k;
    if (all_var) {
      double spread = 0.0;
      for (const double m : member_means) spread += (m - p.mos) * (m - p.mos);
      p.variance = sum_var / k + spread / k;
    }
    out.items.emplace(utt, p);
  }
  return out;
}

/// The k ensembles that each leave out one member.
inline std::vector<PredictionSet> leave_one_out_ensembles(std::span<const PredictionSet> sets) {
  if (sets.size() < 2) throw Error(Errc::TooFewMembers, "leave-one-out needs at least two members");
  std::vector<PredictionSet> out;
  for (std::size_t skip = 0; skip < sets.size(); ++skip) {
    std::vector<PredictionSet> members;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      if (i != skip) members.push_back(sets[i]);
    }
    out.push_back(ensemble(members, "loo-" + std::to_string(skip)));
  }
  return out;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

inline MeanStd mean_std(std::span<const double> v) {
  if (v.empty()) throw Error(Errc::Empty, "mean of an empty sequence");
  const double n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (const double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / n)};
}

// ---------------------------------------------------------------------------

struct AnnotatorAnalysis {
  std::size_t k = 0;
  std::vector<double> mse_utterance, srcc_utterance;
  std::vector<double> mse_system, srcc_system;
};

/// Per trial, every utterance's ratings are shuffled; eight are kept, the
/// first four average into the ground truth and the mean of k of the other
/// four acts as the prediction.
inline AnnotatorAnalysis annotator_subsample_analysis(const std::vector<UtteranceRecord>& records, std::size_t k,
                                                      std::size_t n_trials, std::uint64_t seed) {
  if (k < 1 || k > 4) throw Error(Errc::InvalidConfig, "annotator group size must be in 1..4");
  if (records.empty()) throw Error(Errc::Empty, "no records for annotator analysis");
  for (const auto& r : records) {
    if (r.listener_ratings.size() < 8) {
      throw Error(Errc::NotEnoughRatings, "utterance '" + r.utt_id + "' has " + std::to_string(r.listener_ratings.size()) +
                                              " ratings, need 8");
    }
  }
  AnnotatorAnalysis res;
  res.k = k;
  Rng rng(seed);
  for (std::size_t trial = 0; trial < n_trials; ++trial) {
    PredictionSet preds;
    std::vector<UtteranceRecord> truth;
    truth.reserve(records.size());
    for (const auto& r : records) {
      std::vector<int> ratings;
      for (const auto& lr : r.listener_ratings) ratings.push_back(lr.rating);
      shuffle(std::span(ratings), rng);
      const double gt = (ratings[0] + ratings[1] + ratings[2] + ratings[3]) / 4.0;
      double pred = 0.0;
      for (std::size_t j = 0; j < k; ++j) pred += ratings[4 + j];
      pred /= static_cast<double>(k);
      preds.items.emplace(r.utt_id, Prediction{pred, std::nullopt});
      UtteranceRecord t;
      t.utt_id = r.utt_id;
      t.system_id = r.system_id;
      t.mos = gt;
      truth.push_back(std::move(t));
    }
    const auto utt = utterance_pairs(preds, truth);
    const auto sys = system_aggregate(preds, truth);
    res.mse_utterance.push_back(mse(utt.predicted, utt.truth));
    res.srcc_utterance.push_back(srcc(utt.predicted, utt.truth));
    res.mse_system.push_back(mse(sys.predicted, sys.truth));
    res.srcc_system.push_back(srcc(sys.predicted, sys.truth));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Predictions CSV: utt_id,system_id,mos_pred,variance_pred

inline constexpr std::string_view kPredictionsHeader = "utt_id,system_id,mos_pred,variance_pred";

inline PredictionSet load_predictions(const std::filesystem::path& path) {
  PredictionSet set;
  set.model_id = path.stem().string();
  for (const auto& row : io::read_csv(path, kPredictionsHeader)) {
    const auto ctx = io::where(path, row);
    Prediction p;
    p.mos = io::parse_double(row.cells[2], ctx);
    if (!std::isfinite(p.mos)) throw Error(Errc::NonFiniteValue, ctx + ": non-finite prediction");
    if (!row.cells[3].empty()) p.variance = io::parse_double(row.cells[3], ctx);
    if (!set.items.emplace(row.cells[0], p).second) {
      throw Error(Errc::DuplicateId, ctx + ": duplicate utt_id '" + row.cells[0] + "'");
    }
  }
  return set;
}

/// `system_of` maps utterance ids to system ids; unknown ids get an empty cell.
inline void save_predictions(const std::filesystem::path& path, const PredictionSet& set,
                             const std::map<std::string, std::string>& system_of = {}) {
  auto out = io::open_out(path);
  out << kPredictionsHeader << '\n';
  for (const auto& [utt, p] : set.items) {
    const auto it = system_of.find(utt);
    out << utt << ',' << (it == system_of.end() ? "" : it->second) << ',' << io::format_double(p.mos) << ','
        << (p.variance ? io::format_double(*p.variance) : "") << '\n';
  }
}

}  // namespace moosenet
