// moosenet/batching.hpp

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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "moosenet/dataset.hpp"
#include "moosenet/error.hpp"
#include "moosenet/random.hpp"

namespace moosenet {

/// Keeps records with min_s <= duration <= max_s.
inline std::vector<UtteranceRecord> filter_by_duration(const std::vector<UtteranceRecord>& records,
                                                       double min_s = 1.0, double max_s = 12.0) {
  std::vector<UtteranceRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [&](const UtteranceRecord& r) { return r.duration_s >= min_s && r.duration_s <= max_s; });
  return out;
}

struct BucketMember {
  std::string utt_id;
  double duration_s = 0.0;
};

struct Bucket {
  std::size_t index = 0;
  double min_dur = 0.0;
  double max_dur = 0.0;  // exclusive
  std::vector<BucketMember> members;
};

/// Sorts by duration and cuts into `n_buckets` contiguous groups whose sizes
/// differ by at most one.
inline std::vector<Bucket> make_buckets(const std::vector<UtteranceRecord>& records, std::size_t n_buckets = 20) {
  if (n_buckets == 0) throw Error(Errc::InvalidConfig, "bucket count must be positive");
  if (records.size() < n_buckets) {
    throw Error(Errc::TooFewRecords, std::to_string(records.size()) + " records cannot fill " +
                                         std::to_string(n_buckets) + " buckets");
  }
  std::vector<BucketMember> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back({r.utt_id, r.duration_s});
  std::sort(sorted.begin(), sorted.end(), [](const BucketMember& a, const BucketMember& b) {
    return a.duration_s != b.duration_s ? a.duration_s < b.duration_s : a.utt_id < b.utt_id;
  });

  const std::size_t base = sorted.size() / n_buckets;
  const std::size_t extra = sorted.size() % n_buckets;
  std::vector<Bucket> buckets(n_buckets);
  std::size_t pos = 0;
  for (std::size_t b = 0; b < n_buckets; ++b) {
    const std::size_t size = base + (b < extra ? 1 : 0);
    auto& bucket = buckets[b];
    bucket.index = b;
    bucket.members.assign(sorted.begin() + static_cast<std::ptrdiff_t>(pos),
                          sorted.begin() + static_cast<std::ptrdiff_t>(pos + size));
    bucket.min_dur = bucket.members.front().duration_s;
    bucket.max_dur = std::nextafter(bucket.members.back().duration_s, std::numeric_limits<double>::infinity());
    pos += size;
  }
  return buckets;
}

enum class Variant { clean, noisy };

struct BatchItem {
  std::string utt_id;
  Variant variant = Variant::clean;
  double duration_s = 0.0;

  bool operator==(const BatchItem&) const = default;
};

struct Batch {
  std::size_t bucket = 0;
  std::vector<BatchItem> items;  // clean item immediately followed by its noisy twin
  double clean_duration_s = 0.0;
  double total_duration_s = 0.0;

  bool operator==(const Batch&) const = default;
};

/// One epoch of batches. Each bucket is shuffled and packed greedily until
/// the next utterance would push clean audio past `clean_budget_s`; the
/// resulting batches are then shuffled across buckets. Deterministic in
/// `epoch_seed`.
inline std::vector<Batch> draw_batches(const std::vector<Bucket>& buckets, std::uint64_t epoch_seed,
                                       double clean_budget_s = 40.0) {
  Rng rng(epoch_seed);
  std::vector<Batch> batches;
  for (const auto& bucket : buckets) {
    auto members = bucket.members;
    shuffle(std::span(members), rng);
    Batch current;
    current.bucket = bucket.index;
    for (const auto& m : members) {
      if (m.duration_s > clean_budget_s) {
        throw Error(Errc::UtteranceTooLong, "utterance '" + m.utt_id + "' alone exceeds the clean batch budget");
      }
      if (!current.items.empty() && current.clean_duration_s + m.duration_s > clean_budget_s) {
        batches.push_back(std::move(current));
        current = Batch{};
        current.bucket = bucket.index;
      }
      current.items.push_back({m.utt_id, Variant::clean, m.duration_s});
      current.items.push_back({m.utt_id, Variant::noisy, m.duration_s});
      current.clean_duration_s += m.duration_s;
      current.total_duration_s += 2.0 * m.duration_s;
    }
    if (!current.items.empty()) batches.push_back(std::move(current));
  }
  shuffle(std::span(batches), rng);
  return batches;
}

}  // namespace moosenet
