// moosenet/train.hpp

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

// Training loop: bucketed batches -> forward -> multi-task loss -> LAMB under
// the Noam schedule, with dev-set early stopping on SRCC.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "moosenet/batching.hpp"
#include "moosenet/error.hpp"
#include "moosenet/head.hpp"
#include "moosenet/losses.hpp"
#include "moosenet/metrics.hpp"
#include "moosenet/optim.hpp"
#include "moosenet/random.hpp"

namespace moosenet {

struct NoisyExample {
  Eigen::VectorXd pooled;
  double snr_db = 0.0;
  std::size_t noise_class = 0;
  std::optional<double> stoi;
};

struct TrainUtterance {
  std::string utt_id;
  std::string system_id;
  double duration_s = 0.0;
  Eigen::VectorXd pooled;
  double mos = 0.0;
  std::optional<double> stoi;
  std::vector<std::pair<std::size_t, double>> listener_targets;  // (listener table row, rating)
  std::optional<NoisyExample> noisy;
};

struct EvalUtterance {
  std::string utt_id;
  std::string system_id;
  Eigen::VectorXd pooled;
  double mos = 0.0;
};

struct TrainConfig {
  LossConfig loss;
  LambConfig lamb;
  double base_lr = 0.001;
  double warmup = 1500.0;
  double weight_decay = 0.0001;
  std::size_t patience = 30;
  std::size_t max_epochs = 90;
  std::size_t n_buckets = 20;
  double clean_budget_s = 40.0;
  Level early_stop_level = Level::system;
  std::uint64_t seed = 0;
};

/// Stops once `patience` epochs pass without a better score. An exact tie on
/// `score` counts as better when `tiebreak` beats the tiebreak of the best.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Returns true when this epoch is the new best.
  bool update(double score, double tiebreak = std::numeric_limits<double>::quiet_NaN()) {
    ++epoch_;
    const bool better = std::isfinite(score) &&
                        (score > best_ || (score == best_ && std::isfinite(tiebreak) && tiebreak > best_tiebreak_));
    if (better) {
      best_ = score;
      best_tiebreak_ = std::isfinite(tiebreak) ? tiebreak : -std::numeric_limits<double>::infinity();
      best_epoch_ = epoch_;
      since_best_ = 0;
      return true;
    }
    ++since_best_;
    return false;
  }

  bool should_stop() const { return since_best_ >= patience_; }
  double best() const { return best_; }
  std::size_t best_epoch() const { return best_epoch_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_ = -std::numeric_limits<double>::infinity();
  double best_tiebreak_ = -std::numeric_limits<double>::infinity();
};

struct EpochLog {
  std::size_t epoch = 0;
  std::uint64_t steps = 0;
  double lr = 0.0;
  LossBreakdown train;  // mean over the epoch's batches
  double dev_mse_utterance = 0.0;
  double dev_srcc_utterance = 0.0;
  double dev_mse_system = 0.0;
  double dev_srcc_system = 0.0;
  double dev_srcc = 0.0;  // at the early-stopping level
  double best_srcc = 0.0;
  bool improved = false;
};

struct TrainResult {
  PredictorHead<float> best;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  bool early_stopped = false;
};

template <typename Scalar>
PredictionSet predict_head(const PredictorHead<Scalar>& head, std::span<const EvalUtterance> utts,
                           std::string model_id = "head") {
  PredictionSet set;
  set.model_id = std::move(model_id);
  const std::optional<std::size_t> row = head.shape.has_listeners() ? std::optional<std::size_t>(0) : std::nullopt;
  for (const auto& u : utts) {
    const auto out = forward_trace(head, u.pooled, row).out;
    set.items.emplace(u.utt_id, Prediction{out.mos_mean, std::exp(out.mos_logvar)});
  }
  return set;
}

inline std::vector<UtteranceRecord> eval_records(std::span<const EvalUtterance> utts) {
  std::vector<UtteranceRecord> out;
  out.reserve(utts.size());
  for (const auto& u : utts) {
    UtteranceRecord r;
    r.utt_id = u.utt_id;
    r.system_id = u.system_id;
    r.mos = u.mos;
    r.duration_s = 1.0;
    out.push_back(std::move(r));
  }
  return out;
}

namespace detail {

inline double metric_or_nan(auto&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == Errc::DegenerateInput) return std::numeric_limits<double>::quiet_NaN();
    throw;
  }
}

/// Loss items of one batch. With listener conditioning the clean utterance
/// appears once with the UNK row and its MOS, and once per rating with that
/// listener's row and score; only the UNK items enter the ranking loss.
inline std::vector<LossItem> batch_items(const Batch& batch, std::span<const TrainUtterance> data,
                                         const std::unordered_map<std::string, std::size_t>& index,
                                         bool has_listeners) {
  std::vector<LossItem> items;
  const std::optional<std::size_t> unk = has_listeners ? std::optional<std::size_t>(0) : std::nullopt;
  for (const auto& bi : batch.items) {
    const auto& u = data[index.at(bi.utt_id)];
    if (bi.variant == Variant::clean) {
      LossItem it;
      it.pooled = u.pooled;
      it.listener_row = unk;
      it.targets.variant = Variant::clean;
      it.targets.mos = u.mos;
      it.targets.contrast = true;
      it.targets.stoi = u.stoi;
      items.push_back(std::move(it));
      if (has_listeners) {
        for (const auto& [row, rating] : u.listener_targets) {
          LossItem li;
          li.pooled = u.pooled;
          li.listener_row = row;
          li.targets.variant = Variant::clean;
          li.targets.mos = rating;
          items.push_back(std::move(li));
        }
      }
    } else if (u.noisy) {
      LossItem it;
      it.pooled = u.noisy->pooled;
      it.listener_row = unk;
      it.targets.variant = Variant::noisy;
      it.targets.snr = u.noisy->snr_db;
      it.targets.noise_class = u.noisy->noise_class;
      it.targets.stoi = u.noisy->stoi;
      items.push_back(std::move(it));
    }
  }
  return items;
}

}  // namespace detail

inline TrainResult train(PredictorHead<float> head, std::span<const TrainUtterance> data,
                         std::span<const EvalUtterance> dev, const TrainConfig& cfg) {
  if (data.empty()) throw Error(Errc::MissingSplit, "training split is empty");
  if (dev.empty()) throw Error(Errc::MissingSplit, "dev split is empty");

  std::unordered_map<std::string, std::size_t> index;
  std::vector<UtteranceRecord> bucket_input;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!index.emplace(data[i].utt_id, i).second) {
      throw Error(Errc::DuplicateId, "duplicate training utterance '" + data[i].utt_id + "'");
    }
    UtteranceRecord r;
    r.utt_id = data[i].utt_id;
    r.duration_s = data[i].duration_s;
    bucket_input.push_back(std::move(r));
  }
  const auto buckets = make_buckets(bucket_input, std::min(cfg.n_buckets, bucket_input.size()));
  const auto dev_records = eval_records(dev);

  TrainResult result;
  result.best = head;
  LambState state = LambState::for_shape(head.shape);
  EarlyStopping stopper(cfg.patience);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto batches = draw_batches(buckets, derive_seed(cfg.seed, epoch), cfg.clean_budget_s);
    EpochLog row;
    row.epoch = epoch;
    std::size_t n_batches = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto items = detail::batch_items(batches[b], data, index, head.shape.has_listeners());
      if (items.empty()) continue;
      auto res = loss_total(head, items, cfg.loss);
      if (!std::isfinite(res.loss.total) || !res.grad.all_finite()) {
        std::string ids;
        for (const auto& bi : batches[b].items) {
          if (bi.variant == Variant::clean) ids += (ids.empty() ? "" : " ") + bi.utt_id;
        }
        throw Error(Errc::NonFiniteLoss, "epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                                             ": non-finite loss or gradient; utterances: " + ids);
      }
      const double lr = noam_lr(state.step + 1, cfg.base_lr, cfg.warmup);
      lamb_step(head.params, res.grad, state, lr, cfg.weight_decay, cfg.lamb);
      row.lr = lr;
      row.train.total += res.loss.total;
      row.train.mos += res.loss.mos;
      row.train.contrast += res.loss.contrast;
      row.train.stoi += res.loss.stoi;
      row.train.snr += res.loss.snr;
      row.train.noise += res.loss.noise;
      ++n_batches;
    }
    if (n_batches > 0) {
      const double k = static_cast<double>(n_batches);
      row.train = {row.train.total / k, row.train.mos / k, row.train.contrast / k,
                   row.train.stoi / k,  row.train.snr / k, row.train.noise / k};
    }
    row.steps = state.step;

    const auto preds = predict_head(head, dev);
    const auto utt = utterance_pairs(preds, dev_records);
    const auto sys = system_aggregate(preds, dev_records);
    row.dev_mse_utterance = mse(utt.predicted, utt.truth);
    row.dev_mse_system = mse(sys.predicted, sys.truth);
    row.dev_srcc_utterance = detail::metric_or_nan([&] { return srcc(utt.predicted, utt.truth); });
    row.dev_srcc_system = detail::metric_or_nan([&] { return srcc(sys.predicted, sys.truth); });
    const bool by_system = cfg.early_stop_level == Level::system;
    row.dev_srcc = by_system ? row.dev_srcc_system : row.dev_srcc_utterance;
    // System SRCC over few systems ties often; the other level breaks ties.
    row.improved = stopper.update(row.dev_srcc, by_system ? row.dev_srcc_utterance : row.dev_srcc_system);
    if (row.improved) {
      result.best = head;
      result.best_epoch = epoch;
    }
    row.best_srcc = stopper.best();
    result.log.push_back(row);
    if (stopper.should_stop()) {
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

}  // namespace moosenet
