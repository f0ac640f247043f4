// moosenet/gradcheck.hpp

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

// Central finite-difference check of the backpropagated loss gradients on
// small random heads.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "moosenet/head.hpp"
#include "moosenet/losses.hpp"
#include "moosenet/random.hpp"

namespace moosenet {

struct GradcheckReport {
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::string worst;  // "tensor[index]" of the largest error

  bool passed(double tol = 1e-4) const { return max_rel_error < tol; }
};

/// |a - b| / max(|a|, |b|, 1e-6).
inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

inline GradcheckReport gradient_check(const PredictorHead<double>& head, std::span<const LossItem> items,
                                      const LossConfig& cfg, double h = 1e-5) {
  const auto analytic = loss_total(head, items, cfg).grad;
  std::vector<const Eigen::MatrixXd*> grads;
  analytic.for_each([&](std::string_view, const Eigen::MatrixXd& g) { grads.push_back(&g); });

  GradcheckReport report;
  PredictorHead<double> probe = head;
  std::size_t k = 0;
  probe.params.for_each([&](std::string_view name, Eigen::MatrixXd& w) {
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double orig = w.data()[i];
      w.data()[i] = orig + h;
      const double up = loss_total(probe, items, cfg, false).loss.total;
      w.data()[i] = orig - h;
      const double down = loss_total(probe, items, cfg, false).loss.total;
      w.data()[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(grads[k]->data()[i], numeric);
      ++report.checked;
      if (err > report.max_rel_error || report.worst.empty()) {
        report.max_rel_error = std::max(report.max_rel_error, err);
        report.worst = std::string(name) + "[" + std::to_string(i) + "]";
      }
    }
    ++k;
  });
  return report;
}

struct GradcheckProblem {
  PredictorHead<double> head;
  std::vector<LossItem> items;
  LossConfig cfg;
};

namespace detail {

// True when every non-differentiable point (ReLU, clip edges, hinge and
// absolute value of the ranking loss) is at least `gap` away.
inline bool away_from_kinks(const GradcheckProblem& p, double gap) {
  std::vector<double> preds, targets;
  for (const auto& it : p.items) {
    const auto tr = forward_trace(p.head, it.pooled, it.listener_row);
    if ((tr.pre_activation.array().abs() < gap).any()) return false;
    const auto& t = it.targets;
    const bool noisy = t.variant == Variant::noisy;
    if (t.mos) {
      if (p.cfg.mos_loss == MosLoss::clipped_logcosh &&
          std::abs(std::abs(tr.out.mos_mean - *t.mos) - p.cfg.tau) < gap)
        return false;
      if (t.contrast) {
        preds.push_back(tr.out.mos_mean);
        targets.push_back(*t.mos);
      }
    }
    if (t.stoi && std::abs(std::abs(tr.out.stoi - *t.stoi) - p.cfg.aux_tau) < gap) return false;
    if (noisy && t.snr && std::abs(std::abs(tr.out.snr - *t.snr) - p.cfg.aux_tau) < gap) return false;
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t j = i + 1; j < preds.size(); ++j) {
      const double d = (preds[i] - preds[j]) - (targets[i] - targets[j]);
      if (std::abs(d) < gap || std::abs(std::abs(d) - p.cfg.margin) < gap) return false;
    }
  }
  return true;
}

}  // namespace detail

/// Random head with D <= 4, H <= 3, C <= 3 (listener table on every other
/// draw) and a random mixed batch, redrawn until no kink lies within 1e-3.
inline GradcheckProblem random_gradcheck_problem(std::uint64_t seed, MosLoss mos_loss) {
  Rng rng(seed);
  for (int attempt = 0;; ++attempt) {
    GradcheckProblem p;
    HeadShape s;
    s.input_dim = 1 + uniform_index(rng, 4);
    s.hidden_dim = 1 + uniform_index(rng, 3);
    s.noise_classes = 1 + uniform_index(rng, 3);
    std::vector<std::string> listeners;
    if (uniform01(rng) < 0.5) {
      s.listener_dim = 2;
      s.listener_count = 2;
      listeners = {"a", "b"};
    }
    p.head = init_head<double>(s, rng(), listeners);
    // Non-zero biases so every tensor sees a generic point.
    p.head.params.for_each([&](std::string_view, Eigen::MatrixXd& m) {
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += 0.3 * standard_normal(rng);
    });
    p.cfg.mos_loss = mos_loss;
    p.cfg.tau = 0.05 + 0.2 * uniform01(rng);
    p.cfg.aux_tau = 0.1 * uniform01(rng);
    p.cfg.margin = 0.1;
    p.cfg.weights = {0.5 + uniform01(rng), 0.5 + uniform01(rng), 0.5 + uniform01(rng), 0.5 + uniform01(rng),
                     0.5 + uniform01(rng)};
    const std::size_t n = 3 + uniform_index(rng, 4);
    for (std::size_t k = 0; k < n; ++k) {
      LossItem it;
      it.pooled.resize(static_cast<Eigen::Index>(s.input_dim));
      for (Eigen::Index d = 0; d < it.pooled.size(); ++d) it.pooled[d] = standard_normal(rng);
      if (s.has_listeners()) it.listener_row = uniform_index(rng, s.listener_count + 1);
      auto& t = it.targets;
      t.variant = uniform01(rng) < 0.5 ? Variant::clean : Variant::noisy;
      if (t.variant == Variant::clean || uniform01(rng) < 0.3) {
        t.mos = uniform(rng, 1.0, 5.0);
        t.contrast = uniform01(rng) < 0.8;
      }
      if (uniform01(rng) < 0.5) t.stoi = uniform01(rng);
      // Clean items also get SNR/noise targets; they must be ignored.
      if (uniform01(rng) < 0.8) t.snr = uniform(rng, -1.0, 1.0);
      if (uniform01(rng) < 0.8) t.noise_class = uniform_index(rng, s.noise_classes);
      p.items.push_back(std::move(it));
    }
    if (detail::away_from_kinks(p, 1e-3) || attempt > 1000) return p;
  }
}

}  // namespace moosenet
