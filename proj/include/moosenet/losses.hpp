// moosenet/losses.hpp

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

// Scalar losses with their derivatives, and the multi-task batch loss with
// exact backpropagated gradients.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "moosenet/batching.hpp"
#include "moosenet/error.hpp"
#include "moosenet/head.hpp"

namespace moosenet {

struct ValueGrad {
  double value = 0.0;
  double grad = 0.0;  // derivative with respect to the prediction
};

/// log(cosh(d)) without overflow for large |d|.
inline double log_cosh(double d) {
  const double a = std::abs(d);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

/// Zero inside |pred - target| <= tau, log-cosh outside.
inline ValueGrad clipped_logcosh(double pred, double target, double tau) {
  const double d = pred - target;
  if (std::abs(d) <= tau) return {0.0, 0.0};
  return {log_cosh(d), std::tanh(d)};
}

struct GaussGrad {
  double value = 0.0;
  double d_mu = 0.0;
  double d_logvar = 0.0;
};

/// Gaussian negative log-likelihood without the constant term.
inline GaussGrad gauss_nll(double mu, double logvar, double target) {
  const double r = target - mu;
  const double inv_var = std::exp(-logvar);
  return {0.5 * logvar + 0.5 * r * r * inv_var, -r * inv_var, 0.5 - 0.5 * r * r * inv_var};
}

struct ContrastiveResult {
  double value = 0.0;
  std::vector<double> grad;  // d(value)/d(preds[i])
};

/// Mean over pairs i<j of max(0, |(p_i - p_j) - (t_i - t_j)| - margin).
/// Fewer than two items contribute zero.
inline ContrastiveResult contrastive_loss(std::span<const double> preds, std::span<const double> targets,
                                          double margin) {
  if (preds.size() != targets.size()) throw Error(Errc::LengthMismatch, "contrastive loss inputs differ in length");
  const std::size_t n = preds.size();
  ContrastiveResult res;
  res.grad.assign(n, 0.0);
  if (n < 2) return res;
  const double pairs = static_cast<double>(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = (preds[i] - preds[j]) - (targets[i] - targets[j]);
      const double excess = std::abs(d) - margin;
      if (excess <= 0.0) continue;
      res.value += excess;
      const double s = d > 0.0 ? 1.0 : -1.0;
      res.grad[i] += s / pairs;
      res.grad[j] -= s / pairs;
    }
  }
  res.value /= pairs;
  return res;
}

struct CrossEntropyResult {
  double value = 0.0;
  Eigen::VectorXd grad;
};

inline CrossEntropyResult cross_entropy(const Eigen::VectorXd& logits, std::size_t cls) {
  if (cls >= static_cast<std::size_t>(logits.size())) {
    throw Error(Errc::DimensionMismatch, "noise class " + std::to_string(cls) + " outside the classifier range");
  }
  const double mx = logits.maxCoeff();
  const Eigen::VectorXd e = (logits.array() - mx).exp().matrix();
  const double z = e.sum();
  CrossEntropyResult res;
  res.value = std::log(z) + mx - logits[static_cast<Eigen::Index>(cls)];
  res.grad = e / z;
  res.grad[static_cast<Eigen::Index>(cls)] -= 1.0;
  return res;
}

enum class MosLoss { gauss, clipped_logcosh };

struct LossWeights {
  double mos = 1.0;
  double contrast = 0.5;
  double stoi = 0.1;
  double snr = 0.1;
  double noise = 0.1;
};

struct LossConfig {
  MosLoss mos_loss = MosLoss::gauss;
  double tau = 0.25;      // clip threshold of the MOS point loss
  double aux_tau = 0.0;   // clip threshold of the STOI and SNR losses
  double margin = 0.1;    // contrastive hinge margin
  LossWeights weights;
};

struct ItemTargets {
  Variant variant = Variant::clean;
  std::optional<double> mos;
  bool contrast = false;  // take part in the pairwise ranking loss
  std::optional<double> stoi;
  std::optional<double> snr;                // used on noisy items only
  std::optional<std::size_t> noise_class;   // used on noisy items only
};

struct LossItem {
  Eigen::VectorXd pooled;
  std::optional<std::size_t> listener_row;
  ItemTargets targets;
};

struct LossBreakdown {
  double total = 0.0;
  double mos = 0.0;
  double contrast = 0.0;
  double stoi = 0.0;
  double snr = 0.0;
  double noise = 0.0;
};

struct LossResult {
  LossBreakdown loss;
  HeadParams<double> grad;
};

/// Weighted multi-task loss of a batch. Each component is the mean over the
/// items carrying its target; items missing a target contribute nothing.
template <typename Scalar>
LossResult loss_total(const PredictorHead<Scalar>& head, std::span<const LossItem> items, const LossConfig& cfg,
                      bool with_grad = true) {
  LossResult res;
  if (with_grad) res.grad = HeadParams<double>::zeros(head.shape);
  const auto& w = cfg.weights;

  std::vector<ForwardTrace> traces;
  traces.reserve(items.size());
  std::size_t n_mos = 0, n_stoi = 0, n_snr = 0, n_noise = 0;
  std::vector<std::size_t> contrast_idx;
  for (std::size_t i = 0; i < items.size(); ++i) {
    traces.push_back(forward_trace(head, items[i].pooled, items[i].listener_row));
    const auto& t = items[i].targets;
    const bool noisy = t.variant == Variant::noisy;
    if (t.mos) {
      ++n_mos;
      if (t.contrast) contrast_idx.push_back(i);
    }
    if (t.stoi) ++n_stoi;
    if (noisy && t.snr) ++n_snr;
    if (noisy && t.noise_class) ++n_noise;
  }

  std::vector<OutputGrad> og(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& t = items[i].targets;
    const auto& out = traces[i].out;
    const bool noisy = t.variant == Variant::noisy;
    if (t.mos) {
      const double scale = 1.0 / static_cast<double>(n_mos);
      if (cfg.mos_loss == MosLoss::gauss) {
        const auto g = gauss_nll(out.mos_mean, out.mos_logvar, *t.mos);
        res.loss.mos += scale * g.value;
        og[i].mos_mean += w.mos * scale * g.d_mu;
        og[i].mos_logvar += w.mos * scale * g.d_logvar;
      } else {
        const auto g = clipped_logcosh(out.mos_mean, *t.mos, cfg.tau);
        res.loss.mos += scale * g.value;
        og[i].mos_mean += w.mos * scale * g.grad;
      }
    }
    if (t.stoi) {
      const double scale = 1.0 / static_cast<double>(n_stoi);
      const auto g = clipped_logcosh(out.stoi, *t.stoi, cfg.aux_tau);
      res.loss.stoi += scale * g.value;
      og[i].stoi += w.stoi * scale * g.grad;
    }
    if (noisy && t.snr) {
      const double scale = 1.0 / static_cast<double>(n_snr);
      const auto g = clipped_logcosh(out.snr, *t.snr, cfg.aux_tau);
      res.loss.snr += scale * g.value;
      og[i].snr += w.snr * scale * g.grad;
    }
    if (noisy && t.noise_class) {
      const double scale = 1.0 / static_cast<double>(n_noise);
      const auto ce = cross_entropy(out.noise_logits, *t.noise_class);
      res.loss.noise += scale * ce.value;
      og[i].noise_logits = (w.noise * scale) * ce.grad;
    }
  }

  if (contrast_idx.size() >= 2) {
    std::vector<double> preds, targets;
    for (const auto i : contrast_idx) {
      preds.push_back(traces[i].out.mos_mean);
      targets.push_back(*items[i].targets.mos);
    }
    const auto c = contrastive_loss(preds, targets, cfg.margin);
    res.loss.contrast = c.value;
    for (std::size_t k = 0; k < contrast_idx.size(); ++k) og[contrast_idx[k]].mos_mean += w.contrast * c.grad[k];
  }

  res.loss.total = w.mos * res.loss.mos + w.contrast * res.loss.contrast + w.stoi * res.loss.stoi +
                   w.snr * res.loss.snr + w.noise * res.loss.noise;
  if (with_grad) {
    for (std::size_t i = 0; i < items.size(); ++i) backward(head, traces[i], og[i], res.grad);
  }
  return res;
}

}  // namespace moosenet
