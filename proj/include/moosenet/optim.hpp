// moosenet/optim.hpp

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

// Noam warmup schedule and the LAMB optimizer (Adam moments with a
// per-tensor trust ratio).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "moosenet/head.hpp"

namespace moosenet {

/// base_lr * warmup^0.5 * min(step^-0.5, step * warmup^-1.5); peaks at
/// base_lr when step == warmup.
inline double noam_lr(std::uint64_t step, double base_lr, double warmup) {
  const double s = static_cast<double>(std::max<std::uint64_t>(step, 1));
  return base_lr * std::sqrt(warmup) * std::min(1.0 / std::sqrt(s), s * std::pow(warmup, -1.5));
}

struct LambConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-6;
  double max_trust = 10.0;
};

/// Updates one tensor in place and returns the trust ratio used.
/// `step` is the 1-based step count used for bias correction.
template <typename Derived>
double lamb_update(Eigen::MatrixBase<Derived>& w, const Eigen::MatrixXd& g, Eigen::MatrixXd& m, Eigen::MatrixXd& v,
                   std::uint64_t step, double lr, double weight_decay, const LambConfig& cfg = {}) {
  using Scalar = typename Derived::Scalar;
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  const Eigen::MatrixXd wd = w.template cast<double>();
  const Eigen::MatrixXd u =
      ((m / c1).array() / ((v / c2).array().sqrt() + cfg.eps)).matrix() + weight_decay * wd;
  const double w_norm = wd.norm();
  const double u_norm = u.norm();
  double trust = 1.0;
  if (w_norm > 0.0 && u_norm > 0.0) trust = std::clamp(w_norm / u_norm, 0.0, cfg.max_trust);
  w = (wd - lr * trust * u).template cast<Scalar>();
  return trust;
}

struct LambState {
  HeadParams<double> m;
  HeadParams<double> v;
  std::uint64_t step = 0;

  static LambState for_shape(const HeadShape& s) {
    return {HeadParams<double>::zeros(s), HeadParams<double>::zeros(s), 0};
  }
};

/// One LAMB step over every tensor of the head; returns the trust ratios in
/// tensor order (empty tensors report 1).
template <typename Scalar>
std::vector<double> lamb_step(HeadParams<Scalar>& params, const HeadParams<double>& grads, LambState& state,
                              double lr, double weight_decay, const LambConfig& cfg = {}) {
  ++state.step;
  std::vector<const Eigen::MatrixXd*> gs;
  std::vector<Eigen::MatrixXd*> ms, vs;
  grads.for_each([&](std::string_view, const Eigen::MatrixXd& t) { gs.push_back(&t); });
  state.m.for_each([&](std::string_view, Eigen::MatrixXd& t) { ms.push_back(&t); });
  state.v.for_each([&](std::string_view, Eigen::MatrixXd& t) { vs.push_back(&t); });
  std::vector<double> trust;
  std::size_t k = 0;
  params.for_each([&](std::string_view, auto& w) {
    if (w.size() == 0) {
      trust.push_back(1.0);
    } else {
      trust.push_back(lamb_update(w, *gs[k], *ms[k], *vs[k], state.step, lr, weight_decay, cfg));
    }
    ++k;
  });
  return trust;
}

}  // namespace moosenet
