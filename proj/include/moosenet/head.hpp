// moosenet/head.hpp

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

// The trainable part of the predictor: global max+mean pooling of encoder
// frames, one ReLU hidden layer, and per-task linear projections (MOS mean,
// MOS log-variance, STOI, SNR, noise-class logits). With listener-dependent
// modeling a listener embedding (row 0 = UNK) is concatenated to the pooled
// vector before the hidden layer.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <limits>
#include <algorithm>
#include <vector>

#include "moosenet/dataset.hpp"
#include "moosenet/error.hpp"
#include "moosenet/io.hpp"
#include "moosenet/random.hpp"

namespace moosenet {

struct HeadShape {
  std::size_t input_dim = 0;       // D
  std::size_t hidden_dim = 32;     // H
  std::size_t noise_classes = 1;   // C
  std::size_t listener_dim = 0;    // E, 0 disables listener conditioning
  std::size_t listener_count = 0;  // L, excluding the UNK row

  std::size_t hidden_input() const { return input_dim + listener_dim; }
  bool has_listeners() const { return listener_dim > 0; }

  bool operator==(const HeadShape&) const = default;
};

/// All trainable tensors. Biases are stored as column matrices so every
/// tensor has the same type. Iteration order is the checkpoint order.
template <typename Scalar>
struct HeadParams {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Mat listener_table;  // (L+1) x E
  Mat hidden_w;        // H x (D+E)
  Mat hidden_b;        // H x 1
  Mat mean_w, mean_b;  // 1 x H, 1 x 1
  Mat logvar_w, logvar_b;
  Mat stoi_w, stoi_b;
  Mat snr_w, snr_b;
  Mat noise_w, noise_b;  // C x H, C x 1

  static HeadParams zeros(const HeadShape& s) {
    HeadParams p;
    const auto H = static_cast<Eigen::Index>(s.hidden_dim);
    const auto C = static_cast<Eigen::Index>(s.noise_classes);
    p.listener_table = Mat::Zero(s.has_listeners() ? static_cast<Eigen::Index>(s.listener_count + 1) : 0,
                                 static_cast<Eigen::Index>(s.listener_dim));
    p.hidden_w = Mat::Zero(H, static_cast<Eigen::Index>(s.hidden_input()));
    p.hidden_b = Mat::Zero(H, 1);
    p.mean_w = Mat::Zero(1, H);
    p.mean_b = Mat::Zero(1, 1);
    p.logvar_w = Mat::Zero(1, H);
    p.logvar_b = Mat::Zero(1, 1);
    p.stoi_w = Mat::Zero(1, H);
    p.stoi_b = Mat::Zero(1, 1);
    p.snr_w = Mat::Zero(1, H);
    p.snr_b = Mat::Zero(1, 1);
    p.noise_w = Mat::Zero(C, H);
    p.noise_b = Mat::Zero(C, 1);
    return p;
  }

  template <typename F>
  void for_each(F&& f) {
    f(std::string_view("listener_table"), listener_table);
    f(std::string_view("hidden.weight"), hidden_w);
    f(std::string_view("hidden.bias"), hidden_b);
    f(std::string_view("mos_mean.weight"), mean_w);
    f(std::string_view("mos_mean.bias"), mean_b);
    f(std::string_view("mos_logvar.weight"), logvar_w);
    f(std::string_view("mos_logvar.bias"), logvar_b);
    f(std::string_view("stoi.weight"), stoi_w);
    f(std::string_view("stoi.bias"), stoi_b);
    f(std::string_view("snr.weight"), snr_w);
    f(std::string_view("snr.bias"), snr_b);
    f(std::string_view("noise.weight"), noise_w);
    f(std::string_view("noise.bias"), noise_b);
  }

  template <typename F>
  void for_each(F&& f) const {
    const_cast<HeadParams*>(this)->for_each([&](std::string_view name, Mat& m) { f(name, std::as_const(m)); });
  }

  template <typename Other>
  HeadParams<Other> cast() const {
    HeadParams<Other> out;
    out.listener_table = listener_table.template cast<Other>();
    out.hidden_w = hidden_w.template cast<Other>();
    out.hidden_b = hidden_b.template cast<Other>();
    out.mean_w = mean_w.template cast<Other>();
    out.mean_b = mean_b.template cast<Other>();
    out.logvar_w = logvar_w.template cast<Other>();
    out.logvar_b = logvar_b.template cast<Other>();
    out.stoi_w = stoi_w.template cast<Other>();
    out.stoi_b = stoi_b.template cast<Other>();
    out.snr_w = snr_w.template cast<Other>();
    out.snr_b = snr_b.template cast<Other>();
    out.noise_w = noise_w.template cast<Other>();
    out.noise_b = noise_b.template cast<Other>();
    return out;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for_each([&](std::string_view, const Mat& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    for_each([&](std::string_view, const Mat& m) { ok = ok && m.allFinite(); });
    return ok;
  }
};

template <typename Scalar = float>
struct PredictorHead {
  HeadShape shape;
  HeadParams<Scalar> params;
  std::vector<std::string> listener_ids;  // listener_ids[i] owns table row i + 1

  template <typename Other>
  PredictorHead<Other> cast() const {
    return {shape, params.template cast<Other>(), listener_ids};
  }
};

/// Random initialization: He-uniform hidden layer, Xavier-uniform projections,
/// zero biases except the MOS mean bias, which starts at the scale midpoint.
template <typename Scalar = float>
PredictorHead<Scalar> init_head(const HeadShape& shape, std::uint64_t seed,
                                std::vector<std::string> listener_ids = {}) {
  if (shape.input_dim == 0 || shape.hidden_dim == 0 || shape.noise_classes == 0) {
    throw Error(Errc::DimensionMismatch, "head dimensions must be positive");
  }
  if (shape.has_listeners() && listener_ids.size() != shape.listener_count) {
    throw Error(Errc::DimensionMismatch, "listener id table does not match listener_count");
  }
  Rng rng(seed);
  PredictorHead<Scalar> head{shape, HeadParams<Scalar>::zeros(shape), std::move(listener_ids)};
  auto fill = [&](auto& m, double bound) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<Scalar>(uniform(rng, -bound, bound));
  };
  const double H = static_cast<double>(shape.hidden_dim);
  fill(head.params.listener_table, 0.1);
  fill(head.params.hidden_w, std::sqrt(6.0 / static_cast<double>(shape.hidden_input())));
  fill(head.params.mean_w, std::sqrt(6.0 / (H + 1.0)));
  fill(head.params.logvar_w, std::sqrt(6.0 / (H + 1.0)));
  fill(head.params.stoi_w, std::sqrt(6.0 / (H + 1.0)));
  fill(head.params.snr_w, std::sqrt(6.0 / (H + 1.0)));
  fill(head.params.noise_w, std::sqrt(6.0 / (H + static_cast<double>(shape.noise_classes))));
  head.params.mean_b(0, 0) = Scalar(3);
  return head;
}

/// Element-wise max over frames plus element-wise mean over frames.
inline Eigen::VectorXd pool(const EmbeddingSequence& emb) {
  if (emb.frames == 0 || emb.dim == 0) throw Error(Errc::EmptySequence, "cannot pool an empty sequence");
  if (emb.data.size() != emb.frames * emb.dim) throw Error(Errc::DimensionMismatch, "embedding size is not T*D");
  const auto D = static_cast<Eigen::Index>(emb.dim);
  Eigen::VectorXd mx = Eigen::VectorXd::Constant(D, -std::numeric_limits<double>::infinity());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(D);
  for (std::size_t t = 0; t < emb.frames; ++t) {
    const auto f = emb.frame(t);
    for (Eigen::Index d = 0; d < D; ++d) {
      const double v = f[static_cast<std::size_t>(d)];
      mx[d] = std::max(mx[d], v);
      sum[d] += v;
    }
  }
  return mx + sum / static_cast<double>(emb.frames);
}

struct HeadOutputs {
  double mos_mean = 0.0;
  double mos_logvar = 0.0;
  double stoi = 0.0;
  double snr = 0.0;
  Eigen::VectorXd noise_logits;
  Eigen::VectorXd hidden;  // post-ReLU activation, the PLDA feature
};

/// Intermediate values kept for backpropagation.
struct ForwardTrace {
  Eigen::VectorXd input;  // pooled vector, concatenated with the listener embedding
  Eigen::VectorXd pre_activation;
  std::optional<std::size_t> listener_row;
  HeadOutputs out;
};

/// Output-side gradient of a scalar loss with respect to each head output.
struct OutputGrad {
  double mos_mean = 0.0;
  double mos_logvar = 0.0;
  double stoi = 0.0;
  double snr = 0.0;
  Eigen::VectorXd noise_logits;  // empty means zero
};

/// Table row for an optional listener id; absent or unknown ids map to UNK.
template <typename Scalar>
std::optional<std::size_t> listener_row(const PredictorHead<Scalar>& head, const std::optional<std::string>& id) {
  if (!head.shape.has_listeners()) {
    if (id) throw Error(Errc::DimensionMismatch, "listener id given but the head has no listener table");
    return std::nullopt;
  }
  if (id) {
    for (std::size_t i = 0; i < head.listener_ids.size(); ++i) {
      if (head.listener_ids[i] == *id) return i + 1;
    }
  }
  return 0;
}

template <typename Scalar>
ForwardTrace forward_trace(const PredictorHead<Scalar>& head, const Eigen::VectorXd& pooled,
                           std::optional<std::size_t> row) {
  const auto& s = head.shape;
  const auto& p = head.params;
  if (static_cast<std::size_t>(pooled.size()) != s.input_dim) {
    throw Error(Errc::DimensionMismatch, "pooled vector has dimension " + std::to_string(pooled.size()) +
                                             ", head expects " + std::to_string(s.input_dim));
  }
  ForwardTrace tr;
  tr.listener_row = row;
  if (s.has_listeners()) {
    const std::size_t r = row.value_or(0);
    if (r >= static_cast<std::size_t>(p.listener_table.rows())) {
      throw Error(Errc::DimensionMismatch, "listener row out of range");
    }
    tr.listener_row = r;
    tr.input.resize(static_cast<Eigen::Index>(s.hidden_input()));
    tr.input.head(pooled.size()) = pooled;
    tr.input.tail(static_cast<Eigen::Index>(s.listener_dim)) =
        p.listener_table.row(static_cast<Eigen::Index>(r)).transpose().template cast<double>();
  } else {
    tr.input = pooled;
  }
  tr.pre_activation = p.hidden_w.template cast<double>() * tr.input + p.hidden_b.col(0).template cast<double>();
  tr.out.hidden = tr.pre_activation.cwiseMax(0.0);
  const auto& h = tr.out.hidden;
  auto project = [&](const auto& w, const auto& b) { return w.template cast<double>().row(0).dot(h) + double(b(0, 0)); };
  tr.out.mos_mean = project(p.mean_w, p.mean_b);
  tr.out.mos_logvar = project(p.logvar_w, p.logvar_b);
  tr.out.stoi = project(p.stoi_w, p.stoi_b);
  tr.out.snr = project(p.snr_w, p.snr_b);
  tr.out.noise_logits = p.noise_w.template cast<double>() * h + p.noise_b.col(0).template cast<double>();
  return tr;
}

template <typename Scalar>
HeadOutputs forward(const PredictorHead<Scalar>& head, const Eigen::VectorXd& pooled,
                    const std::optional<std::string>& listener = std::nullopt) {
  return forward_trace(head, pooled, listener_row(head, listener)).out;
}

/// Accumulates d(loss)/d(params) for one forward pass into `grad`.
template <typename Scalar>
void backward(const PredictorHead<Scalar>& head, const ForwardTrace& tr, const OutputGrad& g,
              HeadParams<double>& grad) {
  const auto& p = head.params;
  const auto& h = tr.out.hidden;
  Eigen::VectorXd dh = Eigen::VectorXd::Zero(h.size());
  auto project_back = [&](double d, const auto& w, Eigen::MatrixXd& gw, Eigen::MatrixXd& gb) {
    if (d == 0.0) return;
    gw.row(0) += d * h.transpose();
    gb(0, 0) += d;
    dh += d * w.row(0).transpose().template cast<double>();
  };
  project_back(g.mos_mean, p.mean_w, grad.mean_w, grad.mean_b);
  project_back(g.mos_logvar, p.logvar_w, grad.logvar_w, grad.logvar_b);
  project_back(g.stoi, p.stoi_w, grad.stoi_w, grad.stoi_b);
  project_back(g.snr, p.snr_w, grad.snr_w, grad.snr_b);
  if (g.noise_logits.size() > 0) {
    grad.noise_w += g.noise_logits * h.transpose();
    grad.noise_b.col(0) += g.noise_logits;
    dh += p.noise_w.template cast<double>().transpose() * g.noise_logits;
  }
  const Eigen::VectorXd dpre =
      dh.cwiseProduct((tr.pre_activation.array() > 0.0).cast<double>().matrix());
  grad.hidden_w += dpre * tr.input.transpose();
  grad.hidden_b.col(0) += dpre;
  if (head.shape.has_listeners()) {
    const auto E = static_cast<Eigen::Index>(head.shape.listener_dim);
    const Eigen::VectorXd dinput = p.hidden_w.template cast<double>().rightCols(E).transpose() * dpre;
    grad.listener_table.row(static_cast<Eigen::Index>(*tr.listener_row)) += dinput.transpose();
  }
}

// ---------------------------------------------------------------------------
// Checkpoint: "MNCK", u32 version (1), u32 D, H, C, E, L, then every tensor of
// HeadParams in iteration order as little-endian f32 column-major, then u32
// listener count followed by length-prefixed listener ids.

inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const PredictorHead<Scalar>& head) {
  auto out = io::open_out(path, true);
  out.write("MNCK", 4);
  io::write_le<std::uint32_t>(out, kCheckpointVersion);
  const auto& s = head.shape;
  for (const auto v : {s.input_dim, s.hidden_dim, s.noise_classes, s.listener_dim, s.listener_count}) {
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(v));
  }
  head.params.for_each([&](std::string_view, const auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) io::write_le<float>(out, static_cast<float>(m.data()[i]));
  });
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(head.listener_ids.size()));
  for (const auto& id : head.listener_ids) io::write_string(out, id);
  if (!out) throw Error(Errc::MissingFile, "failed writing " + path.string());
}

inline PredictorHead<float> load_checkpoint(const std::filesystem::path& path) {
  auto in = io::open_in(path, true);
  const auto name = path.string();
  io::expect_magic(in, "MNCK", name);
  const auto version = io::read_le<std::uint32_t>(in, name);
  if (version != kCheckpointVersion) {
    throw Error(Errc::VersionMismatch, name + ": checkpoint version " + std::to_string(version) + ", expected " +
                                           std::to_string(kCheckpointVersion));
  }
  HeadShape s;
  s.input_dim = io::read_le<std::uint32_t>(in, name);
  s.hidden_dim = io::read_le<std::uint32_t>(in, name);
  s.noise_classes = io::read_le<std::uint32_t>(in, name);
  s.listener_dim = io::read_le<std::uint32_t>(in, name);
  s.listener_count = io::read_le<std::uint32_t>(in, name);
  PredictorHead<float> head{s, HeadParams<float>::zeros(s), {}};
  head.params.for_each([&](std::string_view tensor, auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = io::read_le<float>(in, name + " " + std::string(tensor));
  });
  if (!head.params.all_finite()) throw Error(Errc::NonFiniteValue, name + ": non-finite parameter");
  const auto n = io::read_le<std::uint32_t>(in, name);
  for (std::uint32_t i = 0; i < n; ++i) head.listener_ids.push_back(io::read_string(in, name));
  if (head.listener_ids.size() != (s.has_listeners() ? s.listener_count : 0)) {
    throw Error(Errc::DimensionMismatch, name + ": listener id table does not match header");
  }
  return head;
}

}  // namespace moosenet
