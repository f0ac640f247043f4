// moosenet/plda.hpp

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

// Two-covariance PLDA over fixed-size utterance features, one class per MOS
// bin. Class means are modeled as m + y with y ~ N(0, Phi_b) and samples as
// class mean + N(0, Phi_w). A query is scored against each bin with the
// posterior predictive of that bin's training samples:
//
//   S_i         = Phi_b + Phi_w / n_i
//   mu_i        = m + Phi_b S_i^-1 (xbar_i - m)
//   Sigma_post  = Phi_b S_i^-1 Phi_w / n_i      (= (Phi_b^-1 + n_i Phi_w^-1)^-1)
//   x | bin i   ~ N(mu_i, Sigma_post + Phi_w)
//
// The S_i form avoids inverting Phi_b, which may be singular after flooring.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "moosenet/binning.hpp"
#include "moosenet/error.hpp"
#include "moosenet/io.hpp"

namespace moosenet {

struct PldaBinStats {
  std::size_t count = 0;
  Eigen::VectorXd mean;
};

class PldaModel {
 public:
  PldaModel() = default;

  PldaModel(Eigen::VectorXd mean, Eigen::MatrixXd between, Eigen::MatrixXd within, std::vector<PldaBinStats> bins,
            BinSpec spec, Eigen::VectorXd prior)
      : mean_(std::move(mean)),
        between_(std::move(between)),
        within_(std::move(within)),
        bins_(std::move(bins)),
        spec_(std::move(spec)),
        prior_(std::move(prior)) {
    prepare();
  }

  bool fitted() const { return !bins_.empty(); }
  std::size_t feature_dim() const { return static_cast<std::size_t>(mean_.size()); }
  std::size_t num_bins() const { return bins_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& between() const { return between_; }
  const Eigen::MatrixXd& within() const { return within_; }
  const std::vector<PldaBinStats>& bins() const { return bins_; }
  const BinSpec& spec() const { return spec_; }
  const Eigen::VectorXd& prior() const { return prior_; }

  /// Log class-conditional likelihoods log N(x; mu_i, Sigma_i).
  Eigen::VectorXd log_likelihoods(const Eigen::VectorXd& x) const {
    require_fitted();
    if (static_cast<std::size_t>(x.size()) != feature_dim()) {
      throw Error(Errc::DimensionMismatch, "feature has dimension " + std::to_string(x.size()) + ", model expects " +
                                               std::to_string(feature_dim()));
    }
    const double F = static_cast<double>(feature_dim());
    Eigen::VectorXd ll(static_cast<Eigen::Index>(bins_.size()));
    for (std::size_t i = 0; i < bins_.size(); ++i) {
      const auto& s = scoring_[i];
      const Eigen::VectorXd z = s.chol.matrixL().solve(x - s.mu);
      ll[static_cast<Eigen::Index>(i)] =
          -0.5 * (F * std::log(2.0 * std::numbers::pi) + s.logdet + z.squaredNorm());
    }
    return ll;
  }

  /// P(bin | x) under the class prior, normalized in log space.
  Eigen::VectorXd posterior(const Eigen::VectorXd& x) const {
    Eigen::VectorXd lp = log_likelihoods(x) + prior_.array().log().matrix();
    const double mx = lp.maxCoeff();
    Eigen::VectorXd p = (lp.array() - mx).exp().matrix();
    return p / p.sum();
  }

  double predict_mos(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd p = posterior(x);
    return expected_mos(spec_, std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
  }

  /// Posterior variance of the bin center, a spread measure for the prediction.
  double predict_variance(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd p = posterior(x);
    const double mu = expected_mos(spec_, std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
    double var = 0.0;
    for (std::size_t i = 0; i < spec_.size(); ++i) {
      const double d = spec_.centers[i] - mu;
      var += p[static_cast<Eigen::Index>(i)] * d * d;
    }
    return var;
  }

 private:
  struct Scoring {
    Eigen::VectorXd mu;
    Eigen::LLT<Eigen::MatrixXd> chol;
    double logdet = 0.0;
  };

  void require_fitted() const {
    if (!fitted()) throw Error(Errc::NotFitted, "PLDA model has not been fitted");
  }

  void prepare() {
    if (bins_.empty()) return;
    if (bins_.size() != spec_.size() || static_cast<std::size_t>(prior_.size()) != bins_.size()) {
      throw Error(Errc::DimensionMismatch, "PLDA bin statistics, bin table and prior disagree in size");
    }
    scoring_.clear();
    for (const auto& b : bins_) {
      const double n = static_cast<double>(b.count);
      const Eigen::MatrixXd w_n = within_ / n;
      const Eigen::LDLT<Eigen::MatrixXd> s(between_ + w_n);
      Scoring sc;
      sc.mu = mean_ + between_ * s.solve(b.mean - mean_);
      Eigen::MatrixXd post = between_ * s.solve(w_n);
      post = 0.5 * (post + post.transpose());
      sc.chol.compute(post + within_);
      if (sc.chol.info() != Eigen::Success) {
        throw Error(Errc::SingularWithinClass, "predictive covariance is not positive definite");
      }
      sc.logdet = 2.0 * sc.chol.matrixLLT().diagonal().array().log().sum();
      scoring_.push_back(std::move(sc));
    }
  }

  Eigen::VectorXd mean_;
  Eigen::MatrixXd between_;
  Eigen::MatrixXd within_;
  std::vector<PldaBinStats> bins_;
  BinSpec spec_;
  Eigen::VectorXd prior_;
  std::vector<Scoring> scoring_;
};

/// Moment estimates from labelled features:
///   Phi_w = pooled within-bin scatter / (n - N), plus eps * I with
///           eps = 1e-6 * trace(Phi_w) / F
///   Phi_b = scatter of bin means around the grand mean / (N - 1) - Phi_w / nbar,
///           eigenvalues relative to Phi_w floored at 0
inline PldaModel fit_plda(std::span<const Eigen::VectorXd> features, std::span<const std::size_t> labels,
                          const BinSpec& spec) {
  if (features.size() != labels.size()) throw Error(Errc::LengthMismatch, "features and labels differ in length");
  if (features.empty()) throw Error(Errc::Empty, "no PLDA training features");
  const std::size_t N = spec.size();
  const auto F = features.front().size();
  const std::size_t n = features.size();
  if (static_cast<std::size_t>(F) > n) throw Error(Errc::TooFewSamples, "fewer samples than feature dimensions");

  std::vector<PldaBinStats> bins(N, PldaBinStats{0, Eigen::VectorXd::Zero(F)});
  Eigen::VectorXd grand = Eigen::VectorXd::Zero(F);
  for (std::size_t k = 0; k < n; ++k) {
    if (features[k].size() != F) throw Error(Errc::DimensionMismatch, "PLDA features differ in dimension");
    if (labels[k] >= N) throw Error(Errc::OutOfRange, "label " + std::to_string(labels[k]) + " outside bin range");
    bins[labels[k]].count += 1;
    bins[labels[k]].mean += features[k];
    grand += features[k];
  }
  grand /= static_cast<double>(n);
  for (std::size_t i = 0; i < N; ++i) {
    if (bins[i].count == 0) throw Error(Errc::MissingBin, "bin " + std::to_string(i) + " has no training features");
    if (bins[i].count < spec.min_count) {
      throw Error(Errc::TooFewSamples, "bin " + std::to_string(i) + " has " + std::to_string(bins[i].count) +
                                           " features, fewer than " + std::to_string(spec.min_count));
    }
    bins[i].mean /= static_cast<double>(bins[i].count);
  }

  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(F, F);
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(F, F);
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::VectorXd d = features[k] - bins[labels[k]].mean;
    within.noalias() += d * d.transpose();
    const Eigen::VectorXd t = features[k] - grand;
    total.noalias() += t * t.transpose();
  }
  within /= n > N ? static_cast<double>(n - N) : 1.0;
  double eps_scale = within.trace() / static_cast<double>(F);
  if (!(eps_scale > 0.0)) eps_scale = total.trace() / static_cast<double>(n * static_cast<std::size_t>(F));
  if (!(eps_scale > 0.0)) eps_scale = 1.0;
  within += 1e-6 * eps_scale * Eigen::MatrixXd::Identity(F, F);
  within = 0.5 * (within + within.transpose());
  if (Eigen::LLT<Eigen::MatrixXd>(within).info() != Eigen::Success) {
    throw Error(Errc::SingularWithinClass, "within-class covariance is not positive definite");
  }

  Eigen::MatrixXd between = Eigen::MatrixXd::Zero(F, F);
  if (N > 1) {
    for (const auto& b : bins) {
      const Eigen::VectorXd d = b.mean - grand;
      between.noalias() += d * d.transpose();
    }
    between /= static_cast<double>(N - 1);
    const double n_bar = static_cast<double>(n) / static_cast<double>(N);
    between -= within / n_bar;
    between = 0.5 * (between + between.transpose());
    // Floor in Phi_w-whitened coordinates so the fit commutes with affine maps.
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(between, within);
    const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
    const Eigen::MatrixXd wv = within * eig.eigenvectors();
    between = wv * lambda.asDiagonal() * wv.transpose();
    between = 0.5 * (between + between.transpose());
  }

  Eigen::VectorXd prior = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(N), 1.0 / static_cast<double>(N));
  return PldaModel(grand, between, within, std::move(bins), spec, prior);
}

// ---------------------------------------------------------------------------
// Model file: "MNPL", u32 version (1), u32 F, u32 N, u32 min_count, then f64
// grand mean (F), Phi_b (F*F), Phi_w (F*F), per bin u64 count and f64 mean (F),
// f64 prior (N), then the bin table as a length-prefixed CSV block.
// Matrices are column-major.

inline constexpr std::uint32_t kPldaVersion = 1;

inline void save_plda(const std::filesystem::path& path, const PldaModel& model) {
  if (!model.fitted()) throw Error(Errc::NotFitted, "refusing to save an unfitted PLDA model");
  auto out = io::open_out(path, true);
  out.write("MNPL", 4);
  io::write_le<std::uint32_t>(out, kPldaVersion);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.feature_dim()));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.num_bins()));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.spec().min_count));
  auto put = [&](const auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) io::write_le<double>(out, m.data()[i]);
  };
  put(model.mean());
  put(model.between());
  put(model.within());
  for (const auto& b : model.bins()) {
    io::write_le<std::uint64_t>(out, b.count);
    put(b.mean);
  }
  put(model.prior());
  io::write_string(out, bins_to_csv(model.spec()));
  if (!out) throw Error(Errc::MissingFile, "failed writing " + path.string());
}

inline PldaModel load_plda(const std::filesystem::path& path) {
  auto in = io::open_in(path, true);
  const auto name = path.string();
  io::expect_magic(in, "MNPL", name);
  const auto version = io::read_le<std::uint32_t>(in, name);
  if (version != kPldaVersion) {
    throw Error(Errc::VersionMismatch, name + ": PLDA model version " + std::to_string(version));
  }
  const auto F = static_cast<Eigen::Index>(io::read_le<std::uint32_t>(in, name));
  const auto N = static_cast<std::size_t>(io::read_le<std::uint32_t>(in, name));
  const auto min_count = io::read_le<std::uint32_t>(in, name);
  auto get = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = io::read_le<double>(in, name);
  };
  Eigen::VectorXd mean(F);
  Eigen::MatrixXd between(F, F), within(F, F);
  get(mean);
  get(between);
  get(within);
  std::vector<PldaBinStats> bins(N);
  for (auto& b : bins) {
    b.count = static_cast<std::size_t>(io::read_le<std::uint64_t>(in, name));
    b.mean.resize(F);
    get(b.mean);
  }
  Eigen::VectorXd prior(static_cast<Eigen::Index>(N));
  get(prior);
  auto spec = bins_from_csv(io::read_string(in, name), min_count);
  if (spec.size() != N) throw Error(Errc::DimensionMismatch, name + ": bin table size differs from header");
  return PldaModel(std::move(mean), std::move(between), std::move(within), std::move(bins), std::move(spec),
                   std::move(prior));
}

}  // namespace moosenet
