// tests/unit/plda_test.cpp

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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "moosenet/plda.hpp"
#include "moosenet/random.hpp"
#include "support/errors.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

namespace moosenet {
namespace {

using testing::code_of;
using testing::oracle_posterior;
using testing::random_model;

TEST(PldaOracle, PosteriorMatchesBruteForce) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = random_model(rng, 2, 3);
    for (int q = 0; q < 10; ++q) {
      const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(2, [&] { return 2.0 * standard_normal(rng); });
      const auto p = m.posterior(x);
      const auto o = oracle_posterior(m, x);
      double mos = 0.0;
      for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(p[static_cast<Eigen::Index>(i)], o[i], 1e-8);
        mos += o[i] * m.spec().centers[i];
      }
      EXPECT_NEAR(m.predict_mos(x), mos, 1e-8);
    }
  }
}

std::vector<Eigen::VectorXd> two_class_data(Rng& rng, std::size_t per_class, std::vector<std::size_t>& labels) {
  std::vector<Eigen::VectorXd> x;
  labels.clear();
  for (std::size_t k = 0; k < 2 * per_class; ++k) {
    const std::size_t c = k % 2;
    x.push_back(Eigen::VectorXd::Constant(1, (c == 0 ? -1.0 : 1.0) + 0.5 * standard_normal(rng)));
    labels.push_back(c);
  }
  return x;
}

const BinSpec kTwoBins = make_bin_spec({1.0, 3.0, 5.0}, {1000, 1000}, 5);

TEST(PldaFit, RecoversOneDimensionalModel) {
  Rng rng(2);
  std::vector<std::size_t> labels;
  const auto x = two_class_data(rng, 1000, labels);
  const auto m = fit_plda(x, labels, kTwoBins);
  EXPECT_NEAR(m.within()(0, 0), 0.25, 0.05);
  // Spread of the two class means (+-1) around their centre, divided by N - 1 = 1.
  EXPECT_NEAR(m.between()(0, 0), 2.0, 0.3);
  EXPECT_GT(m.posterior(Eigen::VectorXd::Constant(1, -1.0))[0], 0.99);
}

TEST(PldaFit, HeldOutAccuracy) {
  Rng rng(3);
  std::vector<std::size_t> labels, test_labels;
  const auto x = two_class_data(rng, 1000, labels);
  const auto m = fit_plda(x, labels, kTwoBins);
  const auto test = two_class_data(rng, 1000, test_labels);
  std::size_t correct = 0;
  for (std::size_t k = 0; k < test.size(); ++k) {
    const auto p = m.posterior(test[k]);
    correct += (p[1] > p[0] ? 1u : 0u) == test_labels[k];
  }
  EXPECT_GE(static_cast<double>(correct) / test.size(), 0.95);
}

TEST(PldaFit, SymmetricMidpoint) {
  std::vector<Eigen::VectorXd> x;
  std::vector<std::size_t> labels;
  for (const double v : {-1.2, -1.0, -0.8, -1.1, -0.9}) {
    x.push_back(Eigen::VectorXd::Constant(1, v));
    labels.push_back(0);
    x.push_back(Eigen::VectorXd::Constant(1, -v));
    labels.push_back(1);
  }
  const auto m = fit_plda(x, labels, make_bin_spec({1.0, 3.0, 5.0}, {5, 5}, 5));
  const auto p = m.posterior(Eigen::VectorXd::Zero(1));
  EXPECT_NEAR(p[0], 0.5, 1e-9);
  EXPECT_NEAR(m.predict_mos(Eigen::VectorXd::Zero(1)), 3.0, 1e-9);
}

TEST(PldaFit, ZeroScatterUsesFloor) {
  std::vector<Eigen::VectorXd> x;
  std::vector<std::size_t> labels;
  for (int k = 0; k < 10; ++k) {
    x.push_back(k % 2 ? Eigen::Vector2d(1.0, 2.0) : Eigen::Vector2d(-1.0, 0.0));
    labels.push_back(static_cast<std::size_t>(k % 2));
  }
  const auto m = fit_plda(x, labels, make_bin_spec({1.0, 3.0, 5.0}, {5, 5}, 5));
  const double total_var = (1.0 + 1.0) / 2.0;  // trace of the total scatter / (n F)
  EXPECT_NEAR(m.within()(0, 0), 1e-6 * total_var, 1e-18);
  EXPECT_NEAR(m.within()(1, 1), 1e-6 * total_var, 1e-18);
  EXPECT_EQ(m.within()(0, 1), 0.0);
  EXPECT_GT(m.posterior(Eigen::Vector2d(0.9, 1.9))[1], 0.999);
}

TEST(PldaFit, AffineInvariance) {
  Rng rng(4);
  const std::size_t N = 4;
  std::vector<Eigen::VectorXd> x, y;
  std::vector<std::size_t> labels;
  Eigen::Matrix3d A;
  A << 2.0, 0.3, -0.1, 0.5, 1.0, 0.4, 0.0, -0.7, 1.5;
  const Eigen::Vector3d b(3.0, -1.0, 0.5);
  for (std::size_t k = 0; k < 200; ++k) {
    const std::size_t c = k % N;
    Eigen::Vector3d v = Eigen::Vector3d::NullaryExpr([&] { return standard_normal(rng); });
    v[0] += static_cast<double>(c);
    v[1] -= 0.5 * static_cast<double>(c);
    x.push_back(v);
    y.push_back(A * v + b);
    labels.push_back(c);
  }
  const auto spec = make_bin_spec({1.0, 2.0, 3.0, 4.0, 5.0}, {50, 50, 50, 50}, 5);
  const auto mx = fit_plda(x, labels, spec);
  const auto my = fit_plda(y, labels, spec);
  for (int q = 0; q < 20; ++q) {
    const Eigen::Vector3d v = Eigen::Vector3d::NullaryExpr([&] { return 2.0 * standard_normal(rng); });
    const Eigen::VectorXd px = mx.posterior(v);
    const Eigen::VectorXd py = my.posterior(A * v + b);
    // exact up to the relative ridge on Phi_w
    EXPECT_LT((px - py).cwiseAbs().maxCoeff(), 1e-4);
  }
}

TEST(PldaFit, Errors) {
  std::vector<Eigen::VectorXd> x{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
  const auto spec = make_bin_spec({1.0, 3.0, 5.0}, {1, 1}, 1);
  EXPECT_EQ(code_of([&] { fit_plda(x, std::vector<std::size_t>{0, 0}, spec); }), Errc::MissingBin);
  EXPECT_EQ(code_of([&] { fit_plda(x, std::vector<std::size_t>{0}, spec); }), Errc::LengthMismatch);
  EXPECT_EQ(code_of([&] { fit_plda(x, std::vector<std::size_t>{0, 2}, spec); }), Errc::OutOfRange);
  EXPECT_EQ(code_of([&] { fit_plda(x, std::vector<std::size_t>{0, 1}, make_bin_spec({1, 3, 5}, {1, 1}, 5)); }),
            Errc::TooFewSamples);
  EXPECT_EQ(code_of([] { PldaModel{}.posterior(Eigen::VectorXd::Zero(1)); }), Errc::NotFitted);
}

TEST(PldaFile, RoundTripGivesIdenticalPredictions) {
  testing::TempDir dir("plda");
  Rng rng(5);
  const auto m = random_model(rng, 4, 6);
  save_plda(dir / "m.mnpl", m);
  const auto back = load_plda(dir / "m.mnpl");
  EXPECT_EQ(back.spec(), m.spec());
  for (int q = 0; q < 20; ++q) {
    const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(4, [&] { return standard_normal(rng); });
    EXPECT_EQ(back.predict_mos(x), m.predict_mos(x));
    EXPECT_EQ(back.posterior(x), m.posterior(x));
  }
  testing::write_text(dir / "bad.mnpl", "MNCK\x01\x00\x00\x00");
  EXPECT_EQ(code_of([&] { load_plda(dir / "bad.mnpl"); }), Errc::BadMagic);
}

}  // namespace
}  // namespace moosenet
