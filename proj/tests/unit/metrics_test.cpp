// tests/unit/metrics_test.cpp

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

#include "moosenet/metrics.hpp"
#include "support/errors.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

namespace moosenet {
namespace {

using testing::code_of;
using V = std::vector<double>;
using testing::naive_pcc;
using testing::naive_ranks;
using testing::naive_tau_b;

TEST(Mse, Values) {
  EXPECT_EQ(mse(V{1, 2}, V{1, 2}), 0.0);
  EXPECT_EQ(mse(V{3, 4}, V{3, 5}), 0.5);
  EXPECT_EQ(mse(V{1}, V{5}), 16.0);
  EXPECT_EQ(code_of([] { mse(V{1, 2}, V{1}); }), Errc::LengthMismatch);
}

TEST(Correlations, WorkedExamples) {
  EXPECT_NEAR(srcc(V{1, 2, 3}, V{10, 20, 30}), 1.0, 1e-12);
  EXPECT_NEAR(srcc(V{1, 2, 3}, V{3, 2, 1}), -1.0, 1e-12);
  EXPECT_NEAR(srcc(V{1, 2, 2, 3}, V{1, 2, 3, 3}), 0.8333, 1e-4);
  EXPECT_NEAR(pcc(V{1, 2, 3, 7}, V{3, 5, 7, 15}), 1.0, 1e-12);
  EXPECT_NEAR(ktau(V{1, 2, 3}, V{1, 3, 2}), 1.0 / 3.0, 1e-4);
  EXPECT_NEAR(ktau(V{1, 1, 2}, V{1, 2, 3}), 2.0 / std::sqrt(6.0), 1e-4);
  EXPECT_NEAR(ktau(V{1, 1, 2}, V{1, 2, 3}), 0.8165, 1e-4);
  EXPECT_EQ(code_of([] { pcc(V{2, 2, 2}, V{1, 2, 3}); }), Errc::DegenerateInput);
}

TEST(Correlations, AgreeWithNaiveOracleOnTiedInputs) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + uniform_index(rng, 60);
    V x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(uniform_index(rng, 6));  // heavy ties
      y[i] = uniform01(rng) < 0.5 ? static_cast<double>(uniform_index(rng, 4)) : x[i] + standard_normal(rng);
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) x[0] += 1.0;
    if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) y[0] += 1.0;
    EXPECT_NEAR(pcc(x, y), naive_pcc(x, y), 1e-10);
    EXPECT_NEAR(srcc(x, y), naive_pcc(naive_ranks(x), naive_ranks(y)), 1e-10);
    EXPECT_NEAR(ktau(x, y), naive_tau_b(x, y), 1e-10);
    EXPECT_EQ(average_ranks(x), naive_ranks(x));
  }
}

std::vector<UtteranceRecord> labelled(const std::vector<std::tuple<std::string, std::string, double>>& rows) {
  std::vector<UtteranceRecord> out;
  for (const auto& [u, s, m] : rows) {
    UtteranceRecord r;
    r.utt_id = u;
    r.system_id = s;
    r.mos = m;
    out.push_back(r);
  }
  return out;
}

PredictionSet preds_of(const std::vector<std::pair<std::string, double>>& rows) {
  PredictionSet p;
  for (const auto& [u, m] : rows) p.items[u] = {m, std::nullopt};
  return p;
}

TEST(SystemAggregate, MeansPerSystem) {
  const auto recs = labelled({{"a", "s1", 3.0}, {"b", "s1", 4.0}, {"c", "s2", 2.0}});
  const auto s = system_aggregate(preds_of({{"a", 3.0}, {"b", 5.0}, {"c", 1.0}}), recs);
  EXPECT_EQ(s.keys, (std::vector<std::string>{"s1", "s2"}));
  EXPECT_EQ(s.predicted, (V{4.0, 1.0}));
  EXPECT_EQ(s.truth, (V{3.5, 2.0}));
  EXPECT_EQ(code_of([&] { system_aggregate(preds_of({{"zz", 3.0}}), recs); }), Errc::MissingRecord);
}

TEST(Evaluate, PerfectAndSwapped) {
  const auto recs = labelled({{"a", "s1", 3.0}, {"b", "s1", 4.0}, {"c", "s2", 2.0}, {"d", "s2", 1.5}});
  const auto perfect = preds_of({{"a", 3.0}, {"b", 4.0}, {"c", 2.0}, {"d", 1.5}});
  for (const auto level : {Level::utterance, Level::system}) {
    const auto r = evaluate(perfect, recs, level);
    EXPECT_EQ(r.mse, 0.0);
    EXPECT_NEAR(r.srcc, 1.0, 1e-12);
    EXPECT_NEAR(r.pcc, 1.0, 1e-12);
    EXPECT_NEAR(r.ktau, 1.0, 1e-12);
  }
  const auto swapped = preds_of({{"a", 1.0}, {"b", 1.0}, {"c", 4.0}, {"d", 4.0}});
  EXPECT_NEAR(evaluate(swapped, recs, Level::system).srcc, -1.0, 1e-12);
}

TEST(Ensemble, Basics) {
  const auto a = preds_of({{"u", 2.0}, {"v", 3.0}});
  const auto b = preds_of({{"u", 4.0}, {"v", 3.0}});
  const std::vector<PredictionSet> two{a, b};
  EXPECT_EQ(ensemble(two).items.at("u").mos, 3.0);
  const std::vector<PredictionSet> same{a, a, a};
  EXPECT_EQ(ensemble(same).items, a.items);
  const auto c = preds_of({{"u", 2.0}});
  const std::vector<PredictionSet> bad{a, c};
  EXPECT_EQ(code_of([&] { ensemble(bad); }), Errc::KeyMismatch);
}

TEST(Ensemble, MixtureVariance) {
  PredictionSet a, b;
  a.items["u"] = {2.0, 0.5};
  b.items["u"] = {4.0, 0.1};
  const std::vector<PredictionSet> s{a, b};
  EXPECT_NEAR(*ensemble(s).items.at("u").variance, 0.3 + 1.0, 1e-15);
}

TEST(Ensemble, JensenOnRandomFixtures) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + uniform_index(rng, 50), k = 2 + uniform_index(rng, 9);
    std::vector<UtteranceRecord> recs;
    for (std::size_t i = 0; i < n; ++i) {
      UtteranceRecord r;
      r.utt_id = "u" + std::to_string(i);
      r.system_id = "s" + std::to_string(i % 4);
      r.mos = uniform(rng, 1.0, 5.0);
      recs.push_back(r);
    }
    std::vector<PredictionSet> members(k);
    double member_mse = 0.0;
    for (auto& m : members) {
      const double bias = 0.3 * standard_normal(rng);
      for (const auto& r : recs) m.items[r.utt_id] = {*r.mos + bias + 0.5 * standard_normal(rng), std::nullopt};
      member_mse += evaluate(m, recs, Level::utterance).mse / static_cast<double>(k);
    }
    EXPECT_LE(evaluate(ensemble(members), recs, Level::utterance).mse, member_mse + 1e-12);
  }
}

TEST(Ensemble, LeaveOneOut) {
  const auto a = preds_of({{"u", 2.0}});
  const auto b = preds_of({{"u", 4.0}});
  const std::vector<PredictionSet> two{a, b};
  const auto loo = leave_one_out_ensembles(two);
  ASSERT_EQ(loo.size(), 2u);
  EXPECT_EQ(loo[0].items, b.items);
  EXPECT_EQ(loo[1].items, a.items);
  const std::vector<PredictionSet> ten(10, a);
  V m;
  for (const auto& e : leave_one_out_ensembles(ten)) m.push_back(e.items.at("u").mos);
  EXPECT_EQ(mean_std(m).std, 0.0);
  const std::vector<PredictionSet> one{a};
  EXPECT_EQ(code_of([&] { leave_one_out_ensembles(one); }), Errc::TooFewMembers);
}

TEST(MeanStd, Population) {
  const auto ms = mean_std(V{1, 2, 3, 4});
  EXPECT_EQ(ms.mean, 2.5);
  EXPECT_NEAR(ms.std, std::sqrt(1.25), 1e-15);
}

std::vector<UtteranceRecord> rated(Rng& rng, std::size_t n, double noise, bool agree) {
  std::vector<UtteranceRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    UtteranceRecord r;
    r.utt_id = "u" + std::to_string(i);
    r.system_id = "s" + std::to_string(i % 5);
    const double q = uniform(rng, 1.5, 4.5);
    for (int l = 0; l < 8; ++l) {
      const double v = agree ? std::round(q) : q + noise * standard_normal(rng);
      r.listener_ratings.push_back({"L" + std::to_string(l), static_cast<int>(std::clamp(std::round(v), 1.0, 5.0))});
    }
    out.push_back(r);
  }
  return out;
}

TEST(Annotators, AgreeingListenersGiveZeroError) {
  Rng rng(3);
  const auto recs = rated(rng, 40, 0.0, true);
  for (std::size_t k = 1; k <= 4; ++k) {
    const auto a = annotator_subsample_analysis(recs, k, 5, 1);
    for (const double v : a.mse_utterance) EXPECT_EQ(v, 0.0);
  }
}

TEST(Annotators, LargerGroupsErrLess) {
  Rng rng(4);
  const auto recs = rated(rng, 200, 1.0, false);
  const auto k1 = annotator_subsample_analysis(recs, 1, 50, 9);
  const auto k4 = annotator_subsample_analysis(recs, 4, 50, 9);
  EXPECT_LT(mean_std(k4.mse_utterance).mean, mean_std(k1.mse_utterance).mean);
  EXPECT_GT(mean_std(k4.srcc_utterance).mean, mean_std(k1.srcc_utterance).mean);
  const auto again = annotator_subsample_analysis(recs, 1, 50, 9);
  EXPECT_EQ(again.mse_utterance, k1.mse_utterance);
  EXPECT_EQ(again.srcc_system, k1.srcc_system);
}

TEST(Annotators, Errors) {
  Rng rng(5);
  auto recs = rated(rng, 4, 1.0, false);
  EXPECT_EQ(code_of([&] { annotator_subsample_analysis(recs, 5, 1, 0); }), Errc::InvalidConfig);
  recs[2].listener_ratings.pop_back();
  EXPECT_EQ(code_of([&] { annotator_subsample_analysis(recs, 2, 1, 0); }), Errc::NotEnoughRatings);
}

TEST(PredictionsFile, RoundTrip) {
  testing::TempDir dir("preds");
  PredictionSet p;
  p.items["a"] = {3.141592653589793, 0.25};
  p.items["b"] = {1.0 / 3.0, std::nullopt};
  save_predictions(dir / "p.csv", p, {{"a", "sysA"}});
  const auto back = load_predictions(dir / "p.csv");
  EXPECT_EQ(back.items, p.items);
  EXPECT_EQ(back.model_id, "p");
}

}  // namespace
}  // namespace moosenet
