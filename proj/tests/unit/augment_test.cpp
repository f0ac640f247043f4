// tests/unit/augment_test.cpp

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

#include "moosenet/augment.hpp"
#include "support/errors.hpp"
#include "support/synthetic.hpp"

namespace moosenet {
namespace {

using testing::code_of;

AudioClip clip_of(std::vector<float> s) {
  AudioClip c;
  c.samples = std::move(s);
  return c;
}

AudioClip random_clip(Rng& rng, std::size_t n, double amp) {
  AudioClip c;
  c.samples.resize(n);
  for (auto& s : c.samples) s = static_cast<float>(amp * uniform(rng, -1.0, 1.0));
  return c;
}

TEST(Volume, ScalesWhenFired) {
  Rng rng(1);
  const auto r = apply_volume(clip_of({0.2f, -0.4f}), 2.0, 1.0, rng);
  EXPECT_EQ(r.clip.samples, (std::vector<float>{0.4f, -0.8f}));
  EXPECT_EQ(r.factor, 2.0);
}

TEST(Volume, ClampsAtFullScale) {
  Rng rng(1);
  EXPECT_EQ(apply_volume(clip_of({0.8f}), 2.0, 1.0, rng).clip.samples, (std::vector<float>{1.0f}));
}

TEST(Volume, ProbabilityZeroIsIdentity) {
  Rng rng(3);
  const auto c = random_clip(rng, 500, 0.9);
  for (int i = 0; i < 20; ++i) {
    const auto r = apply_volume(c, std::nullopt, 0.0, rng);
    EXPECT_EQ(r.clip, c);
    EXPECT_EQ(r.factor, 1.0);
  }
}

TEST(Volume, DrawnFactorsStayInRange) {
  Rng rng(4);
  const auto c = clip_of({0.01f});
  std::size_t fired = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto r = apply_volume(c, std::nullopt, 0.8, rng);
    if (r.factor != 1.0) {
      ++fired;
      EXPECT_GE(r.factor, 0.5);
      EXPECT_LT(r.factor, 2.0);
    }
  }
  EXPECT_NEAR(static_cast<double>(fired) / 2000.0, 0.8, 0.04);
}

TEST(Tempo, GridHas181Values) {
  const auto g = tempo_grid();
  ASSERT_EQ(g.size(), 181u);
  EXPECT_EQ(g.front(), 0.9);
  EXPECT_EQ(g.back(), 1.08);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] - g[i - 1], 0.001, 1e-12);
}

TEST(Tempo, OutputLength) {
  Rng rng(5);
  const auto c = random_clip(rng, 1000, 0.5);
  EXPECT_EQ(apply_tempo(c, 1.08).samples.size(), 926u);
  EXPECT_EQ(apply_tempo(c, 0.9).samples.size(), 1111u);
  EXPECT_EQ(apply_tempo(c, 1.0), c);
  EXPECT_EQ(code_of([] { apply_tempo(AudioClip{}, 1.05); }), Errc::EmptyClip);
}

TEST(Tempo, InterpolatesLinearSignalsExactly) {
  AudioClip ramp;
  for (int k = 0; k < 200; ++k) ramp.samples.push_back(static_cast<float>(k) / 256.0f);
  const auto out = apply_tempo(ramp, 0.95);
  for (std::size_t k = 0; k < out.samples.size(); ++k) {
    const double pos = std::min(static_cast<double>(k) * 0.95, 199.0);
    EXPECT_NEAR(out.samples[k], pos / 256.0, 1e-6) << k;
  }
}

TEST(Noise, GainFormula) {
  EXPECT_NEAR(noise_gain(1.0, 1.0, 10.0), std::pow(10.0, -0.5), 1e-15);
  EXPECT_NEAR(noise_gain(1.0, 1.0, 10.0), 0.31623, 1e-5);
  EXPECT_EQ(noise_gain(1.0, 1.0, 0.0), 1.0);
}

TEST(Noise, SilentInputs) {
  Rng rng(6);
  NoiseEntry n{"n", 0, random_clip(rng, 100, 0.5)};
  EXPECT_EQ(code_of([&] { mix_noise(clip_of(std::vector<float>(50, 0.f)), n, 10.0, rng); }), Errc::SilentClean);
  NoiseEntry silent{"z", 0, clip_of(std::vector<float>(100, 0.f))};
  EXPECT_EQ(code_of([&] { mix_noise(random_clip(rng, 50, 0.5), silent, 10.0, rng); }), Errc::SilentNoise);
}

TEST(Noise, RealizedSnrMatchesRequest) {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const auto clean = random_clip(rng, 400 + uniform_index(rng, 800), uniform(rng, 0.05, 0.9));
    NoiseEntry n{"n", 0, random_clip(rng, 200 + uniform_index(rng, 2000), uniform(rng, 0.01, 1.0))};
    const double snr = uniform(rng, 10.0, 20.0);
    const auto pair = mix_noise(clean, n, snr, rng);
    EXPECT_NEAR(realized_snr_db(pair.clean, pair.scaled_noise), snr, 0.01);
  }
}

TEST(Noise, LoopsShortNoise) {
  Rng rng(8);
  const auto clean = random_clip(rng, 1000, 0.5);
  NoiseEntry n{"n", 1, clip_of({0.5f, -0.5f, 0.25f})};
  const auto pair = mix_noise(clean, n, 15.0, rng);
  ASSERT_EQ(pair.noisy.samples.size(), 1000u);
  EXPECT_EQ(pair.noise_class, 1u);
  for (std::size_t k = 3; k < 1000; ++k) EXPECT_EQ(pair.scaled_noise.samples[k], pair.scaled_noise.samples[k - 3]);
}

TEST(TrainingPair, IdentityCasesCompose) {
  Rng rng(9);
  const auto clean = random_clip(rng, 300, 0.5);
  auto noise = random_clip(rng, 300, 0.5);
  const double p = std::sqrt(mean_power(clean.samples) / mean_power(noise.samples));
  for (auto& s : noise.samples) s = static_cast<float>(s * p);
  NoiseTable table{{"babble"}, {{"n", 0, noise}}};
  AugmentConfig cfg;
  cfg.volume_prob = 0.0;
  cfg.forced_tempo = 1.0;
  cfg.forced_snr = 0.0;
  const auto pair = make_training_pair(clean, table, cfg, rng);
  EXPECT_EQ(pair.clean, clean);
  EXPECT_EQ(pair.volume_factor, 1.0);
  for (std::size_t k = 0; k < clean.samples.size(); ++k) {
    const double expect = std::clamp(static_cast<double>(clean.samples[k]) + noise.samples[k], -1.0, 1.0);
    EXPECT_NEAR(pair.noisy.samples[k], expect, 1e-6);
  }
}

TEST(TrainingPair, DeterministicInSeed) {
  Rng src(10);
  const auto clean = random_clip(src, 2000, 0.3);
  NoiseTable table{{"a", "b"}, {{"n0", 0, random_clip(src, 5000, 0.2)}, {"n1", 1, random_clip(src, 700, 0.4)}}};
  AugmentConfig cfg;
  Rng r1(99), r2(99);
  const auto a = make_training_pair(clean, table, cfg, r1);
  const auto b = make_training_pair(clean, table, cfg, r2);
  EXPECT_EQ(a.noisy, b.noisy);
  EXPECT_EQ(a.clean, b.clean);
  EXPECT_EQ(a.snr_db, b.snr_db);
  EXPECT_EQ(a.tempo_factor, b.tempo_factor);
  EXPECT_GE(a.snr_db, 10.0);
  EXPECT_LT(a.snr_db, 20.0);
}

TEST(TrainingPair, TempoDrawsComeFromTheGrid) {
  Rng rng(11);
  const auto clean = random_clip(rng, 400, 0.3);
  NoiseTable table{{"a"}, {{"n0", 0, random_clip(rng, 500, 0.2)}}};
  AugmentConfig cfg;
  const auto grid = tempo_grid();
  for (int i = 0; i < 50; ++i) {
    const auto pair = make_training_pair(clean, table, cfg, rng);
    EXPECT_NE(std::find(grid.begin(), grid.end(), pair.tempo_factor), grid.end());
    EXPECT_EQ(pair.clean.samples.size(),
              static_cast<std::size_t>(std::llround(400.0 / pair.tempo_factor)));
  }
}

TEST(NoiseTable, ClassIndicesByFirstAppearance) {
  testing::TempDir dir("noise");
  AudioClip c = clip_of({0.25f, -0.25f});
  save_audio(dir / "a.wav", c);
  save_audio(dir / "b.wav", c);
  save_audio(dir / "c.wav", c);
  testing::write_text(dir / "t.csv", std::string(kNoiseTableHeader) + "\nn1,music,a.wav\nn2,babble,b.wav\nn3,music,c.wav\n");
  const auto t = load_noise_table(dir / "t.csv");
  EXPECT_EQ(t.class_names, (std::vector<std::string>{"music", "babble"}));
  ASSERT_EQ(t.entries.size(), 3u);
  EXPECT_EQ(t.entries[1].noise_class, 1u);
  EXPECT_EQ(t.entries[2].noise_class, 0u);
}

}  // namespace
}  // namespace moosenet
