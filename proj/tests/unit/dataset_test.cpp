// tests/unit/dataset_test.cpp

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
#include <cstring>
#include <fstream>
#include <limits>

#include "moosenet/dataset.hpp"
#include "support/errors.hpp"
#include "support/synthetic.hpp"

namespace moosenet {
namespace {

using testing::code_of;
using testing::TempDir;
using testing::write_text;

// Hand-built WAV bytes, independent of save_audio.
void write_wav(const fs::path& path, const std::vector<std::int16_t>& samples, std::uint16_t channels = 1,
               std::uint16_t bits = 16, std::uint32_t rate = 16000) {
  auto u32 = [](std::ofstream& o, std::uint32_t v) { o.write(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [](std::ofstream& o, std::uint16_t v) { o.write(reinterpret_cast<const char*>(&v), 2); };
  std::ofstream o(path, std::ios::binary);
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  o.write("RIFF", 4);
  u32(o, 36 + data_bytes);
  o.write("WAVE", 4);
  o.write("fmt ", 4);
  u32(o, 16);
  u16(o, 1);
  u16(o, channels);
  u32(o, rate);
  u32(o, rate * channels * bits / 8);
  u16(o, static_cast<std::uint16_t>(channels * bits / 8));
  u16(o, bits);
  o.write("data", 4);
  u32(o, data_bytes);
  o.write(reinterpret_cast<const char*>(samples.data()), data_bytes);
}

void write_mneb(const fs::path& path, std::uint32_t t, std::uint32_t d, const std::vector<float>& payload,
                std::uint32_t version = 1) {
  std::ofstream o(path, std::ios::binary);
  o.write("MNEB", 4);
  o.write(reinterpret_cast<const char*>(&version), 4);
  o.write(reinterpret_cast<const char*>(&t), 4);
  o.write(reinterpret_cast<const char*>(&d), 4);
  o.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size() * 4));
}

TEST(Manifest, ParsesRow) {
  TempDir dir("manifest");
  write_text(dir / "emb/u1.mnE", "x");
  write_text(dir / "m.csv", std::string(kManifestHeader) + "\nu1,sysA,train,emb/u1.mnE,,3.5,2.1\n");
  const auto recs = load_manifest(dir / "m.csv");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].utt_id, "u1");
  EXPECT_EQ(recs[0].system_id, "sysA");
  EXPECT_EQ(recs[0].split, Split::train);
  EXPECT_EQ(*recs[0].mos, 3.5);
  EXPECT_EQ(recs[0].duration_s, 2.1);
  EXPECT_EQ(*recs[0].embedding_path, dir / "emb/u1.mnE");
  EXPECT_FALSE(recs[0].audio_path);
}

TEST(Manifest, RejectsDuplicateIds) {
  TempDir dir("manifest");
  write_text(dir / "m.csv", std::string(kManifestHeader) + "\nu1,s,train,,,3,1\nu1,s,dev,,,3,1\n");
  EXPECT_EQ(code_of([&] { load_manifest(dir / "m.csv"); }), Errc::DuplicateId);
}

TEST(Manifest, RejectsBadRows) {
  TempDir dir("manifest");
  const std::string h = std::string(kManifestHeader) + "\n";
  write_text(dir / "a.csv", h + "u1,s,valid,,,3,1\n");
  EXPECT_EQ(code_of([&] { load_manifest(dir / "a.csv"); }), Errc::MalformedRow);
  write_text(dir / "b.csv", h + "u1,s,train,,,5.5,1\n");
  EXPECT_EQ(code_of([&] { load_manifest(dir / "b.csv"); }), Errc::MalformedRow);
  write_text(dir / "c.csv", h + "u1,s,train,,,3,0\n");
  EXPECT_EQ(code_of([&] { load_manifest(dir / "c.csv"); }), Errc::MalformedRow);
  write_text(dir / "d.csv", h + "u1,s,train,missing.mneb,,3,1\n");
  EXPECT_EQ(code_of([&] { load_manifest(dir / "d.csv"); }), Errc::MissingFile);
  write_text(dir / "e.csv", "utt,system\nu1,s\n");
  EXPECT_EQ(code_of([&] { load_manifest(dir / "e.csv"); }), Errc::MalformedRow);
  write_text(dir / "f.csv", h + "u1,s,train,,,3\n");
  EXPECT_EQ(code_of([&] { load_manifest(dir / "f.csv"); }), Errc::MalformedRow);
  EXPECT_EQ(code_of([&] { load_manifest(dir / "nope.csv"); }), Errc::MissingFile);
}

TEST(Ratings, RatingOutOfRange) {
  TempDir dir("ratings");
  write_text(dir / "r.csv", std::string(kRatingsHeader) + "\nu1,L1,6\n");
  EXPECT_EQ(code_of([&] { load_ratings(dir / "r.csv"); }), Errc::RatingOutOfRange);
}

TEST(Ratings, AttachFillsAndChecksMos) {
  TempDir dir("ratings");
  write_text(dir / "m.csv", std::string(kManifestHeader) + "\nu1,s,train,,,,1\nu2,s,train,,,4,1\n");
  write_text(dir / "r.csv", std::string(kRatingsHeader) + "\nu1,a,2\nu1,b,5\nu2,a,4\nu2,b,4\n");
  auto recs = load_manifest(dir / "m.csv");
  attach_ratings(recs, load_ratings(dir / "r.csv"));
  EXPECT_DOUBLE_EQ(*recs[0].mos, 3.5);
  EXPECT_EQ(recs[0].listener_ratings.size(), 2u);
  EXPECT_EQ(recs[0].listener_ratings[1], (ListenerRating{"b", 5}));

  write_text(dir / "bad.csv", std::string(kRatingsHeader) + "\nu2,a,1\n");
  auto again = load_manifest(dir / "m.csv");
  EXPECT_EQ(code_of([&] { attach_ratings(again, load_ratings(dir / "bad.csv")); }), Errc::InconsistentRatings);
  write_text(dir / "unk.csv", std::string(kRatingsHeader) + "\nzz,a,1\n");
  EXPECT_EQ(code_of([&] { attach_ratings(again, load_ratings(dir / "unk.csv")); }), Errc::MissingRecord);
}

TEST(AuxTargets, LoadAndAttach) {
  TempDir dir("aux");
  write_text(dir / "m.csv", std::string(kManifestHeader) + "\nu1,s,train,,,3,1\nu2,s,train,,,3,1\n");
  write_text(dir / "a.csv", std::string(kAuxHeader) + "\nu1,0.75,\n");
  auto recs = load_manifest(dir / "m.csv");
  attach_aux_targets(recs, load_aux_targets(dir / "a.csv"));
  ASSERT_TRUE(recs[0].aux_targets);
  EXPECT_EQ(*recs[0].aux_targets->stoi, 0.75);
  EXPECT_FALSE(recs[0].aux_targets->mcd);
  EXPECT_FALSE(recs[1].aux_targets);
  write_text(dir / "b.csv", std::string(kAuxHeader) + "\nu1,1.5,\n");
  EXPECT_EQ(code_of([&] { load_aux_targets(dir / "b.csv"); }), Errc::MalformedRow);
}

TEST(NoisyVariants, Load) {
  TempDir dir("noisy");
  write_mneb(dir / "n1.mneb", 1, 2, {0.f, 1.f});
  write_text(dir / "n.csv", std::string(kNoisyHeader) + "\nu1,n1.mneb,,12.5,2,0.9\nu2,,,10,0,\n");
  const auto v = load_noisy_variants(dir / "n.csv");
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v.at("u1").snr_db, 12.5);
  EXPECT_EQ(v.at("u1").noise_class, 2u);
  EXPECT_EQ(*v.at("u1").stoi, 0.9);
  EXPECT_FALSE(v.at("u2").embedding_path);
}

TEST(Embedding, ReadsZeroMatrix) {
  TempDir dir("emb");
  write_mneb(dir / "u7.mneb", 1, 2, {0.0f, 0.0f});
  const auto e = load_embedding(dir / "u7.mneb");
  EXPECT_EQ(e.utt_id, "u7");
  EXPECT_EQ(e.frames, 1u);
  EXPECT_EQ(e.dim, 2u);
  EXPECT_EQ(e.data, (std::vector<float>{0.0f, 0.0f}));
}

TEST(Embedding, Errors) {
  TempDir dir("emb");
  write_mneb(dir / "short.mneb", 2, 2, {1.f, 2.f, 3.f});
  EXPECT_EQ(code_of([&] { load_embedding(dir / "short.mneb"); }), Errc::TruncatedFile);
  write_mneb(dir / "nan.mneb", 1, 2, {1.f, std::numeric_limits<float>::quiet_NaN()});
  EXPECT_EQ(code_of([&] { load_embedding(dir / "nan.mneb"); }), Errc::NonFiniteValue);
  write_mneb(dir / "v2.mneb", 1, 1, {1.f}, 2);
  EXPECT_EQ(code_of([&] { load_embedding(dir / "v2.mneb"); }), Errc::VersionMismatch);
  write_text(dir / "magic.mneb", "XXXXabcdabcdabcd");
  EXPECT_EQ(code_of([&] { load_embedding(dir / "magic.mneb"); }), Errc::BadMagic);
  write_text(dir / "tiny.mneb", "MNEB\x01");
  EXPECT_EQ(code_of([&] { load_embedding(dir / "tiny.mneb"); }), Errc::TruncatedFile);
}

TEST(Embedding, RoundTrip) {
  TempDir dir("emb");
  EmbeddingSequence s{"abc", 3, 2, {1.5f, -2.f, 0.f, 3.25f, 1e-7f, -1e7f}};
  save_embedding(dir / "abc.mneb", s);
  const auto r = load_embedding(dir / "abc.mneb");
  EXPECT_EQ(r.frames, 3u);
  EXPECT_EQ(r.dim, 2u);
  EXPECT_EQ(r.data, s.data);
  EXPECT_EQ(r.frame(1)[1], 3.25f);
}

TEST(Audio, PcmScaling) {
  TempDir dir("wav");
  write_wav(dir / "a.wav", {16384, -32768, 0});
  const auto clip = load_audio(dir / "a.wav");
  EXPECT_EQ(clip.sample_rate, 16000);
  ASSERT_EQ(clip.samples.size(), 3u);
  EXPECT_EQ(clip.samples[0], 0.5f);
  EXPECT_EQ(clip.samples[1], -1.0f);
  EXPECT_EQ(clip.samples[2], 0.0f);
}

TEST(Audio, RejectsUnsupported) {
  TempDir dir("wav");
  write_wav(dir / "stereo.wav", {1, 2, 3, 4}, 2);
  EXPECT_EQ(code_of([&] { load_audio(dir / "stereo.wav"); }), Errc::UnsupportedFormat);
  write_wav(dir / "b8.wav", {1, 2}, 1, 8);
  EXPECT_EQ(code_of([&] { load_audio(dir / "b8.wav"); }), Errc::UnsupportedFormat);
  write_text(dir / "junk.wav", "RIFX....WAVE");
  EXPECT_EQ(code_of([&] { load_audio(dir / "junk.wav"); }), Errc::UnsupportedFormat);
}

TEST(Audio, RoundTripIsExactOnPcmGrid) {
  TempDir dir("wav");
  AudioClip c;
  c.sample_rate = 8000;
  for (int k = -5; k <= 5; ++k) c.samples.push_back(static_cast<float>(k * 1000) / 32768.0f);
  save_audio(dir / "c.wav", c);
  EXPECT_EQ(load_audio(dir / "c.wav"), c);
}

TEST(Audio, DurationCheck) {
  UtteranceRecord r;
  r.utt_id = "u";
  r.duration_s = 1.0;
  AudioClip c;
  c.samples.assign(16000, 0.f);
  EXPECT_NO_THROW(check_duration(r, c));
  c.samples.resize(15990);
  EXPECT_EQ(code_of([&] { check_duration(r, c); }), Errc::DurationMismatch);
}

TEST(Split, SelectAndParse) {
  EXPECT_EQ(parse_split("dev"), Split::dev);
  EXPECT_FALSE(parse_split("eval"));
  std::vector<UtteranceRecord> recs(3);
  recs[1].split = Split::dev;
  EXPECT_EQ(select_split(recs, Split::dev).size(), 1u);
  EXPECT_EQ(select_split(recs, Split::test).size(), 0u);
}

}  // namespace
}  // namespace moosenet
