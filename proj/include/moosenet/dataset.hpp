// moosenet/dataset.hpp

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

// Manifests, per-listener ratings, auxiliary targets, frame embeddings (MNEB)
// and 16-bit PCM WAV audio.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "moosenet/error.hpp"
#include "moosenet/io.hpp"

namespace moosenet {

enum class Split { train, dev, test };

inline std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  return std::nullopt;
}

struct ListenerRating {
  std::string listener_id;
  int rating = 0;

  bool operator==(const ListenerRating&) const = default;
};

struct AuxTargets {
  std::optional<double> stoi;
  std::optional<double> mcd;

  bool operator==(const AuxTargets&) const = default;
};

struct UtteranceRecord {
  std::string utt_id;
  std::string system_id;
  Split split = Split::train;
  double duration_s = 0.0;
  std::optional<double> mos;
  std::vector<ListenerRating> listener_ratings;
  std::optional<AuxTargets> aux_targets;
  std::optional<std::filesystem::path> embedding_path;
  std::optional<std::filesystem::path> audio_path;

  bool operator==(const UtteranceRecord&) const = default;
};

/// T x D frame features, row-major.
struct EmbeddingSequence {
  std::string utt_id;
  std::size_t frames = 0;
  std::size_t dim = 0;
  std::vector<float> data;

  std::span<const float> frame(std::size_t t) const { return {data.data() + t * dim, dim}; }
};

struct AudioClip {
  int sample_rate = 16000;
  std::vector<float> samples;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }

  bool operator==(const AudioClip&) const = default;
};

inline constexpr std::string_view kManifestHeader =
    "utt_id,system_id,split,embedding_path,audio_path,mos,duration_s";
inline constexpr std::string_view kRatingsHeader = "utt_id,listener_id,rating";
inline constexpr std::string_view kAuxHeader = "utt_id,stoi,mcd";

namespace detail {

inline std::filesystem::path resolve_path(const std::filesystem::path& base_dir, const std::string& cell,
                                          const std::string& context) {
  std::filesystem::path p(cell);
  if (p.is_relative()) p = base_dir / p;
  if (!std::filesystem::exists(p)) throw Error(Errc::MissingFile, context + ": path does not exist: " + p.string());
  return p;
}

}  // namespace detail

/// Loads the utterance manifest. Relative paths resolve against the manifest's
/// directory and must exist.
inline std::vector<UtteranceRecord> load_manifest(const std::filesystem::path& path) {
  const auto rows = io::read_csv(path, kManifestHeader);
  const auto base_dir = path.parent_path();
  std::vector<UtteranceRecord> records;
  std::unordered_set<std::string> seen;
  records.reserve(rows.size());
  for (const auto& row : rows) {
    const auto ctx = io::where(path, row);
    const auto& c = row.cells;
    UtteranceRecord r;
    r.utt_id = c[0];
    if (r.utt_id.empty()) throw Error(Errc::MalformedRow, ctx + ": empty utt_id");
    if (!seen.insert(r.utt_id).second) throw Error(Errc::DuplicateId, ctx + ": duplicate utt_id '" + r.utt_id + "'");
    r.system_id = c[1];
    const auto split = parse_split(c[2]);
    if (!split) throw Error(Errc::MalformedRow, ctx + ": split must be train, dev or test, got '" + c[2] + "'");
    r.split = *split;
    if (!c[3].empty()) r.embedding_path = detail::resolve_path(base_dir, c[3], ctx);
    if (!c[4].empty()) r.audio_path = detail::resolve_path(base_dir, c[4], ctx);
    if (!c[5].empty()) {
      const double mos = io::parse_double(c[5], ctx);
      if (!(mos >= 1.0 && mos <= 5.0)) throw Error(Errc::MalformedRow, ctx + ": mos outside [1, 5]");
      r.mos = mos;
    }
    r.duration_s = io::parse_double(c[6], ctx);
    if (!(r.duration_s > 0.0) || !std::isfinite(r.duration_s)) {
      throw Error(Errc::MalformedRow, ctx + ": duration_s must be positive");
    }
    records.push_back(std::move(r));
  }
  return records;
}

struct RatingRow {
  std::string utt_id;
  ListenerRating rating;
};

inline std::vector<RatingRow> load_ratings(const std::filesystem::path& path) {
  std::vector<RatingRow> out;
  for (const auto& row : io::read_csv(path, kRatingsHeader)) {
    const auto ctx = io::where(path, row);
    const auto value = io::parse_int(row.cells[2], ctx);
    if (value < 1 || value > 5) {
      throw Error(Errc::RatingOutOfRange, ctx + ": rating " + row.cells[2] + " outside 1..5");
    }
    out.push_back({row.cells[0], {row.cells[1], static_cast<int>(value)}});
  }
  return out;
}

/// Attaches ratings to their records. A record without MOS takes the mean of
/// its ratings; otherwise the stored MOS must equal that mean within 1e-6.
inline void attach_ratings(std::vector<UtteranceRecord>& records, const std::vector<RatingRow>& ratings) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < records.size(); ++i) index.emplace(records[i].utt_id, i);
  for (const auto& r : ratings) {
    const auto it = index.find(r.utt_id);
    if (it == index.end()) throw Error(Errc::MissingRecord, "rating for unknown utterance '" + r.utt_id + "'");
    records[it->second].listener_ratings.push_back(r.rating);
  }
  for (auto& rec : records) {
    if (rec.listener_ratings.empty()) continue;
    double sum = 0.0;
    for (const auto& lr : rec.listener_ratings) sum += lr.rating;
    const double mean = sum / static_cast<double>(rec.listener_ratings.size());
    if (!rec.mos) {
      rec.mos = mean;
    } else if (std::abs(*rec.mos - mean) > 1e-6) {
      throw Error(Errc::InconsistentRatings, "utterance '" + rec.utt_id + "': mos " + io::format_double(*rec.mos) +
                                                 " differs from mean rating " + io::format_double(mean));
    }
  }
}

inline std::map<std::string, AuxTargets> load_aux_targets(const std::filesystem::path& path) {
  std::map<std::string, AuxTargets> out;
  for (const auto& row : io::read_csv(path, kAuxHeader)) {
    const auto ctx = io::where(path, row);
    AuxTargets t;
    if (!row.cells[1].empty()) {
      t.stoi = io::parse_double(row.cells[1], ctx);
      if (*t.stoi < 0.0 || *t.stoi > 1.0) throw Error(Errc::MalformedRow, ctx + ": stoi outside [0, 1]");
    }
    if (!row.cells[2].empty()) {
      t.mcd = io::parse_double(row.cells[2], ctx);
      if (*t.mcd < 0.0) throw Error(Errc::MalformedRow, ctx + ": negative mcd");
    }
    if (!out.emplace(row.cells[0], t).second) {
      throw Error(Errc::DuplicateId, ctx + ": duplicate utt_id '" + row.cells[0] + "'");
    }
  }
  return out;
}

inline void attach_aux_targets(std::vector<UtteranceRecord>& records, const std::map<std::string, AuxTargets>& aux) {
  for (auto& rec : records) {
    if (const auto it = aux.find(rec.utt_id); it != aux.end()) rec.aux_targets = it->second;
  }
}

// ---------------------------------------------------------------------------
// Noisy-variant table: one externally encoded noisy copy per utterance.

inline constexpr std::string_view kNoisyHeader = "utt_id,embedding_path,audio_path,snr_db,noise_class,stoi";

struct NoisyVariant {
  std::optional<std::filesystem::path> embedding_path;
  std::optional<std::filesystem::path> audio_path;
  double snr_db = 0.0;
  std::size_t noise_class = 0;
  std::optional<double> stoi;
};

inline std::map<std::string, NoisyVariant> load_noisy_variants(const std::filesystem::path& path) {
  std::map<std::string, NoisyVariant> out;
  const auto base_dir = path.parent_path();
  for (const auto& row : io::read_csv(path, kNoisyHeader)) {
    const auto ctx = io::where(path, row);
    const auto& c = row.cells;
    NoisyVariant v;
    if (!c[1].empty()) v.embedding_path = detail::resolve_path(base_dir, c[1], ctx);
    if (!c[2].empty()) v.audio_path = detail::resolve_path(base_dir, c[2], ctx);
    v.snr_db = io::parse_double(c[3], ctx);
    const auto cls = io::parse_int(c[4], ctx);
    if (cls < 0) throw Error(Errc::MalformedRow, ctx + ": negative noise_class");
    v.noise_class = static_cast<std::size_t>(cls);
    if (!c[5].empty()) v.stoi = io::parse_double(c[5], ctx);
    if (!out.emplace(c[0], std::move(v)).second) {
      throw Error(Errc::DuplicateId, ctx + ": duplicate utt_id '" + c[0] + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// MNEB: "MNEB", u32 version (1), u32 T, u32 D, T*D little-endian f32 row-major.

inline constexpr std::uint32_t kEmbeddingVersion = 1;

inline EmbeddingSequence load_embedding(const std::filesystem::path& path) {
  auto in = io::open_in(path, true);
  const auto name = path.string();
  io::expect_magic(in, "MNEB", name);
  const auto version = io::read_le<std::uint32_t>(in, name + " version");
  if (version != kEmbeddingVersion) {
    throw Error(Errc::VersionMismatch, name + ": unsupported embedding version " + std::to_string(version));
  }
  EmbeddingSequence seq;
  seq.utt_id = path.stem().string();
  seq.frames = io::read_le<std::uint32_t>(in, name + " header");
  seq.dim = io::read_le<std::uint32_t>(in, name + " header");
  if (seq.frames == 0 || seq.dim == 0) throw Error(Errc::MalformedRow, name + ": zero frames or dimension");
  seq.data.resize(seq.frames * seq.dim);
  const auto bytes = static_cast<std::streamsize>(seq.data.size() * sizeof(float));
  if (!in.read(reinterpret_cast<char*>(seq.data.data()), bytes)) {
    throw Error(Errc::TruncatedFile, name + ": payload shorter than T*D floats");
  }
  for (std::size_t i = 0; i < seq.data.size(); ++i) {
    if (!std::isfinite(seq.data[i])) {
      throw Error(Errc::NonFiniteValue, name + ": non-finite value at frame " + std::to_string(i / seq.dim));
    }
  }
  return seq;
}

inline void save_embedding(const std::filesystem::path& path, const EmbeddingSequence& seq) {
  if (seq.data.size() != seq.frames * seq.dim) {
    throw Error(Errc::DimensionMismatch, "embedding data size does not match T*D");
  }
  auto out = io::open_out(path, true);
  out.write("MNEB", 4);
  io::write_le<std::uint32_t>(out, kEmbeddingVersion);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(seq.frames));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(seq.dim));
  out.write(reinterpret_cast<const char*>(seq.data.data()),
            static_cast<std::streamsize>(seq.data.size() * sizeof(float)));
}

// ---------------------------------------------------------------------------
// WAV: RIFF/WAVE, PCM format tag 1, mono, 16 bit.

inline AudioClip load_audio(const std::filesystem::path& path) {
  auto in = io::open_in(path, true);
  const auto name = path.string();
  char tag[4];
  auto read_tag = [&](std::string_view what) {
    if (!in.read(tag, 4)) throw Error(Errc::TruncatedFile, name + ": missing " + std::string(what));
    return std::string_view(tag, 4);
  };
  if (read_tag("RIFF tag") != "RIFF") throw Error(Errc::UnsupportedFormat, name + ": not a RIFF file");
  io::read_le<std::uint32_t>(in, name);
  if (read_tag("WAVE tag") != "WAVE") throw Error(Errc::UnsupportedFormat, name + ": not a WAVE file");

  bool have_fmt = false;
  AudioClip clip;
  while (true) {
    const auto id = std::string(read_tag("chunk"));
    const auto size = io::read_le<std::uint32_t>(in, name + " chunk size");
    if (id == "fmt ") {
      if (size < 16) throw Error(Errc::UnsupportedFormat, name + ": short fmt chunk");
      const auto format = io::read_le<std::uint16_t>(in, name);
      const auto channels = io::read_le<std::uint16_t>(in, name);
      const auto rate = io::read_le<std::uint32_t>(in, name);
      io::read_le<std::uint32_t>(in, name);  // byte rate
      io::read_le<std::uint16_t>(in, name);  // block align
      const auto bits = io::read_le<std::uint16_t>(in, name);
      if (format != 1) throw Error(Errc::UnsupportedFormat, name + ": only uncompressed PCM is supported");
      if (channels != 1) throw Error(Errc::UnsupportedFormat, name + ": only mono audio is supported");
      if (bits != 16) throw Error(Errc::UnsupportedFormat, name + ": only 16-bit samples are supported");
      clip.sample_rate = static_cast<int>(rate);
      in.seekg(size - 16 + (size & 1), std::ios::cur);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw Error(Errc::UnsupportedFormat, name + ": data chunk before fmt chunk");
      std::vector<std::int16_t> pcm(size / 2);
      if (!in.read(reinterpret_cast<char*>(pcm.data()), static_cast<std::streamsize>(pcm.size() * 2))) {
        throw Error(Errc::TruncatedFile, name + ": data chunk shorter than declared");
      }
      clip.samples.resize(pcm.size());
      for (std::size_t i = 0; i < pcm.size(); ++i) clip.samples[i] = static_cast<float>(pcm[i]) / 32768.0f;
      return clip;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
  }
}

/// Writes 16-bit PCM mono; samples are clamped to [-1, 1] and scaled by 32768.
inline void save_audio(const std::filesystem::path& path, const AudioClip& clip) {
  auto out = io::open_out(path, true);
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  out.write("RIFF", 4);
  io::write_le<std::uint32_t>(out, 36 + n * 2);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  io::write_le<std::uint32_t>(out, 16);
  io::write_le<std::uint16_t>(out, 1);
  io::write_le<std::uint16_t>(out, 1);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  io::write_le<std::uint16_t>(out, 2);
  io::write_le<std::uint16_t>(out, 16);
  out.write("data", 4);
  io::write_le<std::uint32_t>(out, n * 2);
  for (const float s : clip.samples) {
    const double v = std::clamp(static_cast<double>(s), -1.0, 1.0) * 32768.0;
    io::write_le<std::int16_t>(out, static_cast<std::int16_t>(std::clamp(std::lround(v), -32768L, 32767L)));
  }
}

/// Checks that an audio file's length agrees with the manifest duration to
/// within one sample period.
inline void check_duration(const UtteranceRecord& record, const AudioClip& clip) {
  if (std::abs(clip.duration_s() - record.duration_s) > 1.0 / clip.sample_rate) {
    throw Error(Errc::DurationMismatch, "utterance '" + record.utt_id + "': audio lasts " +
                                            io::format_double(clip.duration_s()) + " s, manifest says " +
                                            io::format_double(record.duration_s) + " s");
  }
}

inline std::vector<const UtteranceRecord*> select_split(const std::vector<UtteranceRecord>& records, Split split) {
  std::vector<const UtteranceRecord*> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(&r);
  }
  return out;
}

}  // namespace moosenet
