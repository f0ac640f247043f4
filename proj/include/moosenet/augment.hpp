// moosenet/augment.hpp

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

// Time-domain augmentation: volume and tempo perturbation and additive noise
// at a target SNR. Produces clean/noisy pairs carrying the SNR and noise
// class as free supervision for the auxiliary heads.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "moosenet/dataset.hpp"
#include "moosenet/error.hpp"
#include "moosenet/io.hpp"
#include "moosenet/random.hpp"

namespace moosenet {

struct NoiseEntry {
  std::string noise_id;
  std::size_t noise_class = 0;
  AudioClip audio;
};

struct NoiseTable {
  std::vector<std::string> class_names;
  std::vector<NoiseEntry> entries;
};

struct AugmentedPair {
  AudioClip clean;
  AudioClip noisy;
  AudioClip scaled_noise;  // noise exactly as added to `clean`, before clamping
  double snr_db = 0.0;
  std::size_t noise_class = 0;
  double volume_factor = 1.0;
  double tempo_factor = 1.0;
};

struct AugmentConfig {
  double volume_prob = 0.8;
  double volume_min = 0.5;
  double volume_max = 2.0;
  double tempo_min = 0.9;  // sub-range of the tempo grid to draw from
  double tempo_max = 1.08;
  double snr_min = 10.0;
  double snr_max = 20.0;
  std::optional<double> forced_volume;  // factor used when the volume gate fires
  std::optional<double> forced_tempo;
  std::optional<double> forced_snr;
};

/// The 181 tempo factors 0.900, 0.901, ..., 1.080.
inline std::vector<double> tempo_grid() {
  std::vector<double> grid;
  grid.reserve(181);
  for (int i = 0; i <= 180; ++i) grid.push_back(static_cast<double>(900 + i) / 1000.0);
  return grid;
}

inline double mean_power(std::span<const float> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (const float s : x) acc += static_cast<double>(s) * s;
  return acc / static_cast<double>(x.size());
}

inline AudioClip scale_volume(const AudioClip& clip, double factor) {
  AudioClip out = clip;
  for (auto& s : out.samples) s = static_cast<float>(std::clamp(static_cast<double>(s) * factor, -1.0, 1.0));
  return out;
}

struct VolumeResult {
  AudioClip clip;
  double factor = 1.0;  // 1.0 when the gate did not fire
};

/// With probability `prob` scales by `factor` (drawn from [lo, hi) when unset)
/// and clamps; otherwise returns the input untouched.
inline VolumeResult apply_volume(const AudioClip& clip, std::optional<double> factor, double prob, Rng& rng,
                                 double lo = 0.5, double hi = 2.0) {
  const bool fire = uniform01(rng) < prob;
  const double f = factor ? *factor : uniform(rng, lo, hi);
  if (!fire) return {clip, 1.0};
  return {scale_volume(clip, f), f};
}

/// Resampling speed change: output length round(n / factor), sample k read
/// from input position k * factor by linear interpolation.
inline AudioClip apply_tempo(const AudioClip& clip, double factor) {
  if (clip.samples.empty()) throw Error(Errc::EmptyClip, "tempo perturbation of an empty clip");
  if (!(factor > 0.0)) throw Error(Errc::OutOfRange, "tempo factor must be positive");
  if (factor == 1.0) return clip;
  const auto n = clip.samples.size();
  const auto m = static_cast<std::size_t>(std::llround(static_cast<double>(n) / factor));
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double pos = static_cast<double>(k) * factor;
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= n) {
      out.samples[k] = clip.samples[n - 1];
      continue;
    }
    const double frac = pos - static_cast<double>(i);
    out.samples[k] = static_cast<float>((1.0 - frac) * clip.samples[i] + frac * clip.samples[i + 1]);
  }
  return out;
}

/// Noise gain that puts a segment of power `noise_power` at `snr_db` below
/// a signal of power `clean_power`.
inline double noise_gain(double clean_power, double noise_power, double snr_db) {
  return std::sqrt(clean_power / (noise_power * std::pow(10.0, snr_db / 10.0)));
}

inline double realized_snr_db(const AudioClip& clean, const AudioClip& scaled_noise) {
  return 10.0 * std::log10(mean_power(clean.samples) / mean_power(scaled_noise.samples));
}

/// Crops (or loops) the noise at a random offset to the clean length, scales
/// it to the requested SNR measured on the used segment, and adds it.
inline AugmentedPair mix_noise(const AudioClip& clean, const NoiseEntry& noise, double snr_db, Rng& rng) {
  if (noise.audio.samples.empty()) throw Error(Errc::SilentNoise, "noise '" + noise.noise_id + "' is empty");
  if (noise.audio.sample_rate != clean.sample_rate) {
    throw Error(Errc::UnsupportedFormat, "noise '" + noise.noise_id + "' sample rate differs from the clean clip");
  }
  const double p_clean = mean_power(clean.samples);
  if (!(p_clean > 0.0)) throw Error(Errc::SilentClean, "clean clip has zero power");

  const auto n = clean.samples.size();
  const auto& src = noise.audio.samples;
  std::vector<float> segment(n);
  if (src.size() >= n) {
    const std::size_t offset = uniform_index(rng, src.size() - n + 1);
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(offset), n, segment.begin());
  } else {
    const std::size_t offset = uniform_index(rng, src.size());
    for (std::size_t k = 0; k < n; ++k) segment[k] = src[(offset + k) % src.size()];
  }
  const double p_noise = mean_power(segment);
  if (!(p_noise > 0.0)) throw Error(Errc::SilentNoise, "noise segment of '" + noise.noise_id + "' has zero power");

  const double g = noise_gain(p_clean, p_noise, snr_db);
  AugmentedPair pair;
  pair.clean = clean;
  pair.scaled_noise.sample_rate = clean.sample_rate;
  pair.scaled_noise.samples.resize(n);
  pair.noisy.sample_rate = clean.sample_rate;
  pair.noisy.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double scaled = g * segment[k];
    pair.scaled_noise.samples[k] = static_cast<float>(scaled);
    pair.noisy.samples[k] = static_cast<float>(std::clamp(static_cast<double>(clean.samples[k]) + scaled, -1.0, 1.0));
  }
  pair.snr_db = snr_db;
  pair.noise_class = noise.noise_class;
  return pair;
}

/// Volume (gated) and tempo on the clean signal, then one uniformly chosen
/// noise at a uniform SNR. Both variants share the volume/tempo change.
inline AugmentedPair make_training_pair(const AudioClip& clean, const NoiseTable& noises, const AugmentConfig& cfg,
                                        Rng& rng) {
  if (noises.entries.empty()) throw Error(Errc::Empty, "noise table is empty");
  std::vector<double> grid;
  for (const double t : tempo_grid()) {
    if (t >= cfg.tempo_min - 1e-12 && t <= cfg.tempo_max + 1e-12) grid.push_back(t);
  }
  if (grid.empty()) throw Error(Errc::InvalidConfig, "tempo range excludes every grid value");

  auto vol = apply_volume(clean, cfg.forced_volume, cfg.volume_prob, rng, cfg.volume_min, cfg.volume_max);
  const double tempo = cfg.forced_tempo ? *cfg.forced_tempo : grid[uniform_index(rng, grid.size())];
  const auto perturbed = apply_tempo(vol.clip, tempo);
  const auto& noise = noises.entries[uniform_index(rng, noises.entries.size())];
  const double snr = cfg.forced_snr ? *cfg.forced_snr : uniform(rng, cfg.snr_min, cfg.snr_max);

  auto pair = mix_noise(perturbed, noise, snr, rng);
  pair.volume_factor = vol.factor;
  pair.tempo_factor = tempo;
  return pair;
}

inline AugmentedPair make_training_pair(const UtteranceRecord& record, const NoiseTable& noises,
                                        const AugmentConfig& cfg, Rng& rng) {
  if (!record.audio_path) throw Error(Errc::MissingFile, "utterance '" + record.utt_id + "' has no audio_path");
  return make_training_pair(load_audio(*record.audio_path), noises, cfg, rng);
}

inline constexpr std::string_view kNoiseTableHeader = "noise_id,noise_class_name,audio_path";

/// Class indices follow the first appearance of each class name in the file.
inline NoiseTable load_noise_table(const std::filesystem::path& path) {
  NoiseTable table;
  const auto base_dir = path.parent_path();
  for (const auto& row : io::read_csv(path, kNoiseTableHeader)) {
    const auto ctx = io::where(path, row);
    const auto& c = row.cells;
    const auto it = std::find(table.class_names.begin(), table.class_names.end(), c[1]);
    const auto cls = static_cast<std::size_t>(it - table.class_names.begin());
    if (it == table.class_names.end()) table.class_names.push_back(c[1]);
    NoiseEntry e;
    e.noise_id = c[0];
    e.noise_class = cls;
    e.audio = load_audio(detail::resolve_path(base_dir, c[2], ctx));
    if (e.audio.samples.empty()) throw Error(Errc::SilentNoise, ctx + ": empty noise audio");
    table.entries.push_back(std::move(e));
  }
  if (table.entries.empty()) throw Error(Errc::Empty, path.string() + ": noise table has no rows");
  return table;
}

}  // namespace moosenet
