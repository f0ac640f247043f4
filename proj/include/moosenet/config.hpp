// moosenet/config.hpp

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

// Flat key = value run configuration. Later sources override earlier ones:
// defaults, then a config file, then command-line overrides.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "moosenet/augment.hpp"
#include "moosenet/error.hpp"
#include "moosenet/io.hpp"
#include "moosenet/metrics.hpp"
#include "moosenet/train.hpp"

namespace moosenet {

struct RunConfig {
  // optimization
  double base_lr = 0.001;
  double warmup = 1500;
  double weight_decay = 0.0001;
  std::size_t patience = 30;
  std::size_t max_epochs = 90;
  std::string early_stop_level = "system";
  // model
  std::size_t hidden = 32;
  std::size_t listener_dim = 0;  // 32 turns on listener-dependent modeling
  // losses
  std::string mos_loss = "gauss";
  double tau = 0.25;
  double aux_tau = 0.0;
  double margin = 0.1;
  double w_mos = 1.0;
  double w_contrast = 0.5;
  double w_stoi = 0.1;
  double w_snr = 0.1;
  double w_noise = 0.1;
  // PLDA backend
  std::size_t n_bins = 32;
  std::size_t min_count = 5;
  // augmentation
  double volume_prob = 0.8;
  double volume_min = 0.5;
  double volume_max = 2.0;
  double tempo_min = 0.9;
  double tempo_max = 1.08;
  double snr_min = 10.0;
  double snr_max = 20.0;
  // batching
  double min_duration = 1.0;
  double max_duration = 12.0;
  double clean_budget = 40.0;
  std::size_t buckets = 20;
  std::uint64_t seed = 0;

  TrainConfig train_config() const {
    TrainConfig t;
    t.loss.mos_loss = mos_loss == "gauss" ? MosLoss::gauss : MosLoss::clipped_logcosh;
    t.loss.tau = tau;
    t.loss.aux_tau = aux_tau;
    t.loss.margin = margin;
    t.loss.weights = {w_mos, w_contrast, w_stoi, w_snr, w_noise};
    t.base_lr = base_lr;
    t.warmup = warmup;
    t.weight_decay = weight_decay;
    t.patience = patience;
    t.max_epochs = max_epochs;
    t.n_buckets = buckets;
    t.clean_budget_s = clean_budget;
    t.early_stop_level = early_stop_level == "system" ? Level::system : Level::utterance;
    t.seed = seed;
    return t;
  }

  AugmentConfig augment_config() const {
    AugmentConfig a;
    a.volume_prob = volume_prob;
    a.volume_min = volume_min;
    a.volume_max = volume_max;
    a.tempo_min = tempo_min;
    a.tempo_max = tempo_max;
    a.snr_min = snr_min;
    a.snr_max = snr_max;
    return a;
  }
};

namespace detail {

struct ConfigField {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline double parse_number(const std::string& key, const std::string& value) {
  try {
    return io::parse_double(value, key);
  } catch (const Error&) {
    throw Error(Errc::InvalidConfig, key + ": expected a number, got '" + value + "'");
  }
}

inline std::size_t parse_count(const std::string& key, const std::string& value) {
  long long v = 0;
  try {
    v = io::parse_int(value, key);
  } catch (const Error&) {
    throw Error(Errc::InvalidConfig, key + ": expected an integer, got '" + value + "'");
  }
  if (v < 0) throw Error(Errc::InvalidConfig, key + ": must not be negative");
  return static_cast<std::size_t>(v);
}

inline const std::map<std::string, ConfigField>& config_fields() {
  static const std::map<std::string, ConfigField> fields = [] {
    std::map<std::string, ConfigField> f;
    auto real = [&](const char* key, double RunConfig::*m) {
      f[key] = {[=](RunConfig& c, const std::string& v) { c.*m = parse_number(key, v); },
                [=](const RunConfig& c) { return io::format_double(c.*m); }};
    };
    auto count = [&](const char* key, std::size_t RunConfig::*m) {
      f[key] = {[=](RunConfig& c, const std::string& v) { c.*m = parse_count(key, v); },
                [=](const RunConfig& c) { return std::to_string(c.*m); }};
    };
    auto text = [&](const char* key, std::string RunConfig::*m) {
      f[key] = {[=](RunConfig& c, const std::string& v) { c.*m = v; }, [=](const RunConfig& c) { return c.*m; }};
    };
    real("base_lr", &RunConfig::base_lr);
    real("warmup", &RunConfig::warmup);
    real("weight_decay", &RunConfig::weight_decay);
    count("patience", &RunConfig::patience);
    count("max_epochs", &RunConfig::max_epochs);
    text("early_stop_level", &RunConfig::early_stop_level);
    count("hidden", &RunConfig::hidden);
    count("listener_dim", &RunConfig::listener_dim);
    text("mos_loss", &RunConfig::mos_loss);
    real("tau", &RunConfig::tau);
    real("aux_tau", &RunConfig::aux_tau);
    real("margin", &RunConfig::margin);
    real("w_mos", &RunConfig::w_mos);
    real("w_contrast", &RunConfig::w_contrast);
    real("w_stoi", &RunConfig::w_stoi);
    real("w_snr", &RunConfig::w_snr);
    real("w_noise", &RunConfig::w_noise);
    count("n_bins", &RunConfig::n_bins);
    count("min_count", &RunConfig::min_count);
    real("volume_prob", &RunConfig::volume_prob);
    real("volume_min", &RunConfig::volume_min);
    real("volume_max", &RunConfig::volume_max);
    real("tempo_min", &RunConfig::tempo_min);
    real("tempo_max", &RunConfig::tempo_max);
    real("snr_min", &RunConfig::snr_min);
    real("snr_max", &RunConfig::snr_max);
    real("min_duration", &RunConfig::min_duration);
    real("max_duration", &RunConfig::max_duration);
    real("clean_budget", &RunConfig::clean_budget);
    count("buckets", &RunConfig::buckets);
    f["seed"] = {[](RunConfig& c, const std::string& v) { c.seed = parse_count("seed", v); },
                 [](const RunConfig& c) { return std::to_string(c.seed); }};
    return f;
  }();
  return fields;
}

}  // namespace detail

/// Sets one field from text; unknown keys are rejected.
inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto& fields = detail::config_fields();
  const auto it = fields.find(key);
  if (it == fields.end()) throw Error(Errc::InvalidConfig, "unknown config key '" + key + "'");
  it->second.set(cfg, value);
}

/// Parses "key=value" (whitespace around either side is ignored).
inline void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw Error(Errc::InvalidConfig, "expected key=value, got '" + assignment + "'");
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  set_config_value(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

/// Range checks for every field.
inline void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw Error(Errc::InvalidConfig, msg);
  };
  require(c.base_lr > 0.0, "base_lr must be positive");
  require(c.warmup >= 1.0, "warmup must be at least 1");
  require(c.weight_decay >= 0.0, "weight_decay must be non-negative");
  require(c.patience >= 1, "patience must be at least 1");
  require(c.max_epochs >= 1, "max_epochs must be at least 1");
  require(c.early_stop_level == "system" || c.early_stop_level == "utterance",
          "early_stop_level must be system or utterance");
  require(c.hidden >= 1, "hidden must be at least 1");
  require(c.mos_loss == "gauss" || c.mos_loss == "logcosh", "mos_loss must be gauss or logcosh");
  require(c.tau >= 0.0 && c.aux_tau >= 0.0, "clip thresholds must be non-negative");
  require(c.margin >= 0.0, "margin must be non-negative");
  require(c.w_mos > 0.0, "w_mos must be positive");
  require(c.w_contrast >= 0.0 && c.w_stoi >= 0.0 && c.w_snr >= 0.0 && c.w_noise >= 0.0,
          "loss weights must be non-negative");
  require(c.n_bins >= 1, "n_bins must be at least 1");
  require(c.volume_prob >= 0.0 && c.volume_prob <= 1.0, "volume_prob must be in [0, 1]");
  require(c.volume_min > 0.0 && c.volume_min <= c.volume_max, "volume range must satisfy 0 < min <= max");
  require(c.tempo_min > 0.0 && c.tempo_min <= c.tempo_max, "tempo range must satisfy 0 < min <= max");
  require(c.snr_min <= c.snr_max, "snr_min must not exceed snr_max");
  require(c.min_duration >= 0.0 && c.min_duration <= c.max_duration, "duration range must satisfy 0 <= min <= max");
  require(c.clean_budget >= c.max_duration, "clean_budget must hold the longest kept utterance");
  require(c.buckets >= 1, "buckets must be at least 1");
}

inline RunConfig load_config(const std::filesystem::path& path) {
  RunConfig cfg;
  auto in = io::open_in(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      apply_override(cfg, line);
    } catch (const Error& e) {
      throw Error(Errc::InvalidConfig, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

/// Every field, one "key = value" per line, in key order.
inline std::string to_text(const RunConfig& cfg) {
  std::ostringstream os;
  for (const auto& [key, field] : detail::config_fields()) os << key << " = " << field.get(cfg) << '\n';
  return os.str();
}

inline void save_config(const std::filesystem::path& path, const RunConfig& cfg) {
  auto out = io::open_out(path);
  out << to_text(cfg);
}

}  // namespace moosenet
