// moosenet/commands.hpp

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

// Command implementations behind the `moosenet` tool. Each command returns a
// process exit code: 0 success, 2 usage error, 3 data error, 4 numerical
// failure.

#include <Eigen/Dense>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "moosenet/augment.hpp"
#include "moosenet/binning.hpp"
#include "moosenet/config.hpp"
#include "moosenet/dataset.hpp"
#include "moosenet/error.hpp"
#include "moosenet/gradcheck.hpp"
#include "moosenet/head.hpp"
#include "moosenet/io.hpp"
#include "moosenet/metrics.hpp"
#include "moosenet/plda.hpp"
#include "moosenet/train.hpp"

namespace moosenet::cli {

namespace fs = std::filesystem;

struct ConfigSource {
  std::optional<fs::path> file;
  std::vector<std::string> overrides;  // key=value, applied after the file
};

inline RunConfig resolve_config(const ConfigSource& src) {
  RunConfig cfg = src.file ? load_config(*src.file) : RunConfig{};
  for (const auto& o : src.overrides) apply_override(cfg, o);
  validate(cfg);
  return cfg;
}

/// Runs `fn`, mapping errors to exit codes and printing them to `err`.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

// ---------------------------------------------------------------------------
// Shared data preparation

struct DataSources {
  fs::path manifest;
  std::optional<fs::path> ratings;
  std::optional<fs::path> aux;
  std::optional<fs::path> noisy;
};

inline std::vector<UtteranceRecord> load_records(const DataSources& src) {
  auto records = load_manifest(src.manifest);
  if (src.ratings) attach_ratings(records, load_ratings(*src.ratings));
  if (src.aux) attach_aux_targets(records, load_aux_targets(*src.aux));
  return records;
}

/// Pooled clean embedding of a record; the file must exist.
inline Eigen::VectorXd pooled_embedding(const UtteranceRecord& r) {
  if (!r.embedding_path) throw Error(Errc::MissingFile, "utterance '" + r.utt_id + "' has no embedding_path");
  return pool(load_embedding(*r.embedding_path));
}

inline std::vector<EvalUtterance> eval_set(const std::vector<UtteranceRecord>& records, std::optional<Split> split,
                                           bool need_mos) {
  std::vector<EvalUtterance> out;
  for (const auto& r : records) {
    if (split && r.split != *split) continue;
    if (need_mos && !r.mos) throw Error(Errc::MissingRecord, "utterance '" + r.utt_id + "' has no MOS label");
    out.push_back({r.utt_id, r.system_id, pooled_embedding(r), r.mos.value_or(0.0)});
  }
  return out;
}

struct PreparedTraining {
  std::vector<TrainUtterance> train;
  std::vector<EvalUtterance> dev;
  HeadShape shape;
  std::vector<std::string> listener_ids;
};

inline PreparedTraining prepare_training(const std::vector<UtteranceRecord>& records,
                                         const std::map<std::string, NoisyVariant>& noisy, const RunConfig& cfg) {
  PreparedTraining p;
  std::vector<UtteranceRecord> train_records;
  for (const auto& r : records) {
    if (r.split == Split::train) train_records.push_back(r);
  }
  if (train_records.empty()) throw Error(Errc::MissingSplit, "manifest has no 'train' split");
  if (std::none_of(records.begin(), records.end(), [](const auto& r) { return r.split == Split::dev; })) {
    throw Error(Errc::MissingSplit, "manifest has no 'dev' split");
  }
  train_records = filter_by_duration(train_records, cfg.min_duration, cfg.max_duration);
  if (train_records.empty()) throw Error(Errc::MissingSplit, "no 'train' utterance survives the duration filter");

  std::map<std::string, std::size_t> listener_row;
  if (cfg.listener_dim > 0) {
    std::set<std::string> ids;
    for (const auto& r : train_records)
      for (const auto& lr : r.listener_ratings) ids.insert(lr.listener_id);
    if (ids.empty()) throw Error(Errc::InvalidConfig, "listener_dim is set but no training ratings were given");
    p.listener_ids.assign(ids.begin(), ids.end());
    for (std::size_t i = 0; i < p.listener_ids.size(); ++i) listener_row[p.listener_ids[i]] = i + 1;
  }

  std::size_t noise_classes = 1;
  for (const auto& r : train_records) {
    if (!r.mos) throw Error(Errc::MissingRecord, "training utterance '" + r.utt_id + "' has no MOS label");
    TrainUtterance u;
    u.utt_id = r.utt_id;
    u.system_id = r.system_id;
    u.duration_s = r.duration_s;
    u.pooled = pooled_embedding(r);
    u.mos = *r.mos;
    if (r.aux_targets) u.stoi = r.aux_targets->stoi;
    for (const auto& lr : r.listener_ratings) {
      if (const auto it = listener_row.find(lr.listener_id); it != listener_row.end()) {
        u.listener_targets.emplace_back(it->second, static_cast<double>(lr.rating));
      }
    }
    if (const auto it = noisy.find(r.utt_id); it != noisy.end() && it->second.embedding_path) {
      NoisyExample nx;
      nx.pooled = pool(load_embedding(*it->second.embedding_path));
      nx.snr_db = it->second.snr_db;
      nx.noise_class = it->second.noise_class;
      nx.stoi = it->second.stoi;
      noise_classes = std::max(noise_classes, nx.noise_class + 1);
      u.noisy = std::move(nx);
    }
    p.train.push_back(std::move(u));
  }
  p.dev = eval_set(records, Split::dev, true);

  p.shape.input_dim = static_cast<std::size_t>(p.train.front().pooled.size());
  p.shape.hidden_dim = cfg.hidden;
  p.shape.noise_classes = noise_classes;
  if (cfg.listener_dim > 0) {
    p.shape.listener_dim = cfg.listener_dim;
    p.shape.listener_count = p.listener_ids.size();
  }
  return p;
}

inline fs::path sibling(const fs::path& path, const std::string& suffix) {
  return fs::path(path.string() + suffix);
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  DataSources data;
  ConfigSource config;
  fs::path out_checkpoint;
  std::optional<fs::path> log;  // defaults to <checkpoint>.log.csv
};

inline constexpr std::string_view kTrainLogHeader =
    "epoch,steps,lr,loss_total,loss_mos,loss_contrast,loss_stoi,loss_snr,loss_noise,"
    "dev_mse_utterance,dev_srcc_utterance,dev_mse_system,dev_srcc_system,dev_srcc,best_srcc,improved";

inline void write_train_log(const fs::path& path, const std::vector<EpochLog>& log) {
  auto out = io::open_out(path);
  out << kTrainLogHeader << '\n';
  auto f = io::format_double;
  for (const auto& r : log) {
    out << r.epoch << ',' << r.steps << ',' << f(r.lr) << ',' << f(r.train.total) << ',' << f(r.train.mos) << ','
        << f(r.train.contrast) << ',' << f(r.train.stoi) << ',' << f(r.train.snr) << ',' << f(r.train.noise) << ','
        << f(r.dev_mse_utterance) << ',' << f(r.dev_srcc_utterance) << ',' << f(r.dev_mse_system) << ','
        << f(r.dev_srcc_system) << ',' << f(r.dev_srcc) << ',' << f(r.best_srcc) << ',' << (r.improved ? 1 : 0)
        << '\n';
  }
}

inline int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = resolve_config(opt.config);
    const auto records = load_records(opt.data);
    const auto noisy = opt.data.noisy ? load_noisy_variants(*opt.data.noisy) : std::map<std::string, NoisyVariant>{};
    auto prepared = prepare_training(records, noisy, cfg);
    auto head = init_head<float>(prepared.shape, derive_seed(cfg.seed, 0x4845414455ULL), prepared.listener_ids);
    const auto result = train(std::move(head), prepared.train, prepared.dev, cfg.train_config());

    save_checkpoint(opt.out_checkpoint, result.best);
    write_train_log(opt.log.value_or(sibling(opt.out_checkpoint, ".log.csv")), result.log);
    save_config(sibling(opt.out_checkpoint, ".config"), cfg);
    const auto& best = result.log[result.best_epoch > 0 ? result.best_epoch - 1 : 0];
    out << "trained " << result.log.size() << " epochs (" << prepared.train.size() << " train / "
        << prepared.dev.size() << " dev utterances); best epoch " << result.best_epoch << ": dev srcc utterance "
        << io::format_double(best.dev_srcc_utterance) << ", system " << io::format_double(best.dev_srcc_system)
        << (result.early_stopped ? " (early stop)" : "") << '\n';
    return 0;
  });
}

// ---------------------------------------------------------------------------
// fit-plda

struct FitPldaOptions {
  DataSources data;
  ConfigSource config;
  fs::path checkpoint;
  fs::path out_model;
};

template <typename Scalar>
Eigen::VectorXd head_features(const PredictorHead<Scalar>& head, const Eigen::VectorXd& pooled) {
  const std::optional<std::size_t> row = head.shape.has_listeners() ? std::optional<std::size_t>(0) : std::nullopt;
  return forward_trace(head, pooled, row).out.hidden;
}

inline int cmd_fit_plda(const FitPldaOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = resolve_config(opt.config);
    const auto head = load_checkpoint(opt.checkpoint);
    const auto records = load_records(opt.data);
    const auto train_set = eval_set(records, Split::train, true);
    if (train_set.empty()) throw Error(Errc::MissingSplit, "manifest has no 'train' split");

    std::vector<double> mos;
    std::vector<Eigen::VectorXd> features;
    for (const auto& u : train_set) {
      mos.push_back(u.mos);
      features.push_back(head_features(head, u.pooled));
    }
    const auto spec = fit_bins(mos, cfg.n_bins, cfg.min_count);
    std::vector<std::size_t> labels;
    for (const double m : mos) labels.push_back(assign_bin(spec, m));
    const auto model = fit_plda(features, labels, spec);
    save_plda(opt.out_model, model);
    save_config(sibling(opt.out_model, ".config"), cfg);
    out << "fitted PLDA on " << features.size() << " features of dimension " << model.feature_dim() << " over "
        << spec.size() << " MOS bins\n";
    return 0;
  });
}

// ---------------------------------------------------------------------------
// predict

struct PredictOptions {
  fs::path manifest;
  fs::path checkpoint;
  std::optional<fs::path> plda;
  std::string split = "test";  // train, dev, test or all
  fs::path out_csv;
};

inline PredictionSet predict_records(const PredictorHead<float>& head, const PldaModel* plda,
                                     std::span<const EvalUtterance> utts, std::string model_id) {
  if (!plda) return predict_head(head, utts, std::move(model_id));
  PredictionSet set;
  set.model_id = std::move(model_id);
  for (const auto& u : utts) {
    const auto x = head_features(head, u.pooled);
    set.items.emplace(u.utt_id, Prediction{plda->predict_mos(x), plda->predict_variance(x)});
  }
  return set;
}

inline int cmd_predict(const PredictOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::optional<Split> split;
    if (opt.split != "all") {
      split = parse_split(opt.split);
      if (!split) throw Error(Errc::InvalidConfig, "--split must be train, dev, test or all");
    }
    const auto head = load_checkpoint(opt.checkpoint);
    std::optional<PldaModel> plda;
    if (opt.plda) plda = load_plda(*opt.plda);
    const auto records = load_manifest(opt.manifest);
    const auto utts = eval_set(records, split, false);
    if (utts.empty()) throw Error(Errc::MissingSplit, "no utterances in split '" + opt.split + "'");
    const auto preds = predict_records(head, plda ? &*plda : nullptr, utts, opt.out_csv.stem().string());
    std::map<std::string, std::string> system_of;
    for (const auto& r : records) system_of[r.utt_id] = r.system_id;
    save_predictions(opt.out_csv, preds, system_of);
    out << "wrote " << preds.items.size() << " predictions to " << opt.out_csv.string() << '\n';
    return 0;
  });
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOptions {
  fs::path predictions;
  fs::path manifest;
  std::string level = "both";  // utterance, system or both
  std::optional<fs::path> out_csv;
};

inline void print_report(std::ostream& out, const EvalReport& r) {
  out << level_name(r.level) << ": n=" << r.n << " mse=" << io::format_double(r.mse)
      << " srcc=" << io::format_double(r.srcc) << " pcc=" << io::format_double(r.pcc)
      << " ktau=" << io::format_double(r.ktau) << '\n';
}

inline int cmd_evaluate(const EvaluateOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::vector<Level> levels;
    if (opt.level == "utterance" || opt.level == "both") levels.push_back(Level::utterance);
    if (opt.level == "system" || opt.level == "both") levels.push_back(Level::system);
    if (levels.empty()) throw Error(Errc::InvalidConfig, "--level must be utterance, system or both");
    const auto preds = load_predictions(opt.predictions);
    const auto records = load_manifest(opt.manifest);
    std::vector<EvalReport> reports;
    for (const auto level : levels) {
      reports.push_back(evaluate(preds, records, level));
      print_report(out, reports.back());
    }
    if (opt.out_csv) {
      auto csv = io::open_out(*opt.out_csv);
      csv << "level,n,mse,srcc,pcc,ktau\n";
      for (const auto& r : reports) {
        csv << level_name(r.level) << ',' << r.n << ',' << io::format_double(r.mse) << ','
            << io::format_double(r.srcc) << ',' << io::format_double(r.pcc) << ',' << io::format_double(r.ktau)
            << '\n';
      }
    }
    return 0;
  });
}

// ---------------------------------------------------------------------------
// ensemble

struct EnsembleOptions {
  std::vector<fs::path> predictions;
  fs::path out_csv;
  std::optional<fs::path> manifest;  // enables the leave-one-out report
  std::string level = "system";
};

inline int cmd_ensemble(const EnsembleOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.predictions.empty()) throw Error(Errc::InvalidConfig, "no prediction files given");
    std::vector<PredictionSet> sets;
    for (const auto& p : opt.predictions) sets.push_back(load_predictions(p));
    const auto ens = ensemble(sets, opt.out_csv.stem().string());

    std::map<std::string, std::string> system_of;
    std::vector<UtteranceRecord> records;
    if (opt.manifest) {
      records = load_manifest(*opt.manifest);
      for (const auto& r : records) system_of[r.utt_id] = r.system_id;
    } else {
      // keep the system column of the first member
      auto first = io::read_csv(opt.predictions.front(), kPredictionsHeader);
      for (const auto& row : first) system_of[row.cells[0]] = row.cells[1];
    }
    save_predictions(opt.out_csv, ens, system_of);
    out << "ensembled " << sets.size() << " prediction sets over " << ens.items.size() << " utterances\n";

    if (opt.manifest && sets.size() >= 2) {
      const Level level = opt.level == "utterance" ? Level::utterance : Level::system;
      std::vector<double> member_mse, member_srcc, loo_mse, loo_srcc;
      for (const auto& s : sets) {
        const auto r = evaluate(s, records, level);
        member_mse.push_back(r.mse);
        member_srcc.push_back(r.srcc);
      }
      for (const auto& s : leave_one_out_ensembles(sets)) {
        const auto r = evaluate(s, records, level);
        loo_mse.push_back(r.mse);
        loo_srcc.push_back(r.srcc);
      }
      auto show = [&](const char* what, const std::vector<double>& v) {
        const auto ms = mean_std(v);
        out << what << ": " << io::format_double(ms.mean) << " +- " << io::format_double(ms.std) << '\n';
      };
      out << level_name(level) << "-level, " << sets.size() << " members, " << sets.size() - 1 << "-of-"
          << sets.size() << " ensembles\n";
      show("member mse", member_mse);
      show("member srcc", member_srcc);
      show("ensemble mse", loo_mse);
      show("ensemble srcc", loo_srcc);
    }
    return 0;
  });
}

// ---------------------------------------------------------------------------
// analyze-annotators

struct AnnotatorOptions {
  fs::path manifest;
  fs::path ratings;
  std::vector<std::size_t> group_sizes = {1, 2, 3, 4};
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::optional<fs::path> out_csv;
};

inline int cmd_analyze_annotators(const AnnotatorOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto records = load_manifest(opt.manifest);
    attach_ratings(records, load_ratings(opt.ratings));
    std::vector<UtteranceRecord> rated;
    std::copy_if(records.begin(), records.end(), std::back_inserter(rated),
                 [](const auto& r) { return !r.listener_ratings.empty(); });
    std::optional<std::ofstream> csv;
    if (opt.out_csv) {
      csv = io::open_out(*opt.out_csv);
      *csv << "k,trial,mse_utterance,srcc_utterance,mse_system,srcc_system\n";
    }
    for (const auto k : opt.group_sizes) {
      const auto a = annotator_subsample_analysis(rated, k, opt.trials, opt.seed);
      auto fmt = [](const std::vector<double>& v) {
        const auto ms = mean_std(v);
        return io::format_double(ms.mean) + " +- " + io::format_double(ms.std);
      };
      out << "k=" << k << " utterance mse " << fmt(a.mse_utterance) << ", srcc " << fmt(a.srcc_utterance)
          << "; system mse " << fmt(a.mse_system) << ", srcc " << fmt(a.srcc_system) << '\n';
      if (csv) {
        for (std::size_t t = 0; t < a.mse_utterance.size(); ++t) {
          *csv << k << ',' << t << ',' << io::format_double(a.mse_utterance[t]) << ','
               << io::format_double(a.srcc_utterance[t]) << ',' << io::format_double(a.mse_system[t]) << ','
               << io::format_double(a.srcc_system[t]) << '\n';
        }
      }
    }
    return 0;
  });
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckOptions {
  std::uint64_t seed = 0;
  std::size_t problems = 20;
  double tolerance = 1e-4;
};

inline int cmd_gradcheck(const GradcheckOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    double worst = 0.0;
    std::string where;
    std::size_t checked = 0;
    for (std::size_t i = 0; i < opt.problems; ++i) {
      for (const auto kind : {MosLoss::gauss, MosLoss::clipped_logcosh}) {
        const auto p = random_gradcheck_problem(derive_seed(opt.seed, i), kind);
        const auto r = gradient_check(p.head, p.items, p.cfg);
        checked += r.checked;
        if (r.max_rel_error >= worst) {
          worst = r.max_rel_error;
          where = "problem " + std::to_string(i) + " " + r.worst;
        }
      }
    }
    out << "checked " << checked << " partial derivatives over " << opt.problems
        << " random heads; max relative error " << io::format_double(worst) << " at " << where << '\n';
    if (worst >= opt.tolerance) {
      err << "gradient check failed: " << io::format_double(worst) << " >= " << io::format_double(opt.tolerance)
          << '\n';
      return 4;
    }
    return 0;
  });
}

// ---------------------------------------------------------------------------
// augment

struct AugmentOptions {
  fs::path manifest;
  fs::path noise_table;
  ConfigSource config;
  fs::path out_dir;
  std::string split = "train";
};

/// Writes clean/<utt>.wav and noisy/<utt>.wav plus noisy.csv (the noisy
/// variant table with an empty embedding column, to be filled once the noisy
/// audio has been encoded) and augment.csv with the drawn perturbations.
inline int cmd_augment(const AugmentOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = resolve_config(opt.config);
    const auto split = parse_split(opt.split);
    if (!split) throw Error(Errc::InvalidConfig, "--split must be train, dev or test");
    const auto records = load_manifest(opt.manifest);
    const auto noises = load_noise_table(opt.noise_table);
    const auto acfg = cfg.augment_config();

    auto noisy_csv = io::open_out(opt.out_dir / "noisy.csv");
    noisy_csv << kNoisyHeader << '\n';
    auto log_csv = io::open_out(opt.out_dir / "augment.csv");
    log_csv << "utt_id,volume_factor,tempo_factor,snr_db,noise_class,noise_class_name\n";
    std::size_t n = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      if (r.split != *split || !r.audio_path) continue;
      const auto clip = load_audio(*r.audio_path);
      check_duration(r, clip);
      Rng rng(derive_seed(cfg.seed, i));
      const auto pair = make_training_pair(clip, noises, acfg, rng);
      const auto clean_rel = fs::path("clean") / (r.utt_id + ".wav");
      const auto noisy_rel = fs::path("noisy") / (r.utt_id + ".wav");
      save_audio(opt.out_dir / clean_rel, pair.clean);
      save_audio(opt.out_dir / noisy_rel, pair.noisy);
      noisy_csv << r.utt_id << ",," << noisy_rel.string() << ',' << io::format_double(pair.snr_db) << ','
                << pair.noise_class << ",\n";
      log_csv << r.utt_id << ',' << io::format_double(pair.volume_factor) << ','
              << io::format_double(pair.tempo_factor) << ',' << io::format_double(pair.snr_db) << ','
              << pair.noise_class << ',' << noises.class_names[pair.noise_class] << '\n';
      ++n;
    }
    save_config(opt.out_dir / "augment.config", cfg);
    out << "augmented " << n << " utterances into " << opt.out_dir.string() << '\n';
    return 0;
  });
}

}  // namespace moosenet::cli
