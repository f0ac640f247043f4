// tools/moosenet_cli.cpp

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

#include <CLI11.hpp>

#include <iostream>

#include "moosenet/commands.hpp"

namespace {

using moosenet::cli::ConfigSource;
using moosenet::cli::DataSources;

void add_config(CLI::App* app, ConfigSource& cfg) {
  app->add_option("--config", cfg.file, "key = value config file")->check(CLI::ExistingFile);
  app->add_option("--set", cfg.overrides, "override one config key (key=value), repeatable");
}

void add_data(CLI::App* app, DataSources& d, bool with_noisy) {
  app->add_option("--manifest", d.manifest, "utterance manifest CSV")->required();
  app->add_option("--ratings", d.ratings, "per-listener ratings CSV");
  app->add_option("--aux", d.aux, "auxiliary targets CSV (utt_id,stoi,mcd)");
  if (with_noisy) app->add_option("--noisy", d.noisy, "noisy variant table CSV");
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = moosenet::cli;
  CLI::App app{"MOS prediction head training, PLDA backend and evaluation"};
  app.require_subcommand(1);

  cli::TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "train a predictor head on SSL embeddings");
  add_data(train_cmd, train.data, true);
  add_config(train_cmd, train.config);
  train_cmd->add_option("--out", train.out_checkpoint, "checkpoint to write")->required();
  train_cmd->add_option("--log", train.log, "per-epoch log CSV (default <out>.log.csv)");

  cli::FitPldaOptions plda;
  auto* plda_cmd = app.add_subcommand("fit-plda", "fit the binned-MOS PLDA backend on head features");
  add_data(plda_cmd, plda.data, false);
  add_config(plda_cmd, plda.config);
  plda_cmd->add_option("--checkpoint", plda.checkpoint, "trained head")->required();
  plda_cmd->add_option("--out", plda.out_model, "PLDA model to write")->required();

  cli::PredictOptions predict;
  auto* predict_cmd = app.add_subcommand("predict", "write MOS predictions for one split");
  predict_cmd->add_option("--manifest", predict.manifest, "utterance manifest CSV")->required();
  predict_cmd->add_option("--checkpoint", predict.checkpoint, "trained head")->required();
  predict_cmd->add_option("--plda", predict.plda, "predict through this PLDA backend");
  predict_cmd->add_option("--split", predict.split, "train, dev, test or all")->capture_default_str();
  predict_cmd->add_option("--out", predict.out_csv, "predictions CSV")->required();

  cli::EvaluateOptions evaluate;
  auto* eval_cmd = app.add_subcommand("evaluate", "score predictions against labels");
  eval_cmd->add_option("--predictions", evaluate.predictions, "predictions CSV")->required();
  eval_cmd->add_option("--manifest", evaluate.manifest, "labelled manifest CSV")->required();
  eval_cmd->add_option("--level", evaluate.level, "utterance, system or both")->capture_default_str();
  eval_cmd->add_option("--out", evaluate.out_csv, "metrics CSV");

  cli::EnsembleOptions ens;
  auto* ens_cmd = app.add_subcommand("ensemble", "average several prediction files");
  ens_cmd->add_option("--predictions", ens.predictions, "member predictions CSVs")->required()->expected(1, -1);
  ens_cmd->add_option("--out", ens.out_csv, "ensemble predictions CSV")->required();
  ens_cmd->add_option("--manifest", ens.manifest, "labelled manifest; reports leave-one-out ensembles");
  ens_cmd->add_option("--level", ens.level, "utterance or system")->capture_default_str();

  cli::AnnotatorOptions ann;
  auto* ann_cmd = app.add_subcommand("analyze-annotators", "small listener groups against a held-out group");
  ann_cmd->add_option("--manifest", ann.manifest, "utterance manifest CSV")->required();
  ann_cmd->add_option("--ratings", ann.ratings, "per-listener ratings CSV")->required();
  ann_cmd->add_option("--k", ann.group_sizes, "group sizes to evaluate")->expected(1, -1)->capture_default_str();
  ann_cmd->add_option("--trials", ann.trials, "random partitions per group size")->capture_default_str();
  ann_cmd->add_option("--seed", ann.seed)->capture_default_str();
  ann_cmd->add_option("--out", ann.out_csv, "per-trial CSV");

  cli::GradcheckOptions gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference check of the head gradients");
  gc_cmd->add_option("--seed", gc.seed)->capture_default_str();
  gc_cmd->add_option("--problems", gc.problems, "random heads per MOS loss")->capture_default_str();
  gc_cmd->add_option("--tol", gc.tolerance, "maximum relative error")->capture_default_str();

  cli::AugmentOptions aug;
  auto* aug_cmd = app.add_subcommand("augment", "write clean/noisy training audio pairs");
  aug_cmd->add_option("--manifest", aug.manifest, "utterance manifest CSV")->required();
  aug_cmd->add_option("--noise", aug.noise_table, "noise table CSV")->required();
  aug_cmd->add_option("--out-dir", aug.out_dir, "output directory")->required();
  aug_cmd->add_option("--split", aug.split, "train, dev or test")->capture_default_str();
  add_config(aug_cmd, aug.config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  auto& out = std::cout;
  auto& err = std::cerr;
  if (*train_cmd) return cli::cmd_train(train, out, err);
  if (*plda_cmd) return cli::cmd_fit_plda(plda, out, err);
  if (*predict_cmd) return cli::cmd_predict(predict, out, err);
  if (*eval_cmd) return cli::cmd_evaluate(evaluate, out, err);
  if (*ens_cmd) return cli::cmd_ensemble(ens, out, err);
  if (*ann_cmd) return cli::cmd_analyze_annotators(ann, out, err);
  if (*gc_cmd) return cli::cmd_gradcheck(gc, out, err);
  if (*aug_cmd) return cli::cmd_augment(aug, out, err);
  return 2;
}
