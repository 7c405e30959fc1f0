// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "factopic/cli.hpp"

namespace {

void add_hyperparam_flags(CLI::App* cmd, factopic::Hyperparams& hp, int& chains,
                          std::optional<double>& tau) {
  cmd->add_option("--topics", hp.num_topics, "number of topics K")->required();
  cmd->add_option("--alpha", hp.alpha, "document-topic concentration")
      ->capture_default_str();
  cmd->add_option("--pi", hp.pi, "topic-word concentration")->capture_default_str();
  cmd->add_flag("--factorized", hp.factorized,
                "train with the entropy prior (off: regular LDA baseline)");
  cmd->add_option("--iters", hp.iterations, "Gibbs sweeps")->capture_default_str();
  cmd->add_option("--burnin", hp.burn_in, "sweeps discarded before sampling")
      ->capture_default_str();
  cmd->add_option("--sample-every", hp.sample_every, "thinning interval for snapshots")
      ->capture_default_str();
  cmd->add_option("--seed", hp.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--chains", chains, "independent chains; the best joint wins")
      ->capture_default_str();
  cmd->add_option("--tau", tau, "fixed segmentation threshold (default: largest gap)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"factopic: factorized topic modeling for document classification"};
  app.require_subcommand(1);

  factopic::cli::TrainConfig train_cfg;
  CLI::App* train = app.add_subcommand("train", "train a model on a bag-of-words corpus");
  train->add_option("--docword", train_cfg.docword, "docword file")->required();
  train->add_option("--labels", train_cfg.labels, "labels file")->required();
  train->add_option("--vocab", train_cfg.vocab, "vocabulary file")->required();
  add_hyperparam_flags(train, train_cfg.hp, train_cfg.chains, train_cfg.tau);
  train->add_option("--out", train_cfg.out_dir, "output directory")->required();
  train->add_flag("--quiet", train_cfg.quiet, "suppress progress output");

  factopic::cli::ClassifyConfig classify_cfg;
  CLI::App* classify = app.add_subcommand("classify", "predict classes for new documents");
  classify->add_option("--model", classify_cfg.model_path, "model file")->required();
  classify->add_option("--docword", classify_cfg.docword, "docword file")->required();
  classify->add_option("--labels", classify_cfg.labels, "labels file (optional, for accuracy)");
  classify->add_option("--vocab", classify_cfg.vocab, "vocabulary file (checked vs model)");
  classify->add_option("--out", classify_cfg.out_dir, "output directory")->required();
  classify->add_flag("--quiet", classify_cfg.quiet, "suppress progress output");

  factopic::cli::EvalConfig eval_cfg;
  std::string holdout;
  CLI::App* eval = app.add_subcommand("eval", "evaluate on a test set or holdout protocol");
  eval->add_option("--model", eval_cfg.model_path, "model file (fixed split mode)");
  eval->add_option("--docword", eval_cfg.docword, "docword file")->required();
  eval->add_option("--labels", eval_cfg.labels, "labels file")->required();
  eval->add_option("--vocab", eval_cfg.vocab, "vocabulary file");
  eval->add_option("--holdout", holdout, "holdout protocol: one-out or condition");
  eval->add_option("--tags", eval_cfg.tags_path, "condition tags file (condition mode)");
  eval->add_option("--out", eval_cfg.out_dir, "output directory")->required();
  eval->add_flag("--quiet", eval_cfg.quiet, "suppress progress output");
  // retraining flags for the holdout modes
  eval_cfg.hp.num_topics = 0;
  eval->add_option("--topics", eval_cfg.hp.num_topics, "number of topics K (holdout modes)");
  eval->add_option("--alpha", eval_cfg.hp.alpha, "document-topic concentration")
      ->capture_default_str();
  eval->add_option("--pi", eval_cfg.hp.pi, "topic-word concentration")->capture_default_str();
  eval->add_flag("--factorized", eval_cfg.hp.factorized, "train with the entropy prior");
  eval->add_option("--iters", eval_cfg.hp.iterations, "Gibbs sweeps")->capture_default_str();
  eval->add_option("--burnin", eval_cfg.hp.burn_in, "sweeps discarded before sampling")
      ->capture_default_str();
  eval->add_option("--sample-every", eval_cfg.hp.sample_every, "thinning interval")
      ->capture_default_str();
  eval->add_option("--seed", eval_cfg.hp.seed, "RNG seed")->capture_default_str();
  eval->add_option("--chains", eval_cfg.chains, "independent chains per fold")
      ->capture_default_str();
  eval->add_option("--tau", eval_cfg.tau, "fixed segmentation threshold");

  factopic::cli::InspectConfig inspect_cfg;
  CLI::App* inspect = app.add_subcommand("inspect", "print topics, roles, and stop words");
  inspect->add_option("--model", inspect_cfg.model_path, "model file")->required();
  inspect->add_option("--top", inspect_cfg.top_n, "terms per topic")->capture_default_str();

  factopic::cli::SynthConfig synth_cfg;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
  synth->add_option("--classes", synth_cfg.spec.num_classes, "number of classes")
      ->capture_default_str();
  synth->add_option("--private-per-class", synth_cfg.spec.private_topics_per_class,
                    "private topics per class")
      ->capture_default_str();
  synth->add_option("--shared", synth_cfg.spec.shared_topics, "shared topics")
      ->capture_default_str();
  synth->add_option("--vocab-size", synth_cfg.spec.vocab_size, "vocabulary size")
      ->capture_default_str();
  synth->add_option("--docs-per-class", synth_cfg.spec.docs_per_class, "documents per class")
      ->capture_default_str();
  synth->add_option("--doc-length", synth_cfg.spec.doc_length, "tokens per document")
      ->capture_default_str();
  synth->add_option("--lambda", synth_cfg.spec.noise_fraction,
                    "expected fraction of shared-topic tokens")
      ->capture_default_str();
  synth->add_option("--concentration", synth_cfg.spec.topic_word_concentration,
                    "Dirichlet concentration for topic-word rows")
      ->capture_default_str();
  synth->add_option("--seed", synth_cfg.spec.seed, "RNG seed")->capture_default_str();
  synth->add_option("--out", synth_cfg.out_dir, "output directory")->required();
  synth->add_option("--prefix", synth_cfg.prefix, "output file prefix")->capture_default_str();
  synth->add_flag("--quiet", synth_cfg.quiet, "suppress progress output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return factopic::cli::run_train(train_cfg);
    if (classify->parsed()) return factopic::cli::run_classify(classify_cfg);
    if (eval->parsed()) {
      if (holdout.empty())
        eval_cfg.mode = factopic::cli::HoldoutMode::fixed;
      else if (holdout == "one-out")
        eval_cfg.mode = factopic::cli::HoldoutMode::hold_one_out;
      else if (holdout == "condition")
        eval_cfg.mode = factopic::cli::HoldoutMode::condition;
      else
        throw factopic::ValidationError("unknown holdout mode '" + holdout + "'");
      if (eval_cfg.mode == factopic::cli::HoldoutMode::fixed && eval_cfg.model_path.empty())
        throw factopic::ValidationError("--model is required without --holdout");
      if (eval_cfg.mode == factopic::cli::HoldoutMode::condition && eval_cfg.tags_path.empty())
        throw factopic::ValidationError("--tags is required with --holdout condition");
      if (eval_cfg.mode != factopic::cli::HoldoutMode::fixed && eval_cfg.vocab.empty())
        throw factopic::ValidationError("--vocab is required with --holdout");
      return factopic::cli::run_eval(eval_cfg);
    }
    if (inspect->parsed()) return factopic::cli::run_inspect(inspect_cfg);
    if (synth->parsed()) return factopic::cli::run_synth(synth_cfg);
  } catch (const factopic::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const factopic::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
