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

#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "factopic/classify.hpp"
#include "factopic/corpus.hpp"
#include "factopic/model.hpp"
#include "factopic/model_io.hpp"
#include "factopic/report.hpp"
#include "factopic/sampler.hpp"
#include "factopic/synthetic.hpp"

namespace factopic::cli {

namespace fs = std::filesystem;

inline std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

struct TrainConfig {
  std::string docword;
  std::string labels;
  std::string vocab;
  Hyperparams hp;
  std::optional<double> tau;
  int chains = 1;
  std::string out_dir = ".";
  bool quiet = false;
};

/// Trains and writes the full artifact set: model.flda, diag.csv,
/// theta_class.csv, theta_class.pgm (+ sidecar), segmentation.txt.
inline int run_train(const TrainConfig& cfg, std::ostream& log = std::cout) {
  cfg.hp.validate();  // fail before any corpus work
  Corpus corpus = load_corpus(cfg.docword, cfg.labels, cfg.vocab);
  if (!cfg.quiet)
    log << "corpus: " << corpus.num_documents() << " documents, " << corpus.vocabulary.size()
        << " terms, " << corpus.num_classes << " classes\n";

  TrainResult result = train_best_of(corpus, cfg.hp, cfg.chains, cfg.tau);

  ensure_dir(cfg.out_dir);
  save_model(result.model, join(cfg.out_dir, "model.flda"));
  write_diagnostics_csv(result.diagnostics, join(cfg.out_dir, "diag.csv"));
  write_theta_class_csv(result.model, join(cfg.out_dir, "theta_class.csv"));
  emit_heatmap(result.model, join(cfg.out_dir, "theta_class.pgm"));
  write_segmentation_summary(result.model, join(cfg.out_dir, "segmentation.txt"));

  if (!cfg.quiet) {
    log << "trained " << (cfg.hp.factorized ? "factorized" : "regular") << " model: H_bar="
        << detail::fmt_full(result.model.h_bar)
        << " private=" << result.model.segmentation.private_topics.size()
        << " shared=" << result.model.segmentation.shared_topics.size()
        << " tau=" << detail::fmt_full(result.model.segmentation.tau) << '\n';
    log << "outputs in " << cfg.out_dir << '\n';
  }
  return 0;
}

/// Loads docword/labels against the model's vocabulary and class names.
/// An explicit vocab file, when given, must match the model's exactly.
inline Corpus load_test_corpus(const TrainedModel& model, const std::string& docword,
                               const std::string& labels, const std::string& vocab) {
  if (!vocab.empty()) {
    Vocabulary from_file = load_vocabulary(vocab);
    if (from_file.terms != model.vocabulary.terms)
      throw ValidationError(vocab + ": vocabulary does not match the model's");
  }
  LoadOptions opts;
  opts.require_all_classes = false;
  opts.class_names = &model.class_names;
  Corpus corpus = load_corpus_docs(docword, labels, model.vocabulary, opts);
  corpus.num_classes = model.num_classes();
  corpus.class_names = model.class_names;
  return corpus;
}

struct ClassifyConfig {
  std::string model_path;
  std::string docword;
  std::string labels;  // optional; enables an accuracy line
  std::string vocab;   // optional; checked against the model
  std::string out_dir = ".";
  bool quiet = false;
};

/// Writes predictions.csv: document id, predicted class, and the per-class
/// log-likelihoods.
inline int run_classify(const ClassifyConfig& cfg, std::ostream& log = std::cout) {
  TrainedModel model = load_model(cfg.model_path);

  Corpus test;
  if (!cfg.labels.empty()) {
    test = load_test_corpus(model, cfg.docword, cfg.labels, cfg.vocab);
  } else {
    // no labels: feed the loader an all-zero labels file, with the model's
    // class list keeping the class count intact
    ensure_dir(cfg.out_dir);
    const std::string tmp_labels = join(cfg.out_dir, ".classify_labels.tmp");
    {
      std::vector<std::string> lines = detail::read_lines(cfg.docword);
      long long num_docs = 0;
      if (lines.empty() || !detail::parse_int(lines[0], num_docs))
        throw ValidationError(cfg.docword + ": malformed document-count header at line 1");
      std::ofstream tmp(tmp_labels, std::ios::binary);
      if (!tmp) throw IoError("cannot write " + tmp_labels);
      for (long long i = 0; i < num_docs; ++i) tmp << 0 << '\n';
    }
    test = load_test_corpus(model, cfg.docword, tmp_labels, cfg.vocab);
    fs::remove(tmp_labels);
  }

  ensure_dir(cfg.out_dir);
  const std::string out_path = join(cfg.out_dir, "predictions.csv");
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + out_path);
  out << "doc,predicted";
  for (int c = 0; c < model.num_classes(); ++c) out << ",loglik_" << model.class_name(c);
  out << '\n';
  std::int64_t correct = 0;
  for (int m = 0; m < test.num_documents(); ++m) {
    Classification result = classify(test.documents[static_cast<std::size_t>(m)], model);
    out << (m + 1) << ',' << model.class_name(result.label);
    for (double ll : result.log_likelihood) out << ',' << detail::fmt_full(ll);
    out << '\n';
    if (result.label == test.documents[static_cast<std::size_t>(m)].label) ++correct;
  }
  if (!out) throw IoError("write error on " + out_path);
  if (!cfg.quiet) {
    log << "classified " << test.num_documents() << " documents -> " << out_path << '\n';
    if (!cfg.labels.empty() && test.num_documents() > 0)
      log << "accuracy: "
          << static_cast<double>(correct) / static_cast<double>(test.num_documents()) << '\n';
  }
  return 0;
}

enum class HoldoutMode { fixed, hold_one_out, condition };

struct EvalConfig {
  std::string model_path;  // fixed mode
  std::string docword;
  std::string labels;
  std::string vocab;
  std::string out_dir = ".";
  HoldoutMode mode = HoldoutMode::fixed;
  std::string tags_path;   // condition mode
  Hyperparams hp;          // retraining modes
  std::optional<double> tau;
  int chains = 1;
  bool quiet = false;
};

/// Fixed mode evaluates a trained model on a test corpus. The holdout
/// modes retrain per fold (seeded per fold from the base seed) and
/// aggregate one report across folds.
inline int run_eval(const EvalConfig& cfg, std::ostream& log = std::cout) {
  ensure_dir(cfg.out_dir);
  const std::string report_path = join(cfg.out_dir, "report.txt");

  if (cfg.mode == HoldoutMode::fixed) {
    TrainedModel model = load_model(cfg.model_path);
    Corpus test = load_test_corpus(model, cfg.docword, cfg.labels, cfg.vocab);
    EvalReport report = evaluate(test, model);
    write_eval_report(report, model, report_path);
    if (!cfg.quiet) write_eval_report(report, model, log);
    return 0;
  }

  cfg.hp.validate();
  Corpus corpus = load_corpus(cfg.docword, cfg.labels, cfg.vocab);
  std::vector<Fold> folds;
  if (cfg.mode == HoldoutMode::hold_one_out) {
    folds = hold_one_out_folds(corpus);
  } else {
    folds = condition_holdout_folds(corpus, load_condition_tags(cfg.tags_path));
  }

  EvalReport total;
  total.confusion = Mat<std::int64_t>(static_cast<std::size_t>(corpus.num_classes),
                                      static_cast<std::size_t>(corpus.num_classes));
  TrainedModel last_model;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    Corpus fold_train = subcorpus(corpus, folds[f].train_docs);
    Corpus fold_test = subcorpus(corpus, folds[f].test_docs);
    Hyperparams fold_hp = cfg.hp;
    fold_hp.seed = mix_seed(cfg.hp.seed, f);
    TrainResult result = train_best_of(fold_train, fold_hp, cfg.chains, cfg.tau);
    EvalReport fold_report = evaluate(fold_test, result.model);
    for (std::size_t i = 0; i < total.confusion.flat().size(); ++i)
      total.confusion.flat()[i] += fold_report.confusion.flat()[i];
    total.n_test += fold_report.n_test;
    last_model = std::move(result.model);
    if (!cfg.quiet)
      log << "fold " << (f + 1) << '/' << folds.size() << ": accuracy "
          << fold_report.accuracy << " on " << fold_report.n_test << " documents\n";
  }
  std::int64_t correct = 0;
  total.per_class_accuracy.assign(static_cast<std::size_t>(corpus.num_classes), 0.0);
  for (int c = 0; c < corpus.num_classes; ++c) {
    const std::size_t uc = static_cast<std::size_t>(c);
    std::int64_t row = 0;
    for (int p = 0; p < corpus.num_classes; ++p)
      row += total.confusion(uc, static_cast<std::size_t>(p));
    correct += total.confusion(uc, uc);
    if (row > 0)
      total.per_class_accuracy[uc] =
          static_cast<double>(total.confusion(uc, uc)) / static_cast<double>(row);
  }
  total.accuracy =
      total.n_test > 0 ? static_cast<double>(correct) / static_cast<double>(total.n_test) : 0.0;
  write_eval_report(total, last_model, report_path);
  if (!cfg.quiet) write_eval_report(total, last_model, log);
  return 0;
}

struct InspectConfig {
  std::string model_path;
  int top_n = 10;
};

inline int run_inspect(const InspectConfig& cfg, std::ostream& out = std::cout) {
  if (cfg.top_n < 0) throw ValidationError("top-n must be >= 0");
  TrainedModel model = load_model(cfg.model_path);
  render_inspect(model, cfg.top_n, out);
  return 0;
}

struct SynthConfig {
  SyntheticSpec spec;
  std::string out_dir = ".";
  std::string prefix = "synth";
  bool quiet = false;
};

/// Writes <prefix>.docword/.labels/.vocab plus <prefix>.truth.
inline int run_synth(const SynthConfig& cfg, std::ostream& log = std::cout) {
  cfg.spec.validate();
  auto [corpus, truth] = generate_synthetic(cfg.spec);
  ensure_dir(cfg.out_dir);
  save_corpus(corpus, join(cfg.out_dir, cfg.prefix + ".docword"),
              join(cfg.out_dir, cfg.prefix + ".labels"),
              join(cfg.out_dir, cfg.prefix + ".vocab"));
  save_ground_truth(truth, join(cfg.out_dir, cfg.prefix + ".truth"));
  if (!cfg.quiet)
    log << "wrote " << corpus.num_documents() << " documents over "
        << corpus.vocabulary.size() << " terms to " << cfg.out_dir << '/' << cfg.prefix
        << ".{docword,labels,vocab,truth}\n";
  return 0;
}

}  // namespace factopic::cli
