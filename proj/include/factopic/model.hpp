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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "factopic/corpus.hpp"
#include "factopic/errors.hpp"
#include "factopic/factorization.hpp"
#include "factopic/matrix.hpp"
#include "factopic/rng.hpp"

namespace factopic {

struct Hyperparams {
  int num_topics = 0;        // K
  double alpha = 0.1;        // document-topic concentration, shared by all classes
  double pi = 0.1;           // topic-word concentration
  bool factorized = false;   // enables the entropy prior and auto-annealing
  int iterations = 2000;
  int burn_in = 1000;
  int sample_every = 10;     // thinning interval for estimator snapshots
  std::uint64_t seed = 0;

  void validate() const {
    if (num_topics < 2) throw ValidationError("need at least 2 topics");
    if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
    if (!(pi > 0.0)) throw ValidationError("pi must be positive");
    if (iterations < 1) throw ValidationError("iterations must be positive");
    if (burn_in < 0 || burn_in >= iterations)
      throw ValidationError("burn-in must be in [0, iterations)");
    if (sample_every < 1) throw ValidationError("sample-every must be >= 1");
  }
};

/// Mutable state of one collapsed Gibbs chain. The count matrices are
/// redundant views of the assignments, kept incrementally; the per-class
/// table makes the entropy prior cheap to evaluate during sampling.
struct ModelState {
  std::vector<std::vector<int>> assignments;  // per doc, per token, aligned with expand_tokens
  Mat<int> doc_topic;                         // M x K
  Mat<int> topic_word;                        // K x V
  std::vector<int> topic_total;               // K
  Mat<int> class_topic;                       // C x K token counts by document class
  std::vector<int> docs_per_class;            // C
  double h_bar = 1.0;                         // frozen between sweeps
  int iteration = 0;

  int num_topics() const { return static_cast<int>(topic_total.size()); }
};

/// Canonical token expansion: documents in order, each document's tokens
/// in ascending term order with multiplicity. Sampling visits tokens in
/// exactly this order.
inline std::vector<std::vector<int>> expand_tokens(const Corpus& corpus) {
  std::vector<std::vector<int>> tokens(corpus.documents.size());
  for (std::size_t m = 0; m < corpus.documents.size(); ++m) {
    const Document& doc = corpus.documents[m];
    tokens[m].reserve(static_cast<std::size_t>(doc.length));
    for (const auto& [term, count] : doc.counts)
      for (int i = 0; i < count; ++i) tokens[m].push_back(term);
  }
  return tokens;
}

/// Smoothed class mass of every topic: N_ck + M_c * alpha. Column k of the
/// result is the input to the topic entropy during training.
inline Mat<double> class_masses(const ModelState& state, const Hyperparams& hp) {
  const std::size_t num_classes = state.class_topic.rows();
  const std::size_t num_topics = state.class_topic.cols();
  Mat<double> mass(num_classes, num_topics);
  for (std::size_t c = 0; c < num_classes; ++c) {
    double smoothing = static_cast<double>(state.docs_per_class[c]) * hp.alpha;
    for (std::size_t k = 0; k < num_topics; ++k)
      mass(c, k) = static_cast<double>(state.class_topic(c, k)) + smoothing;
  }
  return mass;
}

/// Per-topic entropies of the smoothed class-mass columns and their mean.
inline std::pair<std::vector<double>, double> training_entropies(const ModelState& state,
                                                                 const Hyperparams& hp) {
  Mat<double> mass = class_masses(state, hp);
  std::vector<double> entropies(mass.cols());
  std::vector<double> column(mass.rows());
  double sum = 0.0;
  for (std::size_t k = 0; k < mass.cols(); ++k) {
    for (std::size_t c = 0; c < mass.rows(); ++c) column[c] = mass(c, k);
    entropies[k] = topic_entropy(column);
    sum += entropies[k];
  }
  return {std::move(entropies), sum / static_cast<double>(mass.cols())};
}

/// Builds count matrices from explicit assignments. The assignment layout
/// must match expand_tokens(corpus).
inline ModelState rebuild_state(const Corpus& corpus, const Hyperparams& hp,
                                std::vector<std::vector<int>> assignments) {
  const int num_topics = hp.num_topics;
  const int num_docs = corpus.num_documents();
  const int vocab_size = corpus.vocabulary.size();

  ModelState state;
  state.doc_topic = Mat<int>(static_cast<std::size_t>(num_docs),
                             static_cast<std::size_t>(num_topics));
  state.topic_word = Mat<int>(static_cast<std::size_t>(num_topics),
                              static_cast<std::size_t>(vocab_size));
  state.topic_total.assign(static_cast<std::size_t>(num_topics), 0);
  state.class_topic = Mat<int>(static_cast<std::size_t>(corpus.num_classes),
                               static_cast<std::size_t>(num_topics));
  state.docs_per_class = class_document_counts(corpus);

  auto tokens = expand_tokens(corpus);
  if (assignments.size() != tokens.size())
    throw ValidationError("assignment rows do not match document count");
  for (std::size_t m = 0; m < tokens.size(); ++m) {
    if (assignments[m].size() != tokens[m].size())
      throw ValidationError("assignment row " + std::to_string(m) +
                            " does not match document length");
    const int label = corpus.documents[m].label;
    for (std::size_t i = 0; i < tokens[m].size(); ++i) {
      int k = assignments[m][i];
      if (k < 0 || k >= num_topics) throw ValidationError("topic assignment out of range");
      ++state.doc_topic(m, static_cast<std::size_t>(k));
      ++state.topic_word(static_cast<std::size_t>(k),
                         static_cast<std::size_t>(tokens[m][i]));
      ++state.topic_total[static_cast<std::size_t>(k)];
      ++state.class_topic(static_cast<std::size_t>(label), static_cast<std::size_t>(k));
    }
  }
  state.assignments = std::move(assignments);
  state.h_bar = training_entropies(state, hp).second;
  return state;
}

/// Assigns every token a uniformly random topic and builds the counts.
inline ModelState init_state(const Corpus& corpus, const Hyperparams& hp, Rng& rng) {
  hp.validate();
  if (corpus.num_classes < 2) throw ValidationError("corpus needs at least 2 classes");
  std::vector<std::vector<int>> assignments(corpus.documents.size());
  for (std::size_t m = 0; m < corpus.documents.size(); ++m) {
    assignments[m].resize(static_cast<std::size_t>(corpus.documents[m].length));
    for (int& z : assignments[m])
      z = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(hp.num_topics)));
  }
  return rebuild_state(corpus, hp, std::move(assignments));
}

/// Verifies the four count-consistency invariants against the corpus.
/// Throws on the first violation. Cheap enough to run after every sweep
/// in tests.
inline void check_consistency(const ModelState& state, const Corpus& corpus) {
  const std::size_t num_docs = state.doc_topic.rows();
  const std::size_t num_topics = state.doc_topic.cols();
  if (num_docs != corpus.documents.size())
    throw ValidationError("state/corpus document count mismatch");

  std::vector<std::int64_t> topic_from_docs(num_topics, 0);
  for (std::size_t m = 0; m < num_docs; ++m) {
    std::int64_t row_sum = 0;
    for (std::size_t k = 0; k < num_topics; ++k) {
      int v = state.doc_topic(m, k);
      if (v < 0) throw ValidationError("negative doc-topic count");
      row_sum += v;
      topic_from_docs[k] += v;
    }
    if (row_sum != corpus.documents[m].length)
      throw ValidationError("doc-topic row " + std::to_string(m) +
                            " does not sum to document length");
  }
  for (std::size_t k = 0; k < num_topics; ++k) {
    std::int64_t word_sum = 0;
    for (std::size_t v = 0; v < state.topic_word.cols(); ++v) {
      int n = state.topic_word(k, v);
      if (n < 0) throw ValidationError("negative topic-word count");
      word_sum += n;
    }
    if (word_sum != state.topic_total[k] || topic_from_docs[k] != state.topic_total[k])
      throw ValidationError("topic " + std::to_string(k) + " totals disagree");
    std::int64_t class_sum = 0;
    for (std::size_t c = 0; c < state.class_topic.rows(); ++c) {
      int n = state.class_topic(c, k);
      if (n < 0) throw ValidationError("negative class-topic count");
      class_sum += n;
    }
    if (class_sum != state.topic_total[k])
      throw ValidationError("class-topic column " + std::to_string(k) +
                            " does not sum to topic total");
  }
}

/// Posterior-mean topic-word estimate: (n_kv + pi) / (n_k + V*pi).
/// Strictly positive, rows sum to 1.
inline Mat<double> estimate_beta(const ModelState& state, const Hyperparams& hp) {
  const std::size_t num_topics = state.topic_word.rows();
  const std::size_t vocab_size = state.topic_word.cols();
  Mat<double> beta(num_topics, vocab_size);
  for (std::size_t k = 0; k < num_topics; ++k) {
    double denom = static_cast<double>(state.topic_total[k]) +
                   static_cast<double>(vocab_size) * hp.pi;
    for (std::size_t v = 0; v < vocab_size; ++v)
      beta(k, v) = (static_cast<double>(state.topic_word(k, v)) + hp.pi) / denom;
  }
  return beta;
}

/// Posterior-mean document-topic estimate: (n_dk + alpha) / (N_d + K*alpha).
inline Mat<double> estimate_theta(const ModelState& state, const Hyperparams& hp) {
  const std::size_t num_docs = state.doc_topic.rows();
  const std::size_t num_topics = state.doc_topic.cols();
  Mat<double> theta(num_docs, num_topics);
  for (std::size_t m = 0; m < num_docs; ++m) {
    std::int64_t length = 0;
    for (std::size_t k = 0; k < num_topics; ++k) length += state.doc_topic(m, k);
    double denom = static_cast<double>(length) + static_cast<double>(num_topics) * hp.alpha;
    for (std::size_t k = 0; k < num_topics; ++k)
      theta(m, k) = (static_cast<double>(state.doc_topic(m, k)) + hp.alpha) / denom;
  }
  return theta;
}

/// Per-class topic distribution: row c sums the theta rows of class-c
/// documents, renormalized to 1.
inline Mat<double> compute_theta_class(const Mat<double>& theta, std::span<const int> labels,
                                       int num_classes) {
  if (theta.rows() != labels.size())
    throw ValidationError("theta rows do not match label count");
  Mat<double> theta_class(static_cast<std::size_t>(num_classes), theta.cols());
  std::vector<std::int64_t> docs(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t m = 0; m < theta.rows(); ++m) {
    int c = labels[m];
    if (c < 0 || c >= num_classes) throw ValidationError("label out of range");
    ++docs[static_cast<std::size_t>(c)];
    for (std::size_t k = 0; k < theta.cols(); ++k)
      theta_class(static_cast<std::size_t>(c), k) += theta(m, k);
  }
  for (int c = 0; c < num_classes; ++c) {
    if (docs[static_cast<std::size_t>(c)] == 0)
      throw ValidationError("class " + std::to_string(c) + " has no documents");
    double row_sum = 0.0;
    for (std::size_t k = 0; k < theta.cols(); ++k)
      row_sum += theta_class(static_cast<std::size_t>(c), k);
    for (std::size_t k = 0; k < theta.cols(); ++k)
      theta_class(static_cast<std::size_t>(c), k) /= row_sum;
  }
  return theta_class;
}

/// Point estimates, per-topic entropies, and the topic-space split of a
/// finished training run. Immutable; safe to share across threads.
struct TrainedModel {
  Mat<double> beta;         // K x V, row-stochastic
  Mat<double> theta_class;  // C x K, row-stochastic
  std::vector<double> entropies;  // H per topic, over theta_class columns
  double h_bar = 0.0;
  Hyperparams hyperparams;
  Vocabulary vocabulary;
  std::vector<std::string> class_names;
  Segmentation segmentation;

  int num_topics() const { return static_cast<int>(beta.rows()); }
  int num_classes() const { return static_cast<int>(theta_class.rows()); }
  int vocab_size() const { return static_cast<int>(beta.cols()); }

  std::string class_name(int c) const {
    if (c >= 0 && c < static_cast<int>(class_names.size())) return class_names[c];
    return std::to_string(c);
  }
};

/// Running sums of the per-snapshot estimators; snapshots weigh equally.
class EstimatorAccumulator {
 public:
  void add(const ModelState& state, const Hyperparams& hp) {
    Mat<double> beta = estimate_beta(state, hp);
    Mat<double> theta = estimate_theta(state, hp);
    if (count_ == 0) {
      beta_sum_ = std::move(beta);
      theta_sum_ = std::move(theta);
    } else {
      for (std::size_t i = 0; i < beta_sum_.flat().size(); ++i)
        beta_sum_.flat()[i] += beta.flat()[i];
      for (std::size_t i = 0; i < theta_sum_.flat().size(); ++i)
        theta_sum_.flat()[i] += theta.flat()[i];
    }
    ++count_;
  }

  int count() const { return count_; }

  Mat<double> mean_beta() const { return divide(beta_sum_); }
  Mat<double> mean_theta() const { return divide(theta_sum_); }

 private:
  Mat<double> divide(const Mat<double>& sum) const {
    if (count_ == 0) throw ValidationError("no snapshots collected");
    Mat<double> out = sum;
    for (double& x : out.flat()) x /= static_cast<double>(count_);
    return out;
  }

  Mat<double> beta_sum_;
  Mat<double> theta_sum_;
  int count_ = 0;
};

/// Assembles the final model from accumulated snapshots: averaged
/// estimators, per-class distribution, entropies recomputed from it, and
/// the topic-space segmentation.
inline TrainedModel finalize_model(const EstimatorAccumulator& acc, const Corpus& corpus,
                                   const Hyperparams& hp,
                                   std::optional<double> tau = std::nullopt) {
  TrainedModel model;
  model.beta = acc.mean_beta();
  Mat<double> theta = acc.mean_theta();

  std::vector<int> labels(corpus.documents.size());
  for (std::size_t m = 0; m < corpus.documents.size(); ++m)
    labels[m] = corpus.documents[m].label;
  model.theta_class = compute_theta_class(theta, labels, corpus.num_classes);

  model.entropies.resize(model.theta_class.cols());
  double sum = 0.0;
  for (std::size_t k = 0; k < model.theta_class.cols(); ++k) {
    model.entropies[k] = topic_entropy(model.theta_class.col(k));
    sum += model.entropies[k];
  }
  model.h_bar = sum / static_cast<double>(model.entropies.size());
  model.hyperparams = hp;
  model.vocabulary = corpus.vocabulary;
  model.class_names = corpus.class_names;
  model.segmentation = segment_topics(model.entropies, tau);
  return model;
}

/// Convenience overload over explicit snapshots (all post-burn-in).
inline TrainedModel finalize_model(std::span<const ModelState> snapshots, const Corpus& corpus,
                                   const Hyperparams& hp,
                                   std::optional<double> tau = std::nullopt) {
  if (snapshots.empty()) throw ValidationError("no snapshots collected");
  EstimatorAccumulator acc;
  for (const ModelState& s : snapshots) acc.add(s, hp);
  return finalize_model(acc, corpus, hp, tau);
}

}  // namespace factopic
