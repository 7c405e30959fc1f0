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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "factopic/corpus.hpp"
#include "factopic/errors.hpp"
#include "factopic/matrix.hpp"
#include "factopic/model.hpp"

namespace factopic {

/// Log-likelihood of a document under one class: each token contributes
/// log of the class mixture sum_k theta_class[c,k] * beta[k,v]. Both
/// factors are strictly positive by smoothing, so the value is finite;
/// topics spread evenly over classes contribute equally to every class
/// and cancel out of the comparison.
inline double doc_log_likelihood(const Document& doc, int label, const TrainedModel& model) {
  if (label < 0 || label >= model.num_classes())
    throw ValidationError("class index out of range");
  const std::size_t uc = static_cast<std::size_t>(label);
  const int num_topics = model.num_topics();
  double acc = 0.0;
  for (const auto& [term, count] : doc.counts) {
    if (term < 0 || term >= model.vocab_size())
      throw ValidationError("term index " + std::to_string(term) +
                            " outside the model vocabulary");
    double mix = 0.0;
    for (int k = 0; k < num_topics; ++k) {
      const std::size_t uk = static_cast<std::size_t>(k);
      mix += model.theta_class(uc, uk) * model.beta(uk, static_cast<std::size_t>(term));
    }
    acc += static_cast<double>(count) * std::log(mix);
  }
  return acc;
}

struct Classification {
  int label = 0;
  std::vector<double> log_likelihood;  // length C
};

/// Maximum-likelihood class; ties break toward the lowest class index.
/// An empty document scores 0 for every class and lands in class 0.
inline Classification classify(const Document& doc, const TrainedModel& model) {
  Classification out;
  out.log_likelihood.resize(static_cast<std::size_t>(model.num_classes()));
  for (int c = 0; c < model.num_classes(); ++c)
    out.log_likelihood[static_cast<std::size_t>(c)] = doc_log_likelihood(doc, c, model);
  out.label = static_cast<int>(std::max_element(out.log_likelihood.begin(),
                                                out.log_likelihood.end()) -
                               out.log_likelihood.begin());
  return out;
}

struct EvalReport {
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;  // 0 for classes with no test documents
  Mat<std::int64_t> confusion;             // rows = true class, cols = predicted
  std::int64_t n_test = 0;
};

/// Classifies every test document and aggregates accuracy and the
/// confusion matrix. Test labels must fit the model's class range.
inline EvalReport evaluate(const Corpus& test, const TrainedModel& model) {
  const int num_classes = model.num_classes();
  EvalReport report;
  report.confusion = Mat<std::int64_t>(static_cast<std::size_t>(num_classes),
                                       static_cast<std::size_t>(num_classes));
  for (const Document& doc : test.documents) {
    if (doc.label < 0 || doc.label >= num_classes)
      throw ValidationError("test label " + std::to_string(doc.label) +
                            " exceeds the model's class count");
    int predicted = classify(doc, model).label;
    ++report.confusion(static_cast<std::size_t>(doc.label),
                       static_cast<std::size_t>(predicted));
    ++report.n_test;
  }
  report.per_class_accuracy.resize(static_cast<std::size_t>(num_classes), 0.0);
  std::int64_t correct = 0;
  for (int c = 0; c < num_classes; ++c) {
    const std::size_t uc = static_cast<std::size_t>(c);
    std::int64_t row = 0;
    for (int p = 0; p < num_classes; ++p) row += report.confusion(uc, static_cast<std::size_t>(p));
    correct += report.confusion(uc, uc);
    if (row > 0)
      report.per_class_accuracy[uc] =
          static_cast<double>(report.confusion(uc, uc)) / static_cast<double>(row);
  }
  report.accuracy =
      report.n_test > 0 ? static_cast<double>(correct) / static_cast<double>(report.n_test) : 0.0;
  return report;
}

/// One train/test split by document index into a common corpus.
struct Fold {
  std::vector<int> train_docs;
  std::vector<int> test_docs;
};

/// Leave-one-out protocol: fold i tests document i against all others.
inline std::vector<Fold> hold_one_out_folds(const Corpus& corpus) {
  const int num_docs = corpus.num_documents();
  std::vector<Fold> folds(static_cast<std::size_t>(num_docs));
  for (int i = 0; i < num_docs; ++i) {
    Fold& fold = folds[static_cast<std::size_t>(i)];
    fold.test_docs.push_back(i);
    fold.train_docs.reserve(static_cast<std::size_t>(num_docs - 1));
    for (int j = 0; j < num_docs; ++j)
      if (j != i) fold.train_docs.push_back(j);
  }
  return folds;
}

/// Condition-holdout protocol: one fold per (class, condition tag) pair,
/// testing the documents of that pair against everything else, so the
/// tested combination is never seen in training. Classes iterate in index
/// order, conditions in order of first appearance; pairs with no documents
/// are skipped. Tags align with the document order.
inline std::vector<Fold> condition_holdout_folds(const Corpus& corpus,
                                                 const std::vector<std::string>& tags) {
  if (tags.size() != corpus.documents.size())
    throw ValidationError("condition tag count does not match document count (" +
                          std::to_string(tags.size()) + " vs " +
                          std::to_string(corpus.documents.size()) + ")");
  for (std::size_t i = 0; i < tags.size(); ++i)
    if (tags[i].empty())
      throw ValidationError("missing condition tag for document " + std::to_string(i + 1));

  std::vector<std::string> conditions;
  for (const std::string& tag : tags)
    if (std::find(conditions.begin(), conditions.end(), tag) == conditions.end())
      conditions.push_back(tag);

  std::vector<Fold> folds;
  for (int c = 0; c < corpus.num_classes; ++c) {
    for (const std::string& condition : conditions) {
      Fold fold;
      for (int m = 0; m < corpus.num_documents(); ++m) {
        bool held_out = corpus.documents[static_cast<std::size_t>(m)].label == c &&
                        tags[static_cast<std::size_t>(m)] == condition;
        (held_out ? fold.test_docs : fold.train_docs).push_back(m);
      }
      if (!fold.test_docs.empty()) folds.push_back(std::move(fold));
    }
  }
  return folds;
}

/// Condition tags file: one tag per document, aligned with the labels file.
inline std::vector<std::string> load_condition_tags(const std::string& path) {
  std::vector<std::string> tags = detail::read_lines(path);
  while (!tags.empty() && tags.back().empty()) tags.pop_back();
  return tags;
}

/// Fixed-split protocol: loads train and test corpora over one vocabulary,
/// with the test labels resolved against the training class mapping.
inline std::pair<Corpus, Corpus> load_fixed_split(const std::string& train_docword,
                                                  const std::string& train_labels,
                                                  const std::string& test_docword,
                                                  const std::string& test_labels,
                                                  const std::string& vocab_path) {
  Corpus train = load_corpus(train_docword, train_labels, vocab_path);
  LoadOptions test_opts;
  test_opts.require_all_classes = false;
  if (!train.class_names.empty()) test_opts.class_names = &train.class_names;
  Corpus test = load_corpus(test_docword, test_labels, vocab_path, test_opts);
  if (test.num_classes > train.num_classes)
    throw ValidationError(test_labels + ": test labels exceed the training class range");
  test.num_classes = train.num_classes;
  test.class_names = train.class_names;
  return {std::move(train), std::move(test)};
}

}  // namespace factopic
