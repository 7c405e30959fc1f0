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

// Independent reference computations for the sampler tests. Everything
// here recomputes counts from raw assignments and evaluates the collapsed
// joint directly, sharing no code path with the library implementation.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "factopic/corpus.hpp"
#include "factopic/model.hpp"

namespace oracle {

struct FlatCorpus {
  // token word ids per document, ascending term order with multiplicity
  std::vector<std::vector<int>> words;
  std::vector<int> labels;
  int vocab_size = 0;
  int num_classes = 0;

  std::size_t total_tokens() const {
    std::size_t n = 0;
    for (const auto& d : words) n += d.size();
    return n;
  }
};

inline FlatCorpus flatten(const factopic::Corpus& corpus) {
  FlatCorpus flat;
  flat.vocab_size = corpus.vocabulary.size();
  flat.num_classes = corpus.num_classes;
  for (const auto& doc : corpus.documents) {
    std::vector<int> words;
    for (auto [term, count] : doc.counts)
      for (int i = 0; i < count; ++i) words.push_back(term);
    flat.words.push_back(std::move(words));
    flat.labels.push_back(doc.label);
  }
  return flat;
}

/// Collapsed log joint of one complete assignment, computed from scratch:
/// one Dirichlet-multinomial block per document plus one per topic.
inline double log_joint(const FlatCorpus& corpus, const std::vector<std::vector<int>>& z,
                        int num_topics, double alpha, double pi) {
  const int vocab = corpus.vocab_size;
  std::vector<std::vector<std::int64_t>> topic_word(
      static_cast<std::size_t>(num_topics), std::vector<std::int64_t>(static_cast<std::size_t>(vocab), 0));
  std::vector<std::int64_t> topic_total(static_cast<std::size_t>(num_topics), 0);

  double acc = 0.0;
  for (std::size_t m = 0; m < corpus.words.size(); ++m) {
    std::vector<std::int64_t> doc_topic(static_cast<std::size_t>(num_topics), 0);
    for (std::size_t i = 0; i < corpus.words[m].size(); ++i) {
      int k = z[m][i];
      ++doc_topic[static_cast<std::size_t>(k)];
      ++topic_word[static_cast<std::size_t>(k)][static_cast<std::size_t>(corpus.words[m][i])];
      ++topic_total[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < num_topics; ++k)
      acc += std::lgamma(static_cast<double>(doc_topic[static_cast<std::size_t>(k)]) + alpha);
    acc -= std::lgamma(static_cast<double>(corpus.words[m].size()) +
                       static_cast<double>(num_topics) * alpha);
    acc += std::lgamma(static_cast<double>(num_topics) * alpha) -
           static_cast<double>(num_topics) * std::lgamma(alpha);
  }
  for (int k = 0; k < num_topics; ++k) {
    for (int v = 0; v < vocab; ++v)
      acc += std::lgamma(
          static_cast<double>(topic_word[static_cast<std::size_t>(k)][static_cast<std::size_t>(v)]) +
          pi);
    acc -= std::lgamma(static_cast<double>(topic_total[static_cast<std::size_t>(k)]) +
                       static_cast<double>(vocab) * pi);
    acc += std::lgamma(static_cast<double>(vocab) * pi) -
           static_cast<double>(vocab) * std::lgamma(pi);
  }
  return acc;
}

/// All K^N assignments with their joint scores, token order matching the
/// document-major, term-ascending expansion.
struct JointTable {
  std::vector<std::vector<int>> flat_assignments;  // each length N
  std::vector<double> log_scores;
  std::vector<std::size_t> doc_of_token;
  std::size_t total_tokens = 0;
};

inline std::vector<std::vector<int>> unflatten(const FlatCorpus& corpus,
                                               const std::vector<int>& flat) {
  std::vector<std::vector<int>> z(corpus.words.size());
  std::size_t pos = 0;
  for (std::size_t m = 0; m < corpus.words.size(); ++m) {
    z[m].assign(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                flat.begin() + static_cast<std::ptrdiff_t>(pos + corpus.words[m].size()));
    pos += corpus.words[m].size();
  }
  return z;
}

inline JointTable enumerate_joint(const FlatCorpus& corpus, int num_topics, double alpha,
                                  double pi) {
  JointTable table;
  table.total_tokens = corpus.total_tokens();
  for (std::size_t m = 0; m < corpus.words.size(); ++m)
    for (std::size_t i = 0; i < corpus.words[m].size(); ++i) table.doc_of_token.push_back(m);

  std::vector<int> flat(table.total_tokens, 0);
  for (;;) {
    table.flat_assignments.push_back(flat);
    table.log_scores.push_back(log_joint(corpus, unflatten(corpus, flat), num_topics, alpha, pi));
    std::size_t pos = 0;
    while (pos < flat.size()) {
      if (++flat[pos] < num_topics) break;
      flat[pos++] = 0;
    }
    if (pos == flat.size()) break;
  }
  return table;
}

/// Exact marginal p(z_token = k | words) from the enumeration.
inline std::vector<std::vector<double>> exact_token_marginals(const JointTable& table,
                                                              int num_topics) {
  double max_score = table.log_scores[0];
  for (double s : table.log_scores) max_score = std::max(max_score, s);
  std::vector<std::vector<double>> marginals(
      table.total_tokens, std::vector<double>(static_cast<std::size_t>(num_topics), 0.0));
  double total = 0.0;
  for (std::size_t a = 0; a < table.flat_assignments.size(); ++a) {
    double w = std::exp(table.log_scores[a] - max_score);
    total += w;
    for (std::size_t t = 0; t < table.total_tokens; ++t)
      marginals[t][static_cast<std::size_t>(table.flat_assignments[a][t])] += w;
  }
  for (auto& row : marginals)
    for (double& x : row) x /= total;
  return marginals;
}

/// Exact conditional p(z_token = k | all other assignments fixed, words)
/// by scoring the K completions of the given flat assignment.
inline std::vector<double> exact_conditional(const FlatCorpus& corpus, std::vector<int> flat,
                                             std::size_t token, int num_topics, double alpha,
                                             double pi) {
  std::vector<double> log_scores(static_cast<std::size_t>(num_topics));
  for (int k = 0; k < num_topics; ++k) {
    flat[token] = k;
    log_scores[static_cast<std::size_t>(k)] =
        log_joint(corpus, unflatten(corpus, flat), num_topics, alpha, pi);
  }
  double max_score = log_scores[0];
  for (double s : log_scores) max_score = std::max(max_score, s);
  double total = 0.0;
  std::vector<double> probs(static_cast<std::size_t>(num_topics));
  for (std::size_t k = 0; k < probs.size(); ++k) {
    probs[k] = std::exp(log_scores[k] - max_score);
    total += probs[k];
  }
  for (double& p : probs) p /= total;
  return probs;
}

/// Standard collapsed-LDA conditional weights, written out independently:
/// counts rebuilt from scratch with the target token excluded.
inline std::vector<double> standard_lda_weights(const FlatCorpus& corpus,
                                                const std::vector<std::vector<int>>& z,
                                                std::size_t doc, std::size_t token,
                                                int num_topics, double alpha, double pi) {
  const int vocab = corpus.vocab_size;
  std::vector<std::vector<std::int64_t>> topic_word(
      static_cast<std::size_t>(num_topics),
      std::vector<std::int64_t>(static_cast<std::size_t>(vocab), 0));
  std::vector<std::int64_t> topic_total(static_cast<std::size_t>(num_topics), 0);
  std::vector<std::int64_t> doc_topic(static_cast<std::size_t>(num_topics), 0);
  for (std::size_t m = 0; m < corpus.words.size(); ++m) {
    for (std::size_t i = 0; i < corpus.words[m].size(); ++i) {
      if (m == doc && i == token) continue;
      int k = z[m][i];
      ++topic_word[static_cast<std::size_t>(k)][static_cast<std::size_t>(corpus.words[m][i])];
      ++topic_total[static_cast<std::size_t>(k)];
      if (m == doc) ++doc_topic[static_cast<std::size_t>(k)];
    }
  }
  const int word = corpus.words[doc][token];
  std::vector<double> weights(static_cast<std::size_t>(num_topics));
  for (int k = 0; k < num_topics; ++k) {
    const std::size_t uk = static_cast<std::size_t>(k);
    weights[uk] = (static_cast<double>(doc_topic[uk]) + alpha) *
                  (static_cast<double>(topic_word[uk][static_cast<std::size_t>(word)]) + pi) /
                  (static_cast<double>(topic_total[uk]) + static_cast<double>(vocab) * pi);
  }
  return weights;
}

}  // namespace oracle
