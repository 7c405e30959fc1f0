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
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "factopic/corpus.hpp"
#include "factopic/errors.hpp"
#include "factopic/matrix.hpp"
#include "factopic/model_io.hpp"
#include "factopic/rng.hpp"

namespace factopic {

/// Generative recipe for labeled test corpora with a known private/shared
/// topic split. Topics 0 .. C*P-1 are private (grouped by class), the rest
/// shared. Every document draws each token from the shared pool with
/// probability noise_fraction, otherwise from its class's private pool;
/// pools are uniform mixtures, so noise_fraction is an exact expectation.
struct SyntheticSpec {
  int num_classes = 4;
  int private_topics_per_class = 1;
  int shared_topics = 4;
  int vocab_size = 64;
  int docs_per_class = 50;
  int doc_length = 100;
  double noise_fraction = 0.7;          // lambda
  double topic_word_concentration = 0.1;  // symmetric Dirichlet for each beta row
  std::uint64_t seed = 0;

  int total_topics() const { return num_classes * private_topics_per_class + shared_topics; }
  int total_documents() const { return num_classes * docs_per_class; }

  void validate() const {
    if (num_classes < 2) throw ValidationError("synthetic spec needs at least 2 classes");
    if (private_topics_per_class < 1 || shared_topics < 1 || vocab_size < 1 ||
        docs_per_class < 1 || doc_length < 1)
      throw ValidationError("synthetic spec counts must be >= 1");
    if (noise_fraction < 0.0 || noise_fraction > 1.0)
      throw ValidationError("noise fraction must be in [0,1]");
    if (!(topic_word_concentration > 0.0))
      throw ValidationError("topic-word concentration must be positive");
  }
};

/// What the generator actually did: the true topic-word rows, each topic's
/// role (owning class, or -1 for shared), and per-document topic draws.
struct GroundTruth {
  Mat<double> beta;               // K x V
  std::vector<int> topic_class;   // length K; -1 marks a shared topic
  Mat<int> doc_topic_counts;      // M x K

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// Deterministic in spec.seed: same spec, byte-identical corpus and truth.
inline std::pair<Corpus, GroundTruth> generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const int num_topics = spec.total_topics();
  const int num_docs = spec.total_documents();
  const int num_private = spec.num_classes * spec.private_topics_per_class;

  Rng rng(spec.seed);
  GroundTruth truth;
  truth.beta = Mat<double>(static_cast<std::size_t>(num_topics),
                           static_cast<std::size_t>(spec.vocab_size));
  truth.topic_class.resize(static_cast<std::size_t>(num_topics), -1);
  for (int k = 0; k < num_private; ++k)
    truth.topic_class[static_cast<std::size_t>(k)] = k / spec.private_topics_per_class;
  truth.doc_topic_counts = Mat<int>(static_cast<std::size_t>(num_docs),
                                    static_cast<std::size_t>(num_topics));

  std::vector<double> row_total(static_cast<std::size_t>(num_topics));
  for (int k = 0; k < num_topics; ++k) {
    auto row = truth.beta.row(static_cast<std::size_t>(k));
    rng.dirichlet(spec.topic_word_concentration, row);
    double total = 0.0;
    for (double x : row) total += x;
    row_total[static_cast<std::size_t>(k)] = total;
  }

  Corpus corpus;
  corpus.num_classes = spec.num_classes;
  corpus.vocabulary.terms.reserve(static_cast<std::size_t>(spec.vocab_size));
  for (int v = 0; v < spec.vocab_size; ++v)
    corpus.vocabulary.terms.push_back("w" + std::to_string(v));
  corpus.documents.reserve(static_cast<std::size_t>(num_docs));

  int doc_index = 0;
  for (int c = 0; c < spec.num_classes; ++c) {
    const int first_private = c * spec.private_topics_per_class;
    for (int d = 0; d < spec.docs_per_class; ++d, ++doc_index) {
      std::map<int, int> counts;
      for (int n = 0; n < spec.doc_length; ++n) {
        int topic;
        if (rng.uniform01() < spec.noise_fraction)
          topic = num_private +
                  static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.shared_topics)));
        else
          topic = first_private + static_cast<int>(rng.uniform_int(
                                      static_cast<std::uint64_t>(spec.private_topics_per_class)));
        const std::size_t uk = static_cast<std::size_t>(topic);
        ++truth.doc_topic_counts(static_cast<std::size_t>(doc_index), uk);
        int word = static_cast<int>(
            rng.categorical(truth.beta.row(uk), row_total[uk]));
        ++counts[word];
      }
      Document doc;
      doc.label = c;
      doc.counts.assign(counts.begin(), counts.end());
      doc.length = spec.doc_length;
      corpus.documents.push_back(std::move(doc));
    }
  }
  return {std::move(corpus), std::move(truth)};
}

/// Tokens a document drew from shared topics, per the ground truth.
inline std::int64_t shared_token_count(const GroundTruth& truth, int doc) {
  std::int64_t count = 0;
  for (std::size_t k = 0; k < truth.topic_class.size(); ++k)
    if (truth.topic_class[k] < 0)
      count += truth.doc_topic_counts(static_cast<std::size_t>(doc), k);
  return count;
}

/// Writes the ground truth next to a generated corpus so oracle tests can
/// run from files alone.
inline void save_ground_truth(const GroundTruth& truth, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "FLDA-TRUTH 1\n";
  out << truth.beta.rows() << ' ' << truth.beta.cols() << ' ' << truth.doc_topic_counts.rows()
      << '\n';
  for (std::size_t k = 0; k < truth.topic_class.size(); ++k) {
    if (k) out << ' ';
    if (truth.topic_class[k] < 0)
      out << 's';
    else
      out << 'p' << truth.topic_class[k];
  }
  out << '\n';
  for (std::size_t k = 0; k < truth.beta.rows(); ++k) {
    auto row = truth.beta.row(k);
    for (std::size_t v = 0; v < row.size(); ++v) {
      if (v) out << ' ';
      out << detail::fmt_full(row[v]);
    }
    out << '\n';
  }
  for (std::size_t m = 0; m < truth.doc_topic_counts.rows(); ++m) {
    auto row = truth.doc_topic_counts.row(m);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out << ' ';
      out << row[k];
    }
    out << '\n';
  }
  if (!out) throw IoError("write error on " + path);
}

inline GroundTruth load_ground_truth(const std::string& path) {
  std::vector<std::string> lines = detail::read_lines(path);
  std::size_t pos = 0;
  auto next_line = [&]() -> const std::string& {
    if (pos >= lines.size()) throw ValidationError(path + ": truncated ground-truth file");
    return lines[pos++];
  };
  if (next_line() != "FLDA-TRUTH 1")
    throw ValidationError(path + ": not a ground-truth file");

  auto dims = detail::split_ws(next_line());
  long long num_topics, vocab_size, num_docs;
  if (dims.size() != 3 || !detail::parse_int(dims[0], num_topics) ||
      !detail::parse_int(dims[1], vocab_size) || !detail::parse_int(dims[2], num_docs) ||
      num_topics < 1 || vocab_size < 1 || num_docs < 1)
    throw ValidationError(path + ": malformed dimension line");

  GroundTruth truth;
  auto roles = detail::split_ws(next_line());
  if (roles.size() != static_cast<std::size_t>(num_topics))
    throw ValidationError(path + ": role line has wrong length");
  for (auto role : roles) {
    if (role == "s") {
      truth.topic_class.push_back(-1);
    } else if (role.size() > 1 && role[0] == 'p') {
      long long c;
      if (!detail::parse_int(role.substr(1), c) || c < 0)
        throw ValidationError(path + ": malformed topic role");
      truth.topic_class.push_back(static_cast<int>(c));
    } else {
      throw ValidationError(path + ": malformed topic role");
    }
  }

  truth.beta = Mat<double>(static_cast<std::size_t>(num_topics),
                           static_cast<std::size_t>(vocab_size));
  for (long long k = 0; k < num_topics; ++k) {
    auto fields = detail::split_ws(next_line());
    auto row = truth.beta.row(static_cast<std::size_t>(k));
    if (fields.size() != row.size())
      throw ValidationError(path + ": beta row " + std::to_string(k) + " has wrong length");
    for (std::size_t v = 0; v < row.size(); ++v)
      if (!detail::parse_double(fields[v], row[v]))
        throw ValidationError(path + ": bad beta value");
  }
  truth.doc_topic_counts = Mat<int>(static_cast<std::size_t>(num_docs),
                                    static_cast<std::size_t>(num_topics));
  for (long long m = 0; m < num_docs; ++m) {
    auto fields = detail::split_ws(next_line());
    auto row = truth.doc_topic_counts.row(static_cast<std::size_t>(m));
    if (fields.size() != row.size())
      throw ValidationError(path + ": count row " + std::to_string(m) + " has wrong length");
    for (std::size_t k = 0; k < row.size(); ++k) {
      long long n;
      if (!detail::parse_int(fields[k], n) || n < 0)
        throw ValidationError(path + ": bad topic count");
      row[k] = static_cast<int>(n);
    }
  }
  return truth;
}

}  // namespace factopic
