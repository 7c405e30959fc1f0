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
#include <fstream>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "factopic/classify.hpp"
#include "factopic/errors.hpp"
#include "factopic/model.hpp"
#include "factopic/model_io.hpp"
#include "factopic/sampler.hpp"

namespace factopic {

/// Topic indices in ascending entropy (the figure convention: most
/// class-specific first). Ties keep index order.
inline std::vector<int> topics_by_entropy(const TrainedModel& model) {
  std::vector<int> order(static_cast<std::size_t>(model.num_topics()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return model.entropies[static_cast<std::size_t>(a)] <
           model.entropies[static_cast<std::size_t>(b)];
  });
  return order;
}

/// Diagnostics CSV: iteration, average entropy, joint proxy, then one
/// column per topic's entropy.
inline void write_diagnostics_csv(const std::vector<SweepDiagnostics>& diagnostics,
                                  const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  std::size_t num_topics = diagnostics.empty() ? 0 : diagnostics.front().per_topic_entropy.size();
  out << "iteration,H_bar,log_joint_proxy";
  for (std::size_t k = 0; k < num_topics; ++k) out << ",H" << k;
  out << '\n';
  for (const SweepDiagnostics& d : diagnostics) {
    out << d.iteration << ',' << detail::fmt_full(d.h_bar) << ','
        << detail::fmt_full(d.log_joint_proxy);
    for (double h : d.per_topic_entropy) out << ',' << detail::fmt_full(h);
    out << '\n';
  }
  if (!out) throw IoError("write error on " + path);
}

/// Per-class topic distribution as CSV, columns sorted by ascending
/// entropy. The header carries the original topic ids.
inline void write_theta_class_csv(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  const std::vector<int> order = topics_by_entropy(model);
  out << "class";
  for (int k : order) out << ",topic" << k;
  out << '\n';
  for (int c = 0; c < model.num_classes(); ++c) {
    out << model.class_name(c);
    for (int k : order)
      out << ','
          << detail::fmt_full(model.theta_class(static_cast<std::size_t>(c),
                                                static_cast<std::size_t>(k)));
    out << '\n';
  }
  if (!out) throw IoError("write error on " + path);
}

/// Plain PGM (P2) rendering of theta_class, one pixel per cell, columns
/// sorted by ascending entropy, values max-normalized to 0..255. A sidecar
/// "<path>.txt" records the column order and the private/shared split.
inline void emit_heatmap(const TrainedModel& model, const std::string& path) {
  const std::vector<int> order = topics_by_entropy(model);
  const int num_classes = model.num_classes();
  const int num_topics = model.num_topics();

  double max_value = 0.0;
  for (double x : model.theta_class.flat()) max_value = std::max(max_value, x);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "P2\n" << num_topics << ' ' << num_classes << "\n255\n";
  for (int c = 0; c < num_classes; ++c) {
    for (int i = 0; i < num_topics; ++i) {
      double value = model.theta_class(static_cast<std::size_t>(c),
                                       static_cast<std::size_t>(order[static_cast<std::size_t>(i)]));
      int pixel = max_value > 0.0 ? static_cast<int>(std::lround(255.0 * value / max_value)) : 0;
      if (i) out << ' ';
      out << pixel;
    }
    out << '\n';
  }
  if (!out) throw IoError("write error on " + path);

  std::ofstream sidecar(path + ".txt", std::ios::binary);
  if (!sidecar) throw IoError("cannot write " + path + ".txt");
  sidecar << "columns:";
  for (int k : order) sidecar << ' ' << k;
  sidecar << '\n';
  sidecar << "split_index: " << model.segmentation.private_topics.size() << '\n';
  sidecar << "tau: " << detail::fmt_full(model.segmentation.tau) << '\n';
}

inline void write_segmentation_summary(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "K: " << model.num_topics() << '\n';
  out << "K_p: " << model.segmentation.private_topics.size() << '\n';
  out << "K_s: " << model.segmentation.shared_topics.size() << '\n';
  out << "tau: " << detail::fmt_full(model.segmentation.tau) << '\n';
  out << "H_bar: " << detail::fmt_full(model.h_bar) << '\n';
  out << "private:";
  for (int k : model.segmentation.private_topics) out << ' ' << k;
  out << '\n';
  out << "shared:";
  for (int k : model.segmentation.shared_topics) out << ' ' << k;
  out << '\n';
}

/// Summary line plus a confusion matrix CSV with class names on both axes.
inline void write_eval_report(const EvalReport& report, const TrainedModel& model,
                              std::ostream& out) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "accuracy=%.6f n=%lld", report.accuracy,
                static_cast<long long>(report.n_test));
  out << buf << '\n';
  const int num_classes = model.num_classes();
  out << "true\\predicted";
  for (int c = 0; c < num_classes; ++c) out << ',' << model.class_name(c);
  out << '\n';
  for (int c = 0; c < num_classes; ++c) {
    out << model.class_name(c);
    for (int p = 0; p < num_classes; ++p)
      out << ',' << report.confusion(static_cast<std::size_t>(c), static_cast<std::size_t>(p));
    out << '\n';
  }
}

inline void write_eval_report(const EvalReport& report, const TrainedModel& model,
                              const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write_eval_report(report, model, out);
  if (!out) throw IoError("write error on " + path);
}

/// Terms with the highest probability in one topic row.
inline std::vector<std::pair<std::string, double>> top_terms(const TrainedModel& model,
                                                             int topic, int count) {
  auto row = model.beta.row(static_cast<std::size_t>(topic));
  std::vector<int> order(row.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return row[static_cast<std::size_t>(a)] > row[static_cast<std::size_t>(b)];
  });
  std::vector<std::pair<std::string, double>> out;
  const int take = std::min<int>(count, static_cast<int>(row.size()));
  out.reserve(static_cast<std::size_t>(std::max(take, 0)));
  for (int i = 0; i < take; ++i) {
    int v = order[static_cast<std::size_t>(i)];
    out.emplace_back(model.vocabulary.terms[static_cast<std::size_t>(v)],
                     row[static_cast<std::size_t>(v)]);
  }
  return out;
}

/// Union of the top terms of every shared topic: the vocabulary the model
/// decided carries no class signal. Shared topics are visited in ascending
/// entropy, their terms in descending probability; duplicates keep their
/// first position.
inline std::vector<std::string> learned_stop_words(const TrainedModel& model, int top_n) {
  std::vector<int> shared = model.segmentation.shared_topics;
  std::stable_sort(shared.begin(), shared.end(), [&](int a, int b) {
    return model.entropies[static_cast<std::size_t>(a)] <
           model.entropies[static_cast<std::size_t>(b)];
  });
  std::vector<std::string> words;
  for (int k : shared) {
    for (const auto& [term, prob] : top_terms(model, k, top_n)) {
      if (std::find(words.begin(), words.end(), term) == words.end()) words.push_back(term);
    }
  }
  return words;
}

/// Human-readable model listing: per topic (ascending entropy) its role,
/// entropy, dominant class for private topics, and top terms; then the
/// consolidated stop-word list.
inline void render_inspect(const TrainedModel& model, int top_n, std::ostream& out) {
  std::vector<bool> is_private(static_cast<std::size_t>(model.num_topics()), false);
  for (int k : model.segmentation.private_topics) is_private[static_cast<std::size_t>(k)] = true;

  out << "topics: " << model.num_topics() << "  classes: " << model.num_classes()
      << "  vocabulary: " << model.vocab_size() << '\n';
  out << "private: " << model.segmentation.private_topics.size()
      << "  shared: " << model.segmentation.shared_topics.size()
      << "  tau: " << detail::fmt_full(model.segmentation.tau) << '\n';

  char buf[64];
  for (int k : topics_by_entropy(model)) {
    const std::size_t uk = static_cast<std::size_t>(k);
    std::snprintf(buf, sizeof(buf), "H=%.4f", model.entropies[uk]);
    out << "topic " << k << "  " << (is_private[uk] ? "private" : "shared ") << "  " << buf;
    if (is_private[uk]) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < static_cast<std::size_t>(model.num_classes()); ++c)
        if (model.theta_class(c, uk) > model.theta_class(best, uk)) best = c;
      out << "  class=" << model.class_name(static_cast<int>(best));
    }
    out << "  |";
    for (const auto& [term, prob] : top_terms(model, k, top_n)) out << ' ' << term;
    out << '\n';
  }

  out << "stop words:";
  for (const std::string& word : learned_stop_words(model, top_n)) out << ' ' << word;
  out << '\n';
}

}  // namespace factopic
