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
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "factopic/corpus.hpp"
#include "factopic/factorization.hpp"
#include "factopic/model.hpp"
#include "factopic/rng.hpp"

namespace factopic {

struct SweepDiagnostics {
  int iteration = 0;
  double h_bar = 0.0;
  std::vector<double> per_topic_entropy;
  double log_joint_proxy = 0.0;  // collapsed joint, plus the factorizing prior when enabled
  std::int64_t tokens_resampled = 0;
};

/// Per-token conditional in the decremented ("-i") state. weight[k] is
///   (n_dk + alpha) * (n_kv + pi) / (n_k + V*pi)
/// times, in factorized mode, the annealed prior factor of the class-mass
/// column topic k would have if this token joined it. The document's class
/// receives the candidate token; the per-class smoothing term is
/// docs-in-class * alpha, mirroring how theta_class is built from smoothed
/// estimates. H_bar stays frozen at the current sweep's value.
inline std::vector<double> gibbs_conditional(const ModelState& state, const Corpus& corpus,
                                             int doc, int word, const Hyperparams& hp) {
  const int num_topics = state.num_topics();
  const std::size_t vocab_size = state.topic_word.cols();
  const int label = corpus.documents[static_cast<std::size_t>(doc)].label;
  const std::size_t num_classes = state.class_topic.rows();

  std::vector<double> weights(static_cast<std::size_t>(num_topics));
  std::vector<double> column(num_classes);
  for (int k = 0; k < num_topics; ++k) {
    const std::size_t uk = static_cast<std::size_t>(k);
    double w = (static_cast<double>(state.doc_topic(static_cast<std::size_t>(doc), uk)) +
                hp.alpha) *
               (static_cast<double>(state.topic_word(uk, static_cast<std::size_t>(word))) +
                hp.pi) /
               (static_cast<double>(state.topic_total[uk]) +
                static_cast<double>(vocab_size) * hp.pi);
    if (hp.factorized) {
      for (std::size_t c = 0; c < num_classes; ++c)
        column[c] = static_cast<double>(state.class_topic(c, uk)) +
                    static_cast<double>(state.docs_per_class[c]) * hp.alpha;
      column[static_cast<std::size_t>(label)] += 1.0;
      double a = prior_factor_annealed(topic_entropy(column), state.h_bar);
      w *= std::max(a, kPriorFloor);
    }
    weights[uk] = w;
  }
  return weights;
}

/// Preallocated scratch for repeated sweeps over one corpus: the token
/// expansion, log/lgamma lookup tables (all masses are integers plus a
/// fixed smoothing constant), and the per-topic class-mass sums that make
/// the annealed factor O(1) per candidate topic.
class SweepWorkspace {
 public:
  SweepWorkspace(const Corpus& corpus, const Hyperparams& hp)
      : tokens_(expand_tokens(corpus)) {
    const std::size_t num_classes = static_cast<std::size_t>(corpus.num_classes);
    const std::vector<int> class_docs = class_document_counts(corpus);
    std::int64_t total_tokens = 0;
    std::size_t max_doc_len = 0;
    for (const auto& doc : tokens_) {
      total_tokens += static_cast<std::int64_t>(doc.size());
      max_doc_len = std::max(max_doc_len, doc.size());
    }
    total_tokens_ = total_tokens;

    class_smooth_.resize(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c)
      class_smooth_[c] = static_cast<double>(class_docs[c]) * hp.alpha;
    total_smooth_ = static_cast<double>(corpus.num_documents()) * hp.alpha;
    log_num_classes_ = std::log(static_cast<double>(num_classes));

    if (hp.factorized) {
      const std::size_t table = static_cast<std::size_t>(total_tokens) + 2;
      class_log_.resize(num_classes);
      for (std::size_t c = 0; c < num_classes; ++c) {
        class_log_[c].resize(table);
        for (std::size_t n = 0; n < table; ++n)
          class_log_[c][n] = std::log(static_cast<double>(n) + class_smooth_[c]);
      }
      total_log_.resize(table);
      for (std::size_t n = 0; n < table; ++n)
        total_log_[n] = std::log(static_cast<double>(n) + total_smooth_);
    }

    lgamma_alpha_.resize(max_doc_len + 1);
    for (std::size_t n = 0; n < lgamma_alpha_.size(); ++n)
      lgamma_alpha_[n] = std::lgamma(static_cast<double>(n) + hp.alpha);
    lgamma_pi_.resize(static_cast<std::size_t>(total_tokens) + 1);
    for (std::size_t n = 0; n < lgamma_pi_.size(); ++n)
      lgamma_pi_[n] = std::lgamma(static_cast<double>(n) + hp.pi);

    const std::size_t num_topics = static_cast<std::size_t>(hp.num_topics);
    mass_total_.resize(num_topics);
    mass_log_sum_.resize(num_topics);
    weights_.resize(num_topics);
    log_weights_.resize(num_topics);
  }

  const std::vector<std::vector<int>>& tokens() const { return tokens_; }
  std::int64_t total_tokens() const { return total_tokens_; }

  /// Recomputes the per-topic mass sums from scratch. Called at the start
  /// of every sweep so incremental updates never accumulate drift across
  /// sweeps.
  void rebuild_mass_cache(const ModelState& state) {
    if (class_log_.empty()) return;
    const std::size_t num_classes = state.class_topic.rows();
    for (std::size_t k = 0; k < mass_total_.size(); ++k) {
      mass_total_[k] = static_cast<double>(state.topic_total[k]) + total_smooth_;
      double log_sum = 0.0;
      for (std::size_t c = 0; c < num_classes; ++c) {
        int n = state.class_topic(c, k);
        log_sum += (static_cast<double>(n) + class_smooth_[c]) *
                   class_log_[c][static_cast<std::size_t>(n)];
      }
      mass_log_sum_[k] = log_sum;
    }
  }

  // internal to the sweep and its tests
  std::vector<double> class_smooth_;
  double total_smooth_ = 0.0;
  double log_num_classes_ = 0.0;
  std::vector<std::vector<double>> class_log_;
  std::vector<double> total_log_;
  std::vector<double> lgamma_alpha_;
  std::vector<double> lgamma_pi_;
  std::vector<double> mass_total_;
  std::vector<double> mass_log_sum_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;

 private:
  std::vector<std::vector<int>> tokens_;
  std::int64_t total_tokens_ = 0;
};

namespace detail {

/// Removes token (doc m, word w, class c, topic k) from all counts and
/// the workspace mass cache.
inline void remove_token(ModelState& state, SweepWorkspace& ws, std::size_t m, int w, int c,
                         int k) {
  const std::size_t uk = static_cast<std::size_t>(k);
  const std::size_t uc = static_cast<std::size_t>(c);
  --state.doc_topic(m, uk);
  --state.topic_word(uk, static_cast<std::size_t>(w));
  --state.topic_total[uk];
  int n = state.class_topic(uc, uk)--;
  assert(n > 0);
  if (!ws.class_log_.empty()) {
    const auto& logs = ws.class_log_[uc];
    const double smooth = ws.class_smooth_[uc];
    ws.mass_log_sum_[uk] += (static_cast<double>(n - 1) + smooth) *
                                logs[static_cast<std::size_t>(n - 1)] -
                            (static_cast<double>(n) + smooth) * logs[static_cast<std::size_t>(n)];
    ws.mass_total_[uk] -= 1.0;
  }
}

inline void add_token(ModelState& state, SweepWorkspace& ws, std::size_t m, int w, int c,
                      int k) {
  const std::size_t uk = static_cast<std::size_t>(k);
  const std::size_t uc = static_cast<std::size_t>(c);
  ++state.doc_topic(m, uk);
  ++state.topic_word(uk, static_cast<std::size_t>(w));
  ++state.topic_total[uk];
  int n = ++state.class_topic(uc, uk);
  if (!ws.class_log_.empty()) {
    const auto& logs = ws.class_log_[uc];
    const double smooth = ws.class_smooth_[uc];
    ws.mass_log_sum_[uk] += (static_cast<double>(n) + smooth) * logs[static_cast<std::size_t>(n)] -
                            (static_cast<double>(n - 1) + smooth) *
                                logs[static_cast<std::size_t>(n - 1)];
    ws.mass_total_[uk] += 1.0;
  }
}

/// Fills ws.weights_ with the conditional for a decremented token and
/// returns the weight total. Equivalent to gibbs_conditional but O(1) per
/// candidate via the cached mass sums.
inline double conditional_weights(const ModelState& state, SweepWorkspace& ws, std::size_t m,
                                  int w, int c, const Hyperparams& hp) {
  const int num_topics = state.num_topics();
  const std::size_t uw = static_cast<std::size_t>(w);
  const std::size_t uc = static_cast<std::size_t>(c);
  const double vocab_smooth = static_cast<double>(state.topic_word.cols()) * hp.pi;
  double total = 0.0;
  if (!hp.factorized) {
    for (int k = 0; k < num_topics; ++k) {
      const std::size_t uk = static_cast<std::size_t>(k);
      double weight = (static_cast<double>(state.doc_topic(m, uk)) + hp.alpha) *
                      (static_cast<double>(state.topic_word(uk, uw)) + hp.pi) /
                      (static_cast<double>(state.topic_total[uk]) + vocab_smooth);
      ws.weights_[uk] = weight;
      total += weight;
    }
    return total;
  }
  const auto& logs = ws.class_log_[uc];
  const double smooth = ws.class_smooth_[uc];
  const double h_bar = state.h_bar;
  for (int k = 0; k < num_topics; ++k) {
    const std::size_t uk = static_cast<std::size_t>(k);
    double weight = (static_cast<double>(state.doc_topic(m, uk)) + hp.alpha) *
                    (static_cast<double>(state.topic_word(uk, uw)) + hp.pi) /
                    (static_cast<double>(state.topic_total[uk]) + vocab_smooth);
    // entropy of the class-mass column with this token added to class c
    const int n = state.class_topic(uc, uk);
    const double mass = static_cast<double>(n) + smooth;
    const double log_sum = ws.mass_log_sum_[uk] - mass * logs[static_cast<std::size_t>(n)] +
                           (mass + 1.0) * logs[static_cast<std::size_t>(n + 1)];
    const double mass_total = ws.mass_total_[uk] + 1.0;
    const double log_total = ws.total_log_[static_cast<std::size_t>(state.topic_total[uk]) + 1];
    double h = (log_total - log_sum / mass_total) / ws.log_num_classes_;
    h = std::clamp(h, 0.0, 1.0);
    const double a = prior_factor_annealed(h, h_bar);
    weight *= std::max(a, kPriorFloor);
    ws.weights_[uk] = weight;
    total += weight;
  }
  return total;
}

/// Log-space rebuild of the conditional for the (rare) case where the
/// plain-space weights underflow.
inline double conditional_weights_logspace(const ModelState& state, SweepWorkspace& ws,
                                           std::size_t m, int w, int c,
                                           const Hyperparams& hp) {
  const int num_topics = state.num_topics();
  const double vocab_smooth = static_cast<double>(state.topic_word.cols()) * hp.pi;
  double max_log = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < num_topics; ++k) {
    const std::size_t uk = static_cast<std::size_t>(k);
    double lw = std::log(static_cast<double>(state.doc_topic(m, uk)) + hp.alpha) +
                std::log(static_cast<double>(state.topic_word(uk, static_cast<std::size_t>(w))) +
                         hp.pi) -
                std::log(static_cast<double>(state.topic_total[uk]) + vocab_smooth);
    if (hp.factorized) {
      const auto& logs = ws.class_log_[static_cast<std::size_t>(c)];
      const double smooth = ws.class_smooth_[static_cast<std::size_t>(c)];
      const int n = state.class_topic(static_cast<std::size_t>(c), uk);
      const double mass = static_cast<double>(n) + smooth;
      const double log_sum = ws.mass_log_sum_[uk] - mass * logs[static_cast<std::size_t>(n)] +
                             (mass + 1.0) * logs[static_cast<std::size_t>(n + 1)];
      const double mass_total = ws.mass_total_[uk] + 1.0;
      const double log_total =
          ws.total_log_[static_cast<std::size_t>(state.topic_total[uk]) + 1];
      double h = (log_total - log_sum / mass_total) / ws.log_num_classes_;
      h = std::clamp(h, 0.0, 1.0);
      lw += std::log(std::max(prior_factor_annealed(h, state.h_bar), kPriorFloor));
    }
    ws.log_weights_[uk] = lw;
    max_log = std::max(max_log, lw);
  }
  if (!std::isfinite(max_log))
    throw std::logic_error("all sampling weights vanished");
  double total = 0.0;
  for (int k = 0; k < num_topics; ++k) {
    const std::size_t uk = static_cast<std::size_t>(k);
    ws.weights_[uk] = std::exp(ws.log_weights_[uk] - max_log);
    total += ws.weights_[uk];
  }
  return total;
}

}  // namespace detail

/// Collapsed log joint of assignments and words: the Dirichlet-multinomial
/// integral for every document block plus every topic block. In factorized
/// mode callers add log_prior separately.
inline double collapsed_log_joint(const ModelState& state, const Corpus& corpus,
                                  const Hyperparams& hp,
                                  const SweepWorkspace* ws = nullptr) {
  const std::size_t num_docs = state.doc_topic.rows();
  const std::size_t num_topics = state.doc_topic.cols();
  const std::size_t vocab_size = state.topic_word.cols();
  const double k_alpha = static_cast<double>(num_topics) * hp.alpha;
  const double v_pi = static_cast<double>(vocab_size) * hp.pi;

  auto lg_alpha = [&](int n) {
    return ws ? ws->lgamma_alpha_[static_cast<std::size_t>(n)]
              : std::lgamma(static_cast<double>(n) + hp.alpha);
  };
  auto lg_pi = [&](int n) {
    return ws ? ws->lgamma_pi_[static_cast<std::size_t>(n)]
              : std::lgamma(static_cast<double>(n) + hp.pi);
  };

  double acc = 0.0;
  for (std::size_t m = 0; m < num_docs; ++m) {
    for (std::size_t k = 0; k < num_topics; ++k) acc += lg_alpha(state.doc_topic(m, k));
    acc -= std::lgamma(static_cast<double>(corpus.documents[m].length) + k_alpha);
  }
  acc += static_cast<double>(num_docs) *
         (std::lgamma(k_alpha) - static_cast<double>(num_topics) * std::lgamma(hp.alpha));
  for (std::size_t k = 0; k < num_topics; ++k) {
    for (std::size_t v = 0; v < vocab_size; ++v) acc += lg_pi(state.topic_word(k, v));
    acc -= std::lgamma(static_cast<double>(state.topic_total[k]) + v_pi);
  }
  acc += static_cast<double>(num_topics) *
         (std::lgamma(v_pi) - static_cast<double>(vocab_size) * std::lgamma(hp.pi));
  return acc;
}

/// One full Gibbs sweep: every token of every document, in order, is
/// decremented, redrawn from its conditional, and reinserted. The average
/// entropy stays frozen for the whole sweep and is refreshed afterwards.
inline SweepDiagnostics gibbs_sweep(ModelState& state, const Corpus& corpus,
                                    const Hyperparams& hp, Rng& rng,
                                    SweepWorkspace* workspace = nullptr) {
  std::optional<SweepWorkspace> local;
  if (!workspace) {
    local.emplace(corpus, hp);
    workspace = &*local;
  }
  SweepWorkspace& ws = *workspace;
  ws.rebuild_mass_cache(state);

  const int num_topics = state.num_topics();
  std::int64_t resampled = 0;
  for (std::size_t m = 0; m < ws.tokens().size(); ++m) {
    const int label = corpus.documents[m].label;
    const auto& doc_tokens = ws.tokens()[m];
    auto& doc_assignments = state.assignments[m];
    assert(doc_assignments.size() == doc_tokens.size());
    for (std::size_t i = 0; i < doc_tokens.size(); ++i) {
      const int word = doc_tokens[i];
      detail::remove_token(state, ws, m, word, label, doc_assignments[i]);
      double total = detail::conditional_weights(state, ws, m, word, label, hp);
      if (!(total > 1e-300))
        total = detail::conditional_weights_logspace(state, ws, m, word, label, hp);
      if (!(total > 0.0)) throw std::logic_error("all sampling weights vanished");
      int picked = static_cast<int>(
          rng.categorical({ws.weights_.data(), static_cast<std::size_t>(num_topics)}, total));
      detail::add_token(state, ws, m, word, label, picked);
      doc_assignments[i] = picked;
      ++resampled;
    }
  }

  auto [entropies, h_bar] = training_entropies(state, hp);
  state.h_bar = h_bar;
  ++state.iteration;

  SweepDiagnostics diag;
  diag.iteration = state.iteration;
  diag.h_bar = h_bar;
  diag.per_topic_entropy = std::move(entropies);
  diag.log_joint_proxy = collapsed_log_joint(state, corpus, hp, &ws);
  if (hp.factorized) diag.log_joint_proxy += log_prior(class_masses(state, hp), h_bar);
  diag.tokens_resampled = resampled;
  return diag;
}

struct TrainResult {
  TrainedModel model;
  std::vector<SweepDiagnostics> diagnostics;
};

/// Trains one chain: random init, hp.iterations sweeps, thinned estimator
/// snapshots after the burn-in (the first post-burn-in sweep is always a
/// snapshot), then averaging. Deterministic in hp.seed.
inline TrainResult train(const Corpus& corpus, const Hyperparams& hp,
                         std::optional<double> tau = std::nullopt) {
  hp.validate();
  for (int count : class_document_counts(corpus))
    if (count == 0) throw ValidationError("training corpus has an empty class");

  Rng rng(hp.seed);
  SweepWorkspace workspace(corpus, hp);
  ModelState state = init_state(corpus, hp, rng);

  TrainResult result;
  result.diagnostics.reserve(static_cast<std::size_t>(hp.iterations));
  EstimatorAccumulator accumulator;
  for (int t = 1; t <= hp.iterations; ++t) {
    result.diagnostics.push_back(gibbs_sweep(state, corpus, hp, rng, &workspace));
    if (t > hp.burn_in && (t - hp.burn_in - 1) % hp.sample_every == 0)
      accumulator.add(state, hp);
  }
  result.model = finalize_model(accumulator, corpus, hp, tau);
  return result;
}

/// Runs `chains` independent seeded chains (concurrently) and keeps the
/// one whose final log_joint_proxy is highest; ties go to the lowest chain
/// index. Chain seeds derive deterministically from hp.seed.
inline TrainResult train_best_of(const Corpus& corpus, const Hyperparams& hp, int chains,
                                 std::optional<double> tau = std::nullopt) {
  if (chains < 1) throw ValidationError("chains must be >= 1");
  if (chains == 1) return train(corpus, hp, tau);

  std::vector<TrainResult> results(static_cast<std::size_t>(chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chains));
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(chains));
  for (int i = 0; i < chains; ++i) {
    threads.emplace_back([&, i]() {
      try {
        Hyperparams chain_hp = hp;
        chain_hp.seed = mix_seed(hp.seed, static_cast<std::uint64_t>(i));
        results[static_cast<std::size_t>(i)] = train(corpus, chain_hp, tau);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);

  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i)
    if (results[i].diagnostics.back().log_joint_proxy >
        results[best].diagnostics.back().log_joint_proxy)
      best = i;
  return std::move(results[best]);
}

}  // namespace factopic
