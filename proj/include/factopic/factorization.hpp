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
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "factopic/errors.hpp"
#include "factopic/matrix.hpp"

namespace factopic {

/// Floor applied to the factorizing prior factor before taking logs or
/// multiplying into sampling weights. The annealed factor reaches exactly
/// zero when a topic and the running average are both fully class-shared,
/// which would freeze the sampler at its random initialization; the floor
/// keeps every move possible.
inline constexpr double kPriorFloor = 1e-12;

/// Normalized entropy of one topic's mass over classes: 0 when all mass
/// sits in a single class, 1 when all classes hold equal mass. Uses the
/// convention 0*log(0) = 0; an all-zero column counts as fully shared
/// (returns 1) since an unused topic carries no class signal.
inline double topic_entropy(std::span<const double> class_mass) {
  const std::size_t num_classes = class_mass.size();
  if (num_classes < 2) throw ValidationError("topic_entropy needs at least 2 classes");
  double total = 0.0;
  for (double m : class_mass) {
    assert(m >= 0.0);
    total += m;
  }
  if (total <= 0.0) return 1.0;
  double acc = 0.0;
  for (double m : class_mass) {
    if (m > 0.0) {
      double p = m / total;
      acc += p * std::log(p);
    }
  }
  double h = acc / std::log(1.0 / static_cast<double>(num_classes));
  return std::clamp(h, 0.0, 1.0);
}

/// Static bimodality reward: H^2 - H + 1. Equals 1 at both entropy
/// extremes and bottoms out at 0.75 for H = 0.5.
inline double prior_factor_static(double h) {
  return h * h - h + 1.0;
}

/// Annealed reward: H^2 - 2*H_bar*H + 1, where H_bar is the mean topic
/// entropy acting as an autonomous cooling parameter. Near random
/// initialization (H_bar close to 1) only low-entropy topics are rewarded;
/// as H_bar falls, high-entropy topics become acceptable again. At
/// H_bar = 0.5 this reduces exactly to the static factor.
inline double prior_factor_annealed(double h, double h_bar) {
  return h * h - 2.0 * h_bar * h + 1.0;
}

/// Log of the factorizing prior over a C-by-K class-mass table, up to its
/// normalization constant: sum over topics of log A(H(column)). Columns
/// are treated independently. Each factor is floored before the log.
inline double log_prior(const Mat<double>& class_mass, double h_bar,
                        double floor = kPriorFloor) {
  if (class_mass.rows() < 2) throw ValidationError("log_prior needs at least 2 classes");
  const std::size_t num_topics = class_mass.cols();
  std::vector<double> column(class_mass.rows());
  double acc = 0.0;
  for (std::size_t k = 0; k < num_topics; ++k) {
    for (std::size_t c = 0; c < class_mass.rows(); ++c) column[c] = class_mass(c, k);
    double a = prior_factor_annealed(topic_entropy(column), h_bar);
    acc += std::log(std::max(a, floor));
  }
  return acc;
}

/// Partition of the topic space by entropy. Topics in `private_topics`
/// have entropy below `tau`; the rest are shared.
struct Segmentation {
  std::vector<int> private_topics;
  std::vector<int> shared_topics;
  double tau = 0.0;

  friend bool operator==(const Segmentation&, const Segmentation&) = default;
};

/// Splits topics into class-private and class-shared. With an explicit
/// threshold, private = { k : H[k] < tau }. Otherwise the threshold is
/// placed at the midpoint of the largest gap in the sorted entropies
/// (leftmost gap on ties); if all entropies are equal the split
/// degenerates and every topic is reported shared.
inline Segmentation segment_topics(std::span<const double> entropies,
                                   std::optional<double> tau = std::nullopt) {
  const int num_topics = static_cast<int>(entropies.size());
  if (num_topics < 2) throw ValidationError("segment_topics needs at least 2 topics");

  Segmentation seg;
  if (tau.has_value()) {
    seg.tau = *tau;
    for (int k = 0; k < num_topics; ++k) {
      if (entropies[static_cast<std::size_t>(k)] < seg.tau)
        seg.private_topics.push_back(k);
      else
        seg.shared_topics.push_back(k);
    }
    return seg;
  }

  std::vector<int> order(static_cast<std::size_t>(num_topics));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return entropies[static_cast<std::size_t>(a)] < entropies[static_cast<std::size_t>(b)];
  });

  double best_gap = 0.0;
  int split = 0;  // private set = order[0 .. split)
  for (int i = 0; i + 1 < num_topics; ++i) {
    double lo = entropies[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    double hi = entropies[static_cast<std::size_t>(order[static_cast<std::size_t>(i + 1)])];
    if (hi - lo > best_gap) {
      best_gap = hi - lo;
      split = i + 1;
    }
  }
  if (best_gap == 0.0) {
    // all equal: everything shared
    seg.tau = entropies[0];
    seg.shared_topics.assign(order.begin(), order.end());
    std::sort(seg.shared_topics.begin(), seg.shared_topics.end());
    return seg;
  }
  double lo = entropies[static_cast<std::size_t>(order[static_cast<std::size_t>(split - 1)])];
  double hi = entropies[static_cast<std::size_t>(order[static_cast<std::size_t>(split)])];
  seg.tau = 0.5 * (lo + hi);
  seg.private_topics.assign(order.begin(), order.begin() + split);
  seg.shared_topics.assign(order.begin() + split, order.end());
  std::sort(seg.private_topics.begin(), seg.private_topics.end());
  std::sort(seg.shared_topics.begin(), seg.shared_topics.end());
  return seg;
}

}  // namespace factopic
