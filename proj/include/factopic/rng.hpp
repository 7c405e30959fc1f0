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

#include <cassert>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace factopic {

/// Derives an independent stream seed. Used to give each sampling chain
/// its own generator from one user-facing seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Seeded generator with explicitly coded draw routines. The <random>
/// distribution classes are implementation-defined, so sampling through
/// them would tie generated corpora and models to one standard library;
/// everything here depends only on the mt19937_64 stream, which is fully
/// specified.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform01() { return (engine_() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1].
  double uniform01_open() { return 1.0 - uniform01(); }

  /// Uniform integer in [0, n), unbiased. n must be positive.
  std::uint64_t uniform_int(std::uint64_t n) {
    assert(n > 0);
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

  /// Standard normal via Box-Muller (cosine branch).
  double normal() {
    constexpr double two_pi = 6.283185307179586476925286766559;
    double u1 = uniform01_open();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  /// Gamma(shape, 1) by Marsaglia-Tsang squeeze; boosted for shape < 1.
  double gamma(double shape) {
    assert(shape > 0.0);
    if (shape < 1.0) {
      double u = uniform01_open();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double t = 1.0 + c * x;
      if (t <= 0.0) continue;
      double v = t * t * t;
      double u = uniform01_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /// Symmetric Dirichlet draw over out.size() dimensions.
  void dirichlet(double concentration, std::span<double> out) {
    double sum = 0.0;
    for (double& x : out) {
      x = gamma(concentration);
      sum += x;
    }
    if (sum <= 0.0) {
      // can happen for tiny concentrations when every gamma underflows
      double u = 1.0 / static_cast<double>(out.size());
      for (double& x : out) x = u;
      return;
    }
    for (double& x : out) x /= sum;
  }

  /// Draw an index proportional to nonnegative weights; total must be
  /// their sum. Running-sum walk in plain probability space.
  std::size_t categorical(std::span<const double> weights, double total) {
    assert(!weights.empty() && total > 0.0);
    double u = uniform01() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] > 0.0) last_positive = i;
      acc += weights[i];
      if (u < acc) return i;
    }
    // rounding pushed u past the accumulated total
    return last_positive;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace factopic
