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

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "factopic/errors.hpp"
#include "factopic/model.hpp"

namespace factopic {

namespace detail {

/// Full-precision decimal form; round-trips exactly through strtod.
inline std::string fmt_full(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline bool parse_double(std::string_view s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace detail

/// Writes the versioned text model format:
///   FLDA 1
///   K V C factorized
///   alpha pi H_bar tau
///   K beta rows / C theta_class rows / H line / role-flag line
///   V vocabulary terms / C class names
inline void save_model(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);

  const int num_topics = model.num_topics();
  const int num_classes = model.num_classes();
  out << "FLDA 1\n";
  out << num_topics << ' ' << model.vocab_size() << ' ' << num_classes << ' '
      << (model.hyperparams.factorized ? 1 : 0) << '\n';
  out << detail::fmt_full(model.hyperparams.alpha) << ' '
      << detail::fmt_full(model.hyperparams.pi) << ' ' << detail::fmt_full(model.h_bar) << ' '
      << detail::fmt_full(model.segmentation.tau) << '\n';

  auto write_row = [&](std::span<const double> row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ' ';
      out << detail::fmt_full(row[i]);
    }
    out << '\n';
  };
  for (int k = 0; k < num_topics; ++k) write_row(model.beta.row(static_cast<std::size_t>(k)));
  for (int c = 0; c < num_classes; ++c)
    write_row(model.theta_class.row(static_cast<std::size_t>(c)));
  write_row(model.entropies);

  std::vector<bool> is_private(static_cast<std::size_t>(num_topics), false);
  for (int k : model.segmentation.private_topics) is_private[static_cast<std::size_t>(k)] = true;
  for (int k = 0; k < num_topics; ++k) {
    if (k) out << ' ';
    out << (is_private[static_cast<std::size_t>(k)] ? 'p' : 's');
  }
  out << '\n';

  for (const std::string& term : model.vocabulary.terms) out << term << '\n';
  for (int c = 0; c < num_classes; ++c) out << model.class_name(c) << '\n';
  if (!out) throw IoError("write error on " + path);
}

inline TrainedModel load_model(const std::string& path) {
  std::vector<std::string> lines = detail::read_lines(path);
  std::size_t pos = 0;
  auto next_line = [&]() -> const std::string& {
    if (pos >= lines.size()) throw ValidationError(path + ": truncated model file");
    return lines[pos++];
  };

  if (next_line() != "FLDA 1")
    throw ValidationError(path + ": not a model file (bad magic line)");

  auto dims = detail::split_ws(next_line());
  long long num_topics, vocab_size, num_classes, factorized;
  if (dims.size() != 4 || !detail::parse_int(dims[0], num_topics) ||
      !detail::parse_int(dims[1], vocab_size) || !detail::parse_int(dims[2], num_classes) ||
      !detail::parse_int(dims[3], factorized) || num_topics < 2 || vocab_size < 1 ||
      num_classes < 2 || (factorized != 0 && factorized != 1))
    throw ValidationError(path + ": malformed dimension line");

  auto scalars = detail::split_ws(next_line());
  double alpha, pi, h_bar, tau;
  if (scalars.size() != 4 || !detail::parse_double(scalars[0], alpha) ||
      !detail::parse_double(scalars[1], pi) || !detail::parse_double(scalars[2], h_bar) ||
      !detail::parse_double(scalars[3], tau))
    throw ValidationError(path + ": malformed scalar line");

  auto read_row = [&](std::span<double> row, const char* what, bool stochastic) {
    auto fields = detail::split_ws(next_line());
    if (fields.size() != row.size())
      throw ValidationError(path + ": " + what + " row at line " + std::to_string(pos) +
                            " has " + std::to_string(fields.size()) + " values, expected " +
                            std::to_string(row.size()));
    double sum = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (!detail::parse_double(fields[i], row[i]) || !std::isfinite(row[i]))
        throw ValidationError(path + ": bad value in " + std::string(what) + " row at line " +
                              std::to_string(pos));
      sum += row[i];
    }
    if (stochastic && std::abs(sum - 1.0) > 1e-6)
      throw ValidationError(path + ": " + what + " row at line " + std::to_string(pos) +
                            " sums to " + detail::fmt_full(sum));
  };

  TrainedModel model;
  model.beta = Mat<double>(static_cast<std::size_t>(num_topics),
                           static_cast<std::size_t>(vocab_size));
  for (long long k = 0; k < num_topics; ++k)
    read_row(model.beta.row(static_cast<std::size_t>(k)), "beta", true);
  model.theta_class = Mat<double>(static_cast<std::size_t>(num_classes),
                                  static_cast<std::size_t>(num_topics));
  for (long long c = 0; c < num_classes; ++c)
    read_row(model.theta_class.row(static_cast<std::size_t>(c)), "theta-class", true);

  model.entropies.resize(static_cast<std::size_t>(num_topics));
  read_row(model.entropies, "entropy", false);
  for (double h : model.entropies)
    if (h < 0.0 || h > 1.0) throw ValidationError(path + ": entropy outside [0,1]");

  auto flags = detail::split_ws(next_line());
  if (flags.size() != static_cast<std::size_t>(num_topics))
    throw ValidationError(path + ": role-flag line has wrong length");
  model.segmentation.tau = tau;
  for (long long k = 0; k < num_topics; ++k) {
    auto f = flags[static_cast<std::size_t>(k)];
    if (f == "p")
      model.segmentation.private_topics.push_back(static_cast<int>(k));
    else if (f == "s")
      model.segmentation.shared_topics.push_back(static_cast<int>(k));
    else
      throw ValidationError(path + ": role flag must be 'p' or 's'");
  }

  model.vocabulary.terms.reserve(static_cast<std::size_t>(vocab_size));
  for (long long v = 0; v < vocab_size; ++v) {
    const std::string& term = next_line();
    if (term.empty()) throw ValidationError(path + ": empty vocabulary term");
    model.vocabulary.terms.push_back(term);
  }
  for (long long c = 0; c < num_classes; ++c) model.class_names.push_back(next_line());

  model.h_bar = h_bar;
  model.hyperparams.num_topics = static_cast<int>(num_topics);
  model.hyperparams.alpha = alpha;
  model.hyperparams.pi = pi;
  model.hyperparams.factorized = factorized == 1;
  return model;
}

}  // namespace factopic
