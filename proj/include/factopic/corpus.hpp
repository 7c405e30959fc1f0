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
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "factopic/errors.hpp"

namespace factopic {

/// Ordered set of distinct terms. Term ids are 0-based positions; the
/// on-disk bag-of-words format is 1-based (UCI convention).
struct Vocabulary {
  std::vector<std::string> terms;

  int size() const { return static_cast<int>(terms.size()); }

  std::unordered_map<std::string, int> index() const {
    std::unordered_map<std::string, int> m;
    m.reserve(terms.size());
    for (int i = 0; i < size(); ++i) m.emplace(terms[i], i);
    return m;
  }

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;
};

/// Bag-of-words document: sparse positive counts over term ids, total
/// token count, and a class label.
struct Document {
  std::vector<std::pair<int, int>> counts;  // (term id, count), ascending term id
  std::int64_t length = 0;                  // sum of counts
  int label = 0;

  friend bool operator==(const Document&, const Document&) = default;
};

struct Corpus {
  Vocabulary vocabulary;
  std::vector<Document> documents;
  int num_classes = 0;
  std::vector<std::string> class_names;  // empty, or one name per class

  int num_documents() const { return static_cast<int>(documents.size()); }

  std::string class_name(int c) const {
    if (c >= 0 && c < static_cast<int>(class_names.size())) return class_names[c];
    return std::to_string(c);
  }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

namespace detail {

inline bool parse_int(std::string_view s, long long& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

/// Reads all lines, stripping one trailing '\r' per line. A final line
/// without a newline still counts.
inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (in.bad()) throw IoError("read error on " + path);
  return lines;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace detail

/// Lowercases and splits on maximal runs of non-alphanumeric bytes. ASCII
/// only; anything else (including multi-byte UTF-8 sequences) separates
/// tokens. No stop-word removal: shared topics are expected to absorb
/// function words during training.
inline std::vector<std::string> tokenize_text(std::string_view raw) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : raw) {
    if (ch >= 'a' && ch <= 'z') {
      current.push_back(ch);
    } else if (ch >= 'A' && ch <= 'Z') {
      current.push_back(static_cast<char>(ch - 'A' + 'a'));
    } else if (ch >= '0' && ch <= '9') {
      current.push_back(ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

struct LoadOptions {
  /// Training corpora must cover every class; evaluation corpora need not.
  bool require_all_classes = true;
  /// Fixed class-name mapping (e.g. the one a trained model was built
  /// with). When set, string labels resolve against it and integer labels
  /// must stay below its size.
  const std::vector<std::string>* class_names = nullptr;
};

namespace detail {

struct ParsedLabels {
  std::vector<int> labels;
  std::vector<std::string> names;  // may be empty for plain integer labels
  bool wrote_sidecar = false;
};

inline std::vector<std::string> read_class_sidecar(const std::string& path) {
  std::vector<std::string> names = read_lines(path);
  while (!names.empty() && names.back().empty()) names.pop_back();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].empty())
      throw ValidationError(path + ": empty class name at line " + std::to_string(i + 1));
  }
  return names;
}

inline ParsedLabels parse_labels(const std::string& path, const LoadOptions& opts) {
  std::vector<std::string> lines = read_lines(path);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();

  bool all_integers = !lines.empty();
  for (const std::string& s : lines) {
    long long v;
    if (!parse_int(s, v)) {
      all_integers = false;
      break;
    }
  }

  ParsedLabels out;
  out.labels.reserve(lines.size());

  if (all_integers) {
    for (std::size_t i = 0; i < lines.size(); ++i) {
      long long v = 0;
      parse_int(lines[i], v);
      if (v < 0)
        throw ValidationError(path + ": negative class label at line " + std::to_string(i + 1));
      out.labels.push_back(static_cast<int>(v));
    }
    if (opts.class_names) {
      out.names = *opts.class_names;
    } else {
      // a previously written sidecar supplies names for integer labels
      std::ifstream probe(path + ".classes");
      if (probe.good()) out.names = read_class_sidecar(path + ".classes");
    }
    return out;
  }

  // string labels: map by fixed list if given, else by first appearance
  std::unordered_map<std::string, int> ids;
  if (opts.class_names) {
    out.names = *opts.class_names;
    for (int i = 0; i < static_cast<int>(out.names.size()); ++i) ids.emplace(out.names[i], i);
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& name = lines[i];
    if (name.empty())
      throw ValidationError(path + ": empty label at line " + std::to_string(i + 1));
    auto it = ids.find(name);
    if (it == ids.end()) {
      if (opts.class_names)
        throw ValidationError(path + ": unknown class label '" + name + "' at line " +
                              std::to_string(i + 1));
      int id = static_cast<int>(out.names.size());
      ids.emplace(name, id);
      out.names.push_back(name);
      it = ids.find(name);
    }
    out.labels.push_back(it->second);
  }
  if (!opts.class_names) {
    std::ofstream sidecar(path + ".classes", std::ios::binary);
    if (sidecar) {
      for (const std::string& name : out.names) sidecar << name << '\n';
      out.wrote_sidecar = true;
    } else {
      std::cerr << "warning: could not write " << path << ".classes\n";
    }
  }
  return out;
}

}  // namespace detail

/// Loads the docword/labels pair against an already-built vocabulary.
inline Corpus load_corpus_docs(const std::string& docword_path, const std::string& labels_path,
                               Vocabulary vocabulary, const LoadOptions& opts = {}) {
  using detail::parse_int;

  std::vector<std::string> lines = detail::read_lines(docword_path);
  auto header = [&](std::size_t idx, const char* what) -> long long {
    if (idx >= lines.size())
      throw ValidationError(docword_path + ": missing " + what + " header at line " +
                            std::to_string(idx + 1));
    long long v;
    if (!parse_int(lines[idx], v) || v < 0)
      throw ValidationError(docword_path + ": malformed " + what + " header at line " +
                            std::to_string(idx + 1));
    return v;
  };
  const long long num_docs = header(0, "document-count");
  const long long num_terms = header(1, "vocabulary-size");
  const long long num_entries = header(2, "entry-count");
  if (num_docs < 1) throw ValidationError(docword_path + ": document count must be positive");
  if (num_terms < 1) throw ValidationError(docword_path + ": vocabulary size must be positive");
  if (num_terms != vocabulary.size())
    throw ValidationError(docword_path + ": vocabulary size " + std::to_string(num_terms) +
                          " does not match the " + std::to_string(vocabulary.size()) +
                          "-term vocabulary");

  Corpus corpus;
  corpus.documents.resize(static_cast<std::size_t>(num_docs));

  // sparse accumulation; duplicate (doc, term) entries sum
  std::vector<std::map<int, std::int64_t>> counts(static_cast<std::size_t>(num_docs));

  long long seen = 0;
  long long prev_doc = 0;
  for (std::size_t idx = 3; idx < lines.size(); ++idx) {
    if (lines[idx].empty() && idx + 1 == lines.size()) break;  // trailing blank line
    const std::string line_no = std::to_string(idx + 1);
    auto fields = detail::split_ws(lines[idx]);
    long long doc_id, term_id, count;
    if (fields.size() != 3 || !parse_int(fields[0], doc_id) || !parse_int(fields[1], term_id) ||
        !parse_int(fields[2], count))
      throw ValidationError(docword_path + ": malformed entry at line " + line_no);
    if (++seen > num_entries)
      throw ValidationError(docword_path + ": more than " + std::to_string(num_entries) +
                            " entries at line " + line_no);
    if (doc_id < 1 || doc_id > num_docs)
      throw ValidationError(docword_path + ": doc index out of range at line " + line_no);
    if (doc_id < prev_doc)
      throw ValidationError(docword_path + ": doc indices not ascending at line " + line_no);
    if (term_id < 1 || term_id > num_terms)
      throw ValidationError(docword_path + ": term index out of range at line " + line_no);
    if (count <= 0)
      throw ValidationError(docword_path + ": nonpositive count at line " + line_no);
    prev_doc = doc_id;
    counts[static_cast<std::size_t>(doc_id - 1)][static_cast<int>(term_id - 1)] += count;
  }
  if (seen < num_entries)
    throw ValidationError(docword_path + ": expected " + std::to_string(num_entries) +
                          " entries, found " + std::to_string(seen));

  for (long long m = 0; m < num_docs; ++m) {
    Document& doc = corpus.documents[static_cast<std::size_t>(m)];
    for (const auto& [term, count] : counts[static_cast<std::size_t>(m)]) {
      doc.counts.emplace_back(term, static_cast<int>(count));
      doc.length += count;
    }
    if (doc.length == 0)
      throw ValidationError(docword_path + ": document " + std::to_string(m + 1) +
                            " has no tokens");
  }
  corpus.vocabulary = std::move(vocabulary);

  // labels
  detail::ParsedLabels parsed = detail::parse_labels(labels_path, opts);
  if (static_cast<long long>(parsed.labels.size()) != num_docs)
    throw ValidationError(labels_path + ": label count mismatch (expected " +
                          std::to_string(num_docs) + ", found " +
                          std::to_string(parsed.labels.size()) + ")");

  int num_classes = 0;
  for (int label : parsed.labels) num_classes = std::max(num_classes, label + 1);
  if (!parsed.names.empty()) {
    if (num_classes > static_cast<int>(parsed.names.size()))
      throw ValidationError(labels_path + ": label exceeds class-name list of size " +
                            std::to_string(parsed.names.size()));
    num_classes = static_cast<int>(parsed.names.size());
  }
  if (num_classes < 2)
    throw ValidationError(labels_path + ": need at least 2 classes, found " +
                          std::to_string(num_classes));

  for (std::size_t m = 0; m < parsed.labels.size(); ++m)
    corpus.documents[m].label = parsed.labels[m];
  corpus.num_classes = num_classes;
  corpus.class_names = std::move(parsed.names);

  if (opts.require_all_classes) {
    std::vector<int> per_class(static_cast<std::size_t>(num_classes), 0);
    for (const Document& d : corpus.documents) ++per_class[static_cast<std::size_t>(d.label)];
    for (int c = 0; c < num_classes; ++c)
      if (per_class[static_cast<std::size_t>(c)] == 0)
        throw ValidationError(labels_path + ": class " + corpus.class_name(c) +
                              " has no documents");
  }
  return corpus;
}

/// Reads a vocabulary file: one term per line, all distinct.
inline Vocabulary load_vocabulary(const std::string& vocab_path) {
  std::vector<std::string> lines = detail::read_lines(vocab_path);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  std::unordered_map<std::string, int> seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty())
      throw ValidationError(vocab_path + ": empty term at line " + std::to_string(i + 1));
    auto [it, inserted] = seen.emplace(lines[i], static_cast<int>(i));
    if (!inserted)
      throw ValidationError(vocab_path + ": duplicate term '" + lines[i] + "' at line " +
                            std::to_string(i + 1));
  }
  return Vocabulary{std::move(lines)};
}

/// Loads a labeled corpus from the three-file bag-of-words layout:
///   docword: header lines D, W, NNZ; then NNZ lines "docId termId count"
///            (1-based ids, ascending docId)
///   labels:  D lines, integer class ids or string names
///   vocab:   W lines, one term per line
/// String labels are mapped by first appearance and the mapping is written
/// to "<labels>.classes" unless a fixed mapping is supplied.
inline Corpus load_corpus(const std::string& docword_path, const std::string& labels_path,
                          const std::string& vocab_path, const LoadOptions& opts = {}) {
  return load_corpus_docs(docword_path, labels_path, load_vocabulary(vocab_path), opts);
}

/// Inverse of load_corpus. Labels are written as integers; class names, if
/// any, go to "<labels>.classes" so that load_corpus(save_corpus(c)) == c.
inline void save_corpus(const Corpus& corpus, const std::string& docword_path,
                        const std::string& labels_path, const std::string& vocab_path) {
  std::int64_t nnz = 0;
  for (const Document& d : corpus.documents) nnz += static_cast<std::int64_t>(d.counts.size());

  std::ofstream docword(docword_path, std::ios::binary);
  if (!docword) throw IoError("cannot write " + docword_path);
  docword << corpus.num_documents() << '\n'
          << corpus.vocabulary.size() << '\n'
          << nnz << '\n';
  for (int m = 0; m < corpus.num_documents(); ++m)
    for (const auto& [term, count] : corpus.documents[static_cast<std::size_t>(m)].counts)
      docword << (m + 1) << ' ' << (term + 1) << ' ' << count << '\n';
  if (!docword) throw IoError("write error on " + docword_path);

  std::ofstream labels(labels_path, std::ios::binary);
  if (!labels) throw IoError("cannot write " + labels_path);
  for (const Document& d : corpus.documents) labels << d.label << '\n';
  if (!labels) throw IoError("write error on " + labels_path);

  std::ofstream vocab(vocab_path, std::ios::binary);
  if (!vocab) throw IoError("cannot write " + vocab_path);
  for (const std::string& term : corpus.vocabulary.terms) vocab << term << '\n';
  if (!vocab) throw IoError("write error on " + vocab_path);

  if (!corpus.class_names.empty()) {
    std::ofstream sidecar(labels_path + ".classes", std::ios::binary);
    if (!sidecar) throw IoError("cannot write " + labels_path + ".classes");
    for (const std::string& name : corpus.class_names) sidecar << name << '\n';
  }
}

/// Re-encodes a token list against a fixed term index. Returns sparse
/// counts plus the number of out-of-vocabulary tokens dropped.
inline std::pair<std::vector<std::pair<int, int>>, std::int64_t> encode_tokens(
    const std::unordered_map<std::string, int>& term_index,
    const std::vector<std::string>& tokens) {
  std::map<int, int> counts;
  std::int64_t dropped = 0;
  for (const std::string& tok : tokens) {
    auto it = term_index.find(tok);
    if (it == term_index.end())
      ++dropped;
    else
      ++counts[it->second];
  }
  return {{counts.begin(), counts.end()}, dropped};
}

struct TextCorpusResult {
  Corpus corpus;
  std::vector<std::size_t> dropped_documents;  // input positions that became empty
  std::int64_t dropped_tokens = 0;             // below min_count or out of vocabulary
};

/// Builds a corpus from raw (text, class) pairs. The vocabulary keeps
/// tokens occurring at least min_count times corpus-wide, ordered by first
/// occurrence. Documents that end up empty are dropped.
inline TextCorpusResult build_corpus_from_text(
    const std::vector<std::pair<std::string, int>>& texts, int min_count,
    std::vector<std::string> class_names = {}) {
  if (texts.empty()) throw ValidationError("no input documents");
  if (min_count < 1) throw ValidationError("min_count must be >= 1");

  std::vector<std::vector<std::string>> token_lists;
  token_lists.reserve(texts.size());
  std::vector<std::string> order;
  std::unordered_map<std::string, std::int64_t> freq;
  int num_classes = 0;
  for (const auto& [text, label] : texts) {
    if (label < 0) throw ValidationError("negative class label");
    num_classes = std::max(num_classes, label + 1);
    token_lists.push_back(tokenize_text(text));
    for (const std::string& tok : token_lists.back()) {
      auto [it, inserted] = freq.emplace(tok, 0);
      if (inserted) order.push_back(tok);
      ++it->second;
    }
  }
  if (!class_names.empty() && static_cast<int>(class_names.size()) < num_classes)
    throw ValidationError("class-name list shorter than label range");
  if (!class_names.empty()) num_classes = static_cast<int>(class_names.size());
  if (num_classes < 2) throw ValidationError("need at least 2 classes");

  TextCorpusResult result;
  for (const std::string& tok : order)
    if (freq[tok] >= min_count) result.corpus.vocabulary.terms.push_back(tok);

  const auto term_index = result.corpus.vocabulary.index();
  std::vector<std::int64_t> class_docs(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    auto [counts, dropped] = encode_tokens(term_index, token_lists[i]);
    result.dropped_tokens += dropped;
    if (counts.empty()) {
      result.dropped_documents.push_back(i);
      continue;
    }
    Document doc;
    doc.counts = std::move(counts);
    for (const auto& [term, count] : doc.counts) doc.length += count;
    doc.label = texts[i].second;
    ++class_docs[static_cast<std::size_t>(doc.label)];
    result.corpus.documents.push_back(std::move(doc));
  }
  for (int c = 0; c < num_classes; ++c)
    if (class_docs[static_cast<std::size_t>(c)] == 0)
      throw ValidationError("all documents of class " + std::to_string(c) +
                            " empty after filtering");
  result.corpus.num_classes = num_classes;
  result.corpus.class_names = std::move(class_names);
  return result;
}

/// New corpus holding the selected documents (same vocabulary, classes,
/// and names). Order follows the index list.
inline Corpus subcorpus(const Corpus& corpus, const std::vector<int>& doc_indices) {
  Corpus out;
  out.vocabulary = corpus.vocabulary;
  out.num_classes = corpus.num_classes;
  out.class_names = corpus.class_names;
  out.documents.reserve(doc_indices.size());
  for (int idx : doc_indices) {
    if (idx < 0 || idx >= corpus.num_documents())
      throw ValidationError("document index " + std::to_string(idx) + " out of range");
    out.documents.push_back(corpus.documents[static_cast<std::size_t>(idx)]);
  }
  return out;
}

/// Documents per class (length C).
inline std::vector<int> class_document_counts(const Corpus& corpus) {
  std::vector<int> counts(static_cast<std::size_t>(corpus.num_classes), 0);
  for (const Document& d : corpus.documents) {
    if (d.label < 0 || d.label >= corpus.num_classes)
      throw ValidationError("document label " + std::to_string(d.label) + " out of range");
    ++counts[static_cast<std::size_t>(d.label)];
  }
  return counts;
}

}  // namespace factopic
