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

#include <catch2/catch_amalgamated.hpp>

#include "factopic/corpus.hpp"
#include "util.hpp"

using namespace factopic;
using testutil::TempDir;
using testutil::write_file;

using Catch::Matchers::ContainsSubstring;

namespace {

struct CorpusFiles {
  TempDir dir;
  std::string docword, labels, vocab;

  CorpusFiles(const std::string& docword_text, const std::string& labels_text,
              const std::string& vocab_text) {
    docword = dir.file("corpus.docword");
    labels = dir.file("corpus.labels");
    vocab = dir.file("corpus.vocab");
    write_file(docword, docword_text);
    write_file(labels, labels_text);
    write_file(vocab, vocab_text);
  }
};

}  // namespace

TEST_CASE("load_corpus reads the documented example") {
  CorpusFiles files("2\n3\n3\n1 1 2\n1 3 1\n2 2 4\n", "0\n1\n", "a\nb\nc\n");
  Corpus corpus = load_corpus(files.docword, files.labels, files.vocab);

  REQUIRE(corpus.num_documents() == 2);
  REQUIRE(corpus.vocabulary.size() == 3);
  REQUIRE(corpus.num_classes == 2);
  CHECK(corpus.documents[0].length == 3);
  CHECK(corpus.documents[1].length == 4);
  CHECK(corpus.documents[0].counts ==
        std::vector<std::pair<int, int>>{{0, 2}, {2, 1}});
  CHECK(corpus.documents[1].counts == std::vector<std::pair<int, int>>{{1, 4}});
  CHECK(corpus.documents[0].label == 0);
  CHECK(corpus.documents[1].label == 1);
}

TEST_CASE("load_corpus accepts a missing trailing newline") {
  CorpusFiles files("2\n3\n2\n1 1 2\n2 2 1", "0\n1", "a\nb\nc");
  Corpus corpus = load_corpus(files.docword, files.labels, files.vocab);
  CHECK(corpus.documents[1].length == 1);
}

TEST_CASE("load_corpus rejects a label count mismatch") {
  CorpusFiles files("2\n3\n2\n1 1 2\n2 2 1\n", "0\n1\n0\n", "a\nb\nc\n");
  REQUIRE_THROWS_MATCHES(load_corpus(files.docword, files.labels, files.vocab), ValidationError,
                         Catch::Matchers::MessageMatches(ContainsSubstring("label count mismatch")));
}

TEST_CASE("load_corpus reports a term index out of range with its line") {
  CorpusFiles files("2\n3\n3\n1 1 2\n2 2 1\n1 4 1\n", "0\n1\n", "a\nb\nc\n");
  try {
    load_corpus(files.docword, files.labels, files.vocab);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK_THAT(e.what(), ContainsSubstring("term index out of range"));
    CHECK_THAT(e.what(), ContainsSubstring("line 6"));
  }
}

TEST_CASE("load_corpus validates structure") {
  SECTION("malformed header") {
    CorpusFiles files("two\n3\n1\n1 1 2\n", "0\n", "a\nb\nc\n");
    REQUIRE_THROWS_AS(load_corpus(files.docword, files.labels, files.vocab), ValidationError);
  }
  SECTION("nonpositive count") {
    CorpusFiles files("2\n3\n2\n1 1 0\n2 2 1\n", "0\n1\n", "a\nb\nc\n");
    try {
      load_corpus(files.docword, files.labels, files.vocab);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK_THAT(e.what(), ContainsSubstring("line 4"));
    }
  }
  SECTION("doc ids must ascend") {
    CorpusFiles files("2\n3\n3\n2 2 1\n1 1 2\n1 2 1\n", "0\n1\n", "a\nb\nc\n");
    REQUIRE_THROWS_MATCHES(load_corpus(files.docword, files.labels, files.vocab),
                           ValidationError,
                           Catch::Matchers::MessageMatches(ContainsSubstring("not ascending")));
  }
  SECTION("duplicate vocabulary term") {
    CorpusFiles files("2\n3\n2\n1 1 2\n2 2 1\n", "0\n1\n", "a\nb\na\n");
    REQUIRE_THROWS_MATCHES(load_corpus(files.docword, files.labels, files.vocab),
                           ValidationError,
                           Catch::Matchers::MessageMatches(ContainsSubstring("duplicate term")));
  }
  SECTION("empty documents are rejected") {
    CorpusFiles files("2\n3\n1\n1 1 2\n", "0\n1\n", "a\nb\nc\n");
    REQUIRE_THROWS_MATCHES(load_corpus(files.docword, files.labels, files.vocab),
                           ValidationError,
                           Catch::Matchers::MessageMatches(ContainsSubstring("no tokens")));
  }
  SECTION("duplicate doc/term entries accumulate") {
    CorpusFiles files("2\n3\n3\n1 1 2\n1 1 1\n2 2 1\n", "0\n1\n", "a\nb\nc\n");
    Corpus corpus = load_corpus(files.docword, files.labels, files.vocab);
    CHECK(corpus.documents[0].counts == std::vector<std::pair<int, int>>{{0, 3}});
  }
  SECTION("training corpora must cover every class") {
    CorpusFiles files("2\n3\n2\n1 1 2\n2 2 1\n", "0\n2\n", "a\nb\nc\n");
    REQUIRE_THROWS_MATCHES(load_corpus(files.docword, files.labels, files.vocab),
                           ValidationError,
                           Catch::Matchers::MessageMatches(ContainsSubstring("has no documents")));
    LoadOptions opts;
    opts.require_all_classes = false;
    CHECK_NOTHROW(load_corpus(files.docword, files.labels, files.vocab, opts));
  }
}

TEST_CASE("string labels map by first appearance and write a sidecar") {
  CorpusFiles files("3\n2\n3\n1 1 1\n2 2 1\n3 1 2\n", "spam\nham\nspam\n", "a\nb\n");
  Corpus corpus = load_corpus(files.docword, files.labels, files.vocab);
  REQUIRE(corpus.num_classes == 2);
  CHECK(corpus.class_names == std::vector<std::string>{"spam", "ham"});
  CHECK(corpus.documents[0].label == 0);
  CHECK(corpus.documents[1].label == 1);
  CHECK(corpus.documents[2].label == 0);
  CHECK(testutil::read_file(files.labels + ".classes") == "spam\nham\n");

  SECTION("a fixed mapping overrides first appearance") {
    std::vector<std::string> names{"ham", "spam", "extra"};
    LoadOptions opts;
    opts.class_names = &names;
    opts.require_all_classes = false;
    Corpus remapped = load_corpus(files.docword, files.labels, files.vocab, opts);
    CHECK(remapped.num_classes == 3);
    CHECK(remapped.documents[0].label == 1);
    CHECK(remapped.documents[1].label == 0);
  }
  SECTION("unknown labels against a fixed mapping fail") {
    std::vector<std::string> names{"ham", "eggs"};
    LoadOptions opts;
    opts.class_names = &names;
    REQUIRE_THROWS_MATCHES(load_corpus(files.docword, files.labels, files.vocab, opts),
                           ValidationError,
                           Catch::Matchers::MessageMatches(ContainsSubstring("unknown class label")));
  }
}

TEST_CASE("save_corpus then load_corpus round-trips exactly") {
  CorpusFiles files("3\n3\n4\n1 1 2\n1 3 1\n2 2 4\n3 1 1\n", "x\ny\nx\n", "a\nb\nc\n");
  Corpus corpus = load_corpus(files.docword, files.labels, files.vocab);

  TempDir out;
  save_corpus(corpus, out.file("c.docword"), out.file("c.labels"), out.file("c.vocab"));
  Corpus reloaded = load_corpus(out.file("c.docword"), out.file("c.labels"), out.file("c.vocab"));
  CHECK(reloaded == corpus);
}

TEST_CASE("tokenize_text lowercases and splits on non-alphanumeric runs") {
  CHECK(tokenize_text("The cat, the CAT.") ==
        std::vector<std::string>{"the", "cat", "the", "cat"});
  CHECK(tokenize_text("").empty());
  CHECK(tokenize_text("a1-b2") == std::vector<std::string>{"a1", "b2"});
  CHECK(tokenize_text("  ,,  ").empty());
  CHECK(tokenize_text("don't stop") == std::vector<std::string>{"don", "t", "stop"});
}

TEST_CASE("build_corpus_from_text applies the frequency cutoff") {
  std::vector<std::pair<std::string, int>> texts{{"a a b", 0}, {"b b", 1}};

  SECTION("min_count 2 keeps both terms") {
    auto result = build_corpus_from_text(texts, 2);
    const Corpus& c = result.corpus;
    REQUIRE(c.vocabulary.terms == std::vector<std::string>{"a", "b"});
    REQUIRE(c.num_documents() == 2);
    CHECK(c.documents[0].counts == std::vector<std::pair<int, int>>{{0, 2}, {1, 1}});
    CHECK(c.documents[1].counts == std::vector<std::pair<int, int>>{{1, 2}});
    CHECK(result.dropped_tokens == 0);
    CHECK(result.dropped_documents.empty());
  }
  SECTION("min_count 3 keeps only b") {
    auto result = build_corpus_from_text(texts, 3);
    const Corpus& c = result.corpus;
    REQUIRE(c.vocabulary.terms == std::vector<std::string>{"b"});
    CHECK(c.documents[0].counts == std::vector<std::pair<int, int>>{{0, 1}});
    CHECK(result.dropped_tokens == 2);
  }
  SECTION("min_count 10 empties every class") {
    REQUIRE_THROWS_MATCHES(build_corpus_from_text(texts, 10), ValidationError,
                           Catch::Matchers::MessageMatches(ContainsSubstring("empty after filtering")));
  }
  SECTION("documents that become empty are dropped and reported") {
    std::vector<std::pair<std::string, int>> more{{"a a b", 0}, {"zz", 0}, {"b b", 1}};
    auto result = build_corpus_from_text(more, 2);
    CHECK(result.corpus.num_documents() == 2);
    CHECK(result.dropped_documents == std::vector<std::size_t>{1});
  }
}

TEST_CASE("subcorpus selects documents and keeps the class space") {
  CorpusFiles files("3\n2\n3\n1 1 1\n2 2 1\n3 1 2\n", "0\n1\n0\n", "a\nb\n");
  Corpus corpus = load_corpus(files.docword, files.labels, files.vocab);
  Corpus sub = subcorpus(corpus, {2, 0});
  REQUIRE(sub.num_documents() == 2);
  CHECK(sub.documents[0] == corpus.documents[2]);
  CHECK(sub.documents[1] == corpus.documents[0]);
  CHECK(sub.num_classes == 2);
  CHECK(sub.vocabulary == corpus.vocabulary);
}
