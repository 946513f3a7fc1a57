#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <map>
#include <set>

#include "dpmrm/common.hpp"
#include "dpmrm/corpus.hpp"
#include "test_support.hpp"

using namespace dpmrm;
using testsup::TempDir;

namespace {

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const auto& l : lines) out << l << "\n";
}

std::map<int, int> word_multiset(const Document& d) {
  std::map<int, int> m;
  for (int w : d.words) ++m[w];
  return m;
}

}  // namespace

TEST_CASE("load_corpus builds vocabulary and keeps all docs at min_count 1") {
  TempDir tmp("load");
  write_lines(tmp.file("c.jsonl"), {
      R"({"id":"a","tokens":["cat","dog","cat"],"labels":["pets"]})",
      R"({"id":"b","tokens":["dog","bird"],"labels":["pets","wild"]})",
      R"({"id":"c","tokens":["fish"],"labels":["wild"]})",
  });
  Corpus c = load_corpus(tmp.file("c.jsonl"), 1);
  CHECK(c.num_docs() == 3);
  CHECK(c.vocabulary.size() == 4);
  CHECK(c.labels.size() == 2);
  CHECK(c.documents[0].words.size() == 3);
  CHECK(c.documents[0].words[0] == c.documents[0].words[2]);
}

TEST_CASE("load_corpus drops rare tokens and emptied documents") {
  TempDir tmp("filter");
  write_lines(tmp.file("c.jsonl"), {
      R"({"id":"a","tokens":["cat","dog","cat"],"labels":["x"]})",
      R"({"id":"b","tokens":["rare"],"labels":["x"]})",
      R"({"id":"c","tokens":["cat"],"labels":["x"]})",
  });
  Corpus c = load_corpus(tmp.file("c.jsonl"), 2);
  CHECK(c.vocabulary.find("rare") == -1);
  CHECK(c.vocabulary.find("dog") == -1);
  CHECK(c.vocabulary.find("cat") >= 0);
  CHECK(c.num_docs() == 2);  // doc b vanished

  write_lines(tmp.file("empty.jsonl"),
              {R"({"id":"a","tokens":["one"],"labels":["x"]})"});
  CHECK_THROWS_AS(load_corpus(tmp.file("empty.jsonl"), 5), DataError);
}

TEST_CASE("load_corpus reports the offending line number") {
  TempDir tmp("badline");
  write_lines(tmp.file("c.jsonl"), {
      R"({"id":"a","tokens":["x"],"labels":["l"]})",
      R"(not json at all)",
  });
  try {
    load_corpus(tmp.file("c.jsonl"), 1);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  write_lines(tmp.file("dup.jsonl"), {
      R"({"id":"a","tokens":["x"],"labels":["l"]})",
      R"({"id":"a","tokens":["y"],"labels":["l"]})",
  });
  CHECK_THROWS_AS(load_corpus(tmp.file("dup.jsonl"), 1), DataError);
}

TEST_CASE("save/load round trip is bit-identical") {
  Rng rng(11);
  Corpus c = testsup::random_corpus(25, 4, 30, 2, 14, 2, rng);
  TempDir tmp("roundtrip");
  save_corpus(c, tmp.file("c.jsonl"));
  Corpus back = load_corpus(tmp.file("c.jsonl"), 1);
  REQUIRE(back.num_docs() == c.num_docs());
  for (int j = 0; j < c.num_docs(); ++j) {
    const Document& a = c.documents[j];
    const Document& b = back.documents[j];
    CHECK(a.doc_id == b.doc_id);
    REQUIRE(a.words.size() == b.words.size());
    for (std::size_t i = 0; i < a.words.size(); ++i) {
      CHECK(c.vocabulary.id_to_token[a.words[i]] ==
            back.vocabulary.id_to_token[b.words[i]]);
    }
    std::set<std::string> la, lb;
    for (int k : a.labels) la.insert(c.labels.id_to_label[k]);
    for (int k : b.labels) lb.insert(back.labels.id_to_label[k]);
    CHECK(la == lb);
  }
}

TEST_CASE("split_train_test partitions exactly and deterministically") {
  Rng rng(3);
  Corpus c = testsup::random_corpus(10, 2, 10, 3, 6, 1, rng);
  auto [train, test] = split_train_test(c, 0.1, 77);
  CHECK(train.num_docs() == 9);
  CHECK(test.num_docs() == 1);

  auto [train2, test2] = split_train_test(c, 0.1, 77);
  CHECK(train2.documents[0].doc_id == train.documents[0].doc_id);
  CHECK(test2.documents[0].doc_id == test.documents[0].doc_id);

  CHECK_THROWS_AS(split_train_test(c, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(split_train_test(c, 1.0, 1), ConfigError);
}

TEST_CASE("split_train_test union always equals the corpus, seeds vary") {
  Rng rng(5);
  Corpus c = testsup::random_corpus(10, 2, 20, 3, 6, 1, rng);
  std::set<std::string> first_test;
  bool any_difference = false;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    auto [train, test] = split_train_test(c, 0.1, seed);
    CHECK(train.num_docs() + test.num_docs() == c.num_docs());
    std::set<std::string> ids;
    for (const auto& d : train.documents) ids.insert(d.doc_id);
    for (const auto& d : test.documents) {
      CHECK(ids.count(d.doc_id) == 0);
      ids.insert(d.doc_id);
    }
    CHECK(ids.size() == static_cast<std::size_t>(c.num_docs()));
    std::set<std::string> test_ids;
    for (const auto& d : test.documents) test_ids.insert(d.doc_id);
    if (seed == 0) first_test = test_ids;
    if (test_ids != first_test) any_difference = true;
  }
  CHECK(any_difference);
}

TEST_CASE("holdout_words splits 10 words into 9 observed + 1 held") {
  Corpus c = testsup::make_corpus(
      5, 1, {testsup::make_doc("d", {0, 1, 2, 3, 4, 0, 1, 2, 3, 4}, {0})});
  auto [obs, held] = holdout_words(c, 0.1, 9);
  CHECK(obs.documents[0].words.size() == 9);
  CHECK(held.documents[0].words.size() == 1);
  CHECK(held.documents[0].doc_id == "d");
  CHECK(held.documents[0].labels == c.documents[0].labels);
}

TEST_CASE("holdout_words with fraction 0 keeps everything observed") {
  Rng rng(6);
  Corpus c = testsup::random_corpus(8, 2, 6, 2, 9, 1, rng);
  auto [obs, held] = holdout_words(c, 0.0, 1);
  for (int j = 0; j < c.num_docs(); ++j) {
    CHECK(held.documents[j].words.empty());
    CHECK(obs.documents[j].words == c.documents[j].words);
  }
}

TEST_CASE("holdout_words conserves per-document word multisets") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Corpus c = testsup::random_corpus(12, 2, 8, 2, 20, 1, rng);
    const double fraction = 0.05 + 0.4 * rng.uniform();
    auto [obs, held] = holdout_words(c, fraction, 1000 + trial);
    for (int j = 0; j < c.num_docs(); ++j) {
      auto m = word_multiset(obs.documents[j]);
      for (auto [w, n] : word_multiset(held.documents[j])) m[w] += n;
      CHECK(m == word_multiset(c.documents[j]));
      CHECK(!obs.documents[j].words.empty());
    }
  }
}

TEST_CASE("holdout_words rejects single-word documents") {
  Corpus c = testsup::make_corpus(3, 1, {testsup::make_doc("d", {1}, {0})});
  CHECK_THROWS_AS(holdout_words(c, 0.1, 1), DataError);
}

TEST_CASE("make_label_mask training indicator and test all-ones") {
  Document d25 = testsup::make_doc("x", {0}, {2});
  LabelMask m = make_label_mask(d25, 5, MaskMode::training);
  CHECK(m.r == std::vector<std::uint8_t>{0, 0, 1, 0, 0});
  CHECK(m.ones == 1);

  Document d03 = testsup::make_doc("y", {0}, {0, 3});
  LabelMask t = make_label_mask(d03, 4, MaskMode::test);
  CHECK(t.r == std::vector<std::uint8_t>{1, 1, 1, 1});
  CHECK(t.ones == 4);

  LabelMask tr = make_label_mask(d03, 4, MaskMode::training);
  CHECK(tr.ones == 2);
}

TEST_CASE("align_corpus remaps ids onto a reference vocabulary") {
  TempDir tmp("align");
  write_lines(tmp.file("test.jsonl"), {
      R"({"id":"t","tokens":["dog","cat","newword","dog"],"labels":["pets"]})",
  });
  Corpus test = load_corpus(tmp.file("test.jsonl"), 1);
  // Reference maps with a different id order and without "newword".
  const std::vector<std::string> vocab = {"cat", "dog", "bird"};
  const std::vector<std::string> labels = {"wild", "pets"};
  Corpus aligned = align_corpus(test, vocab, labels);
  CHECK(aligned.vocabulary.id_to_token == vocab);
  CHECK(aligned.documents[0].words == std::vector<int>{1, 0, 1});  // OOV dropped
  CHECK(aligned.documents[0].labels == std::vector<int>{1});

  write_lines(tmp.file("bad.jsonl"),
              {R"({"id":"t","tokens":["dog"],"labels":["unknown"]})"});
  Corpus bad = load_corpus(tmp.file("bad.jsonl"), 1);
  CHECK_THROWS_AS(align_corpus(bad, vocab, labels), DataError);
}

TEST_CASE("corpus stats report docs, vocab, labels, labels per doc") {
  Rng rng(8);
  Corpus c = testsup::random_corpus(15, 3, 12, 2, 8, 2, rng);
  CorpusStats s = corpus_stats(c);
  CHECK(s.docs == 12);
  CHECK(s.vocab == 15);
  CHECK(s.labels == 3);
  CHECK(s.labels_per_doc == doctest::Approx(2.0));
  CHECK(s.tokens == c.total_words());
}

// The reader should handle an RCV1-V2-sized corpus; the real dataset is
// out of reach, so exercise it on a generated file with the same shape.
TEST_CASE("rcv1-shaped file reports 23149 docs, W=12630, K=173" *
          doctest::skip(false)) {
  TempDir tmp("rcv1");
  const int docs = 23149, vocab = 12630, labels = 173;
  {
    std::ofstream out(tmp.file("rcv1.jsonl"));
    for (int j = 0; j < docs; ++j) {
      out << R"({"id":"doc)" << j << R"(","tokens":[)";
      for (int d = 0; d < 10; ++d) {
        out << "\"t" << (j * 10 + d) % vocab << "\"" << (d + 1 < 10 ? "," : "");
      }
      out << R"(],"labels":[)";
      out << "\"c" << j % labels << "\",\"c" << (j * 31 + 7) % labels << "\"";
      out << "]}\n";
    }
  }
  Corpus c = load_corpus(tmp.file("rcv1.jsonl"), 1);
  CorpusStats s = corpus_stats(c);
  CHECK(s.docs == docs);
  CHECK(s.vocab == vocab);
  CHECK(s.labels == labels);
}
