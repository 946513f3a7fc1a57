#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

#include "dpmrm/common.hpp"
#include "dpmrm/llda.hpp"
#include "test_support.hpp"

using namespace dpmrm;
using testsup::make_corpus;
using testsup::make_doc;

TEST_CASE("single permitted label forces every assignment") {
  Corpus c = make_corpus(4, 3, {make_doc("d", {0, 1, 2, 3, 1}, {2})});
  auto masks = make_masks(c, MaskMode::training);
  LldaState s(c, masks, LldaHyperparameters::defaults(3));
  Rng rng(1);
  llda_seat_words_from_prior(s, rng);
  for (int i = 0; i < 5; ++i) CHECK(s.topic_of(0, i) == 2);
  for (int sweep = 0; sweep < 10; ++sweep) llda_gibbs_sweep(s, rng);
  for (int i = 0; i < 5; ++i) CHECK(s.topic_of(0, i) == 2);
  CHECK(s.audit_counts().empty());
}

TEST_CASE("uniform counts give equal weights over permitted labels") {
  Corpus c = make_corpus(2, 2, {make_doc("d", {0, 0}, {0, 1})});
  auto masks = make_masks(c, MaskMode::training);
  LldaState s(c, masks, LldaHyperparameters::defaults(2));
  // Symmetric state: one word on each topic... keep both unassigned instead.
  const auto weights = llda_word_distribution(s, 0, 0);
  REQUIRE(weights.size() == 2);
  CHECK(weights[0] == doctest::Approx(weights[1]).epsilon(1e-14));
}

TEST_CASE("masked topics receive exactly zero weight") {
  Corpus c = make_corpus(3, 3, {make_doc("d", {0, 1}, {0, 2})});
  auto masks = make_masks(c, MaskMode::training);
  LldaState s(c, masks, LldaHyperparameters::defaults(3));
  const auto weights = llda_word_distribution(s, 0, 0);
  CHECK(weights[0] > 0.0);
  CHECK(weights[1] == 0.0);
  CHECK(weights[2] > 0.0);
  CHECK_THROWS_AS(s.assign(0, 0, 1), InvariantError);
}

TEST_CASE("resampling frequencies match the collapsed conditional") {
  Corpus c = make_corpus(3, 2,
                         {make_doc("a", {0, 1, 2, 0}, {0, 1}),
                          make_doc("b", {2, 2, 1}, {0, 1})});
  auto masks = make_masks(c, MaskMode::training);
  LldaState s(c, masks, LldaHyperparameters::defaults(2));
  Rng rng(5);
  llda_seat_words_from_prior(s, rng);

  s.unassign(0, 2);
  const auto weights = llda_word_distribution(s, 0, 2);
  double total = 0.0;
  for (double w : weights) total += w;
  s.assign(0, 2, 0);

  const int trials = 100000;
  std::vector<long long> observed(weights.size(), 0);
  for (int t = 0; t < trials; ++t) {
    llda_resample_word(s, 0, 2, rng);
    ++observed[static_cast<std::size_t>(s.topic_of(0, 2))];
    s.unassign(0, 2);
    s.assign(0, 2, 0);
  }
  double chi2 = 0.0;
  int dof = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double expected = trials * weights[k] / total;
    if (expected == 0.0) {
      CHECK(observed[k] == 0);
      continue;
    }
    REQUIRE(expected > 5.0);
    chi2 += (observed[k] - expected) * (observed[k] - expected) / expected;
    ++dof;
  }
  boost::math::chi_squared dist(dof - 1);
  CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.001);
  CHECK(s.audit_counts().empty());
}

TEST_CASE("count conservation holds through sweeps") {
  Rng corpus_rng(9);
  Corpus c = testsup::random_corpus(10, 3, 8, 3, 12, 2, corpus_rng);
  auto masks = make_masks(c, MaskMode::training);
  LldaState s(c, masks, LldaHyperparameters::defaults(3));
  Rng rng(4);
  llda_seat_words_from_prior(s, rng);
  for (int sweep = 0; sweep < 25; ++sweep) {
    llda_gibbs_sweep(s, rng);
    CHECK(s.audit_counts().empty());
    for (int j = 0; j < c.num_docs(); ++j) {
      int total = 0;
      for (int k = 0; k < 3; ++k) total += s.doc_topic_count(j, k);
      CHECK(total == c.documents[j].length());
      for (int i = 0; i < c.documents[j].length(); ++i) {
        CHECK(masks[j].allowed(s.topic_of(j, i)));
      }
    }
  }
}

TEST_CASE("all-ones masks reduce to standard collapsed LDA term by term") {
  Rng corpus_rng(13);
  Corpus c = testsup::random_corpus(8, 3, 6, 3, 9, 1, corpus_rng);
  auto masks = make_masks(c, MaskMode::test);  // every label permitted
  LldaHyperparameters h;
  h.alpha = 0.7;
  h.beta = 0.4;
  LldaState s(c, masks, h);
  Rng rng(2);
  llda_seat_words_from_prior(s, rng);
  for (int sweep = 0; sweep < 5; ++sweep) llda_gibbs_sweep(s, rng);

  for (int j = 0; j < c.num_docs(); ++j) {
    for (int i = 0; i < c.documents[j].length(); ++i) {
      s.unassign(j, i);
      const auto weights = llda_word_distribution(s, j, i);
      const int w = c.documents[j].words[static_cast<std::size_t>(i)];
      for (int k = 0; k < 3; ++k) {
        // Standard collapsed LDA conditional, written out independently.
        const double expected =
            (s.doc_topic_count(j, k) + h.alpha) *
            (s.topic_word_count(k, w) + h.beta) /
            (s.topic_total(k) + c.vocabulary.size() * h.beta);
        CHECK(weights[static_cast<std::size_t>(k)] ==
              doctest::Approx(expected).epsilon(1e-12));
      }
      s.assign(j, i, 0);
      s.unassign(j, i);
      s.assign(j, i, rng.categorical(weights));
    }
  }
}

TEST_CASE("llda chain follows the snapshot schedule deterministically") {
  Rng corpus_rng(3);
  Corpus c = testsup::random_corpus(6, 2, 5, 2, 7, 1, corpus_rng);
  auto masks = make_masks(c, MaskMode::training);
  LldaHyperparameters h = LldaHyperparameters::defaults(2);

  ChainConfig cfg;
  cfg.iterations = 5000;
  cfg.burn_in = 3000;
  cfg.sample_gap = 100;
  cfg.seed = 8;
  ChainResult r1 = llda_run_chain(c, masks, h, cfg);
  CHECK(r1.snapshots.size() == 20);
  CHECK(r1.snapshots.front().format == kLldaSnapshotFormat);

  ChainResult r2 = llda_run_chain(c, masks, h, cfg);
  for (std::size_t i = 0; i < r1.snapshots.size(); ++i) {
    CHECK(snapshot_to_json(r1.snapshots[i]) == snapshot_to_json(r2.snapshots[i]));
  }
}

TEST_CASE("single-label corpus behaves as a mixture of unigrams") {
  Corpus c = make_corpus(5, 2,
                         {make_doc("a", {0, 1, 2}, {0}), make_doc("b", {3, 4}, {1})});
  auto masks = make_masks(c, MaskMode::training);
  ChainConfig cfg;
  cfg.iterations = 10;
  cfg.burn_in = 0;
  cfg.sample_gap = 1;
  cfg.seed = 2;
  ChainResult r = llda_run_chain(c, masks, LldaHyperparameters::defaults(2), cfg);
  for (const auto& snap : r.snapshots) {
    for (int z : snap.docs[0].topic_of_word) CHECK(z == 0);
    for (int z : snap.docs[1].topic_of_word) CHECK(z == 1);
  }
}

TEST_CASE("llda snapshot round-trips through JSON") {
  Rng corpus_rng(21);
  Corpus c = testsup::random_corpus(7, 2, 4, 2, 6, 2, corpus_rng);
  auto masks = make_masks(c, MaskMode::training);
  LldaState s(c, masks, LldaHyperparameters::defaults(2));
  Rng rng(3);
  llda_seat_words_from_prior(s, rng);
  Snapshot snap = llda_snapshot_from_state(s, 7);
  Snapshot back = snapshot_from_json(snapshot_to_json(snap));
  CHECK(back.format == kLldaSnapshotFormat);
  CHECK(back.topic_totals == snap.topic_totals);
  CHECK(back.topic_counts == snap.topic_counts);
  REQUIRE(back.docs.size() == snap.docs.size());
  for (std::size_t j = 0; j < snap.docs.size(); ++j) {
    CHECK(back.docs[j].topic_of_word == snap.docs[j].topic_of_word);
  }
}

TEST_CASE("llda fold-in freezes topic counts and returns assignments") {
  Corpus train = make_corpus(4, 2,
                             {make_doc("a", {0, 0, 1}, {0}), make_doc("b", {2, 3}, {1})});
  auto masks = make_masks(train, MaskMode::training);
  ChainConfig cfg;
  cfg.iterations = 20;
  cfg.burn_in = 10;
  cfg.sample_gap = 5;
  cfg.seed = 1;
  ChainResult r = llda_run_chain(train, masks, LldaHyperparameters::defaults(2), cfg);

  Corpus test = make_corpus(4, 2, {make_doc("t", {0, 0, 0}, {0, 1})});
  auto samples = llda_fold_in_assignments(r.snapshots, test, 10, 5);
  CHECK(samples.size() == r.snapshots.size());
  for (const auto& sample : samples) {
    REQUIRE(sample.size() == 1);
    CHECK(sample[0].size() == 3);
    // Words 0 dominate topic 0 in training; fold-in should mostly agree.
    for (int z : sample[0]) CHECK((z == 0 || z == 1));
  }
}
