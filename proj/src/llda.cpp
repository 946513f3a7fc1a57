#include "dpmrm/llda.hpp"

#include <cmath>
#include <sstream>

#include "dpmrm/common.hpp"

namespace dpmrm {

LldaHyperparameters LldaHyperparameters::defaults(int num_labels) {
  LldaHyperparameters h;
  h.alpha = num_labels > 0 ? 50.0 / num_labels : 1.0;
  h.beta = 0.5;
  return h;
}

void LldaHyperparameters::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("llda alpha must be positive");
  if (!(beta > 0.0)) throw ConfigError("llda beta must be positive");
}

LldaState::LldaState(const Corpus& corpus, std::vector<LabelMask> masks,
                     LldaHyperparameters hypers)
    : corpus_(&corpus),
      masks_(std::move(masks)),
      hypers_(hypers),
      num_labels_(corpus.labels.size()) {
  hypers_.validate();
  if (static_cast<int>(masks_.size()) != corpus.num_docs()) {
    throw DataError("mask list does not align with corpus documents");
  }
  z_.resize(corpus.documents.size());
  doc_topic_.resize(corpus.documents.size());
  for (std::size_t j = 0; j < z_.size(); ++j) {
    if (masks_[j].size() != num_labels_) throw DataError("label mask has wrong length");
    if (masks_[j].ones < 1) throw DataError("label mask selects no labels");
    z_[j].assign(corpus.documents[j].words.size(), -1);
    doc_topic_[j].assign(static_cast<std::size_t>(num_labels_), 0);
  }
  topic_word_.assign(static_cast<std::size_t>(num_labels_),
                     std::vector<int>(corpus.vocabulary.id_to_token.size(), 0));
  topic_total_.assign(static_cast<std::size_t>(num_labels_), 0);
  base_topic_total_.assign(static_cast<std::size_t>(num_labels_), 0);
}

void LldaState::add_base_counts(int k,
                                const std::vector<std::pair<int, int>>& counts) {
  if (k < 0 || k >= num_labels_) throw DataError("base topic out of range");
  if (base_topic_word_.empty()) {
    base_topic_word_.assign(
        static_cast<std::size_t>(num_labels_),
        std::vector<int>(corpus_->vocabulary.id_to_token.size(), 0));
  }
  for (auto [w, c] : counts) {
    if (w < 0 || w >= corpus_->vocabulary.size()) {
      throw DataError("base topic word id out of range");
    }
    base_topic_word_[static_cast<std::size_t>(k)][static_cast<std::size_t>(w)] += c;
    base_topic_total_[static_cast<std::size_t>(k)] += c;
  }
}

void LldaState::assign(int j, int i, int k) {
  auto& zj = z_[static_cast<std::size_t>(j)];
  if (zj[static_cast<std::size_t>(i)] != -1) {
    throw InvariantError("llda assign: word already assigned");
  }
  if (!masks_[static_cast<std::size_t>(j)].allowed(k)) {
    throw InvariantError("llda assign: topic is masked");
  }
  const int w = corpus_->documents[static_cast<std::size_t>(j)]
                    .words[static_cast<std::size_t>(i)];
  zj[static_cast<std::size_t>(i)] = k;
  ++doc_topic_[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
  ++topic_word_[static_cast<std::size_t>(k)][static_cast<std::size_t>(w)];
  ++topic_total_[static_cast<std::size_t>(k)];
}

void LldaState::unassign(int j, int i) {
  auto& zj = z_[static_cast<std::size_t>(j)];
  const int k = zj[static_cast<std::size_t>(i)];
  if (k == -1) throw InvariantError("llda unassign: word not assigned");
  const int w = corpus_->documents[static_cast<std::size_t>(j)]
                    .words[static_cast<std::size_t>(i)];
  zj[static_cast<std::size_t>(i)] = -1;
  --doc_topic_[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
  --topic_word_[static_cast<std::size_t>(k)][static_cast<std::size_t>(w)];
  --topic_total_[static_cast<std::size_t>(k)];
}

std::vector<std::string> LldaState::audit_counts() const {
  std::vector<std::string> report;
  std::vector<std::vector<int>> tw(static_cast<std::size_t>(num_labels_),
                                   std::vector<int>(corpus_->vocabulary.size(), 0));
  for (std::size_t j = 0; j < z_.size(); ++j) {
    std::vector<int> dt(static_cast<std::size_t>(num_labels_), 0);
    for (std::size_t i = 0; i < z_[j].size(); ++i) {
      int k = z_[j][i];
      if (k == -1) {
        std::ostringstream os;
        os << "doc " << j << " word " << i << ": unassigned";
        report.push_back(os.str());
        continue;
      }
      if (!masks_[j].allowed(k)) {
        std::ostringstream os;
        os << "doc " << j << " word " << i << ": topic " << k << " is masked";
        report.push_back(os.str());
      }
      ++dt[static_cast<std::size_t>(k)];
      ++tw[static_cast<std::size_t>(k)]
           [static_cast<std::size_t>(corpus_->documents[j].words[i])];
    }
    for (int k = 0; k < num_labels_; ++k) {
      if (dt[static_cast<std::size_t>(k)] != doc_topic_[j][static_cast<std::size_t>(k)]) {
        std::ostringstream os;
        os << "doc " << j << ": n_jk for topic " << k << " expected "
           << dt[static_cast<std::size_t>(k)] << " actual "
           << doc_topic_[j][static_cast<std::size_t>(k)];
        report.push_back(os.str());
      }
    }
  }
  for (int k = 0; k < num_labels_; ++k) {
    long long total = 0;
    for (int w = 0; w < corpus_->vocabulary.size(); ++w) {
      total += tw[static_cast<std::size_t>(k)][static_cast<std::size_t>(w)];
      if (tw[static_cast<std::size_t>(k)][static_cast<std::size_t>(w)] !=
          own_topic_word_count(k, w)) {
        std::ostringstream os;
        os << "topic " << k << " word " << w << ": n_kw mismatch";
        report.push_back(os.str());
      }
    }
    if (total != own_topic_total(k)) {
      std::ostringstream os;
      os << "topic " << k << ": n_k. expected " << total << " actual "
         << own_topic_total(k);
      report.push_back(os.str());
    }
  }
  return report;
}

std::vector<double> llda_word_distribution(const LldaState& state, int j, int i) {
  if (state.topic_of(j, i) != -1) {
    throw InvariantError("llda_word_distribution: word must be unassigned");
  }
  const Corpus& corpus = state.corpus();
  const int w = corpus.documents[static_cast<std::size_t>(j)]
                    .words[static_cast<std::size_t>(i)];
  const int K = state.num_labels();
  const int W = corpus.vocabulary.size();
  const double alpha = state.hypers().alpha;
  const double beta = state.hypers().beta;
  const LabelMask& mask = state.masks()[static_cast<std::size_t>(j)];

  std::vector<double> weights(static_cast<std::size_t>(K), 0.0);
  for (int k = 0; k < K; ++k) {
    if (!mask.allowed(k)) continue;
    weights[static_cast<std::size_t>(k)] =
        (state.doc_topic_count(j, k) + alpha) *
        (state.topic_word_count(k, w) + beta) /
        (state.topic_total(k) + W * beta);
  }
  return weights;
}

void llda_resample_word(LldaState& state, int j, int i, Rng& rng) {
  state.unassign(j, i);
  const std::vector<double> weights = llda_word_distribution(state, j, i);
  state.assign(j, i, rng.categorical(weights));
}

void llda_seat_words_from_prior(LldaState& state, Rng& rng) {
  const Corpus& corpus = state.corpus();
  for (int j = 0; j < corpus.num_docs(); ++j) {
    const int n = corpus.documents[static_cast<std::size_t>(j)].length();
    for (int i = 0; i < n; ++i) {
      // Sequential draw from the same collapsed conditional.
      std::vector<double> weights = llda_word_distribution(state, j, i);
      state.assign(j, i, rng.categorical(weights));
    }
  }
}

void llda_gibbs_sweep(LldaState& state, Rng& rng) {
  const Corpus& corpus = state.corpus();
  for (int j = 0; j < corpus.num_docs(); ++j) {
    const int n = corpus.documents[static_cast<std::size_t>(j)].length();
    for (int i = 0; i < n; ++i) llda_resample_word(state, j, i, rng);
  }
}

double llda_log_joint(const LldaState& state) {
  const Corpus& corpus = state.corpus();
  const double alpha = state.hypers().alpha;
  const double beta = state.hypers().beta;
  const int K = state.num_labels();
  const int W = corpus.vocabulary.size();
  double lp = 0.0;
  for (int j = 0; j < corpus.num_docs(); ++j) {
    const LabelMask& mask = state.masks()[static_cast<std::size_t>(j)];
    const int n = corpus.documents[static_cast<std::size_t>(j)].length();
    lp += std::lgamma(mask.ones * alpha) - std::lgamma(mask.ones * alpha + n);
    for (int k = 0; k < K; ++k) {
      if (!mask.allowed(k)) continue;
      lp += std::lgamma(alpha + state.doc_topic_count(j, k)) - std::lgamma(alpha);
    }
  }
  for (int k = 0; k < K; ++k) {
    lp += std::lgamma(W * beta) - std::lgamma(W * beta + state.topic_total(k));
    for (int w = 0; w < W; ++w) {
      const int c = state.topic_word_count(k, w);
      if (c > 0) lp += std::lgamma(beta + c) - std::lgamma(beta);
    }
  }
  return lp;
}

Snapshot llda_snapshot_from_state(const LldaState& state, int iteration) {
  if (state.has_frozen_base()) {
    throw InvariantError("llda snapshot: fold-in states are not snapshot sources");
  }
  const Corpus& corpus = state.corpus();
  Snapshot snap;
  snap.format = kLldaSnapshotFormat;
  snap.iteration = iteration;
  snap.hypers.alpha = state.hypers().alpha;
  snap.hypers.beta = state.hypers().beta;
  snap.hypers.eta = 1.0;
  snap.vocab = corpus.vocabulary.id_to_token;
  snap.labels = corpus.labels.id_to_label;
  snap.docs.resize(corpus.documents.size());
  for (int j = 0; j < corpus.num_docs(); ++j) {
    SnapshotDoc& d = snap.docs[static_cast<std::size_t>(j)];
    d.doc_id = corpus.documents[static_cast<std::size_t>(j)].doc_id;
    d.topic_of_word.resize(
        corpus.documents[static_cast<std::size_t>(j)].words.size());
    for (std::size_t i = 0; i < d.topic_of_word.size(); ++i) {
      d.topic_of_word[i] = state.topic_of(j, static_cast<int>(i));
    }
  }
  snap.topic_counts.resize(static_cast<std::size_t>(state.num_labels()));
  snap.topic_totals.resize(static_cast<std::size_t>(state.num_labels()));
  for (int k = 0; k < state.num_labels(); ++k) {
    snap.topic_totals[static_cast<std::size_t>(k)] = state.own_topic_total(k);
    for (int w = 0; w < corpus.vocabulary.size(); ++w) {
      const int c = state.own_topic_word_count(k, w);
      if (c > 0) snap.topic_counts[static_cast<std::size_t>(k)].emplace_back(w, c);
    }
  }
  return snap;
}

ChainResult llda_run_chain(const Corpus& corpus,
                           const std::vector<LabelMask>& masks,
                           const LldaHyperparameters& hypers,
                           const ChainConfig& config) {
  config.validate();
  hypers.validate();
  Rng rng(config.seed);
  LldaState state(corpus, masks, hypers);
  llda_seat_words_from_prior(state, rng);

  ChainResult result;
  const int K = state.num_labels();
  for (int it = 1; it <= config.iterations; ++it) {
    llda_gibbs_sweep(state, rng);
    TraceRow row;
    row.iteration = it;
    row.log_joint = llda_log_joint(state);
    row.alpha = hypers.alpha;
    row.tables = 0;
    row.dishes = K;
    result.trace.push_back(std::move(row));
    if (it > config.burn_in && (it - config.burn_in - 1) % config.sample_gap == 0) {
      result.snapshots.push_back(llda_snapshot_from_state(state, it));
    }
  }
  result.final_label_tables.assign(static_cast<std::size_t>(K), 0);
  result.final_label_dishes.assign(static_cast<std::size_t>(K), 1);
  for (int k = 0; k < K; ++k) {
    result.final_label_tables[static_cast<std::size_t>(k)] = state.topic_total(k);
  }
  return result;
}

std::vector<std::vector<std::vector<int>>> llda_fold_in_assignments(
    const std::vector<Snapshot>& snapshots, const Corpus& test, int sweeps,
    std::uint64_t seed) {
  std::vector<std::vector<std::vector<int>>> samples;
  samples.reserve(snapshots.size());
  for (std::size_t s = 0; s < snapshots.size(); ++s) {
    const Snapshot& snap = snapshots[s];
    if (snap.format != kLldaSnapshotFormat) {
      throw DataError("llda fold-in requires an llda snapshot");
    }
    if (snap.vocab != test.vocabulary.id_to_token) {
      throw DataError("snapshot/corpus vocabulary mismatch");
    }
    if (snap.labels != test.labels.id_to_label) {
      throw DataError("snapshot/corpus label map mismatch");
    }
    LldaHyperparameters h;
    h.alpha = snap.hypers.alpha;
    h.beta = snap.hypers.beta;
    LldaState state(test, make_masks(test, MaskMode::test), h);
    for (std::size_t k = 0; k < snap.topic_counts.size(); ++k) {
      state.add_base_counts(static_cast<int>(k), snap.topic_counts[k]);
    }
    Rng rng(seed + s);
    llda_seat_words_from_prior(state, rng);
    for (int it = 0; it < sweeps; ++it) llda_gibbs_sweep(state, rng);

    std::vector<std::vector<int>> doc_labels(test.documents.size());
    for (int j = 0; j < test.num_docs(); ++j) {
      auto& out = doc_labels[static_cast<std::size_t>(j)];
      const int n = test.documents[static_cast<std::size_t>(j)].length();
      out.resize(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = state.topic_of(j, i);
    }
    samples.push_back(std::move(doc_labels));
  }
  return samples;
}

}  // namespace dpmrm
