#pragma once

#include <cstdint>
#include <vector>

#include "dpmrm/corpus.hpp"
#include "dpmrm/rng.hpp"
#include "dpmrm/sampler.hpp"
#include "dpmrm/snapshot.hpp"

namespace dpmrm {

struct LldaHyperparameters {
  double alpha = 1.0;  // symmetric Dirichlet on theta_j; 50/K by convention
  double beta = 0.5;   // symmetric Dirichlet on phi_k

  static LldaHyperparameters defaults(int num_labels);
  void validate() const;
};

// Collapsed L-LDA state: one topic per label, topic assignments restricted
// to each document's mask.
class LldaState {
 public:
  LldaState(const Corpus& corpus, std::vector<LabelMask> masks,
            LldaHyperparameters hypers);

  const Corpus& corpus() const { return *corpus_; }
  const LldaHyperparameters& hypers() const { return hypers_; }
  const std::vector<LabelMask>& masks() const { return masks_; }
  int num_labels() const { return num_labels_; }

  int topic_of(int j, int i) const {
    return z_[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
  }
  int doc_topic_count(int j, int k) const {
    return doc_topic_[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
  }
  // Counts as the sampler sees them (frozen base included during fold-in).
  int topic_word_count(int k, int w) const {
    int c = topic_word_[static_cast<std::size_t>(k)][static_cast<std::size_t>(w)];
    if (!base_topic_word_.empty()) {
      c += base_topic_word_[static_cast<std::size_t>(k)][static_cast<std::size_t>(w)];
    }
    return c;
  }
  long long topic_total(int k) const {
    return topic_total_[static_cast<std::size_t>(k)] +
           base_topic_total_[static_cast<std::size_t>(k)];
  }
  // Dynamic contribution only (what snapshots and audits record).
  int own_topic_word_count(int k, int w) const {
    return topic_word_[static_cast<std::size_t>(k)][static_cast<std::size_t>(w)];
  }
  long long own_topic_total(int k) const {
    return topic_total_[static_cast<std::size_t>(k)];
  }
  bool has_frozen_base() const { return !base_topic_word_.empty(); }

  void assign(int j, int i, int k);    // set z_ji (word must be unassigned)
  void unassign(int j, int i);
  std::vector<std::string> audit_counts() const;

  // Frozen topic-word counts from a training snapshot (fold-in).
  void add_base_counts(int k, const std::vector<std::pair<int, int>>& counts);

 private:
  const Corpus* corpus_;
  std::vector<LabelMask> masks_;
  LldaHyperparameters hypers_;
  int num_labels_;
  std::vector<std::vector<int>> z_;          // -1 = unassigned
  std::vector<std::vector<int>> doc_topic_;  // n_jk
  std::vector<std::vector<int>> topic_word_; // n_kw
  std::vector<long long> topic_total_;       // n_k.
  std::vector<std::vector<int>> base_topic_word_;
  std::vector<long long> base_topic_total_;
};

// Unnormalized conditional weights over the K topics for word (j,i), which
// must currently be unassigned; masked topics get exact zeros.
std::vector<double> llda_word_distribution(const LldaState& state, int j, int i);

void llda_resample_word(LldaState& state, int j, int i, Rng& rng);
void llda_gibbs_sweep(LldaState& state, Rng& rng);
void llda_seat_words_from_prior(LldaState& state, Rng& rng);
double llda_log_joint(const LldaState& state);

Snapshot llda_snapshot_from_state(const LldaState& state, int iteration);

ChainResult llda_run_chain(const Corpus& corpus,
                           const std::vector<LabelMask>& masks,
                           const LldaHyperparameters& hypers,
                           const ChainConfig& config);

// Fold-in for L-LDA: topic-word counts frozen from each snapshot, document
// assignments resampled with all-ones masks. Returns [sample][doc][word].
std::vector<std::vector<std::vector<int>>> llda_fold_in_assignments(
    const std::vector<Snapshot>& snapshots, const Corpus& test, int sweeps,
    std::uint64_t seed);

}  // namespace dpmrm
