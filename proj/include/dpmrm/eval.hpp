#pragma once

#include <vector>

#include "dpmrm/corpus.hpp"
#include "dpmrm/snapshot.hpp"

namespace dpmrm {

// Default threshold grid for multi-label classification reports.
inline const std::vector<double> kDefaultCuts = {0.001, 0.05, 0.1, 0.2, 0.3, 0.5};

// Per-document label scores in [0,1]: posterior-averaged fraction of words
// assigned to each label.
struct LabelScores {
  std::vector<std::vector<double>> scores;  // [doc][label]
};

struct PerLabelF1 {
  long long tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct F1Report {
  double cut = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::vector<PerLabelF1> per_label;
};

// Posterior-averaged per-word predictive log likelihood of the heldout
// words: for each heldout word, p = (1/S) sum_s sum_k sum_l theta ... psi
// with
//   theta_jkl = (n_jkl + alpha m_.kl / (m_.k. + gamma_k)) / (n_jk. + alpha)
//   psi_klx   = (n_.klx + beta) / (n_.kl + W beta)
// Returns sum(log p) / heldout word count, computed with log-sum-exp over
// samples. Documents are matched by id; per-document dish word counts n_jkl
// are rebuilt from each snapshot's assignments.
double heldout_loglik_dpmrm(const std::vector<Snapshot>& snapshots,
                            const Corpus& heldout);

// L-LDA analogue:
//   theta_jk = (n_jk. + alpha) / (n_j.. + K alpha)
//   psi_kx   = (n_.kx + beta) / (n_.k + W beta)
double heldout_loglik_llda(const std::vector<Snapshot>& snapshots,
                           const Corpus& heldout);

// assignments: [sample][doc][word] -> label id.
// score_jk = (1/S) sum_s |{i : label(s,j,i) = k}| / N_j.
LabelScores label_scores(int num_labels,
                         const std::vector<std::vector<std::vector<int>>>& assignments);

// Argmax over labels; ties resolved to the lowest label id.
int classify_single(const std::vector<double>& scores);

// {k : score_k >= cut}, ascending.
std::vector<int> classify_multi(const std::vector<double>& scores, double cut);

// Micro F1 from globally pooled TP/FP/FN; macro F1 is the unweighted mean of
// per-label F1 where a label with an empty denominator contributes 0.
F1Report micro_macro_f1(const std::vector<std::vector<int>>& predicted,
                        const std::vector<std::vector<int>>& gold,
                        int num_labels);

// Fraction of unordered item pairs on which the two partitions agree.
double rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace dpmrm
