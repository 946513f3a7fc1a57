#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "dpmrm/rng.hpp"
#include "dpmrm/snapshot.hpp"
#include "dpmrm/state.hpp"

namespace dpmrm {

struct ChainConfig {
  int iterations = 5000;
  int burn_in = 3000;
  int sample_gap = 100;
  bool sample_hypers = true;
  std::uint64_t seed = 0;

  void validate() const;
  // floor((iterations - burn_in - 1) / sample_gap) + 1
  int expected_snapshots() const;
};

struct TraceRow {
  int iteration = 0;
  double log_joint = 0.0;
  double alpha = 0.0;
  std::vector<double> gamma;
  long long tables = 0;
  int dishes = 0;
};

struct ChainResult {
  std::vector<Snapshot> snapshots;
  std::vector<TraceRow> trace;
  std::vector<long long> final_label_tables;
  std::vector<int> final_label_dishes;
};

// Word reference for count exclusion, (doc index, word index).
using WordRef = std::pair<int, int>;

// Predictive density of word w under dish (k,l):
//   (n_klw + beta) / (n_kl + W beta)
// l == -1 evaluates a brand-new dish (prior predictive 1/W). `excluding`
// removes one attached word's contribution before evaluating.
double component_density(const ModelState& state, int k, int l, int w,
                         std::optional<WordRef> excluding = std::nullopt);

// Label-mixing weight (m_jk + eta) / (m_j.. + |r_j| eta), exactly 0 for
// masked labels.
double label_mix_weight(const ModelState& state, int j, int k);

// Top-level urn weight for label k: m_.kl / (m_.k. + gamma_k) for an
// existing dish, gamma_k / (m_.k. + gamma_k) when l == -1.
double dish_urn_weight(const ModelState& state, int k, int l);

// Unnormalized seating weights for a detached word: one entry per live table
// of document j plus a final entry for "new table".
struct TableDistribution {
  std::vector<int> tables;       // live table indices, weights[0..T-1] aligned
  std::vector<double> weights;   // size tables.size() + 1; back() = new table
  double total = 0.0;
};
TableDistribution table_distribution(const ModelState& state, int j, int i);

// Unnormalized dish weights for seating a new table of document j serving
// word w: every non-retired dish (masked labels with exact weight 0) plus a
// "new dish" entry (index -1) per unmasked label.
struct DishDistribution {
  std::vector<DishId> dishes;
  std::vector<double> weights;
  double total = 0.0;
};
DishDistribution dish_distribution_for_word(const ModelState& state, int j,
                                            int w);

// Block conditional for an existing table's dish: log weights over the
// non-retired dishes of each unmasked label plus one new-dish entry per
// unmasked label; the likelihood is the joint Dirichlet-multinomial marginal
// of all words at the table.
struct BlockDishDistribution {
  std::vector<DishId> dishes;
  std::vector<double> log_weights;
};
// Evaluates with table t's contribution excluded and restores the state
// before returning.
BlockDishDistribution table_dish_distribution(ModelState& state, int j, int t);

void resample_word(ModelState& state, int j, int i, Rng& rng);
void resample_table_dish(ModelState& state, int j, int t, Rng& rng);

// Auxiliary-variable resampling of the DP concentrations under their Gamma
// priors: alpha from the per-document table counts, gamma_k from label k's
// dish and table counts.
void resample_alpha(ModelState& state, Rng& rng);
void resample_gamma(ModelState& state, int k, Rng& rng);

// resample_word over every (j,i), then resample_table_dish over every live
// table, then hyperparameter moves when enabled.
void gibbs_sweep(ModelState& state, Rng& rng, bool sample_hypers = false);

// Seats every word by a sequential draw from the prior-predictive urn.
void seat_words_from_prior(ModelState& state, Rng& rng);

ModelState init_state(const Corpus& corpus, const std::vector<LabelMask>& masks,
                      const Hyperparameters& hypers, std::uint64_t seed);

// Collapsed joint log density of the current configuration and words.
double log_joint(const ModelState& state);

ChainResult run_chain(const Corpus& corpus, const std::vector<LabelMask>& masks,
                      const Hyperparameters& hypers, const ChainConfig& config);

// Fold-in inference: for each snapshot, seats the test corpus against the
// snapshot's frozen counts, runs `sweeps` Gibbs sweeps (no hyperparameter
// moves), and records the final per-word label assignment. Returns
// [sample][doc][word] -> label id.
std::vector<std::vector<std::vector<int>>> fold_in_assignments(
    const std::vector<Snapshot>& snapshots, const Corpus& test, int sweeps,
    std::uint64_t seed);

}  // namespace dpmrm
