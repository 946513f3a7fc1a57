#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpmrm/corpus.hpp"

namespace dpmrm {

struct GammaPrior {
  double shape = 1.0;
  double rate = 1.0;
};

struct Hyperparameters {
  double alpha = 1.0;           // document-level concentration
  std::vector<double> gamma;    // per-label concentration, size K
  double eta = 1.0;             // label-mixing Dirichlet weight
  double beta = 0.5;            // topic-word Dirichlet weight
  GammaPrior alpha_prior{1.0, 1.0};
  GammaPrior gamma_prior{1.0, 1.0};

  static Hyperparameters defaults(int num_labels);
  void validate(int num_labels) const;
};

// Global topic identity: atom l of label k's measure.
struct DishId {
  int label = -1;
  int index = -1;
  bool operator==(const DishId&) const = default;
};

// One global topic. `tables`/`word_count` hold the live sampler counts;
// the base_* fields carry a frozen contribution loaded from a training
// snapshot when folding in test documents, and stay untouched by
// attach/detach. A dish retires when its combined table count reaches zero.
struct Dish {
  int label = -1;
  int tables = 0;                   // m_.kl, dynamic part
  std::vector<int> word_count;      // n_klw, dynamic part
  long long total = 0;              // n_kl,  dynamic part
  bool retired = false;

  int base_tables = 0;
  std::vector<int> base_word_count;
  long long base_total = 0;

  int table_count() const { return tables + base_tables; }
  int count(int w) const {
    int c = word_count[static_cast<std::size_t>(w)];
    if (!base_word_count.empty()) c += base_word_count[static_cast<std::size_t>(w)];
    return c;
  }
  long long count_total() const { return total + base_total; }
};

struct TableSlot {
  DishId dish;
  int occupancy = 0;  // n_jt; 0 marks a dead slot
  bool live() const { return occupancy > 0; }
};

struct DocState {
  std::vector<TableSlot> tables;
  std::vector<int> free_slots;
  std::vector<int> table_of_word;   // t_ji, -1 while detached
  std::vector<int> tables_per_label;  // m_jk
  int table_total = 0;                // m_j..
  int attached = 0;                   // words currently seated

  int live_tables() const { return table_total; }
};

// Where attach_word should seat a word.
struct AttachTarget {
  enum class Kind { existing_table, new_table } kind = Kind::existing_table;
  int table = -1;        // for existing_table
  DishId dish;           // for new_table: dish.index == -1 requests a new dish
  static AttachTarget to_table(int t);
  static AttachTarget to_new_table(DishId dish);
  static AttachTarget to_new_table_new_dish(int label);
};

// Full DP-MRM latent configuration plus every derived count the samplers
// read. Single-writer: one chain owns one state.
class ModelState {
 public:
  ModelState(const Corpus& corpus, std::vector<LabelMask> masks,
             Hyperparameters hypers);

  const Corpus& corpus() const { return *corpus_; }
  const Hyperparameters& hypers() const { return hypers_; }
  Hyperparameters& hypers() { return hypers_; }
  const std::vector<LabelMask>& masks() const { return masks_; }
  int num_labels() const { return static_cast<int>(dishes_.size()); }
  int vocab_size() const { return corpus_->vocabulary.size(); }

  const DocState& doc(int j) const { return docs_[static_cast<std::size_t>(j)]; }
  const Dish& dish(int k, int l) const {
    return dishes_[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
  }
  // Number of dish ids ever created for label k (retired ones included).
  int dish_slots(int k) const {
    return static_cast<int>(dishes_[static_cast<std::size_t>(k)].size());
  }
  // m_.k. including any frozen base contribution.
  long long label_table_count(int k) const {
    return label_tables_[static_cast<std::size_t>(k)];
  }
  int live_dish_count(int k) const {
    return static_cast<int>(live_ids_[static_cast<std::size_t>(k)].size());
  }
  // Non-retired dish indices of label k, ascending.
  const std::vector<int>& live_dish_ids(int k) const {
    return live_ids_[static_cast<std::size_t>(k)];
  }
  int total_live_dishes() const;
  long long total_tables() const;
  bool has_frozen_base() const { return has_base_; }

  // Seats word (j,i); the word must currently be detached. Returns the table
  // index used. Throws InvariantError on contract violations (dead table,
  // retired dish, double attach, masked label).
  int attach_word(int j, int i, const AttachTarget& target);
  // Inverse of attach_word; empty tables are removed and a dish whose last
  // table leaves is retired.
  void detach_word(int j, int i);

  // Moves every count of table t from its current dish to `target`
  // (target.index == -1 creates a new dish). Used by the block move.
  void move_table_dish(int j, int t, DishId target);

  // Temporarily removes / restores table t's dish-level contribution
  // (m-counts and the table's word counts) while the block conditional is
  // evaluated. The state is inconsistent in between; callers must restore.
  void exclude_table_from_dish(int j, int t);
  void include_table_in_dish(int j, int t, DishId dish);
  // Retires the dish if its combined table count is zero.
  void maybe_retire_dish(int k, int l) { retire_if_empty(k, l); }

  // Word multiset of table t, as counts per word id (sparse pairs).
  std::vector<std::pair<int, int>> table_word_counts(int j, int t) const;

  // Recomputes every derived count from the raw assignments and reports
  // mismatches; an empty report means the state is consistent.
  std::vector<std::string> audit_counts() const;

  // Registers a frozen dish (training snapshot counts) before any word is
  // seated. Dish ids are assigned against label k's next free index.
  DishId add_base_dish(int k, int tables,
                       const std::vector<std::pair<int, int>>& counts);

  std::uint64_t rng_seed = 0;

 private:
  int allocate_table(int j, DishId dish);
  DishId create_dish(int k);
  void retire_if_empty(int k, int l);

  const Corpus* corpus_;
  std::vector<LabelMask> masks_;
  Hyperparameters hypers_;
  std::vector<DocState> docs_;
  std::vector<std::vector<Dish>> dishes_;   // [k][l], retired slots tombstoned
  std::vector<long long> label_tables_;     // m_.k. (incl. base)
  std::vector<std::vector<int>> live_ids_;  // non-retired indices per label
  bool has_base_ = false;
};

}  // namespace dpmrm
