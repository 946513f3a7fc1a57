#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dpmrm/state.hpp"

namespace dpmrm {

inline constexpr const char* kDpmrmSnapshotFormat = "dpmrm-snapshot-v1";
inline constexpr const char* kLldaSnapshotFormat = "llda-snapshot-v1";

struct SnapshotDoc {
  std::string doc_id;
  // DP-MRM: dish per table (tables compacted to 0..T_j-1) and t_ji per word.
  std::vector<DishId> table_dish;
  std::vector<int> table_of_word;
  // L-LDA: z_ji per word.
  std::vector<int> topic_of_word;
};

struct SnapshotDish {
  DishId id;
  int tables = 0;        // m_.kl
  long long total = 0;   // n_kl
  std::vector<std::pair<int, int>> counts;  // sparse n_klw
};

// One serialized posterior sample. `format` selects which fields are
// populated: dishes/table assignments for DP-MRM, topic fields for L-LDA.
struct Snapshot {
  std::string format;
  int iteration = 0;
  Hyperparameters hypers;
  std::vector<std::string> vocab;
  std::vector<std::string> labels;
  std::vector<SnapshotDoc> docs;
  std::vector<SnapshotDish> dishes;  // DP-MRM
  std::vector<std::vector<std::pair<int, int>>> topic_counts;  // L-LDA n_kw
  std::vector<long long> topic_totals;                         // L-LDA n_k.

  int num_labels() const { return static_cast<int>(labels.size()); }
  int vocab_size() const { return static_cast<int>(vocab.size()); }
};

Snapshot snapshot_from_state(const ModelState& state, int iteration);

std::string snapshot_to_json(const Snapshot& snapshot);
Snapshot snapshot_from_json(const std::string& text);
void save_snapshot(const Snapshot& snapshot, const std::string& path);
Snapshot load_snapshot(const std::string& path);

// Builds a fold-in state over `test`: the snapshot's dish table/word counts
// become frozen base counts, test documents start fully detached. Masks are
// all-ones (test protocol). Throws DataError if the vocab or label maps do
// not match the test corpus.
ModelState make_fold_in_state(const Corpus& test, const Snapshot& snapshot);

}  // namespace dpmrm
