#include "dpmrm/state.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "dpmrm/common.hpp"

namespace dpmrm {

Hyperparameters Hyperparameters::defaults(int num_labels) {
  Hyperparameters h;
  h.gamma.assign(static_cast<std::size_t>(num_labels), 1.0);
  return h;
}

void Hyperparameters::validate(int num_labels) const {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (!(eta > 0.0)) throw ConfigError("eta must be positive");
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (static_cast<int>(gamma.size()) != num_labels) {
    throw ConfigError("gamma must have one entry per label");
  }
  for (double g : gamma) {
    if (!(g > 0.0)) throw ConfigError("gamma entries must be positive");
  }
  if (!(alpha_prior.shape > 0.0) || !(alpha_prior.rate > 0.0) ||
      !(gamma_prior.shape > 0.0) || !(gamma_prior.rate > 0.0)) {
    throw ConfigError("Gamma prior parameters must be positive");
  }
}

AttachTarget AttachTarget::to_table(int t) {
  AttachTarget a;
  a.kind = Kind::existing_table;
  a.table = t;
  return a;
}

AttachTarget AttachTarget::to_new_table(DishId dish) {
  AttachTarget a;
  a.kind = Kind::new_table;
  a.dish = dish;
  return a;
}

AttachTarget AttachTarget::to_new_table_new_dish(int label) {
  AttachTarget a;
  a.kind = Kind::new_table;
  a.dish = DishId{label, -1};
  return a;
}

ModelState::ModelState(const Corpus& corpus, std::vector<LabelMask> masks,
                       Hyperparameters hypers)
    : corpus_(&corpus), masks_(std::move(masks)), hypers_(std::move(hypers)) {
  const int K = corpus.labels.size();
  if (static_cast<int>(masks_.size()) != corpus.num_docs()) {
    throw DataError("mask list does not align with corpus documents");
  }
  for (const auto& m : masks_) {
    if (m.size() != K) throw DataError("label mask has wrong length");
    if (m.ones < 1) throw DataError("label mask selects no labels");
  }
  hypers_.validate(K);

  docs_.resize(corpus.documents.size());
  for (std::size_t j = 0; j < docs_.size(); ++j) {
    docs_[j].table_of_word.assign(corpus.documents[j].words.size(), -1);
    docs_[j].tables_per_label.assign(static_cast<std::size_t>(K), 0);
  }
  dishes_.resize(static_cast<std::size_t>(K));
  label_tables_.assign(static_cast<std::size_t>(K), 0);
  live_ids_.resize(static_cast<std::size_t>(K));
}

int ModelState::total_live_dishes() const {
  int n = 0;
  for (const auto& ids : live_ids_) n += static_cast<int>(ids.size());
  return n;
}

long long ModelState::total_tables() const {
  long long n = 0;
  for (const auto& d : docs_) n += d.table_total;
  return n;
}

DishId ModelState::create_dish(int k) {
  auto& shelf = dishes_[static_cast<std::size_t>(k)];
  Dish d;
  d.label = k;
  d.word_count.assign(static_cast<std::size_t>(vocab_size()), 0);
  shelf.push_back(std::move(d));
  const int index = static_cast<int>(shelf.size()) - 1;
  live_ids_[static_cast<std::size_t>(k)].push_back(index);
  return DishId{k, index};
}

DishId ModelState::add_base_dish(int k, int tables,
                                 const std::vector<std::pair<int, int>>& counts) {
  if (k < 0 || k >= num_labels()) throw DataError("base dish label out of range");
  DishId id = create_dish(k);
  Dish& d = dishes_[static_cast<std::size_t>(k)][static_cast<std::size_t>(id.index)];
  d.base_tables = tables;
  d.base_word_count.assign(static_cast<std::size_t>(vocab_size()), 0);
  for (auto [w, c] : counts) {
    if (w < 0 || w >= vocab_size()) throw DataError("base dish word id out of range");
    d.base_word_count[static_cast<std::size_t>(w)] += c;
    d.base_total += c;
  }
  label_tables_[static_cast<std::size_t>(k)] += tables;
  has_base_ = true;
  return id;
}

int ModelState::allocate_table(int j, DishId dish) {
  DocState& doc = docs_[static_cast<std::size_t>(j)];
  int t;
  if (!doc.free_slots.empty()) {
    t = doc.free_slots.back();
    doc.free_slots.pop_back();
  } else {
    t = static_cast<int>(doc.tables.size());
    doc.tables.emplace_back();
  }
  doc.tables[static_cast<std::size_t>(t)] = TableSlot{dish, 0};
  return t;
}

int ModelState::attach_word(int j, int i, const AttachTarget& target) {
  DocState& doc = docs_[static_cast<std::size_t>(j)];
  if (doc.table_of_word[static_cast<std::size_t>(i)] != -1) {
    throw InvariantError("attach_word: word is already attached");
  }
  const int w = corpus_->documents[static_cast<std::size_t>(j)]
                    .words[static_cast<std::size_t>(i)];
  int t;
  if (target.kind == AttachTarget::Kind::existing_table) {
    t = target.table;
    if (t < 0 || t >= static_cast<int>(doc.tables.size()) ||
        !doc.tables[static_cast<std::size_t>(t)].live()) {
      throw InvariantError("attach_word: target table is not live");
    }
  } else {
    DishId dish = target.dish;
    const int k = dish.label;
    if (k < 0 || k >= num_labels()) {
      throw InvariantError("attach_word: dish label out of range");
    }
    if (!masks_[static_cast<std::size_t>(j)].allowed(k)) {
      throw InvariantError("attach_word: label is masked for this document");
    }
    if (dish.index == -1) {
      dish = create_dish(k);
    } else {
      if (dish.index < 0 || dish.index >= dish_slots(k) ||
          dishes_[static_cast<std::size_t>(k)][static_cast<std::size_t>(dish.index)]
              .retired) {
        throw InvariantError("attach_word: target dish is retired or unknown");
      }
    }
    t = allocate_table(j, dish);
    Dish& d = dishes_[static_cast<std::size_t>(k)][static_cast<std::size_t>(dish.index)];
    ++d.tables;
    ++label_tables_[static_cast<std::size_t>(k)];
    ++doc.tables_per_label[static_cast<std::size_t>(k)];
    ++doc.table_total;
  }

  TableSlot& slot = doc.tables[static_cast<std::size_t>(t)];
  ++slot.occupancy;
  Dish& d = dishes_[static_cast<std::size_t>(slot.dish.label)]
                   [static_cast<std::size_t>(slot.dish.index)];
  ++d.word_count[static_cast<std::size_t>(w)];
  ++d.total;
  doc.table_of_word[static_cast<std::size_t>(i)] = t;
  ++doc.attached;
  return t;
}

void ModelState::retire_if_empty(int k, int l) {
  Dish& d = dishes_[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
  if (d.table_count() == 0 && !d.retired) {
    if (d.count_total() != 0) {
      throw InvariantError("dish retiring with nonzero word counts");
    }
    d.retired = true;
    d.word_count.clear();
    d.word_count.shrink_to_fit();
    auto& ids = live_ids_[static_cast<std::size_t>(k)];
    ids.erase(std::find(ids.begin(), ids.end(), l));
  }
}

void ModelState::detach_word(int j, int i) {
  DocState& doc = docs_[static_cast<std::size_t>(j)];
  int t = doc.table_of_word[static_cast<std::size_t>(i)];
  if (t == -1) throw InvariantError("detach_word: word is already detached");
  const int w = corpus_->documents[static_cast<std::size_t>(j)]
                    .words[static_cast<std::size_t>(i)];

  TableSlot& slot = doc.tables[static_cast<std::size_t>(t)];
  Dish& d = dishes_[static_cast<std::size_t>(slot.dish.label)]
                   [static_cast<std::size_t>(slot.dish.index)];
  --d.word_count[static_cast<std::size_t>(w)];
  --d.total;
  --slot.occupancy;
  doc.table_of_word[static_cast<std::size_t>(i)] = -1;
  --doc.attached;

  if (slot.occupancy == 0) {
    const int k = slot.dish.label;
    const int l = slot.dish.index;
    --d.tables;
    --label_tables_[static_cast<std::size_t>(k)];
    --doc.tables_per_label[static_cast<std::size_t>(k)];
    --doc.table_total;
    doc.free_slots.push_back(t);
    retire_if_empty(k, l);
  }
}

std::vector<std::pair<int, int>> ModelState::table_word_counts(int j, int t) const {
  const DocState& doc = docs_[static_cast<std::size_t>(j)];
  std::map<int, int> counts;
  for (std::size_t i = 0; i < doc.table_of_word.size(); ++i) {
    if (doc.table_of_word[i] == t) {
      ++counts[corpus_->documents[static_cast<std::size_t>(j)].words[i]];
    }
  }
  return {counts.begin(), counts.end()};
}

void ModelState::exclude_table_from_dish(int j, int t) {
  DocState& doc = docs_[static_cast<std::size_t>(j)];
  const TableSlot& slot = doc.tables[static_cast<std::size_t>(t)];
  if (!slot.live()) throw InvariantError("exclude_table_from_dish: dead table");
  const int k = slot.dish.label;
  Dish& d = dishes_[static_cast<std::size_t>(k)][static_cast<std::size_t>(slot.dish.index)];
  for (auto [w, c] : table_word_counts(j, t)) {
    d.word_count[static_cast<std::size_t>(w)] -= c;
    d.total -= c;
  }
  --d.tables;
  --label_tables_[static_cast<std::size_t>(k)];
  --doc.tables_per_label[static_cast<std::size_t>(k)];
  --doc.table_total;
}

void ModelState::include_table_in_dish(int j, int t, DishId dish) {
  DocState& doc = docs_[static_cast<std::size_t>(j)];
  TableSlot& slot = doc.tables[static_cast<std::size_t>(t)];
  if (!slot.live()) throw InvariantError("include_table_in_dish: dead table");
  const int k = dish.label;
  if (!masks_[static_cast<std::size_t>(j)].allowed(k)) {
    throw InvariantError("include_table_in_dish: label is masked");
  }
  if (dish.index == -1) dish = create_dish(k);
  Dish& d = dishes_[static_cast<std::size_t>(k)][static_cast<std::size_t>(dish.index)];
  if (d.retired) throw InvariantError("include_table_in_dish: dish retired");
  for (auto [w, c] : table_word_counts(j, t)) {
    d.word_count[static_cast<std::size_t>(w)] += c;
    d.total += c;
  }
  ++d.tables;
  ++label_tables_[static_cast<std::size_t>(k)];
  ++doc.tables_per_label[static_cast<std::size_t>(k)];
  ++doc.table_total;
  slot.dish = dish;
}

void ModelState::move_table_dish(int j, int t, DishId target) {
  const DishId old = docs_[static_cast<std::size_t>(j)]
                         .tables[static_cast<std::size_t>(t)].dish;
  exclude_table_from_dish(j, t);
  include_table_in_dish(j, t, target);
  retire_if_empty(old.label, old.index);
}

std::vector<std::string> ModelState::audit_counts() const {
  std::vector<std::string> report;
  auto complain = [&report](const std::string& msg) { report.push_back(msg); };
  const int K = num_labels();

  // Recompute table occupancies, per-doc label counts, dish counts.
  std::vector<std::vector<long long>> dish_tables(dishes_.size());
  std::vector<std::vector<std::map<int, long long>>> dish_words(dishes_.size());
  for (int k = 0; k < K; ++k) {
    dish_tables[static_cast<std::size_t>(k)].assign(
        static_cast<std::size_t>(dish_slots(k)), 0);
    dish_words[static_cast<std::size_t>(k)].resize(
        static_cast<std::size_t>(dish_slots(k)));
  }

  for (std::size_t j = 0; j < docs_.size(); ++j) {
    const DocState& doc = docs_[j];
    const Document& cdoc = corpus_->documents[j];
    std::vector<int> occ(doc.tables.size(), 0);
    int attached = 0;
    for (std::size_t i = 0; i < doc.table_of_word.size(); ++i) {
      int t = doc.table_of_word[i];
      if (t == -1) continue;
      ++attached;
      if (t < 0 || t >= static_cast<int>(doc.tables.size()) ||
          !doc.tables[static_cast<std::size_t>(t)].live()) {
        std::ostringstream os;
        os << "doc " << j << " word " << i << ": t_ji points at a dead table";
        complain(os.str());
        continue;
      }
      ++occ[static_cast<std::size_t>(t)];
      const DishId dish = doc.tables[static_cast<std::size_t>(t)].dish;
      ++dish_words[static_cast<std::size_t>(dish.label)]
                  [static_cast<std::size_t>(dish.index)][cdoc.words[i]];
    }
    if (attached != static_cast<int>(doc.table_of_word.size())) {
      std::ostringstream os;
      os << "doc " << j << ": " << doc.table_of_word.size() - attached
         << " words detached (sum n_jt != N_j)";
      complain(os.str());
    }
    if (attached != doc.attached) {
      std::ostringstream os;
      os << "doc " << j << ": attached counter expected " << attached
         << " actual " << doc.attached;
      complain(os.str());
    }

    std::vector<int> per_label(static_cast<std::size_t>(K), 0);
    int live = 0;
    long long occupancy_sum = 0;
    for (std::size_t t = 0; t < doc.tables.size(); ++t) {
      const TableSlot& slot = doc.tables[t];
      if (!slot.live()) {
        if (occ[t] != 0) {
          std::ostringstream os;
          os << "doc " << j << " table " << t << ": dead slot has words";
          complain(os.str());
        }
        continue;
      }
      ++live;
      occupancy_sum += slot.occupancy;
      if (slot.occupancy != occ[t]) {
        std::ostringstream os;
        os << "doc " << j << " table " << t << ": n_jt expected " << occ[t]
           << " actual " << slot.occupancy;
        complain(os.str());
      }
      const DishId dish = slot.dish;
      if (dish.label < 0 || dish.label >= K || dish.index < 0 ||
          dish.index >= dish_slots(dish.label)) {
        std::ostringstream os;
        os << "doc " << j << " table " << t << ": dish id out of range";
        complain(os.str());
        continue;
      }
      if (dishes_[static_cast<std::size_t>(dish.label)]
                 [static_cast<std::size_t>(dish.index)].retired) {
        std::ostringstream os;
        os << "doc " << j << " table " << t << ": points at retired dish";
        complain(os.str());
      }
      if (!masks_[j].allowed(dish.label)) {
        std::ostringstream os;
        os << "doc " << j << " table " << t << ": dish label " << dish.label
           << " is masked (r_jk = 0)";
        complain(os.str());
      }
      ++per_label[static_cast<std::size_t>(dish.label)];
      ++dish_tables[static_cast<std::size_t>(dish.label)]
                   [static_cast<std::size_t>(dish.index)];
    }
    if (occupancy_sum != static_cast<long long>(doc.table_of_word.size()) &&
        attached == static_cast<int>(doc.table_of_word.size())) {
      std::ostringstream os;
      os << "doc " << j << ": sum of n_jt = " << occupancy_sum << " != N_j = "
         << doc.table_of_word.size();
      complain(os.str());
    }
    if (live != doc.table_total) {
      std::ostringstream os;
      os << "doc " << j << ": m_j.. expected " << live << " actual "
         << doc.table_total;
      complain(os.str());
    }
    for (int k = 0; k < K; ++k) {
      if (per_label[static_cast<std::size_t>(k)] !=
          doc.tables_per_label[static_cast<std::size_t>(k)]) {
        std::ostringstream os;
        os << "doc " << j << ": m_jk for label " << k << " expected "
           << per_label[static_cast<std::size_t>(k)] << " actual "
           << doc.tables_per_label[static_cast<std::size_t>(k)];
        complain(os.str());
      }
    }
  }

  for (int k = 0; k < K; ++k) {
    long long label_total = 0;
    int live = 0;
    for (int l = 0; l < dish_slots(k); ++l) {
      const Dish& d = dish(k, l);
      long long expect_tables =
          dish_tables[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
      if (d.tables != expect_tables) {
        std::ostringstream os;
        os << "dish (" << k << "," << l << "): m_.kl expected " << expect_tables
           << " actual " << d.tables;
        complain(os.str());
      }
      const auto& words =
          dish_words[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
      long long word_total = 0;
      for (auto [w, c] : words) {
        word_total += c;
        const long long actual =
            w < static_cast<int>(d.word_count.size())
                ? d.word_count[static_cast<std::size_t>(w)]
                : 0;
        if (actual != c) {
          std::ostringstream os;
          os << "dish (" << k << "," << l << ") word " << w << ": n_klw expected "
             << c << " actual " << actual;
          complain(os.str());
        }
      }
      long long stored = 0;
      for (int c : d.word_count) {
        if (c < 0) {
          std::ostringstream os;
          os << "dish (" << k << "," << l << "): negative word count";
          complain(os.str());
        }
        stored += c;
      }
      if (stored != d.total || d.total != word_total) {
        std::ostringstream os;
        os << "dish (" << k << "," << l << "): n_kl expected " << word_total
           << " actual " << d.total;
        complain(os.str());
      }
      if (d.retired && d.table_count() != 0) {
        std::ostringstream os;
        os << "dish (" << k << "," << l << "): retired but has tables";
        complain(os.str());
      }
      if (!d.retired) ++live;
      label_total += d.table_count();
    }
    if (label_total != label_tables_[static_cast<std::size_t>(k)]) {
      std::ostringstream os;
      os << "label " << k << ": m_.k. expected " << label_total << " actual "
         << label_tables_[static_cast<std::size_t>(k)];
      complain(os.str());
    }
    if (live != live_dish_count(k)) {
      std::ostringstream os;
      os << "label " << k << ": live dish count expected " << live << " actual "
         << live_dish_count(k);
      complain(os.str());
    }
  }
  return report;
}

}  // namespace dpmrm
