#include "dpmrm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "dpmrm/common.hpp"
#include "dpmrm/sampler.hpp"

namespace dpmrm {

DiscreteMeasure stick_break_label_measure(double gamma_k, int vocab_size,
                                          double beta, int truncation, Rng& rng) {
  if (truncation < 1) throw ConfigError("stick truncation must be >= 1");
  if (!(gamma_k > 0.0) || !(beta > 0.0)) {
    throw ConfigError("stick breaking needs positive gamma and beta");
  }
  DiscreteMeasure m;
  m.weights.reserve(static_cast<std::size_t>(truncation));
  m.atoms.reserve(static_cast<std::size_t>(truncation));
  const std::vector<double> base(static_cast<std::size_t>(vocab_size), beta);
  double remaining = 1.0;
  for (int l = 0; l < truncation; ++l) {
    const double v = rng.beta(1.0, gamma_k);
    m.weights.push_back(v * remaining);
    remaining *= (1.0 - v);
    m.atoms.push_back(rng.dirichlet(base));
  }
  m.residual = remaining;
  return m;
}

DocMeasure stick_break_doc_measure(const std::vector<DiscreteMeasure>& label_measures,
                                   const LabelMask& mask, double eta, double alpha,
                                   int truncation, Rng& rng) {
  if (truncation < 1) throw ConfigError("stick truncation must be >= 1");
  if (static_cast<int>(label_measures.size()) != mask.size()) {
    throw ConfigError("one label measure per mask entry required");
  }
  for (int k = 0; k < mask.size(); ++k) {
    if (mask.allowed(k) && label_measures[static_cast<std::size_t>(k)].weights.empty()) {
      throw ConfigError("mask selects a label with no measure");
    }
  }

  DocMeasure m;
  std::vector<double> conc(label_measures.size(), 0.0);
  for (int k = 0; k < mask.size(); ++k) {
    if (mask.allowed(k)) conc[static_cast<std::size_t>(k)] = eta;
  }
  m.lambda = rng.dirichlet(conc);

  double remaining = 1.0;
  for (int t = 0; t < truncation; ++t) {
    const double w = rng.beta(1.0, alpha);
    m.weights.push_back(w * remaining);
    remaining *= (1.0 - w);
    const int k = rng.categorical(m.lambda, 1.0);
    const DiscreteMeasure& g = label_measures[static_cast<std::size_t>(k)];
    double total = 0.0;
    for (double pw : g.weights) total += pw;
    const int atom = rng.categorical(g.weights, total);
    m.dish.push_back(DishId{k, atom});
  }
  m.residual = remaining;
  return m;
}

SynthTruth generate_corpus(int num_labels, int vocab_size, int num_docs,
                           int words_per_doc, int labels_per_doc,
                           const Hyperparameters& hypers, int label_truncation,
                           int doc_truncation, std::uint64_t seed) {
  if (num_labels < 1 || vocab_size < 1 || num_docs < 1 || words_per_doc < 1) {
    throw ConfigError("generate_corpus sizes must be positive");
  }
  if (labels_per_doc < 1 || labels_per_doc > num_labels) {
    throw ConfigError("labels_per_doc must lie in [1, K]");
  }
  hypers.validate(num_labels);
  Rng rng(seed);

  SynthTruth truth;
  truth.hypers = hypers;
  char buf[32];
  for (int w = 0; w < vocab_size; ++w) {
    std::snprintf(buf, sizeof(buf), "w%03d", w);
    truth.corpus.vocabulary.add(buf);
  }
  for (int k = 0; k < num_labels; ++k) {
    std::snprintf(buf, sizeof(buf), "label%d", k);
    truth.corpus.labels.add(buf);
  }

  std::vector<DiscreteMeasure> measures;
  measures.reserve(static_cast<std::size_t>(num_labels));
  for (int k = 0; k < num_labels; ++k) {
    DiscreteMeasure m = stick_break_label_measure(
        hypers.gamma[static_cast<std::size_t>(k)], vocab_size, hypers.beta,
        label_truncation, rng);
    // Documented truncation heuristic: residual < 1e-3 once L >= 20 gamma.
    if (label_truncation >= 20.0 * hypers.gamma[static_cast<std::size_t>(k)] &&
        m.residual >= 1e-3) {
      throw InvariantError("stick truncation residual unexpectedly large");
    }
    measures.push_back(std::move(m));
  }
  truth.measures = measures;

  std::vector<int> label_ids(static_cast<std::size_t>(num_labels));
  std::iota(label_ids.begin(), label_ids.end(), 0);
  for (int j = 0; j < num_docs; ++j) {
    // Uniform distinct labels for the document.
    for (int a = 0; a < labels_per_doc; ++a) {
      const int b = a + rng.uniform_int(num_labels - a);
      std::swap(label_ids[static_cast<std::size_t>(a)],
                label_ids[static_cast<std::size_t>(b)]);
    }
    Document doc;
    std::snprintf(buf, sizeof(buf), "doc%04d", j);
    doc.doc_id = buf;
    doc.labels.assign(label_ids.begin(), label_ids.begin() + labels_per_doc);
    std::sort(doc.labels.begin(), doc.labels.end());

    LabelMask mask = make_label_mask(doc, num_labels, MaskMode::training);
    DocMeasure dm = stick_break_doc_measure(measures, mask, hypers.eta,
                                            hypers.alpha, doc_truncation, rng);
    double stick_total = 0.0;
    for (double w : dm.weights) stick_total += w;

    std::vector<DishId> dishes;
    for (int i = 0; i < words_per_doc; ++i) {
      const int t = rng.categorical(dm.weights, stick_total);
      const DishId dish = dm.dish[static_cast<std::size_t>(t)];
      const auto& phi = measures[static_cast<std::size_t>(dish.label)]
                            .atoms[static_cast<std::size_t>(dish.index)];
      doc.words.push_back(rng.categorical(phi, 1.0));
      dishes.push_back(dish);
    }
    truth.corpus.documents.push_back(std::move(doc));
    truth.masks.push_back(std::move(mask));
    truth.word_dish.push_back(std::move(dishes));
  }
  return truth;
}

namespace {

struct CanonicalBuilder {
  std::vector<int> dishes_per_label;
  std::map<long long, int> canonical_of;  // (k,l actual) -> canonical l

  explicit CanonicalBuilder(int num_labels)
      : dishes_per_label(static_cast<std::size_t>(num_labels), 0) {}

  int canonical(DishId id) {
    const long long key = static_cast<long long>(id.label) * (1LL << 32) + id.index;
    auto it = canonical_of.find(key);
    if (it != canonical_of.end()) return it->second;
    const int c = dishes_per_label[static_cast<std::size_t>(id.label)]++;
    canonical_of.emplace(key, c);
    return c;
  }
};

}  // namespace

std::string state_to_canonical_key(const ModelState& state) {
  const Corpus& corpus = state.corpus();
  CanonicalBuilder canon(state.num_labels());
  std::ostringstream key;
  for (int j = 0; j < corpus.num_docs(); ++j) {
    if (j > 0) key << '|';
    const DocState& doc = state.doc(j);
    std::vector<int> table_rank(doc.tables.size(), -1);
    int next_table = 0;
    std::vector<DishId> dish_in_order;
    for (std::size_t i = 0; i < doc.table_of_word.size(); ++i) {
      const int t = doc.table_of_word[i];
      if (t < 0) throw InvariantError("canonical key: detached word");
      if (table_rank[static_cast<std::size_t>(t)] == -1) {
        table_rank[static_cast<std::size_t>(t)] = next_table++;
        dish_in_order.push_back(doc.tables[static_cast<std::size_t>(t)].dish);
      }
      key << table_rank[static_cast<std::size_t>(t)];
    }
    key << '/';
    for (std::size_t r = 0; r < dish_in_order.size(); ++r) {
      if (r > 0) key << ',';
      key << dish_in_order[r].label << '.' << canon.canonical(dish_in_order[r]);
    }
  }
  return key.str();
}

namespace {

// Enumerates restricted growth strings (canonical set partitions) of n items.
void enumerate_partitions(int n, std::vector<std::vector<int>>& out) {
  std::vector<int> assignment(static_cast<std::size_t>(n), 0);
  auto rec = [&](auto&& self, int i, int blocks) -> void {
    if (i == n) {
      out.push_back(assignment);
      return;
    }
    for (int t = 0; t <= blocks; ++t) {
      assignment[static_cast<std::size_t>(i)] = t;
      self(self, i + 1, std::max(blocks, t + 1));
    }
  };
  if (n > 0) rec(rec, 0, 0);
}

struct Enumerator {
  const Corpus& corpus;
  const std::vector<LabelMask>& masks;
  const Hyperparameters& hypers;
  int cap;
  std::vector<std::vector<std::vector<int>>> doc_partitions;  // [doc][choice]
  ExactPosterior result;

  // Current partition choice per doc and flat dish assignment per table.
  std::vector<const std::vector<int>*> chosen;
  std::vector<std::vector<DishId>> table_dish;  // [doc][table], canonical ids

  void run() {
    chosen.resize(corpus.documents.size());
    table_dish.resize(corpus.documents.size());
    pick_partition(0);
    double log_z = -std::numeric_limits<double>::infinity();
    for (const auto& [key, lp] : result.log_unnormalized) {
      log_z = log_z > lp ? log_z + std::log1p(std::exp(lp - log_z))
                         : lp + std::log1p(std::exp(log_z - lp));
    }
    for (const auto& [key, lp] : result.log_unnormalized) {
      result.probability[key] = std::exp(lp - log_z);
    }
  }

  void pick_partition(int j) {
    if (j == corpus.num_docs()) {
      std::vector<int> used(static_cast<std::size_t>(corpus.labels.size()), 0);
      assign_dishes(0, 0, used);
      return;
    }
    for (const auto& part : doc_partitions[static_cast<std::size_t>(j)]) {
      chosen[static_cast<std::size_t>(j)] = &part;
      const int tables = *std::max_element(part.begin(), part.end()) + 1;
      table_dish[static_cast<std::size_t>(j)].assign(
          static_cast<std::size_t>(tables), DishId{});
      pick_partition(j + 1);
    }
  }

  void assign_dishes(int j, int t, std::vector<int>& used) {
    if (j == corpus.num_docs()) {
      record();
      return;
    }
    auto& dishes = table_dish[static_cast<std::size_t>(j)];
    if (t == static_cast<int>(dishes.size())) {
      assign_dishes(j + 1, 0, used);
      return;
    }
    const LabelMask& mask = masks[static_cast<std::size_t>(j)];
    for (int k = 0; k < mask.size(); ++k) {
      if (!mask.allowed(k)) continue;
      const int existing = used[static_cast<std::size_t>(k)];
      for (int l = 0; l <= existing && l < cap; ++l) {
        dishes[static_cast<std::size_t>(t)] = DishId{k, l};
        if (l == existing) {
          ++used[static_cast<std::size_t>(k)];
          assign_dishes(j, t + 1, used);
          --used[static_cast<std::size_t>(k)];
        } else {
          assign_dishes(j, t + 1, used);
        }
      }
    }
  }

  // Replays the configuration through the shared urn/density code path and
  // records its canonical key and log probability.
  void record() {
    ModelState state(corpus, masks, hypers);
    double lp = 0.0;
    for (int j = 0; j < corpus.num_docs(); ++j) {
      const auto& part = *chosen[static_cast<std::size_t>(j)];
      const auto& dishes = table_dish[static_cast<std::size_t>(j)];
      const Document& doc = corpus.documents[static_cast<std::size_t>(j)];
      for (int i = 0; i < doc.length(); ++i) {
        const int target = part[static_cast<std::size_t>(i)];
        const int w = doc.words[static_cast<std::size_t>(i)];
        const int seated = state.doc(j).attached;
        const double denom = seated + hypers.alpha;
        const DocState& ds = state.doc(j);
        if (target < static_cast<int>(ds.tables.size()) &&
            ds.tables[static_cast<std::size_t>(target)].live()) {
          const TableSlot& slot = ds.tables[static_cast<std::size_t>(target)];
          lp += std::log(slot.occupancy / denom) +
                std::log(component_density(state, slot.dish.label,
                                            slot.dish.index, w));
          state.attach_word(j, i, AttachTarget::to_table(target));
        } else {
          const DishId dish = dishes[static_cast<std::size_t>(target)];
          const bool is_new = dish.index >= state.dish_slots(dish.label);
          const int l = is_new ? -1 : dish.index;
          lp += std::log(hypers.alpha / denom) +
                std::log(label_mix_weight(state, j, dish.label)) +
                std::log(dish_urn_weight(state, dish.label, l)) +
                std::log(component_density(state, dish.label, l, w));
          const int made = state.attach_word(
              j, i,
              is_new ? AttachTarget::to_new_table_new_dish(dish.label)
                     : AttachTarget::to_new_table(DishId{dish.label, dish.index}));
          if (made != target) {
            throw InvariantError("exact_posterior: table order out of sync");
          }
        }
      }
    }
    result.log_unnormalized.emplace(state_to_canonical_key(state), lp);
  }
};

}  // namespace

ExactPosterior exact_posterior(const Corpus& corpus,
                               const std::vector<LabelMask>& masks,
                               const Hyperparameters& hypers,
                               int max_dishes_per_label) {
  if (corpus.total_words() > 6 || corpus.labels.size() > 2 ||
      corpus.vocabulary.size() > 3) {
    throw ConfigError("exact_posterior: instance exceeds tractability bound");
  }
  if (max_dishes_per_label < 1) throw ConfigError("dish cap must be >= 1");
  hypers.validate(corpus.labels.size());
  if (masks.size() != corpus.documents.size()) {
    throw DataError("mask list does not align with corpus documents");
  }
  for (std::size_t j = 0; j < masks.size(); ++j) {
    if (masks[j].size() != corpus.labels.size() || masks[j].ones < 1) {
      throw DataError("invalid label mask for document " + std::to_string(j));
    }
    if (corpus.documents[j].words.empty()) {
      throw DataError("empty document in exact_posterior instance");
    }
  }

  Enumerator e{corpus, masks, hypers, max_dishes_per_label, {}, {}, {}, {}};
  e.doc_partitions.resize(corpus.documents.size());
  for (int j = 0; j < corpus.num_docs(); ++j) {
    enumerate_partitions(corpus.documents[static_cast<std::size_t>(j)].length(),
                         e.doc_partitions[static_cast<std::size_t>(j)]);
  }
  e.run();
  return e.result;
}

}  // namespace dpmrm
