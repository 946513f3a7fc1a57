#include "dpmrm/sampler.hpp"

#include <cmath>
#include <limits>

#include "dpmrm/common.hpp"

namespace dpmrm {

void ChainConfig::validate() const {
  if (iterations < 1) throw ConfigError("iterations must be positive");
  if (burn_in < 0) throw ConfigError("burn_in must be nonnegative");
  if (burn_in >= iterations) throw ConfigError("burn_in must be < iterations");
  if (sample_gap < 1) throw ConfigError("sample_gap must be >= 1");
}

int ChainConfig::expected_snapshots() const {
  return (iterations - burn_in - 1) / sample_gap + 1;
}

double component_density(const ModelState& state, int k, int l, int w,
                         std::optional<WordRef> excluding) {
  const int W = state.vocab_size();
  if (w < 0 || w >= W) throw InvariantError("component_density: word id out of range");
  const double beta = state.hypers().beta;

  long long numer_count = 0;
  long long denom_count = 0;
  if (l >= 0) {
    const Dish& d = state.dish(k, l);
    if (d.retired) throw InvariantError("component_density: dish is retired");
    numer_count = d.count(w);
    denom_count = d.count_total();
  }
  if (excluding) {
    auto [ej, ei] = *excluding;
    const DocState& doc = state.doc(ej);
    int t = doc.table_of_word[static_cast<std::size_t>(ei)];
    if (t >= 0) {
      const DishId dish = doc.tables[static_cast<std::size_t>(t)].dish;
      if (dish.label == k && dish.index == l) {
        int ew = state.corpus().documents[static_cast<std::size_t>(ej)]
                     .words[static_cast<std::size_t>(ei)];
        if (ew == w) --numer_count;
        --denom_count;
      }
    }
  }
  return (numer_count + beta) / (denom_count + W * beta);
}

double label_mix_weight(const ModelState& state, int j, int k) {
  const LabelMask& mask = state.masks()[static_cast<std::size_t>(j)];
  if (!mask.allowed(k)) return 0.0;
  const double eta = state.hypers().eta;
  const DocState& doc = state.doc(j);
  return (doc.tables_per_label[static_cast<std::size_t>(k)] + eta) /
         (doc.table_total + mask.ones * eta);
}

double dish_urn_weight(const ModelState& state, int k, int l) {
  const double gamma_k = state.hypers().gamma[static_cast<std::size_t>(k)];
  const double denom = state.label_table_count(k) + gamma_k;
  if (l == -1) return gamma_k / denom;
  return state.dish(k, l).table_count() / denom;
}

DishDistribution dish_distribution_for_word(const ModelState& state, int j,
                                            int w) {
  const LabelMask& mask = state.masks()[static_cast<std::size_t>(j)];
  if (mask.ones < 1) throw InvariantError("dish_distribution: empty label mask");
  const int K = state.num_labels();
  const int W = state.vocab_size();
  if (w < 0 || w >= W) throw InvariantError("dish_distribution: word id out of range");

  DishDistribution dist;
  for (int k = 0; k < K; ++k) {
    const double mix = label_mix_weight(state, j, k);
    for (int l : state.live_dish_ids(k)) {
      dist.dishes.push_back(DishId{k, l});
      const double wgt =
          mix == 0.0
              ? 0.0
              : mix * dish_urn_weight(state, k, l) * component_density(state, k, l, w);
      dist.weights.push_back(wgt);
      dist.total += wgt;
    }
    if (mask.allowed(k)) {
      dist.dishes.push_back(DishId{k, -1});
      const double wgt = mix * dish_urn_weight(state, k, -1) * (1.0 / W);
      dist.weights.push_back(wgt);
      dist.total += wgt;
    }
  }
  return dist;
}

TableDistribution table_distribution(const ModelState& state, int j, int i) {
  const DocState& doc = state.doc(j);
  if (doc.table_of_word[static_cast<std::size_t>(i)] != -1) {
    throw InvariantError("table_distribution: word must be detached");
  }
  const int w = state.corpus().documents[static_cast<std::size_t>(j)]
                    .words[static_cast<std::size_t>(i)];

  TableDistribution dist;
  for (std::size_t t = 0; t < doc.tables.size(); ++t) {
    const TableSlot& slot = doc.tables[t];
    if (!slot.live()) continue;
    dist.tables.push_back(static_cast<int>(t));
    const double wgt =
        slot.occupancy *
        component_density(state, slot.dish.label, slot.dish.index, w);
    dist.weights.push_back(wgt);
    dist.total += wgt;
  }
  // New-table mass: alpha times the label/dish urn marginal of the word.
  const DishDistribution dd = dish_distribution_for_word(state, j, w);
  const double new_weight = state.hypers().alpha * dd.total;
  dist.weights.push_back(new_weight);
  dist.total += new_weight;
  return dist;
}

namespace {

// log Dirichlet-multinomial marginal of a word multiset under dish counts
// (zero counts when l == -1).
double log_block_likelihood(const ModelState& state, int k, int l,
                            const std::vector<std::pair<int, int>>& words,
                            int table_size) {
  const double beta = state.hypers().beta;
  const double wbeta = state.vocab_size() * beta;
  double lp = 0.0;
  long long total = 0;
  if (l >= 0) total = state.dish(k, l).count_total();
  for (auto [w, c] : words) {
    const double base = (l >= 0 ? state.dish(k, l).count(w) : 0) + beta;
    lp += std::lgamma(base + c) - std::lgamma(base);
  }
  lp -= std::lgamma(total + wbeta + table_size) - std::lgamma(total + wbeta);
  return lp;
}

// Candidates and log weights, assuming table t's contribution has already
// been excluded from the dish counts.
BlockDishDistribution block_weights_excluded(
    const ModelState& state, int j,
    const std::vector<std::pair<int, int>>& words, int table_size) {
  const LabelMask& mask = state.masks()[static_cast<std::size_t>(j)];
  BlockDishDistribution dist;
  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < state.num_labels(); ++k) {
    if (!mask.allowed(k)) continue;
    const double log_mix = std::log(label_mix_weight(state, j, k));
    for (int l : state.live_dish_ids(k)) {
      dist.dishes.push_back(DishId{k, l});
      const double urn = dish_urn_weight(state, k, l);
      dist.log_weights.push_back(
          urn == 0.0 ? neg_inf
                     : log_mix + std::log(urn) +
                           log_block_likelihood(state, k, l, words, table_size));
    }
    dist.dishes.push_back(DishId{k, -1});
    dist.log_weights.push_back(
        log_mix + std::log(dish_urn_weight(state, k, -1)) +
        log_block_likelihood(state, k, -1, words, table_size));
  }
  return dist;
}

}  // namespace

BlockDishDistribution table_dish_distribution(ModelState& state, int j, int t) {
  const DocState& doc = state.doc(j);
  if (t < 0 || t >= static_cast<int>(doc.tables.size()) ||
      !doc.tables[static_cast<std::size_t>(t)].live()) {
    throw InvariantError("table_dish_distribution: dead table");
  }
  const DishId current = doc.tables[static_cast<std::size_t>(t)].dish;
  const auto words = state.table_word_counts(j, t);
  const int size = doc.tables[static_cast<std::size_t>(t)].occupancy;

  state.exclude_table_from_dish(j, t);
  BlockDishDistribution dist = block_weights_excluded(state, j, words, size);
  state.include_table_in_dish(j, t, current);
  return dist;
}

void resample_word(ModelState& state, int j, int i, Rng& rng) {
  state.detach_word(j, i);
  const TableDistribution dist = table_distribution(state, j, i);
  const int choice = rng.categorical(dist.weights, dist.total);
  if (choice < static_cast<int>(dist.tables.size())) {
    state.attach_word(j, i, AttachTarget::to_table(dist.tables[choice]));
    return;
  }
  const int w = state.corpus().documents[static_cast<std::size_t>(j)]
                    .words[static_cast<std::size_t>(i)];
  const DishDistribution dd = dish_distribution_for_word(state, j, w);
  const int pick = rng.categorical(dd.weights, dd.total);
  state.attach_word(j, i, AttachTarget::to_new_table(dd.dishes[pick]));
}

void resample_table_dish(ModelState& state, int j, int t, Rng& rng) {
  const DocState& doc = state.doc(j);
  if (t < 0 || t >= static_cast<int>(doc.tables.size()) ||
      !doc.tables[static_cast<std::size_t>(t)].live()) {
    throw InvariantError("resample_table_dish: dead table");
  }
  const DishId current = doc.tables[static_cast<std::size_t>(t)].dish;
  const auto words = state.table_word_counts(j, t);
  const int size = doc.tables[static_cast<std::size_t>(t)].occupancy;

  state.exclude_table_from_dish(j, t);
  const BlockDishDistribution dist = block_weights_excluded(state, j, words, size);
  const int pick = rng.categorical_from_logs(dist.log_weights);
  state.include_table_in_dish(j, t, dist.dishes[pick]);
  // The old dish may have lost its last table.
  state.maybe_retire_dish(current.label, current.index);
}

void resample_alpha(ModelState& state, Rng& rng) {
  const GammaPrior& prior = state.hypers().alpha_prior;
  double shape = prior.shape;
  double rate = prior.rate;
  long long total_tables = state.total_tables();
  shape += total_tables;
  for (int j = 0; j < state.corpus().num_docs(); ++j) {
    const int n = state.doc(j).attached;
    if (n < 1) continue;
    const double alpha = state.hypers().alpha;
    const double w = rng.beta(alpha + 1.0, n);
    rate -= std::log(w);
    if (rng.uniform() < n / (n + alpha)) shape -= 1.0;
  }
  state.hypers().alpha = rng.gamma(shape, rate);
}

void resample_gamma(ModelState& state, int k, Rng& rng) {
  const GammaPrior& prior = state.hypers().gamma_prior;
  const long long m = state.label_table_count(k);
  if (m < 1) {
    state.hypers().gamma[static_cast<std::size_t>(k)] =
        rng.gamma(prior.shape, prior.rate);
    return;
  }
  const int dishes = state.live_dish_count(k);
  const double gamma_k = state.hypers().gamma[static_cast<std::size_t>(k)];
  const double x = rng.beta(gamma_k + 1.0, static_cast<double>(m));
  const double rate = prior.rate - std::log(x);
  const double a = prior.shape + dishes;
  const double odds = (a - 1.0) / (m * rate);
  const double pick = rng.uniform();
  const double shape = (pick < odds / (1.0 + odds)) ? a : a - 1.0;
  state.hypers().gamma[static_cast<std::size_t>(k)] = rng.gamma(shape, rate);
}

void gibbs_sweep(ModelState& state, Rng& rng, bool sample_hypers) {
  const Corpus& corpus = state.corpus();
  for (int j = 0; j < corpus.num_docs(); ++j) {
    const int n = corpus.documents[static_cast<std::size_t>(j)].length();
    for (int i = 0; i < n; ++i) resample_word(state, j, i, rng);
  }
  for (int j = 0; j < corpus.num_docs(); ++j) {
    const DocState& doc = state.doc(j);
    for (int t = 0; t < static_cast<int>(doc.tables.size()); ++t) {
      if (doc.tables[static_cast<std::size_t>(t)].live()) {
        resample_table_dish(state, j, t, rng);
      }
    }
  }
  if (sample_hypers) {
    resample_alpha(state, rng);
    for (int k = 0; k < state.num_labels(); ++k) resample_gamma(state, k, rng);
  }
}

void seat_words_from_prior(ModelState& state, Rng& rng) {
  const Corpus& corpus = state.corpus();
  for (int j = 0; j < corpus.num_docs(); ++j) {
    const int n = corpus.documents[static_cast<std::size_t>(j)].length();
    for (int i = 0; i < n; ++i) {
      const TableDistribution dist = table_distribution(state, j, i);
      const int choice = rng.categorical(dist.weights, dist.total);
      if (choice < static_cast<int>(dist.tables.size())) {
        state.attach_word(j, i, AttachTarget::to_table(dist.tables[choice]));
      } else {
        const int w = corpus.documents[static_cast<std::size_t>(j)]
                          .words[static_cast<std::size_t>(i)];
        const DishDistribution dd = dish_distribution_for_word(state, j, w);
        const int pick = rng.categorical(dd.weights, dd.total);
        state.attach_word(j, i, AttachTarget::to_new_table(dd.dishes[pick]));
      }
    }
  }
}

ModelState init_state(const Corpus& corpus, const std::vector<LabelMask>& masks,
                      const Hyperparameters& hypers, std::uint64_t seed) {
  ModelState state(corpus, masks, hypers);
  state.rng_seed = seed;
  Rng rng(seed);
  seat_words_from_prior(state, rng);
  return state;
}

double log_joint(const ModelState& state) {
  const Corpus& corpus = state.corpus();
  const Hyperparameters& h = state.hypers();
  const double eta = h.eta;
  double lp = 0.0;

  // Document-level CRP over tables and the collapsed label mixture.
  for (int j = 0; j < corpus.num_docs(); ++j) {
    const DocState& doc = state.doc(j);
    const LabelMask& mask = state.masks()[static_cast<std::size_t>(j)];
    const int n = corpus.documents[static_cast<std::size_t>(j)].length();
    lp += doc.table_total * std::log(h.alpha);
    for (const TableSlot& slot : doc.tables) {
      if (slot.live()) lp += std::lgamma(slot.occupancy);
    }
    lp += std::lgamma(h.alpha) - std::lgamma(h.alpha + n);

    lp += std::lgamma(mask.ones * eta) -
          std::lgamma(mask.ones * eta + doc.table_total);
    for (int k = 0; k < state.num_labels(); ++k) {
      if (!mask.allowed(k)) continue;
      lp += std::lgamma(eta + doc.tables_per_label[static_cast<std::size_t>(k)]) -
            std::lgamma(eta);
    }
  }

  // Label-level CRPs over dishes and the Dirichlet-multinomial word terms.
  const double beta = h.beta;
  const double wbeta = state.vocab_size() * beta;
  for (int k = 0; k < state.num_labels(); ++k) {
    const double gamma_k = h.gamma[static_cast<std::size_t>(k)];
    lp += state.live_dish_count(k) * std::log(gamma_k);
    lp += std::lgamma(gamma_k) - std::lgamma(gamma_k + state.label_table_count(k));
    for (int l : state.live_dish_ids(k)) {
      const Dish& d = state.dish(k, l);
      if (d.table_count() == 0) continue;
      lp += std::lgamma(static_cast<double>(d.table_count()));
      lp += std::lgamma(wbeta) - std::lgamma(wbeta + d.count_total());
      for (int w = 0; w < state.vocab_size(); ++w) {
        const int c = d.count(w);
        if (c > 0) lp += std::lgamma(beta + c) - std::lgamma(beta);
      }
    }
  }
  return lp;
}

ChainResult run_chain(const Corpus& corpus, const std::vector<LabelMask>& masks,
                      const Hyperparameters& hypers, const ChainConfig& config) {
  config.validate();
  hypers.validate(corpus.labels.size());
  Rng rng(config.seed);
  ModelState state(corpus, masks, hypers);
  state.rng_seed = config.seed;
  seat_words_from_prior(state, rng);

  ChainResult result;
  result.trace.reserve(static_cast<std::size_t>(config.iterations));
  for (int it = 1; it <= config.iterations; ++it) {
    gibbs_sweep(state, rng, config.sample_hypers);

    TraceRow row;
    row.iteration = it;
    row.log_joint = log_joint(state);
    row.alpha = state.hypers().alpha;
    row.gamma = state.hypers().gamma;
    row.tables = state.total_tables();
    row.dishes = state.total_live_dishes();
    result.trace.push_back(std::move(row));

    if (it > config.burn_in && (it - config.burn_in - 1) % config.sample_gap == 0) {
      result.snapshots.push_back(snapshot_from_state(state, it));
    }
  }

  result.final_label_tables.resize(static_cast<std::size_t>(state.num_labels()));
  result.final_label_dishes.resize(static_cast<std::size_t>(state.num_labels()));
  for (int k = 0; k < state.num_labels(); ++k) {
    result.final_label_tables[static_cast<std::size_t>(k)] =
        state.label_table_count(k);
    result.final_label_dishes[static_cast<std::size_t>(k)] =
        state.live_dish_count(k);
  }
  return result;
}

std::vector<std::vector<std::vector<int>>> fold_in_assignments(
    const std::vector<Snapshot>& snapshots, const Corpus& test, int sweeps,
    std::uint64_t seed) {
  std::vector<std::vector<std::vector<int>>> samples;
  samples.reserve(snapshots.size());
  for (std::size_t s = 0; s < snapshots.size(); ++s) {
    ModelState state = make_fold_in_state(test, snapshots[s]);
    Rng rng(seed + s);
    seat_words_from_prior(state, rng);
    for (int it = 0; it < sweeps; ++it) gibbs_sweep(state, rng, false);

    std::vector<std::vector<int>> doc_labels(test.documents.size());
    for (int j = 0; j < test.num_docs(); ++j) {
      const DocState& doc = state.doc(j);
      auto& out = doc_labels[static_cast<std::size_t>(j)];
      out.resize(doc.table_of_word.size());
      for (std::size_t i = 0; i < doc.table_of_word.size(); ++i) {
        const int t = doc.table_of_word[i];
        out[i] = doc.tables[static_cast<std::size_t>(t)].dish.label;
      }
    }
    samples.push_back(std::move(doc_labels));
  }
  return samples;
}

}  // namespace dpmrm
