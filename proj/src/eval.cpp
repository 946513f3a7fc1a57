#include "dpmrm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "dpmrm/common.hpp"

namespace dpmrm {

namespace {

double log_sum_exp(const std::vector<double>& xs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : xs) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}

void check_heldout(const std::vector<Snapshot>& snapshots, const Corpus& heldout,
                   const char* expected_format) {
  if (snapshots.empty()) throw DataError("heldout likelihood needs >= 1 snapshot");
  long long held_words = heldout.total_words();
  if (held_words == 0) throw DataError("heldout corpus has no words");
  for (const auto& s : snapshots) {
    if (s.format != expected_format) {
      throw DataError("snapshot format mismatch: expected " +
                      std::string(expected_format) + ", got " + s.format);
    }
    if (s.vocab != heldout.vocabulary.id_to_token) {
      throw DataError("snapshot/corpus vocabulary mismatch");
    }
    if (s.labels != heldout.labels.id_to_label) {
      throw DataError("snapshot/corpus label map mismatch");
    }
  }
}

// Per-sample tables for the DP-MRM estimator, precomputed per snapshot.
struct DpmrmSampleTables {
  // Dense dish list with psi rows evaluated lazily per word.
  struct DishRow {
    int label;
    double stick;  // m_.kl / (m_.k. + gamma_k)
    std::unordered_map<int, int> counts;
    long long total;
  };
  std::vector<DishRow> dishes;
  // doc id -> per-dish word counts n_jkl (aligned to `dishes`) and n_jk.
  std::unordered_map<std::string, std::vector<int>> doc_dish_words;
  std::unordered_map<std::string, std::vector<long long>> doc_label_words;
  double alpha;
  double beta;
};

DpmrmSampleTables build_dpmrm_tables(const Snapshot& snap) {
  DpmrmSampleTables t;
  t.alpha = snap.hypers.alpha;
  t.beta = snap.hypers.beta;
  const int K = snap.num_labels();

  std::vector<long long> label_tables(static_cast<std::size_t>(K), 0);
  for (const auto& d : snap.dishes) {
    label_tables[static_cast<std::size_t>(d.id.label)] += d.tables;
  }
  std::unordered_map<long long, int> dish_row;  // (k,l) -> row
  auto key = [](DishId id) {
    return static_cast<long long>(id.label) * (1LL << 32) + id.index;
  };
  for (const auto& d : snap.dishes) {
    DpmrmSampleTables::DishRow row;
    row.label = d.id.label;
    const double gamma_k = snap.hypers.gamma[static_cast<std::size_t>(d.id.label)];
    row.stick = d.tables /
                (label_tables[static_cast<std::size_t>(d.id.label)] + gamma_k);
    row.total = d.total;
    for (auto [w, c] : d.counts) row.counts.emplace(w, c);
    dish_row.emplace(key(d.id), static_cast<int>(t.dishes.size()));
    t.dishes.push_back(std::move(row));
  }

  for (const auto& doc : snap.docs) {
    std::vector<int> per_dish(t.dishes.size(), 0);
    std::vector<long long> per_label(static_cast<std::size_t>(K), 0);
    for (int ti : doc.table_of_word) {
      const DishId id = doc.table_dish.at(static_cast<std::size_t>(ti));
      auto it = dish_row.find(key(id));
      if (it == dish_row.end()) {
        throw DataError("snapshot document references unknown dish");
      }
      ++per_dish[static_cast<std::size_t>(it->second)];
      ++per_label[static_cast<std::size_t>(id.label)];
    }
    t.doc_dish_words.emplace(doc.doc_id, std::move(per_dish));
    t.doc_label_words.emplace(doc.doc_id, std::move(per_label));
  }
  return t;
}

}  // namespace

double heldout_loglik_dpmrm(const std::vector<Snapshot>& snapshots,
                            const Corpus& heldout) {
  check_heldout(snapshots, heldout, kDpmrmSnapshotFormat);
  const int W = heldout.vocabulary.size();
  const int S = static_cast<int>(snapshots.size());

  std::vector<DpmrmSampleTables> tables;
  tables.reserve(snapshots.size());
  for (const auto& s : snapshots) tables.push_back(build_dpmrm_tables(s));

  double total_log = 0.0;
  long long word_count = 0;
  std::vector<double> per_sample(static_cast<std::size_t>(S));
  for (const auto& doc : heldout.documents) {
    if (doc.words.empty()) continue;
    for (int w : doc.words) {
      for (int s = 0; s < S; ++s) {
        const DpmrmSampleTables& t = tables[static_cast<std::size_t>(s)];
        auto dit = t.doc_dish_words.find(doc.doc_id);
        if (dit == t.doc_dish_words.end()) {
          throw DataError("heldout document " + doc.doc_id + " missing from snapshot");
        }
        const auto& n_jkl = dit->second;
        const auto& n_jk = t.doc_label_words.at(doc.doc_id);
        double p = 0.0;
        for (std::size_t r = 0; r < t.dishes.size(); ++r) {
          const auto& dish = t.dishes[r];
          const double theta =
              (n_jkl[r] + t.alpha * dish.stick) /
              (n_jk[static_cast<std::size_t>(dish.label)] + t.alpha);
          auto cit = dish.counts.find(w);
          const int n_klx = cit == dish.counts.end() ? 0 : cit->second;
          const double psi = (n_klx + t.beta) / (dish.total + W * t.beta);
          p += theta * psi;
        }
        per_sample[static_cast<std::size_t>(s)] =
            p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
      }
      total_log += log_sum_exp(per_sample) - std::log(static_cast<double>(S));
      ++word_count;
    }
  }
  return total_log / word_count;
}

double heldout_loglik_llda(const std::vector<Snapshot>& snapshots,
                           const Corpus& heldout) {
  check_heldout(snapshots, heldout, kLldaSnapshotFormat);
  const int W = heldout.vocabulary.size();
  const int K = heldout.labels.size();
  const int S = static_cast<int>(snapshots.size());

  // Per snapshot: n_jk per doc id, topic-word maps.
  struct Tables {
    std::unordered_map<std::string, std::vector<int>> doc_topic;
    std::unordered_map<std::string, long long> doc_total;
    std::vector<std::unordered_map<int, int>> topic_counts;
    std::vector<long long> topic_totals;
    double alpha, beta;
  };
  std::vector<Tables> tables(snapshots.size());
  for (std::size_t s = 0; s < snapshots.size(); ++s) {
    const Snapshot& snap = snapshots[s];
    Tables& t = tables[s];
    t.alpha = snap.hypers.alpha;
    t.beta = snap.hypers.beta;
    t.topic_counts.resize(static_cast<std::size_t>(K));
    t.topic_totals = snap.topic_totals;
    if (static_cast<int>(snap.topic_counts.size()) != K) {
      throw DataError("llda snapshot topic table has wrong size");
    }
    for (int k = 0; k < K; ++k) {
      for (auto [w, c] : snap.topic_counts[static_cast<std::size_t>(k)]) {
        t.topic_counts[static_cast<std::size_t>(k)].emplace(w, c);
      }
    }
    for (const auto& doc : snap.docs) {
      std::vector<int> counts(static_cast<std::size_t>(K), 0);
      for (int z : doc.topic_of_word) ++counts.at(static_cast<std::size_t>(z));
      t.doc_total.emplace(doc.doc_id, doc.topic_of_word.size());
      t.doc_topic.emplace(doc.doc_id, std::move(counts));
    }
  }

  double total_log = 0.0;
  long long word_count = 0;
  std::vector<double> per_sample(static_cast<std::size_t>(S));
  for (const auto& doc : heldout.documents) {
    for (int w : doc.words) {
      for (int s = 0; s < S; ++s) {
        const Tables& t = tables[static_cast<std::size_t>(s)];
        auto dit = t.doc_topic.find(doc.doc_id);
        if (dit == t.doc_topic.end()) {
          throw DataError("heldout document " + doc.doc_id + " missing from snapshot");
        }
        const auto& n_jk = dit->second;
        const double n_j = static_cast<double>(t.doc_total.at(doc.doc_id));
        double p = 0.0;
        for (int k = 0; k < K; ++k) {
          const double theta =
              (n_jk[static_cast<std::size_t>(k)] + t.alpha) / (n_j + K * t.alpha);
          auto cit = t.topic_counts[static_cast<std::size_t>(k)].find(w);
          const int n_kx = cit == t.topic_counts[static_cast<std::size_t>(k)].end()
                               ? 0
                               : cit->second;
          const double psi =
              (n_kx + t.beta) /
              (t.topic_totals[static_cast<std::size_t>(k)] + W * t.beta);
          p += theta * psi;
        }
        per_sample[static_cast<std::size_t>(s)] =
            p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
      }
      total_log += log_sum_exp(per_sample) - std::log(static_cast<double>(S));
      ++word_count;
    }
  }
  if (word_count == 0) throw DataError("heldout corpus has no words");
  return total_log / word_count;
}

LabelScores label_scores(
    int num_labels,
    const std::vector<std::vector<std::vector<int>>>& assignments) {
  if (assignments.empty()) throw DataError("label_scores needs >= 1 sample");
  const std::size_t docs = assignments.front().size();
  LabelScores out;
  out.scores.assign(docs, std::vector<double>(static_cast<std::size_t>(num_labels), 0.0));
  const double S = static_cast<double>(assignments.size());
  for (const auto& sample : assignments) {
    if (sample.size() != docs) throw DataError("label_scores: ragged samples");
    for (std::size_t j = 0; j < docs; ++j) {
      const auto& words = sample[j];
      if (words.empty()) continue;
      const double inv = 1.0 / (S * words.size());
      for (int k : words) {
        out.scores[j].at(static_cast<std::size_t>(k)) += inv;
      }
    }
  }
  return out;
}

int classify_single(const std::vector<double>& scores) {
  if (scores.empty()) throw DataError("classify_single: empty scores");
  int best = 0;
  for (int k = 1; k < static_cast<int>(scores.size()); ++k) {
    if (scores[static_cast<std::size_t>(k)] > scores[static_cast<std::size_t>(best)]) {
      best = k;
    }
  }
  return best;
}

std::vector<int> classify_multi(const std::vector<double>& scores, double cut) {
  if (cut < 0.0) throw ConfigError("classification cut must be nonnegative");
  std::vector<int> out;
  for (int k = 0; k < static_cast<int>(scores.size()); ++k) {
    if (scores[static_cast<std::size_t>(k)] >= cut) out.push_back(k);
  }
  return out;
}

F1Report micro_macro_f1(const std::vector<std::vector<int>>& predicted,
                        const std::vector<std::vector<int>>& gold,
                        int num_labels) {
  if (predicted.size() != gold.size()) {
    throw DataError("micro_macro_f1: prediction/gold length mismatch");
  }
  F1Report report;
  report.per_label.assign(static_cast<std::size_t>(num_labels), PerLabelF1{});
  for (std::size_t j = 0; j < predicted.size(); ++j) {
    std::vector<bool> p(static_cast<std::size_t>(num_labels), false);
    std::vector<bool> g(static_cast<std::size_t>(num_labels), false);
    for (int k : predicted[j]) p.at(static_cast<std::size_t>(k)) = true;
    for (int k : gold[j]) g.at(static_cast<std::size_t>(k)) = true;
    for (int k = 0; k < num_labels; ++k) {
      auto& pl = report.per_label[static_cast<std::size_t>(k)];
      if (p[static_cast<std::size_t>(k)] && g[static_cast<std::size_t>(k)]) ++pl.tp;
      else if (p[static_cast<std::size_t>(k)]) ++pl.fp;
      else if (g[static_cast<std::size_t>(k)]) ++pl.fn;
    }
  }
  long long tp = 0, fp = 0, fn = 0;
  double macro_sum = 0.0;
  for (auto& pl : report.per_label) {
    tp += pl.tp;
    fp += pl.fp;
    fn += pl.fn;
    pl.precision = (pl.tp + pl.fp) > 0 ? static_cast<double>(pl.tp) / (pl.tp + pl.fp) : 0.0;
    pl.recall = (pl.tp + pl.fn) > 0 ? static_cast<double>(pl.tp) / (pl.tp + pl.fn) : 0.0;
    // 2TP / (2TP + FP + FN); zero denominator counts as 0 by convention.
    const long long denom = 2 * pl.tp + pl.fp + pl.fn;
    pl.f1 = denom > 0 ? 2.0 * pl.tp / denom : 0.0;
    macro_sum += pl.f1;
  }
  const long long micro_denom = 2 * tp + fp + fn;
  report.micro_f1 = micro_denom > 0 ? 2.0 * tp / micro_denom : 0.0;
  report.macro_f1 = num_labels > 0 ? macro_sum / num_labels : 0.0;
  return report;
}

double rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw DataError("rand_index: partition size mismatch");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  long long agree = 0;
  long long total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool same_a = a[i] == a[j];
      const bool same_b = b[i] == b[j];
      if (same_a == same_b) ++agree;
      ++total;
    }
  }
  return static_cast<double>(agree) / total;
}

}  // namespace dpmrm
