#pragma once

// Shared fixtures and statistical helpers for the test suites.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dpmrm/corpus.hpp"
#include "dpmrm/rng.hpp"
#include "dpmrm/state.hpp"

namespace testsup {

inline dpmrm::Document make_doc(std::string id, std::vector<int> words,
                                std::vector<int> labels) {
  dpmrm::Document d;
  d.doc_id = std::move(id);
  d.words = std::move(words);
  d.labels = std::move(labels);
  return d;
}

// Corpus with vocabulary w0..w{W-1} and labels L0..L{K-1}.
inline dpmrm::Corpus make_corpus(int vocab, int labels,
                                 std::vector<dpmrm::Document> docs) {
  dpmrm::Corpus c;
  for (int w = 0; w < vocab; ++w) c.vocabulary.add("w" + std::to_string(w));
  for (int k = 0; k < labels; ++k) c.labels.add("L" + std::to_string(k));
  c.documents = std::move(docs);
  return c;
}

// Random corpus: doc lengths in [min_len, max_len], uniform words, one or
// more uniform labels per document.
inline dpmrm::Corpus random_corpus(int vocab, int labels, int docs, int min_len,
                                   int max_len, int labels_per_doc,
                                   dpmrm::Rng& rng) {
  std::vector<dpmrm::Document> ds;
  for (int j = 0; j < docs; ++j) {
    const int n = min_len + rng.uniform_int(max_len - min_len + 1);
    std::vector<int> words;
    for (int i = 0; i < n; ++i) words.push_back(rng.uniform_int(vocab));
    std::vector<int> ls;
    while (static_cast<int>(ls.size()) < labels_per_doc) {
      const int k = rng.uniform_int(labels);
      bool seen = false;
      for (int x : ls) seen = seen || x == k;
      if (!seen) ls.push_back(k);
    }
    std::sort(ls.begin(), ls.end());
    ds.push_back(make_doc("d" + std::to_string(j), std::move(words), std::move(ls)));
  }
  return make_corpus(vocab, labels, std::move(ds));
}

// Serializes every derived count of a state; equal fingerprints mean
// bit-identical bookkeeping.
inline std::string state_fingerprint(const dpmrm::ModelState& state) {
  std::ostringstream os;
  const dpmrm::Corpus& corpus = state.corpus();
  for (int j = 0; j < corpus.num_docs(); ++j) {
    const dpmrm::DocState& doc = state.doc(j);
    os << "doc" << j << ":";
    for (int t : doc.table_of_word) os << t << ",";
    os << ";";
    for (std::size_t t = 0; t < doc.tables.size(); ++t) {
      const auto& slot = doc.tables[t];
      if (!slot.live()) continue;
      os << "[" << t << ":" << slot.dish.label << "." << slot.dish.index << "."
         << slot.occupancy << "]";
    }
    os << "|m:";
    for (int c : doc.tables_per_label) os << c << ",";
    os << doc.table_total << "/" << doc.attached << "\n";
  }
  for (int k = 0; k < state.num_labels(); ++k) {
    os << "label" << k << "=" << state.label_table_count(k) << ":";
    for (int l : state.live_dish_ids(k)) {
      const dpmrm::Dish& d = state.dish(k, l);
      os << "(" << l << ":" << d.tables << ":" << d.total << ":";
      for (std::size_t w = 0; w < d.word_count.size(); ++w) {
        if (d.word_count[w]) os << w << "." << d.word_count[w] << ",";
      }
      os << ")";
    }
    os << "\n";
  }
  return os.str();
}

// Temporary directory cleaned on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("dpmrm_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

// Independent HDP Chinese-restaurant-franchise conditionals, coded straight
// from the two-level urn with concentrations alpha and gamma. Used to check
// the K=1 degeneracy of the label-mixture urn.
struct HdpCrfOracle {
  double alpha, gamma, beta;
  int W;

  std::vector<double> table_weights(const dpmrm::ModelState& s, int j, int w) const {
    std::vector<double> out;
    const dpmrm::DocState& doc = s.doc(j);
    for (const auto& slot : doc.tables) {
      if (!slot.live()) continue;
      const dpmrm::Dish& d = s.dish(0, slot.dish.index);
      out.push_back(slot.occupancy * (d.count(w) + beta) /
                    (d.count_total() + W * beta));
    }
    double inner = 0.0;
    const long long m_total = s.label_table_count(0);
    for (int l : s.live_dish_ids(0)) {
      const dpmrm::Dish& d = s.dish(0, l);
      inner += d.table_count() * (d.count(w) + beta) /
               ((d.count_total() + W * beta) * (m_total + gamma));
    }
    inner += gamma / (m_total + gamma) / W;
    out.push_back(alpha * inner);
    return out;
  }

  std::vector<double> dish_weights(const dpmrm::ModelState& s, int w) const {
    std::vector<double> out;
    const long long m_total = s.label_table_count(0);
    for (int l : s.live_dish_ids(0)) {
      const dpmrm::Dish& d = s.dish(0, l);
      out.push_back(static_cast<double>(d.table_count()) / (m_total + gamma) *
                    (d.count(w) + beta) / (d.count_total() + W * beta));
    }
    out.push_back(gamma / (m_total + gamma) / W);
    return out;
  }
};

// ---- statistics ----

// chi^2 upper tail probability via Boost-free fallback is not needed; tests
// that want p-values include Boost.Math directly. Here: small helpers only.

inline double mean(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m += x;
  return m / xs.size();
}

// Two-sided Kolmogorov-Smirnov p-value (asymptotic).
inline double ks_p_value(double d, double n_effective) {
  const double lambda =
      (std::sqrt(n_effective) + 0.12 + 0.11 / std::sqrt(n_effective)) * d;
  double p = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    p += sign * 2.0 * std::exp(-2.0 * j * j * lambda * lambda);
    sign = -sign;
  }
  return std::min(1.0, std::max(0.0, p));
}

// Two-sample KS statistic on integer-valued samples.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / a.size() -
                              static_cast<double>(j) / b.size()));
  }
  return d;
}

}  // namespace testsup
