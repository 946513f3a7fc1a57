#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dpmrm/corpus.hpp"
#include "dpmrm/rng.hpp"
#include "dpmrm/state.hpp"

namespace dpmrm {

// Truncated draw of one label measure: weights from stick breaks, atoms are
// word distributions drawn from the symmetric Dirichlet base.
struct DiscreteMeasure {
  std::vector<double> weights;             // pi_l
  std::vector<std::vector<double>> atoms;  // phi_l, each summing to 1
  double residual = 0.0;                   // 1 - sum(pi)

  int truncation() const { return static_cast<int>(weights.size()); }
};

// Truncated draw of one document measure: sticks point into the label
// measures via (label, atom index).
struct DocMeasure {
  std::vector<double> weights;  // pi_jt
  std::vector<DishId> dish;     // per stick
  std::vector<double> lambda;   // label mixing, zero off-mask
  double residual = 0.0;
};

struct SynthTruth {
  Corpus corpus;
  std::vector<LabelMask> masks;
  std::vector<std::vector<DishId>> word_dish;  // true (k,l) per word
  Hyperparameters hypers;
  std::vector<DiscreteMeasure> measures;  // the generating label measures
};

DiscreteMeasure stick_break_label_measure(double gamma_k, int vocab_size,
                                          double beta, int truncation, Rng& rng);

DocMeasure stick_break_doc_measure(const std::vector<DiscreteMeasure>& label_measures,
                                   const LabelMask& mask, double eta, double alpha,
                                   int truncation, Rng& rng);

// Forward model: label measures, per-document masks (labels_per_doc distinct
// labels drawn uniformly), document measures, then words. Vocabulary ids are
// "w###", labels "label#", documents "doc####".
SynthTruth generate_corpus(int num_labels, int vocab_size, int num_docs,
                           int words_per_doc, int labels_per_doc,
                           const Hyperparameters& hypers, int label_truncation,
                           int doc_truncation, std::uint64_t seed);

// Canonical key of a seating: per document the table index per word in
// first-appearance order, then each table's dish with per-label dish indices
// assigned in first-use order scanning documents left to right.
std::string state_to_canonical_key(const ModelState& state);

struct ExactPosterior {
  std::map<std::string, double> probability;       // normalized
  std::map<std::string, double> log_unnormalized;  // sequential urn products
};

// Exhaustive enumeration of the collapsed posterior over canonical seatings
// of a tiny instance (total words <= 6, K <= 2, W <= 3). Probabilities are
// products of sequential urn terms and the shared component_density path.
ExactPosterior exact_posterior(const Corpus& corpus,
                               const std::vector<LabelMask>& masks,
                               const Hyperparameters& hypers,
                               int max_dishes_per_label);

}  // namespace dpmrm
