#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dpmrm {

struct Vocabulary {
  std::vector<std::string> id_to_token;
  std::unordered_map<std::string, int> token_to_id;

  int size() const { return static_cast<int>(id_to_token.size()); }
  // Returns the id, inserting the token if unseen.
  int add(const std::string& token);
  // Returns the id or -1.
  int find(const std::string& token) const;
};

struct LabelSet {
  std::vector<std::string> id_to_label;
  std::unordered_map<std::string, int> label_to_id;

  int size() const { return static_cast<int>(id_to_label.size()); }
  int add(const std::string& label);
  int find(const std::string& label) const;
};

struct Document {
  std::string doc_id;
  std::vector<int> words;   // word ids, in order
  std::vector<int> labels;  // sorted unique label ids, non-empty

  int length() const { return static_cast<int>(words.size()); }
  bool has_label(int k) const;
};

struct Corpus {
  std::vector<Document> documents;
  Vocabulary vocabulary;
  LabelSet labels;

  int num_docs() const { return static_cast<int>(documents.size()); }
  long long total_words() const;
};

// Binary vector r_j over the K labels; `ones` caches the popcount.
struct LabelMask {
  std::vector<std::uint8_t> r;
  int ones = 0;

  bool allowed(int k) const { return r[static_cast<std::size_t>(k)] != 0; }
  int size() const { return static_cast<int>(r.size()); }
};

enum class MaskMode { training, test };

struct CorpusStats {
  int docs = 0;
  int vocab = 0;
  int labels = 0;
  long long tokens = 0;
  double labels_per_doc = 0.0;
};

// Reads a UTF-8 JSON-lines file, one document per line:
//   {"id": str, "tokens": [str...], "labels": [str...]}
// Tokens occurring fewer than min_token_count times corpus-wide are dropped;
// documents left empty by the filter are removed. Throws DataError with the
// offending line number on parse failure, and if nothing survives.
Corpus load_corpus(const std::string& path, int min_token_count = 1);

// Inverse of load_corpus (min_token_count = 1): JSON-lines, stable order.
void save_corpus(const Corpus& corpus, const std::string& path);

// Seeded exact partition; test size = round(test_fraction * num_docs).
std::pair<Corpus, Corpus> split_train_test(const Corpus& corpus,
                                           double test_fraction,
                                           std::uint64_t seed);

// Per document, moves round(holdout_fraction * N_j) words (at least one word
// always stays observed) into a heldout twin with the same id and labels.
std::pair<Corpus, Corpus> holdout_words(const Corpus& corpus,
                                        double holdout_fraction,
                                        std::uint64_t seed);

// Remaps a corpus onto a reference vocabulary and label set (as carried by
// training snapshots). Tokens missing from the vocabulary are dropped;
// documents are kept even if emptied. Unknown labels throw DataError.
Corpus align_corpus(const Corpus& corpus, const std::vector<std::string>& vocab,
                    const std::vector<std::string>& labels);

// training: r_jk = [k in label(j)]; test: all ones.
LabelMask make_label_mask(const Document& doc, int num_labels, MaskMode mode);
std::vector<LabelMask> make_masks(const Corpus& corpus, MaskMode mode);

CorpusStats corpus_stats(const Corpus& corpus);

}  // namespace dpmrm
