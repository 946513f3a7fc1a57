#include "dpmrm/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dpmrm/common.hpp"

namespace dpmrm {

using nlohmann::json;

int Vocabulary::add(const std::string& token) {
  auto it = token_to_id.find(token);
  if (it != token_to_id.end()) return it->second;
  int id = size();
  id_to_token.push_back(token);
  token_to_id.emplace(token, id);
  return id;
}

int Vocabulary::find(const std::string& token) const {
  auto it = token_to_id.find(token);
  return it == token_to_id.end() ? -1 : it->second;
}

int LabelSet::add(const std::string& label) {
  auto it = label_to_id.find(label);
  if (it != label_to_id.end()) return it->second;
  int id = size();
  id_to_label.push_back(label);
  label_to_id.emplace(label, id);
  return id;
}

int LabelSet::find(const std::string& label) const {
  auto it = label_to_id.find(label);
  return it == label_to_id.end() ? -1 : it->second;
}

bool Document::has_label(int k) const {
  return std::binary_search(labels.begin(), labels.end(), k);
}

long long Corpus::total_words() const {
  long long n = 0;
  for (const auto& d : documents) n += d.length();
  return n;
}

namespace {

struct RawDoc {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<std::string> labels;
};

RawDoc parse_line(const std::string& line, int line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError("corpus line " + std::to_string(line_no) +
                    ": invalid JSON (" + std::string(e.what()) + ")");
  }
  auto fail = [&](const char* what) -> DataError {
    return DataError("corpus line " + std::to_string(line_no) + ": " + what);
  };
  if (!j.is_object()) throw fail("expected a JSON object");
  if (!j.contains("id") || !j["id"].is_string()) throw fail("missing string field \"id\"");
  if (!j.contains("tokens") || !j["tokens"].is_array()) throw fail("missing array field \"tokens\"");
  if (!j.contains("labels") || !j["labels"].is_array()) throw fail("missing array field \"labels\"");
  RawDoc d;
  d.id = j["id"].get<std::string>();
  for (const auto& t : j["tokens"]) {
    if (!t.is_string()) throw fail("non-string token");
    d.tokens.push_back(t.get<std::string>());
  }
  for (const auto& l : j["labels"]) {
    if (!l.is_string()) throw fail("non-string label");
    d.labels.push_back(l.get<std::string>());
  }
  if (d.labels.empty()) throw fail("document has no labels");
  return d;
}

}  // namespace

Corpus load_corpus(const std::string& path, int min_token_count) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);

  std::vector<RawDoc> raw;
  std::unordered_map<std::string, long long> token_count;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    RawDoc d = parse_line(line, line_no);
    for (const auto& t : d.tokens) ++token_count[t];
    raw.push_back(std::move(d));
  }

  Corpus corpus;
  std::set<std::string> seen_ids;
  for (const auto& d : raw) {
    Document doc;
    doc.doc_id = d.id;
    if (!seen_ids.insert(d.id).second) {
      throw DataError("duplicate document id: " + d.id);
    }
    for (const auto& t : d.tokens) {
      if (token_count[t] >= min_token_count) {
        doc.words.push_back(corpus.vocabulary.add(t));
      }
    }
    if (doc.words.empty()) continue;  // emptied by filtering
    std::set<int> label_ids;
    for (const auto& l : d.labels) label_ids.insert(corpus.labels.add(l));
    doc.labels.assign(label_ids.begin(), label_ids.end());
    corpus.documents.push_back(std::move(doc));
  }
  if (corpus.documents.empty()) {
    throw DataError("corpus is empty after token filtering: " + path);
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file: " + path);
  for (const auto& doc : corpus.documents) {
    json j;
    j["id"] = doc.doc_id;
    json tokens = json::array();
    for (int w : doc.words) tokens.push_back(corpus.vocabulary.id_to_token[w]);
    j["tokens"] = std::move(tokens);
    json labels = json::array();
    for (int k : doc.labels) labels.push_back(corpus.labels.id_to_label[k]);
    j["labels"] = std::move(labels);
    out << j.dump() << "\n";
  }
}

std::pair<Corpus, Corpus> split_train_test(const Corpus& corpus,
                                           double test_fraction,
                                           std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0,1)");
  }
  if (corpus.num_docs() < 2) throw DataError("need at least 2 documents to split");

  std::vector<int> order(corpus.documents.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 eng(seed);
  std::shuffle(order.begin(), order.end(), eng);

  int n_test = static_cast<int>(std::llround(test_fraction * corpus.num_docs()));
  n_test = std::clamp(n_test, 1, corpus.num_docs() - 1);
  std::vector<bool> is_test(corpus.documents.size(), false);
  for (int i = 0; i < n_test; ++i) is_test[order[i]] = true;

  Corpus train, test;
  train.vocabulary = corpus.vocabulary;
  train.labels = corpus.labels;
  test.vocabulary = corpus.vocabulary;
  test.labels = corpus.labels;
  for (std::size_t j = 0; j < corpus.documents.size(); ++j) {
    (is_test[j] ? test : train).documents.push_back(corpus.documents[j]);
  }
  return {std::move(train), std::move(test)};
}

std::pair<Corpus, Corpus> holdout_words(const Corpus& corpus,
                                        double holdout_fraction,
                                        std::uint64_t seed) {
  if (holdout_fraction < 0.0 || holdout_fraction >= 1.0) {
    throw ConfigError("holdout_fraction must lie in [0,1)");
  }
  Corpus observed, heldout;
  observed.vocabulary = corpus.vocabulary;
  observed.labels = corpus.labels;
  heldout.vocabulary = corpus.vocabulary;
  heldout.labels = corpus.labels;

  std::mt19937_64 eng(seed);
  for (const auto& doc : corpus.documents) {
    if (doc.length() < 2) {
      throw DataError("document " + doc.doc_id +
                      " has fewer than 2 words; cannot hold out");
    }
    int n = doc.length();
    int n_hold = static_cast<int>(std::floor(holdout_fraction * n + 0.5));
    n_hold = std::min(n_hold, n - 1);  // keep at least one observed word

    std::vector<int> pos(n);
    std::iota(pos.begin(), pos.end(), 0);
    std::shuffle(pos.begin(), pos.end(), eng);
    std::vector<bool> held(n, false);
    for (int i = 0; i < n_hold; ++i) held[pos[i]] = true;

    Document obs_doc, held_doc;
    obs_doc.doc_id = held_doc.doc_id = doc.doc_id;
    obs_doc.labels = held_doc.labels = doc.labels;
    for (int i = 0; i < n; ++i) {
      (held[i] ? held_doc : obs_doc).words.push_back(doc.words[i]);
    }
    observed.documents.push_back(std::move(obs_doc));
    heldout.documents.push_back(std::move(held_doc));
  }
  return {std::move(observed), std::move(heldout)};
}

Corpus align_corpus(const Corpus& corpus, const std::vector<std::string>& vocab,
                    const std::vector<std::string>& labels) {
  Corpus out;
  for (const auto& token : vocab) out.vocabulary.add(token);
  for (const auto& label : labels) out.labels.add(label);
  for (const auto& doc : corpus.documents) {
    Document aligned;
    aligned.doc_id = doc.doc_id;
    for (int w : doc.words) {
      const int id = out.vocabulary.find(corpus.vocabulary.id_to_token[w]);
      if (id >= 0) aligned.words.push_back(id);
    }
    std::set<int> label_ids;
    for (int k : doc.labels) {
      const std::string& name = corpus.labels.id_to_label[k];
      const int id = out.labels.find(name);
      if (id < 0) {
        throw DataError("document " + doc.doc_id + " carries unknown label \"" +
                        name + "\"");
      }
      label_ids.insert(id);
    }
    aligned.labels.assign(label_ids.begin(), label_ids.end());
    out.documents.push_back(std::move(aligned));
  }
  return out;
}

LabelMask make_label_mask(const Document& doc, int num_labels, MaskMode mode) {
  for (int k : doc.labels) {
    if (k < 0 || k >= num_labels) {
      throw DataError("document " + doc.doc_id + " has label id out of range");
    }
  }
  LabelMask mask;
  mask.r.assign(static_cast<std::size_t>(num_labels), 0);
  if (mode == MaskMode::test) {
    std::fill(mask.r.begin(), mask.r.end(), 1);
    mask.ones = num_labels;
  } else {
    for (int k : doc.labels) mask.r[static_cast<std::size_t>(k)] = 1;
    mask.ones = static_cast<int>(doc.labels.size());
  }
  return mask;
}

std::vector<LabelMask> make_masks(const Corpus& corpus, MaskMode mode) {
  std::vector<LabelMask> masks;
  masks.reserve(corpus.documents.size());
  for (const auto& doc : corpus.documents) {
    masks.push_back(make_label_mask(doc, corpus.labels.size(), mode));
  }
  return masks;
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats s;
  s.docs = corpus.num_docs();
  s.vocab = corpus.vocabulary.size();
  s.labels = corpus.labels.size();
  s.tokens = corpus.total_words();
  long long label_total = 0;
  for (const auto& d : corpus.documents) label_total += d.labels.size();
  s.labels_per_doc = s.docs > 0 ? static_cast<double>(label_total) / s.docs : 0.0;
  return s;
}

}  // namespace dpmrm
