#include "dpmrm/snapshot.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dpmrm/common.hpp"

namespace dpmrm {

using nlohmann::json;

Snapshot snapshot_from_state(const ModelState& state, int iteration) {
  if (state.has_frozen_base()) {
    throw InvariantError("snapshot_from_state: fold-in states are not snapshot sources");
  }
  const Corpus& corpus = state.corpus();
  Snapshot snap;
  snap.format = kDpmrmSnapshotFormat;
  snap.iteration = iteration;
  snap.hypers = state.hypers();
  snap.vocab = corpus.vocabulary.id_to_token;
  snap.labels = corpus.labels.id_to_label;

  snap.docs.resize(corpus.documents.size());
  for (int j = 0; j < corpus.num_docs(); ++j) {
    const DocState& doc = state.doc(j);
    SnapshotDoc& out = snap.docs[static_cast<std::size_t>(j)];
    out.doc_id = corpus.documents[static_cast<std::size_t>(j)].doc_id;
    std::vector<int> compact(doc.tables.size(), -1);
    for (std::size_t t = 0; t < doc.tables.size(); ++t) {
      if (doc.tables[t].live()) {
        compact[t] = static_cast<int>(out.table_dish.size());
        out.table_dish.push_back(doc.tables[t].dish);
      }
    }
    out.table_of_word.reserve(doc.table_of_word.size());
    for (int t : doc.table_of_word) {
      if (t < 0) throw InvariantError("snapshot_from_state: detached word");
      out.table_of_word.push_back(compact[static_cast<std::size_t>(t)]);
    }
  }

  for (int k = 0; k < state.num_labels(); ++k) {
    for (int l : state.live_dish_ids(k)) {
      const Dish& d = state.dish(k, l);
      SnapshotDish out;
      out.id = DishId{k, l};
      out.tables = d.tables;
      out.total = d.total;
      for (int w = 0; w < state.vocab_size(); ++w) {
        if (d.word_count[static_cast<std::size_t>(w)] > 0) {
          out.counts.emplace_back(w, d.word_count[static_cast<std::size_t>(w)]);
        }
      }
      snap.dishes.push_back(std::move(out));
    }
  }
  return snap;
}

namespace {

json hypers_to_json(const Hyperparameters& h) {
  json j;
  j["alpha"] = h.alpha;
  j["gamma"] = h.gamma;
  j["eta"] = h.eta;
  j["beta"] = h.beta;
  j["alpha_prior"] = {h.alpha_prior.shape, h.alpha_prior.rate};
  j["gamma_prior"] = {h.gamma_prior.shape, h.gamma_prior.rate};
  return j;
}

Hyperparameters hypers_from_json(const json& j) {
  Hyperparameters h;
  h.alpha = j.at("alpha").get<double>();
  h.gamma = j.at("gamma").get<std::vector<double>>();
  h.eta = j.at("eta").get<double>();
  h.beta = j.at("beta").get<double>();
  if (j.contains("alpha_prior")) {
    h.alpha_prior = {j["alpha_prior"][0].get<double>(),
                     j["alpha_prior"][1].get<double>()};
  }
  if (j.contains("gamma_prior")) {
    h.gamma_prior = {j["gamma_prior"][0].get<double>(),
                     j["gamma_prior"][1].get<double>()};
  }
  return h;
}

json pairs_to_json(const std::vector<std::pair<int, int>>& pairs) {
  json arr = json::array();
  for (auto [a, b] : pairs) arr.push_back({a, b});
  return arr;
}

std::vector<std::pair<int, int>> pairs_from_json(const json& arr) {
  std::vector<std::pair<int, int>> out;
  for (const auto& p : arr) out.emplace_back(p[0].get<int>(), p[1].get<int>());
  return out;
}

}  // namespace

std::string snapshot_to_json(const Snapshot& snap) {
  json j;
  j["format"] = snap.format;
  j["iteration"] = snap.iteration;
  j["hyperparameters"] = hypers_to_json(snap.hypers);
  j["vocabulary"] = snap.vocab;
  j["labels"] = snap.labels;

  json docs = json::array();
  for (const auto& d : snap.docs) {
    json jd;
    jd["id"] = d.doc_id;
    if (snap.format == kDpmrmSnapshotFormat) {
      json tables = json::array();
      for (const DishId& id : d.table_dish) tables.push_back({id.label, id.index});
      jd["tables"] = std::move(tables);
      jd["t"] = d.table_of_word;
    } else {
      jd["z"] = d.topic_of_word;
    }
    docs.push_back(std::move(jd));
  }
  j["documents"] = std::move(docs);

  if (snap.format == kDpmrmSnapshotFormat) {
    json dishes = json::array();
    for (const auto& d : snap.dishes) {
      json jd;
      jd["k"] = d.id.label;
      jd["l"] = d.id.index;
      jd["m"] = d.tables;
      jd["total"] = d.total;
      jd["counts"] = pairs_to_json(d.counts);
      dishes.push_back(std::move(jd));
    }
    j["dishes"] = std::move(dishes);
  } else {
    json topics = json::array();
    for (std::size_t k = 0; k < snap.topic_counts.size(); ++k) {
      json jt;
      jt["k"] = k;
      jt["total"] = snap.topic_totals[k];
      jt["counts"] = pairs_to_json(snap.topic_counts[k]);
      topics.push_back(std::move(jt));
    }
    j["topics"] = std::move(topics);
  }
  return j.dump();
}

Snapshot snapshot_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("snapshot: invalid JSON (") + e.what() + ")");
  }
  Snapshot snap;
  snap.format = j.at("format").get<std::string>();
  if (snap.format != kDpmrmSnapshotFormat && snap.format != kLldaSnapshotFormat) {
    throw DataError("snapshot: unknown format \"" + snap.format + "\"");
  }
  snap.iteration = j.value("iteration", 0);
  snap.hypers = hypers_from_json(j.at("hyperparameters"));
  snap.vocab = j.at("vocabulary").get<std::vector<std::string>>();
  snap.labels = j.at("labels").get<std::vector<std::string>>();

  for (const auto& jd : j.at("documents")) {
    SnapshotDoc d;
    d.doc_id = jd.at("id").get<std::string>();
    if (snap.format == kDpmrmSnapshotFormat) {
      for (const auto& t : jd.at("tables")) {
        d.table_dish.push_back(DishId{t[0].get<int>(), t[1].get<int>()});
      }
      d.table_of_word = jd.at("t").get<std::vector<int>>();
    } else {
      d.topic_of_word = jd.at("z").get<std::vector<int>>();
    }
    snap.docs.push_back(std::move(d));
  }

  if (snap.format == kDpmrmSnapshotFormat) {
    for (const auto& jd : j.at("dishes")) {
      SnapshotDish d;
      d.id = DishId{jd.at("k").get<int>(), jd.at("l").get<int>()};
      d.tables = jd.at("m").get<int>();
      d.total = jd.at("total").get<long long>();
      d.counts = pairs_from_json(jd.at("counts"));
      snap.dishes.push_back(std::move(d));
    }
  } else {
    const auto& topics = j.at("topics");
    snap.topic_counts.resize(topics.size());
    snap.topic_totals.resize(topics.size());
    for (const auto& jt : topics) {
      const auto k = jt.at("k").get<std::size_t>();
      snap.topic_counts.at(k) = pairs_from_json(jt.at("counts"));
      snap.topic_totals.at(k) = jt.at("total").get<long long>();
    }
  }
  return snap;
}

void save_snapshot(const Snapshot& snap, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write snapshot file: " + path);
  out << snapshot_to_json(snap) << "\n";
}

Snapshot load_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open snapshot file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return snapshot_from_json(buf.str());
}

ModelState make_fold_in_state(const Corpus& test, const Snapshot& snapshot) {
  if (snapshot.format != kDpmrmSnapshotFormat) {
    throw DataError("fold-in requires a dpmrm snapshot");
  }
  if (snapshot.vocab != test.vocabulary.id_to_token) {
    throw DataError("snapshot/corpus vocabulary mismatch");
  }
  if (snapshot.labels != test.labels.id_to_label) {
    throw DataError("snapshot/corpus label map mismatch");
  }
  ModelState state(test, make_masks(test, MaskMode::test), snapshot.hypers);
  // Snapshot dishes become frozen base dishes in snapshot order.
  for (const auto& d : snapshot.dishes) {
    state.add_base_dish(d.id.label, d.tables, d.counts);
  }
  return state;
}

}  // namespace dpmrm
