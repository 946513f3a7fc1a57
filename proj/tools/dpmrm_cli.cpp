#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dpmrm/common.hpp"
#include "dpmrm/corpus.hpp"
#include "dpmrm/ddcrp.hpp"
#include "dpmrm/eval.hpp"
#include "dpmrm/llda.hpp"
#include "dpmrm/sampler.hpp"
#include "dpmrm/snapshot.hpp"
#include "dpmrm/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dpmrm;

namespace {

struct RunConfig {
  std::string model = "dpmrm";
  std::string corpus_path;
  std::string groups_path;
  std::string out;
  std::uint64_t seed = 1;
  int chains = 1;
  int iterations = 5000;
  int burn_in = 3000;
  int sample_gap = 100;
  bool sample_hypers = true;
  double alpha = 1.0;
  std::vector<double> gamma_list;  // empty -> filled with gamma_scalar
  double gamma_scalar = 1.0;
  double eta = 1.0;
  double beta = 0.5;
  GammaPrior alpha_prior{1.0, 1.0};
  GammaPrior gamma_prior{1.0, 1.0};
  double llda_alpha = -1.0;  // <0 -> 50/K
  double beta_texture = 0.5;
  double beta_color = 0.5;
  int window = 2;
  std::vector<double> cuts = kDefaultCuts;
  double holdout_fraction = 0.0;  // >0: train on observed words only
  int predict_sweeps = 30;
  int min_token_count = 1;

  // simulate parameters
  int sim_labels = 5;
  int sim_vocab = 50;
  int sim_docs = 100;
  int sim_words_per_doc = 40;
  int sim_labels_per_doc = 1;
  int sim_label_truncation = 50;
  int sim_doc_truncation = 50;

  void validate_chain() const {
    if (iterations < 1) throw ConfigError("iterations: must be positive");
    if (burn_in < 0) throw ConfigError("burn_in: must be nonnegative");
    if (burn_in >= iterations) {
      throw ConfigError("burn_in: must be smaller than iterations");
    }
    if (sample_gap < 1) throw ConfigError("sample_gap: must be >= 1");
    if (chains < 1) throw ConfigError("chains: must be >= 1");
    if (!std::is_sorted(cuts.begin(), cuts.end())) {
      throw ConfigError("cuts: must be sorted ascending");
    }
  }

  Hyperparameters hypers(int num_labels) const {
    Hyperparameters h;
    h.alpha = alpha;
    h.eta = eta;
    h.beta = beta;
    h.alpha_prior = alpha_prior;
    h.gamma_prior = gamma_prior;
    if (gamma_list.empty()) {
      h.gamma.assign(static_cast<std::size_t>(num_labels), gamma_scalar);
    } else {
      h.gamma = gamma_list;
    }
    return h;
  }
};

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file: invalid JSON (" + std::string(e.what()) + ")");
  }
  auto get = [&j](const char* key, auto& slot) {
    if (j.contains(key)) slot = j[key].get<std::decay_t<decltype(slot)>>();
  };
  get("model", cfg.model);
  get("corpus", cfg.corpus_path);
  get("groups", cfg.groups_path);
  get("out", cfg.out);
  get("seed", cfg.seed);
  get("chains", cfg.chains);
  get("iterations", cfg.iterations);
  get("burn_in", cfg.burn_in);
  get("sample_gap", cfg.sample_gap);
  get("sample_hypers", cfg.sample_hypers);
  get("alpha", cfg.alpha);
  get("eta", cfg.eta);
  get("beta", cfg.beta);
  get("llda_alpha", cfg.llda_alpha);
  get("beta_texture", cfg.beta_texture);
  get("beta_color", cfg.beta_color);
  get("window", cfg.window);
  get("cuts", cfg.cuts);
  get("holdout_fraction", cfg.holdout_fraction);
  get("predict_sweeps", cfg.predict_sweeps);
  get("min_token_count", cfg.min_token_count);
  if (j.contains("gamma")) {
    if (j["gamma"].is_array()) {
      cfg.gamma_list = j["gamma"].get<std::vector<double>>();
    } else {
      cfg.gamma_scalar = j["gamma"].get<double>();
    }
  }
  if (j.contains("alpha_prior")) {
    cfg.alpha_prior = {j["alpha_prior"][0].get<double>(),
                       j["alpha_prior"][1].get<double>()};
  }
  if (j.contains("gamma_prior")) {
    cfg.gamma_prior = {j["gamma_prior"][0].get<double>(),
                       j["gamma_prior"][1].get<double>()};
  }
  if (j.contains("sim")) {
    const json& s = j["sim"];
    auto gets = [&s](const char* key, int& slot) {
      if (s.contains(key)) slot = s[key].get<int>();
    };
    gets("labels", cfg.sim_labels);
    gets("vocab", cfg.sim_vocab);
    gets("docs", cfg.sim_docs);
    gets("words_per_doc", cfg.sim_words_per_doc);
    gets("labels_per_doc", cfg.sim_labels_per_doc);
    gets("label_truncation", cfg.sim_label_truncation);
    gets("doc_truncation", cfg.sim_doc_truncation);
  }
}

ChainConfig chain_config(const RunConfig& cfg, std::uint64_t seed) {
  ChainConfig c;
  c.iterations = cfg.iterations;
  c.burn_in = cfg.burn_in;
  c.sample_gap = cfg.sample_gap;
  c.sample_hypers = cfg.sample_hypers;
  c.seed = seed;
  return c;
}

void write_trace(const ChainResult& result, int num_labels, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trace file: " + path.string());
  out << "iteration,log_joint,alpha";
  for (int k = 0; k < num_labels; ++k) out << ",gamma_" << k;
  out << ",table_count,dish_count\n";
  char buf[64];
  for (const auto& row : result.trace) {
    out << row.iteration;
    std::snprintf(buf, sizeof(buf), ",%.8f,%.8f", row.log_joint, row.alpha);
    out << buf;
    for (int k = 0; k < num_labels; ++k) {
      const double g = k < static_cast<int>(row.gamma.size())
                           ? row.gamma[static_cast<std::size_t>(k)]
                           : 0.0;
      std::snprintf(buf, sizeof(buf), ",%.8f", g);
      out << buf;
    }
    out << ',' << row.tables << ',' << row.dishes << "\n";
  }
}

void write_chain_outputs(const ChainResult& result, int num_labels,
                         const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t s = 0; s < result.snapshots.size(); ++s) {
    char name[48];
    std::snprintf(name, sizeof(name), "snapshot-%04zu.json", s);
    save_snapshot(result.snapshots[s], (dir / name).string());
  }
  write_trace(result, num_labels, dir / "trace.csv");
}

std::vector<Snapshot> load_snapshot_dir(const std::string& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) throw DataError("not a snapshot directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("snapshot-", 0) == 0 && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no snapshot-*.json files in " + dir);
  std::vector<Snapshot> snaps;
  snaps.reserve(files.size());
  for (const auto& f : files) snaps.push_back(load_snapshot(f.string()));
  return snaps;
}

int cmd_simulate(const RunConfig& cfg) {
  if (cfg.out.empty()) throw ConfigError("out: output directory required");
  Hyperparameters h = cfg.hypers(cfg.sim_labels);
  SynthTruth truth = generate_corpus(cfg.sim_labels, cfg.sim_vocab, cfg.sim_docs,
                                     cfg.sim_words_per_doc, cfg.sim_labels_per_doc,
                                     h, cfg.sim_label_truncation,
                                     cfg.sim_doc_truncation, cfg.seed);
  fs::create_directories(cfg.out);
  const fs::path out(cfg.out);
  save_corpus(truth.corpus, (out / "corpus.jsonl").string());
  std::ofstream tf(out / "truth.jsonl");
  if (!tf) throw DataError("cannot write truth file");
  for (std::size_t j = 0; j < truth.word_dish.size(); ++j) {
    json line;
    line["id"] = truth.corpus.documents[j].doc_id;
    json dishes = json::array();
    for (const DishId& d : truth.word_dish[j]) dishes.push_back({d.label, d.index});
    line["dish"] = std::move(dishes);
    tf << line.dump() << "\n";
  }
  const CorpusStats stats = corpus_stats(truth.corpus);
  std::cout << "simulated " << stats.docs << " docs, vocab " << stats.vocab
            << ", labels " << stats.labels << ", tokens " << stats.tokens << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  if (cfg.corpus_path.empty()) throw ConfigError("corpus: input path required");
  if (cfg.out.empty()) throw ConfigError("out: output directory required");
  cfg.validate_chain();
  Corpus corpus = load_corpus(cfg.corpus_path, cfg.min_token_count);
  if (cfg.holdout_fraction > 0.0) {
    auto [observed, heldout] = holdout_words(corpus, cfg.holdout_fraction, cfg.seed);
    fs::create_directories(cfg.out);
    save_corpus(heldout, (fs::path(cfg.out) / "heldout.jsonl").string());
    save_corpus(observed, (fs::path(cfg.out) / "observed.jsonl").string());
    corpus = std::move(observed);
    std::cout << "holding out " << heldout.total_words() << " words ("
              << cfg.holdout_fraction << " per document)\n";
  }
  const auto masks = make_masks(corpus, MaskMode::training);
  const CorpusStats stats = corpus_stats(corpus);
  std::cout << "corpus: " << stats.docs << " docs, vocab " << stats.vocab
            << ", labels " << stats.labels << ", labels/doc " << stats.labels_per_doc
            << "\n";

  for (int c = 0; c < cfg.chains; ++c) {
    const fs::path dir = cfg.chains == 1
                             ? fs::path(cfg.out)
                             : fs::path(cfg.out) / ("chain-" + std::to_string(c));
    ChainResult result;
    if (cfg.model == "dpmrm") {
      result = run_chain(corpus, masks, cfg.hypers(corpus.labels.size()),
                         chain_config(cfg, cfg.seed + c));
    } else if (cfg.model == "llda") {
      LldaHyperparameters lh = LldaHyperparameters::defaults(corpus.labels.size());
      if (cfg.llda_alpha > 0.0) lh.alpha = cfg.llda_alpha;
      lh.beta = cfg.beta;
      result = llda_run_chain(corpus, masks, lh, chain_config(cfg, cfg.seed + c));
    } else {
      throw ConfigError("model: train supports dpmrm or llda");
    }
    write_chain_outputs(result, corpus.labels.size(), dir);
    std::cout << "chain " << c << ": " << result.snapshots.size()
              << " snapshots -> " << dir.string() << "\n";
    for (int k = 0; k < corpus.labels.size(); ++k) {
      if (cfg.model == "dpmrm") {
        std::cout << "  label " << corpus.labels.id_to_label[k] << ": tables "
                  << result.final_label_tables[static_cast<std::size_t>(k)]
                  << ", dishes "
                  << result.final_label_dishes[static_cast<std::size_t>(k)] << "\n";
      } else {
        std::cout << "  label " << corpus.labels.id_to_label[k] << ": words "
                  << result.final_label_tables[static_cast<std::size_t>(k)] << "\n";
      }
    }
  }
  return 0;
}

void write_scores(const LabelScores& scores, const Corpus& test,
                  const std::string& path) {
  json j;
  json ids = json::array();
  for (const auto& d : test.documents) ids.push_back(d.doc_id);
  j["docs"] = std::move(ids);
  j["labels"] = test.labels.id_to_label;
  j["scores"] = scores.scores;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write scores file: " + path);
  out << j.dump() << "\n";
}

int cmd_predict(const RunConfig& cfg, const std::string& snapshot_dir) {
  if (cfg.corpus_path.empty()) throw ConfigError("corpus: test corpus required");
  if (cfg.out.empty()) throw ConfigError("out: output file required");
  std::vector<Snapshot> snaps = load_snapshot_dir(snapshot_dir);
  const Corpus test = align_corpus(load_corpus(cfg.corpus_path, 1),
                                   snaps.front().vocab, snaps.front().labels);
  std::vector<std::vector<std::vector<int>>> assignments;
  if (snaps.front().format == kDpmrmSnapshotFormat) {
    assignments = fold_in_assignments(snaps, test, cfg.predict_sweeps, cfg.seed);
  } else {
    assignments = llda_fold_in_assignments(snaps, test, cfg.predict_sweeps, cfg.seed);
  }
  const LabelScores scores = label_scores(test.labels.size(), assignments);
  write_scores(scores, test, cfg.out);
  std::cout << "scored " << test.num_docs() << " docs with " << snaps.size()
            << " posterior samples -> " << cfg.out << "\n";
  return 0;
}

LabelScores load_scores(const std::string& path, std::vector<std::string>& doc_ids,
                        std::vector<std::string>& labels) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scores file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("scores file: invalid JSON (" + std::string(e.what()) + ")");
  }
  doc_ids = j.at("docs").get<std::vector<std::string>>();
  labels = j.at("labels").get<std::vector<std::string>>();
  LabelScores s;
  s.scores = j.at("scores").get<std::vector<std::vector<double>>>();
  if (s.scores.size() != doc_ids.size()) {
    throw DataError("scores file: docs/scores size mismatch");
  }
  return s;
}

int cmd_evaluate_f1(const RunConfig& cfg, const std::vector<std::string>& score_files,
                    const std::string& gold_path, const std::string& report_path) {
  const Corpus gold_raw = load_corpus(gold_path, 1);
  int K = 0;

  // Per run and per cut, classify and score.
  std::vector<std::vector<F1Report>> reports;  // [run][cut]
  for (const auto& file : score_files) {
    std::vector<std::string> doc_ids, labels;
    const LabelScores scores = load_scores(file, doc_ids, labels);
    K = static_cast<int>(labels.size());
    // Translate gold label sets into the scores' label space.
    const Corpus gold = align_corpus(gold_raw, gold_raw.vocabulary.id_to_token, labels);
    std::map<std::string, const Document*> gold_by_id;
    for (const auto& d : gold.documents) gold_by_id[d.doc_id] = &d;
    std::vector<std::vector<int>> gold_sets;
    for (const auto& id : doc_ids) {
      auto it = gold_by_id.find(id);
      if (it == gold_by_id.end()) {
        throw DataError("scored document missing from gold corpus: " + id);
      }
      gold_sets.push_back(it->second->labels);
    }
    std::vector<F1Report> run_reports;
    for (double cut : cfg.cuts) {
      std::vector<std::vector<int>> predicted;
      predicted.reserve(scores.scores.size());
      for (const auto& row : scores.scores) predicted.push_back(classify_multi(row, cut));
      F1Report r = micro_macro_f1(predicted, gold_sets, K);
      r.cut = cut;
      run_reports.push_back(std::move(r));
    }
    reports.push_back(std::move(run_reports));
  }

  // Mean and sd over runs, Table-3-like layout.
  const std::size_t runs = reports.size();
  auto mean_sd = [runs](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= runs;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    const double sd = runs > 1 ? std::sqrt(var / (runs - 1)) : 0.0;
    return std::pair<double, double>(mean, sd);
  };

  json out_rows = json::array();
  std::printf("%-8s%-22s%-22s\n", "Cut", "Micro Average", "Macro Average");
  for (std::size_t ci = 0; ci < cfg.cuts.size(); ++ci) {
    std::vector<double> micro, macro;
    for (std::size_t r = 0; r < runs; ++r) {
      micro.push_back(reports[r][ci].micro_f1);
      macro.push_back(reports[r][ci].macro_f1);
    }
    const auto [mi, mi_sd] = mean_sd(micro);
    const auto [ma, ma_sd] = mean_sd(macro);
    char micro_s[40], macro_s[40];
    if (runs > 1) {
      std::snprintf(micro_s, sizeof(micro_s), "%.3f +/- %.3f", mi, mi_sd);
      std::snprintf(macro_s, sizeof(macro_s), "%.3f +/- %.3f", ma, ma_sd);
    } else {
      std::snprintf(micro_s, sizeof(micro_s), "%.3f", mi);
      std::snprintf(macro_s, sizeof(macro_s), "%.3f", ma);
    }
    std::printf("%-8.3f%-22s%-22s\n", cfg.cuts[ci], micro_s, macro_s);
    json row;
    row["cut"] = cfg.cuts[ci];
    row["micro_f1_mean"] = mi;
    row["micro_f1_sd"] = mi_sd;
    row["macro_f1_mean"] = ma;
    row["macro_f1_sd"] = ma_sd;
    row["micro_f1_runs"] = micro;
    row["macro_f1_runs"] = macro;
    out_rows.push_back(std::move(row));
  }
  if (!report_path.empty()) {
    json j;
    j["runs"] = runs;
    j["rows"] = std::move(out_rows);
    std::ofstream out(report_path);
    if (!out) throw DataError("cannot write report file: " + report_path);
    out << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_evaluate_heldout(const std::string& snapshot_dir,
                         const std::string& heldout_path,
                         const std::string& report_path) {
  std::vector<Snapshot> snaps = load_snapshot_dir(snapshot_dir);
  const Corpus heldout = align_corpus(load_corpus(heldout_path, 1),
                                      snaps.front().vocab, snaps.front().labels);
  double loglik;
  if (snaps.front().format == kDpmrmSnapshotFormat) {
    loglik = heldout_loglik_dpmrm(snaps, heldout);
  } else {
    loglik = heldout_loglik_llda(snaps, heldout);
  }
  std::printf("per-word heldout log likelihood: %.6f\n", loglik);
  if (!report_path.empty()) {
    json j;
    j["per_word_log_likelihood"] = loglik;
    j["samples"] = snaps.size();
    j["heldout_words"] = heldout.total_words();
    std::ofstream out(report_path);
    if (!out) throw DataError("cannot write report file: " + report_path);
    out << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_segment(const RunConfig& cfg) {
  if (cfg.groups_path.empty()) throw ConfigError("groups: input path required");
  if (cfg.out.empty()) throw ConfigError("out: output file required");
  cfg.validate_chain();
  const GroupCollection data = load_groups(cfg.groups_path);
  DdcrpHypers h = DdcrpHypers::defaults(data.labels.size());
  h.alpha = cfg.alpha;
  h.eta = cfg.eta;
  h.beta_texture = cfg.beta_texture;
  h.beta_color = cfg.beta_color;
  h.window = cfg.window;
  h.alpha_prior = cfg.alpha_prior;
  h.gamma_prior = cfg.gamma_prior;
  if (!cfg.gamma_list.empty()) {
    h.gamma = cfg.gamma_list;
  } else {
    h.gamma.assign(static_cast<std::size_t>(data.labels.size()), cfg.gamma_scalar);
  }
  const SegmentResult result = segment(data, h, chain_config(cfg, cfg.seed));
  save_segmentation(result, cfg.out);
  for (const auto& g : result.final_sample) {
    int comps = 0;
    for (int c : g.assignment) comps = std::max(comps, c + 1);
    std::cout << "group " << g.group_id << ": " << comps << " segments\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DP-MRM: nonparametric topic modeling for labeled corpora"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;
  bool no_hypers_flag = false;
  // Shared flags, attached per subcommand so they appear in each --help.
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (flags override it)");
    sub->add_option("--seed", cfg.seed, "RNG seed");
    sub->add_option("--out", cfg.out, "output directory or file");
    sub->add_option("--model", cfg.model, "dpmrm | llda | ddcrp-mrm")
        ->check(CLI::IsMember({"dpmrm", "llda", "ddcrp-mrm"}));
    sub->add_option("--iterations", cfg.iterations, "Gibbs sweeps");
    sub->add_option("--burn-in", cfg.burn_in, "burn-in sweeps");
    sub->add_option("--sample-gap", cfg.sample_gap, "sweeps between snapshots");
    sub->add_flag("--no-hypers", no_hypers_flag, "disable hyperparameter resampling");
    sub->add_option("--alpha", cfg.alpha, "DP concentration alpha");
    sub->add_option("--gamma", cfg.gamma_scalar, "per-label concentration");
    sub->add_option("--eta", cfg.eta, "label-mixing weight eta");
    sub->add_option("--beta", cfg.beta, "topic-word Dirichlet weight");
    sub->add_option("--chains", cfg.chains, "independent chains");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic labeled corpus");
  add_common(simulate);
  simulate->add_option("--labels", cfg.sim_labels, "number of labels");
  simulate->add_option("--vocab", cfg.sim_vocab, "vocabulary size");
  simulate->add_option("--docs", cfg.sim_docs, "number of documents");
  simulate->add_option("--words-per-doc", cfg.sim_words_per_doc, "words per document");
  simulate->add_option("--labels-per-doc", cfg.sim_labels_per_doc, "labels per document");

  CLI::App* train = app.add_subcommand("train", "run collapsed Gibbs chains");
  add_common(train);
  train->add_option("--corpus", cfg.corpus_path, "training corpus (JSON-lines)");
  train->add_option("--min-count", cfg.min_token_count, "vocabulary min token count");
  train->add_option("--holdout", cfg.holdout_fraction,
                    "per-document word fraction to hold out before training");
  train->add_option("--llda-alpha", cfg.llda_alpha, "L-LDA document Dirichlet weight");

  CLI::App* predict = app.add_subcommand("predict", "score test documents by fold-in");
  add_common(predict);
  std::string snapshot_dir;
  predict->add_option("--snapshots", snapshot_dir, "directory of snapshot-*.json");
  predict->add_option("--corpus", cfg.corpus_path, "test corpus (JSON-lines)");
  predict->add_option("--predict-sweeps", cfg.predict_sweeps, "fold-in sweeps per sample");

  CLI::App* evaluate = app.add_subcommand("evaluate", "F1 tables and heldout likelihood");
  add_common(evaluate);
  std::vector<std::string> score_files;
  std::string gold_path, heldout_path, eval_snapshot_dir, report_path;
  std::vector<double> cuts_flag;
  evaluate->add_option("--scores", score_files, "scores file(s), one per run");
  evaluate->add_option("--gold", gold_path, "gold corpus with true label sets");
  evaluate->add_option("--snapshots", eval_snapshot_dir, "snapshots for heldout mode");
  evaluate->add_option("--heldout", heldout_path, "heldout corpus (JSON-lines)");
  evaluate->add_option("--cuts", cuts_flag, "threshold cuts");
  evaluate->add_option("--report", report_path, "write JSON report here");

  CLI::App* seg = app.add_subcommand("segment", "ddCRP-MRM image segmentation");
  add_common(seg);
  seg->add_option("--groups", cfg.groups_path, "group file (JSON-lines)");
  seg->add_option("--window", cfg.window, "hop-distance window size");
  seg->add_option("--beta-texture", cfg.beta_texture, "texture Dirichlet weight");
  seg->add_option("--beta-color", cfg.beta_color, "color Dirichlet weight");

  // Parse once to pick up --config, then (when a file is given) load it and
  // re-parse so explicitly passed flags win over file values.
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (!config_path.empty()) {
      RunConfig from_file;
      apply_config_file(from_file, config_path);
      cfg = from_file;  // option bindings still point at cfg
      try {
        app.clear();
        app.parse(argc, argv);
      } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
      }
    }
    if (no_hypers_flag) cfg.sample_hypers = false;
    if (!cuts_flag.empty()) cfg.cuts = cuts_flag;

    if (simulate->parsed()) return cmd_simulate(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (predict->parsed()) return cmd_predict(cfg, snapshot_dir);
    if (evaluate->parsed()) {
      if (!score_files.empty()) {
        if (gold_path.empty()) throw ConfigError("gold: required with --scores");
        return cmd_evaluate_f1(cfg, score_files, gold_path, report_path);
      }
      if (!eval_snapshot_dir.empty() && !heldout_path.empty()) {
        return cmd_evaluate_heldout(eval_snapshot_dir, heldout_path, report_path);
      }
      throw ConfigError("evaluate needs --scores/--gold or --snapshots/--heldout");
    }
    if (seg->parsed()) return cmd_segment(cfg);
    throw ConfigError("no subcommand given");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const InvariantError& e) {
    std::cerr << "internal invariant violation: " << e.what() << "\n";
    return 3;
  } catch (const std::logic_error& e) {
    std::cerr << "internal invariant violation: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  }
}
