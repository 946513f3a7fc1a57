#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dpmrm/common.hpp"
#include "dpmrm/corpus.hpp"
#include "dpmrm/ddcrp.hpp"
#include "dpmrm/eval.hpp"
#include "dpmrm/llda.hpp"
#include "dpmrm/sampler.hpp"
#include "dpmrm/snapshot.hpp"
#include "dpmrm/synth.hpp"

namespace py = pybind11;
using namespace dpmrm;

PYBIND11_MODULE(_core, m) {
  m.doc() = "DP-MRM topic modeling for labeled corpora";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);

  py::class_<Vocabulary>(m, "Vocabulary")
      .def_readonly("id_to_token", &Vocabulary::id_to_token)
      .def("size", &Vocabulary::size)
      .def("find", &Vocabulary::find);

  py::class_<LabelSet>(m, "LabelSet")
      .def_readonly("id_to_label", &LabelSet::id_to_label)
      .def("size", &LabelSet::size)
      .def("find", &LabelSet::find);

  py::class_<Document>(m, "Document")
      .def(py::init<>())
      .def_readwrite("doc_id", &Document::doc_id)
      .def_readwrite("words", &Document::words)
      .def_readwrite("labels", &Document::labels)
      .def("length", &Document::length);

  py::class_<Corpus>(m, "Corpus")
      .def(py::init<>())
      .def_readwrite("documents", &Corpus::documents)
      .def_readonly("vocabulary", &Corpus::vocabulary)
      .def_readonly("labels", &Corpus::labels)
      .def("num_docs", &Corpus::num_docs)
      .def("total_words", &Corpus::total_words);

  py::class_<LabelMask>(m, "LabelMask")
      .def_readonly("r", &LabelMask::r)
      .def_readonly("ones", &LabelMask::ones)
      .def("allowed", &LabelMask::allowed);

  py::enum_<MaskMode>(m, "MaskMode")
      .value("training", MaskMode::training)
      .value("test", MaskMode::test);

  py::class_<CorpusStats>(m, "CorpusStats")
      .def_readonly("docs", &CorpusStats::docs)
      .def_readonly("vocab", &CorpusStats::vocab)
      .def_readonly("labels", &CorpusStats::labels)
      .def_readonly("tokens", &CorpusStats::tokens)
      .def_readonly("labels_per_doc", &CorpusStats::labels_per_doc);

  m.def("load_corpus", &load_corpus, py::arg("path"), py::arg("min_token_count") = 1);
  m.def("save_corpus", &save_corpus);
  m.def("split_train_test", &split_train_test);
  m.def("holdout_words", &holdout_words);
  m.def("make_label_mask", &make_label_mask);
  m.def("align_corpus", &align_corpus);
  m.def("make_masks", &make_masks);
  m.def("corpus_stats", &corpus_stats);

  py::class_<GammaPrior>(m, "GammaPrior")
      .def(py::init<>())
      .def(py::init([](double shape, double rate) {
        return GammaPrior{shape, rate};
      }))
      .def_readwrite("shape", &GammaPrior::shape)
      .def_readwrite("rate", &GammaPrior::rate);

  py::class_<Hyperparameters>(m, "Hyperparameters")
      .def(py::init<>())
      .def_static("defaults", &Hyperparameters::defaults)
      .def_readwrite("alpha", &Hyperparameters::alpha)
      .def_readwrite("gamma", &Hyperparameters::gamma)
      .def_readwrite("eta", &Hyperparameters::eta)
      .def_readwrite("beta", &Hyperparameters::beta)
      .def_readwrite("alpha_prior", &Hyperparameters::alpha_prior)
      .def_readwrite("gamma_prior", &Hyperparameters::gamma_prior);

  py::class_<ChainConfig>(m, "ChainConfig")
      .def(py::init<>())
      .def_readwrite("iterations", &ChainConfig::iterations)
      .def_readwrite("burn_in", &ChainConfig::burn_in)
      .def_readwrite("sample_gap", &ChainConfig::sample_gap)
      .def_readwrite("sample_hypers", &ChainConfig::sample_hypers)
      .def_readwrite("seed", &ChainConfig::seed)
      .def("expected_snapshots", &ChainConfig::expected_snapshots);

  py::class_<Snapshot>(m, "Snapshot")
      .def_readonly("format", &Snapshot::format)
      .def_readonly("iteration", &Snapshot::iteration)
      .def_readonly("vocab", &Snapshot::vocab)
      .def_readonly("labels", &Snapshot::labels)
      .def("to_json", &snapshot_to_json);

  py::class_<TraceRow>(m, "TraceRow")
      .def_readonly("iteration", &TraceRow::iteration)
      .def_readonly("log_joint", &TraceRow::log_joint)
      .def_readonly("alpha", &TraceRow::alpha)
      .def_readonly("gamma", &TraceRow::gamma)
      .def_readonly("tables", &TraceRow::tables)
      .def_readonly("dishes", &TraceRow::dishes);

  py::class_<ChainResult>(m, "ChainResult")
      .def_readonly("snapshots", &ChainResult::snapshots)
      .def_readonly("trace", &ChainResult::trace)
      .def_readonly("final_label_tables", &ChainResult::final_label_tables)
      .def_readonly("final_label_dishes", &ChainResult::final_label_dishes);

  m.def("run_chain", &run_chain, py::arg("corpus"), py::arg("masks"),
        py::arg("hypers"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("save_snapshot", &save_snapshot);
  m.def("load_snapshot", &load_snapshot);
  m.def("snapshot_from_json", &snapshot_from_json);
  m.def("fold_in_assignments", &fold_in_assignments, py::arg("snapshots"),
        py::arg("test"), py::arg("sweeps"), py::arg("seed"),
        py::call_guard<py::gil_scoped_release>());

  py::class_<LldaHyperparameters>(m, "LldaHyperparameters")
      .def(py::init<>())
      .def_static("defaults", &LldaHyperparameters::defaults)
      .def_readwrite("alpha", &LldaHyperparameters::alpha)
      .def_readwrite("beta", &LldaHyperparameters::beta);

  m.def("llda_run_chain", &llda_run_chain, py::arg("corpus"), py::arg("masks"),
        py::arg("hypers"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("llda_fold_in_assignments", &llda_fold_in_assignments,
        py::arg("snapshots"), py::arg("test"), py::arg("sweeps"), py::arg("seed"),
        py::call_guard<py::gil_scoped_release>());

  py::class_<LabelScores>(m, "LabelScores")
      .def_readonly("scores", &LabelScores::scores);

  py::class_<PerLabelF1>(m, "PerLabelF1")
      .def_readonly("tp", &PerLabelF1::tp)
      .def_readonly("fp", &PerLabelF1::fp)
      .def_readonly("fn", &PerLabelF1::fn)
      .def_readonly("precision", &PerLabelF1::precision)
      .def_readonly("recall", &PerLabelF1::recall)
      .def_readonly("f1", &PerLabelF1::f1);

  py::class_<F1Report>(m, "F1Report")
      .def_readonly("cut", &F1Report::cut)
      .def_readonly("micro_f1", &F1Report::micro_f1)
      .def_readonly("macro_f1", &F1Report::macro_f1)
      .def_readonly("per_label", &F1Report::per_label);

  m.def("heldout_loglik_dpmrm", &heldout_loglik_dpmrm);
  m.def("heldout_loglik_llda", &heldout_loglik_llda);
  m.def("label_scores", &label_scores);
  m.def("classify_single", &classify_single);
  m.def("classify_multi", &classify_multi);
  m.def("micro_macro_f1", &micro_macro_f1);
  m.def("rand_index", &rand_index);

  py::class_<SynthTruth>(m, "SynthTruth")
      .def_readonly("corpus", &SynthTruth::corpus)
      .def_readonly("masks", &SynthTruth::masks)
      .def_readonly("hypers", &SynthTruth::hypers)
      .def("word_labels",
           [](const SynthTruth& t) {
             std::vector<std::vector<int>> out;
             for (const auto& doc : t.word_dish) {
               std::vector<int> labels;
               for (const DishId& d : doc) labels.push_back(d.label);
               out.push_back(std::move(labels));
             }
             return out;
           });

  m.def("generate_corpus", &generate_corpus, py::arg("num_labels"),
        py::arg("vocab_size"), py::arg("num_docs"), py::arg("words_per_doc"),
        py::arg("labels_per_doc"), py::arg("hypers"),
        py::arg("label_truncation") = 50, py::arg("doc_truncation") = 50,
        py::arg("seed") = 1);

  m.def("exact_posterior",
        [](const Corpus& corpus, const std::vector<LabelMask>& masks,
           const Hyperparameters& hypers, int cap) {
          return exact_posterior(corpus, masks, hypers, cap).probability;
        },
        py::arg("corpus"), py::arg("masks"), py::arg("hypers"),
        py::arg("max_dishes_per_label"));

  py::class_<SpatialItem>(m, "SpatialItem")
      .def(py::init<>())
      .def_readwrite("texture", &SpatialItem::texture)
      .def_readwrite("color", &SpatialItem::color);

  py::class_<SpatialGroup>(m, "SpatialGroup")
      .def(py::init<>())
      .def_readwrite("id", &SpatialGroup::id)
      .def_readwrite("items", &SpatialGroup::items)
      .def_readwrite("edges", &SpatialGroup::edges)
      .def_readwrite("labels", &SpatialGroup::labels)
      .def("compute_hops", &SpatialGroup::compute_hops)
      .def("size", &SpatialGroup::size);

  py::class_<GroupCollection>(m, "GroupCollection")
      .def(py::init<>())
      .def_readwrite("groups", &GroupCollection::groups)
      .def_readonly("labels", &GroupCollection::labels)
      .def_readwrite("codebook_texture", &GroupCollection::codebook_texture)
      .def_readwrite("codebook_color", &GroupCollection::codebook_color);

  py::class_<DdcrpHypers>(m, "DdcrpHypers")
      .def(py::init<>())
      .def_static("defaults", &DdcrpHypers::defaults)
      .def_readwrite("alpha", &DdcrpHypers::alpha)
      .def_readwrite("gamma", &DdcrpHypers::gamma)
      .def_readwrite("eta", &DdcrpHypers::eta)
      .def_readwrite("beta_texture", &DdcrpHypers::beta_texture)
      .def_readwrite("beta_color", &DdcrpHypers::beta_color)
      .def_readwrite("window", &DdcrpHypers::window);

  py::class_<GroupSegmentation>(m, "GroupSegmentation")
      .def_readonly("group_id", &GroupSegmentation::group_id)
      .def_readonly("assignment", &GroupSegmentation::assignment)
      .def_readonly("component_labels", &GroupSegmentation::component_labels);

  py::class_<SegmentResult>(m, "SegmentResult")
      .def_readonly("final_sample", &SegmentResult::final_sample);

  m.def("load_groups", &load_groups);
  m.def("save_groups", &save_groups);
  m.def("decay", &decay);
  m.def("components_from_links", &components_from_links);
  m.def("segment", &segment, py::arg("data"), py::arg("hypers"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("save_segmentation", &save_segmentation);

#ifdef VERSION_INFO
#define DPMRM_STR_INNER(x) #x
#define DPMRM_STR(x) DPMRM_STR_INNER(x)
  m.attr("__version__") = DPMRM_STR(VERSION_INFO);
#else
  m.attr("__version__") = "dev";
#endif
}
