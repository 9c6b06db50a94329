#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsed/corpus.hpp"
#include "fsed/error.hpp"
#include "fsed/evaluator.hpp"
#include "fsed/json_io.hpp"
#include "fsed/model.hpp"
#include "fsed/promptkit.hpp"
#include "fsed/sampler.hpp"
#include "fsed/trainer.hpp"

namespace py = pybind11;

namespace {

// JSON documents cross the boundary as Python objects via the json module.
py::object to_py(const std::string& text) { return py::module_::import("json").attr("loads")(text); }
nlohmann::json from_py(const py::object& obj) {
  if (obj.is_none()) return nlohmann::json::object();
  return nlohmann::json::parse(py::str(py::module_::import("json").attr("dumps")(obj)).cast<std::string>());
}

fsed::EventMention make_mention(std::string id, std::vector<std::string> words, std::size_t start, std::size_t end,
                                std::string label) {
  fsed::EventMention m;
  m.id = std::move(id);
  m.words = std::move(words);
  m.trigger_start = start;
  m.trigger_end = end;
  if (end > start && end <= m.words.size())
    for (std::size_t i = start; i < end; ++i) m.trigger_text += (i > start ? " " : "") + m.words[i];
  m.label = std::move(label);
  return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-step cloze-prompt few-shot event detection";

  py::register_exception<fsed::UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<fsed::DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<fsed::RuntimeFailure>(m, "RuntimeFailure", PyExc_RuntimeError);

  py::class_<fsed::EventMention>(m, "EventMention")
      .def(py::init(&make_mention), py::arg("id"), py::arg("words"), py::arg("trigger_start"), py::arg("trigger_end"),
           py::arg("label"))
      .def_readonly("id", &fsed::EventMention::id)
      .def_readonly("words", &fsed::EventMention::words)
      .def_readonly("trigger_start", &fsed::EventMention::trigger_start)
      .def_readonly("trigger_end", &fsed::EventMention::trigger_end)
      .def_readonly("trigger", &fsed::EventMention::trigger_text)
      .def_readonly("label", &fsed::EventMention::label)
      .def("__repr__", [](const fsed::EventMention& e) { return "<EventMention " + e.id + " " + e.label + ">"; });

  py::class_<fsed::Corpus>(m, "Corpus")
      .def(py::init([](std::vector<fsed::EventMention> ms) { return fsed::Corpus(std::move(ms)); }))
      .def("__len__", &fsed::Corpus::size)
      .def("__getitem__", [](const fsed::Corpus& c, std::size_t i) { return c.at(i); })
      .def_property_readonly("labels", [](const fsed::Corpus& c) { return c.labels().labels(); })
      .def_property_readonly("dropped", [](const fsed::Corpus& c) { return c.dropped().size(); })
      .def("stats", [](const fsed::Corpus& c) { return to_py(fsed::stats_json(fsed::corpus_stats(c))); })
      .def(
          "bias_profile",
          [](const fsed::Corpus& c, std::size_t k) { return to_py(fsed::bias_json(fsed::trigger_bias_profile(c, k))); },
          py::arg("k") = 5);

  m.def("load_corpus", [](const std::string& path) { return fsed::load_corpus(path); }, py::arg("path"));
  m.def("parse_corpus", [](const std::string& text) { return fsed::parse_corpus(text); }, py::arg("jsonl"));

  m.def(
      "fewshot_split",
      [](const fsed::Corpus& c, std::size_t k, std::uint64_t seed) {
        return to_py(fsed::split_to_json(fsed::make_true_fewshot_split(c, k, seed)));
      },
      py::arg("corpus"), py::arg("k"), py::arg("seed") = fsed::Rng::kDefaultSeed);

  m.def(
      "trigger_prompt",
      [](const fsed::EventMention& e, const py::object& cfg) {
        return fsed::assemble_trigger_prompt(e, fsed::prompt_config_from_json(from_py(cfg))).text;
      },
      py::arg("mention"), py::arg("config") = py::none());
  m.def(
      "event_prompt",
      [](const fsed::EventMention& e, const std::string& trigger, const py::object& cfg) {
        return fsed::assemble_event_prompt(e, trigger, fsed::prompt_config_from_json(from_py(cfg))).text;
      },
      py::arg("mention"), py::arg("trigger"), py::arg("config") = py::none());

  m.def(
      "classify",
      [](const std::vector<double>& e0, const std::vector<std::vector<double>>& prototypes, const std::string& distance) {
        if (prototypes.empty()) throw fsed::UsageError("no prototypes");
        fsed::PrototypeSpace p;
        p.vectors.resize(static_cast<Eigen::Index>(prototypes.size()), static_cast<Eigen::Index>(e0.size()));
        for (std::size_t i = 0; i < prototypes.size(); ++i) {
          if (prototypes[i].size() != e0.size()) throw fsed::UsageError("prototype dimension mismatch");
          for (std::size_t j = 0; j < e0.size(); ++j)
            p.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = prototypes[i][j];
        }
        fsed::Vector v = Eigen::Map<const fsed::Vector>(e0.data(), static_cast<Eigen::Index>(e0.size()));
        const auto pred = fsed::classify_event({v}, p, fsed::parse_distance(distance));
        return py::make_tuple(pred.predicted_index,
                              std::vector<double>(pred.distribution.data(),
                                                  pred.distribution.data() + pred.distribution.size()));
      },
      py::arg("embedding"), py::arg("prototypes"), py::arg("distance") = "euclidean");

  m.def(
      "weighted_metrics",
      [](const std::vector<std::string>& predicted, const std::vector<std::string>& gold) {
        if (predicted.size() != gold.size()) throw fsed::UsageError("length mismatch");
        std::vector<fsed::Prediction> preds(predicted.size());
        std::vector<fsed::EventMention> golds(gold.size());
        for (std::size_t i = 0; i < gold.size(); ++i) {
          const auto id = "i" + std::to_string(i);
          golds[i] = make_mention(id, {"x"}, 0, 1, gold[i]);
          preds[i].mention_id = id;
          preds[i].label = predicted[i];
          preds[i].trigger_word = "x";
        }
        return to_py(fsed::report_to_json(fsed::compute_metrics(preds, golds)));
      },
      py::arg("predicted"), py::arg("gold"));

  m.def(
      "train_and_evaluate",
      [](const fsed::Corpus& c, std::size_t k, const py::object& train_cfg, std::uint64_t split_seed) {
        const auto cfg = fsed::train_config_from_json(from_py(train_cfg));
        const auto split = fsed::make_true_fewshot_split(c, k, split_seed);
        fsed::SeedAggregate agg;
        {
          py::gil_scoped_release release;
          agg = fsed::run_seeds(split, c, cfg, fsed::PromptConfig{});
        }
        return to_py(fsed::seed_aggregate_json(agg).dump());
      },
      py::arg("corpus"), py::arg("k"), py::arg("train") = py::none(), py::arg("split_seed") = fsed::Rng::kDefaultSeed);
}
