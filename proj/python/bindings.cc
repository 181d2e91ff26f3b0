#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "qreform/anchor_corpus.h"
#include "qreform/beam_search.h"
#include "qreform/cli.h"
#include "qreform/errors.h"
#include "qreform/ir_eval.h"
#include "qreform/retrieval.h"
#include "qreform/trainer.h"

namespace py = pybind11;
using namespace qreform;

namespace {

Ranking to_ranking(const std::vector<std::string>& docs) {
  Ranking r;
  for (std::size_t i = 0; i < docs.size(); ++i) r.push_back({docs[i], -static_cast<double>(i)});
  return r;
}

py::list ranking_to_py(const Ranking& r) {
  py::list out;
  for (const auto& s : r) out.append(py::make_tuple(s.doc_id, s.score));
  return out;
}

}  // namespace

PYBIND11_MODULE(_qreform, m) {
  m.doc() = "Character-level query reformulation toolkit";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ContractViolation& e) {
      py::set_error(PyExc_ValueError, e.what());
    }
  });

  m.attr("__version__") = kToolVersion;

  m.def("normalize_anchor", [](const std::string& s) { return normalize_anchor(s); });
  m.def("tokenize", [](const std::string& s) { return tokenize(s); });
  m.def("word_jaccard", [](const std::string& a, const std::string& b) { return word_jaccard(a, b); });

  m.def(
      "build_pairs",
      [](const std::vector<std::tuple<std::string, std::string, std::int64_t>>& records,
         std::size_t validation_size, std::uint64_t seed) {
        std::vector<AnchorRecord> recs;
        for (const auto& [url, text, freq] : records) recs.push_back({url, text, freq});
        const PairCorpus c = build_pairs(group_sessions(recs), validation_size, seed);
        auto pairs = [](const std::vector<TrainingPair>& v) {
          std::vector<std::pair<std::string, std::string>> out;
          for (const auto& p : v) out.emplace_back(p.source, p.target);
          return out;
        };
        return py::make_tuple(pairs(c.train), pairs(c.validation));
      },
      py::arg("records"), py::arg("validation_size"), py::arg("seed"),
      "(url_id, anchor_text, freq) records -> (train, validation) lists of (source, target)");

  py::class_<InvertedIndex>(m, "Index")
      .def(py::init([](const std::vector<std::pair<std::string, std::string>>& docs) {
             std::vector<Document> d;
             for (const auto& [id, text] : docs) d.push_back({id, text});
             return InvertedIndex::build(d);
           }),
           py::arg("documents"))
      .def_static("load",
                  [](const std::string& path) {
                    std::ifstream in(path, std::ios::binary);
                    if (!in) throw DataError("cannot open '" + path + "' for reading");
                    return InvertedIndex::read(in);
                  })
      .def("save",
           [](const InvertedIndex& idx, const std::string& path) {
             std::ofstream out(path, std::ios::binary);
             if (!out) throw DataError("cannot open '" + path + "' for writing");
             idx.write(out);
           })
      .def_property_readonly("doc_count", &InvertedIndex::doc_count)
      .def_property_readonly("total_tokens", &InvertedIndex::total_tokens)
      .def(
          "search",
          [](const InvertedIndex& idx, const std::string& query, int k, double mu) {
            return ranking_to_py(search(idx, query, {k, mu}));
          },
          py::arg("query"), py::arg("k") = 1000, py::arg("mu") = 2500.0);

  // Metrics take a ranked list of doc ids and a {doc_id: grade} dict.
  m.def(
      "err_at_k",
      [](const std::vector<std::string>& docs, const Grades& g, int k, int g_max) {
        return err_at_k(to_ranking(docs), g, k, g_max);
      },
      py::arg("docs"), py::arg("grades"), py::arg("k") = 20, py::arg("g_max") = 4);
  m.def(
      "ndcg_at_k",
      [](const std::vector<std::string>& docs, const Grades& g, int k) {
        return ndcg_at_k(to_ranking(docs), g, k);
      },
      py::arg("docs"), py::arg("grades"), py::arg("k") = 20);
  m.def(
      "average_precision",
      [](const std::vector<std::string>& docs, const Grades& g) {
        return average_precision(to_ranking(docs), g);
      },
      py::arg("docs"), py::arg("grades"));
  m.def(
      "precision_at_k",
      [](const std::vector<std::string>& docs, const Grades& g, int k) {
        return precision_at_k(to_ranking(docs), g, k);
      },
      py::arg("docs"), py::arg("grades"), py::arg("k") = 20);

  py::class_<Model>(m, "Model")
      .def_static("load", [](const std::string& path) { return load_checkpoint(path); })
      .def_property_readonly("vocab_size", &Model::vocab_size)
      .def(
          "generate",
          [](const Model& model, const std::string& query, int beam, int n, int max_len) {
            BeamOptions o;
            o.beam_width = beam;
            o.num_candidates = n;
            o.max_len = max_len;
            BeamResult r;
            {
              py::gil_scoped_release release;
              r = generate(model, std::string_view(query), o);
            }
            py::list out;
            for (const auto& c : r.candidates)
              out.append(py::make_tuple(c.text, c.display_score, c.logprob, c.terminated));
            return out;
          },
          py::arg("query"), py::arg("beam") = 30, py::arg("m") = 10, py::arg("max_len") = 50,
          "List of (text, display_score, logprob, terminated), best first");

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "qreform");
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a qreform subcommand; returns (exit_code, stdout, stderr)");
}
