#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hakg/checkpoint.hpp"
#include "hakg/cli.hpp"
#include "hakg/config.hpp"
#include "hakg/error.hpp"
#include "hakg/eval.hpp"
#include "hakg/kg_store.hpp"
#include "hakg/model.hpp"
#include "hakg/pipeline.hpp"
#include "hakg/subgraph.hpp"
#include "hakg/synthetic.hpp"

namespace py = pybind11;
using namespace hakg;

namespace {

config::RunConfig run_config(const std::filesystem::path& path, const config::KeyValues& overrides) {
  return config::resolve(config::load_config_file(path), overrides);
}

py::dict curve_dict(const eval::Curve& c) {
  py::dict d;
  d["hit"] = std::vector<double>(c.hit.begin(), c.hit.end());
  d["ndcg"] = std::vector<double>(c.ndcg.begin(), c.ndcg.end());
  d["mrr"] = std::vector<double>(c.mrr.begin(), c.mrr.end());
  d["users"] = c.users;
  return d;
}

EntityId entity(const kg::KnowledgeGraph& kg, const std::string& name) {
  auto e = kg.find_entity(name);
  if (!e) throw ValidationError("unknown entity '" + name + "'");
  return *e;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "HAKG knowledge-graph recommender core";

  py::register_exception<Error>(m, "HakgError", PyExc_RuntimeError);

  py::class_<kg::KnowledgeGraph>(m, "KnowledgeGraph")
      .def_property_readonly("entity_count", &kg::KnowledgeGraph::entity_count)
      .def_property_readonly("type_count", &kg::KnowledgeGraph::type_count)
      .def_property_readonly("relation_count", &kg::KnowledgeGraph::relation_count)
      .def_property_readonly("link_count", &kg::KnowledgeGraph::link_count)
      .def("entity_name", &kg::KnowledgeGraph::entity_name)
      .def("type_name", &kg::KnowledgeGraph::type_name)
      .def("relation_name", &kg::KnowledgeGraph::relation_name)
      .def("type_of", [](const kg::KnowledgeGraph& g, const std::string& name) {
        return g.type_name(g.type_of(entity(g, name)));
      })
      .def("neighbors", [](const kg::KnowledgeGraph& g, const std::string& name) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& n : g.neighbors(entity(g, name))) {
          out.emplace_back(g.entity_name(n.entity), g.relation_name(n.relation));
        }
        return out;
      });

  m.def("load_kg", &kg::load_kg, py::arg("path"), "Load a KG TSV file.");
  m.def(
      "parse_kg",
      [](const std::string& text) {
        std::istringstream in(text);
        return kg::parse_kg(in, "<python>");
      },
      py::arg("text"), "Parse KG TSV text.");

  m.def(
      "sample_paths",
      [](const kg::KnowledgeGraph& g, const std::string& user, const std::string& item, std::size_t paths,
         std::size_t max_len, std::uint64_t seed) {
        subgraph::SampleConfig cfg;
        cfg.paths = paths;
        cfg.max_len = max_len;
        Rng rng(seed);
        std::vector<std::vector<std::string>> out;
        for (const auto& p : subgraph::sample_paths(g, entity(g, user), entity(g, item), cfg, rng)) {
          std::vector<std::string> names;
          for (std::size_t k = 0; k < p.entities.size(); ++k) {
            names.push_back(g.entity_name(p.entities[k]));
            if (k < p.relations.size()) names.push_back(g.relation_name(p.relations[k]));
          }
          out.push_back(std::move(names));
        }
        return out;
      },
      py::arg("kg"), py::arg("user"), py::arg("item"), py::arg("paths") = 15, py::arg("max_len") = 6,
      py::arg("seed") = 0, "Sampled user-item paths as alternating entity and relation names.");

  m.def(
      "build_subgraph",
      [](const kg::KnowledgeGraph& g, const std::string& user, const std::string& item, std::size_t paths,
         std::size_t max_len, std::uint64_t seed) {
        subgraph::SampleConfig cfg;
        cfg.paths = paths;
        cfg.max_len = max_len;
        const auto sg = subgraph::build_subgraph(g, entity(g, user), entity(g, item), cfg, seed);
        py::dict d;
        std::vector<std::string> names;
        for (auto e : sg.entities) names.push_back(g.entity_name(e));
        std::vector<std::tuple<std::string, std::string, std::string>> links;
        for (const auto& l : sg.links) {
          links.emplace_back(names[l.head], g.relation_name(l.relation), names[l.tail]);
        }
        d["entities"] = names;
        d["links"] = links;
        return d;
      },
      py::arg("kg"), py::arg("user"), py::arg("item"), py::arg("paths") = 15, py::arg("max_len") = 6,
      py::arg("seed") = 0, "Connectivity subgraph of a user-item pair.");

  m.def(
      "metrics_at_n",
      [](std::size_t rank, std::size_t n) {
        const auto r = eval::metrics_at_n(rank, n);
        return py::dict(py::arg("hit") = r.hit, py::arg("ndcg") = r.ndcg, py::arg("mrr") = r.mrr);
      },
      py::arg("rank"), py::arg("n"));
  m.def(
      "pessimistic_rank", [](double target, const std::vector<double>& others) {
        return eval::pessimistic_rank(target, others);
      },
      py::arg("target"), py::arg("others"));

  m.def("variants", [] {
    std::vector<std::string> out;
    for (auto v : model::all_variants()) out.emplace_back(model::variant_name(v));
    return out;
  });
  m.def(
      "parameter_shapes",
      [](const std::string& variant, std::size_t entities, std::size_t types, std::size_t relations,
         const config::KeyValues& overrides) {
        const auto cfg = config::resolve({}, overrides);
        Rng rng(0);
        const auto store =
            model::make_params({entities, types, relations, cfg.dims, model::parse_variant(variant)}, rng);
        return store.signature();
      },
      py::arg("variant"), py::arg("entities"), py::arg("types"), py::arg("relations"),
      py::arg("overrides") = config::KeyValues{}, "Parameter names and shapes of a variant.");

  m.def(
      "load_checkpoint",
      [](const std::filesystem::path& path) {
        const auto ck = model::load_checkpoint(path);
        py::dict params;
        for (const auto& p : ck.params.parameters()) {
          py::dict t;
          t["shape"] = p.value.shape();
          t["values"] = std::vector<double>(p.value.values().begin(), p.value.values().end());
          params[py::str(p.name)] = t;
        }
        py::dict d;
        d["variant"] = std::string(model::variant_name(ck.variant));
        d["dims"] = std::vector<std::size_t>{ck.dims.entity,    ck.dims.type,  ck.dims.relation,
                                             ck.dims.attention, ck.dims.heads, ck.dims.layers};
        d["params"] = params;
        return d;
      },
      py::arg("path"));

  m.def(
      "write_synthetic",
      [](const std::filesystem::path& dir, std::size_t users, std::size_t items, std::size_t blocks,
         std::uint64_t seed) {
        synth::SyntheticConfig cfg;
        cfg.users = users;
        cfg.items = items;
        cfg.blocks = blocks;
        cfg.seed = seed;
        synth::write_dataset(cfg, dir);
      },
      py::arg("dir"), py::arg("users") = 50, py::arg("items") = 50, py::arg("blocks") = 5, py::arg("seed") = 0,
      "Write the block-structured synthetic kg.tsv and interactions.tsv.");

  m.def(
      "prepare",
      [](const std::filesystem::path& config, const config::KeyValues& overrides) {
        py::gil_scoped_release release;
        return pipeline::prepare(run_config(config, overrides)).train.size();
      },
      py::arg("config"), py::arg("overrides") = config::KeyValues{}, "Split the interactions; returns train size.");
  m.def(
      "build_subgraphs",
      [](const std::filesystem::path& config, const config::KeyValues& overrides) {
        py::gil_scoped_release release;
        return pipeline::build_subgraphs(run_config(config, overrides)).size();
      },
      py::arg("config"), py::arg("overrides") = config::KeyValues{}, "Build the subgraph cache; returns its size.");
  m.def(
      "train",
      [](const std::filesystem::path& config, const config::KeyValues& overrides) {
        model::TrainResult r;
        {
          py::gil_scoped_release release;
          r = pipeline::train(run_config(config, overrides));
        }
        std::vector<double> losses;
        for (const auto& e : r.history) losses.push_back(e.loss);
        return losses;
      },
      py::arg("config"), py::arg("overrides") = config::KeyValues{}, "Train; returns per-epoch losses.");
  m.def(
      "evaluate",
      [](const std::filesystem::path& config, const config::KeyValues& overrides) {
        eval::MetricsReport r;
        {
          py::gil_scoped_release release;
          r = pipeline::evaluate(run_config(config, overrides));
        }
        py::dict d = curve_dict(r.all);
        py::dict groups;
        for (const auto& [g, c] : r.groups) groups[py::int_(g)] = curve_dict(c);
        d["groups"] = groups;
        return d;
      },
      py::arg("config"), py::arg("overrides") = config::KeyValues{}, "Evaluate the checkpoint; returns the curves.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command line; returns (exit code, stdout, stderr).");
}
