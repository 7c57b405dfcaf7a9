// Python bindings. Structured values cross the boundary as JSON so samples
// and reports arrive as plain dicts and lists.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "forge/dedup.hpp"
#include "forge/error.hpp"
#include "forge/hpo.hpp"
#include "forge/insight.hpp"
#include "forge/pipeline.hpp"
#include "forge/quality.hpp"
#include "forge/state.hpp"

namespace py = pybind11;
using forge::Json;

namespace {

py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Json from_py(const py::handle& obj) {
  return Json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

forge::Dataset dataset_from(const py::list& samples) {
  std::vector<forge::Sample> out;
  out.reserve(samples.size());
  std::uint64_t row = 0;
  for (const auto& item : samples) {
    Json j = from_py(item);
    std::uint64_t id = j.contains("id") && j["id"].is_number_unsigned() ? j["id"].get<std::uint64_t>() : row;
    j.erase("id");
    out.push_back(forge::sample_from_json(j, id));
    ++row;
  }
  return forge::Dataset(std::move(out));
}

py::list dataset_to(const forge::Dataset& ds) {
  py::list out;
  for (const auto& s : ds) {
    Json j = forge::sample_to_json(s);
    j["id"] = s.id;
    out.append(to_py(j));
  }
  return out;
}

std::vector<forge::pipeline::Override> overrides_from(const std::vector<std::string>& texts) {
  std::vector<forge::pipeline::Override> out;
  for (const auto& t : texts) out.push_back(forge::pipeline::parse_override(t));
  return out;
}

py::tuple dedup_result(const forge::DedupResult& r) {
  py::list pairs;
  for (const auto& p : r.pairs) pairs.append(py::make_tuple(p.kept_id, p.removed_id, p.score));
  return py::make_tuple(dataset_to(r.dataset), pairs);
}

}  // namespace

PYBIND11_MODULE(pyforge, m) {
  m.doc() = "forge: composable text-data processing for LLM corpora";
  m.attr("__version__") = "0.3.0";

  py::register_exception<forge::Error>(m, "ForgeError");

  m.def("list_ops", [](std::optional<std::string> tag) {
    const auto registry = forge::OpRegistry::builtin();
    py::list out;
    for (const auto* e : registry.list(tag)) out.append(to_py(forge::descriptor_to_json(e->descriptor)));
    return out;
  }, py::arg("tag") = py::none());

  m.def("read_jsonl", [](const std::filesystem::path& p) { return dataset_to(forge::read_jsonl(p)); }, py::arg("path"));
  m.def("write_jsonl", [](const py::list& samples, const std::filesystem::path& p) {
    forge::write_jsonl(dataset_from(samples), p);
  }, py::arg("samples"), py::arg("path"));

  m.def("parse_recipe", [](const std::string& source, const std::vector<std::string>& overrides) {
    return to_py(forge::pipeline::parse_recipe(source, overrides_from(overrides)).to_json());
  }, py::arg("source"), py::arg("overrides") = std::vector<std::string>{});

  m.def("describe_plan", [](const std::filesystem::path& config, const std::vector<std::string>& overrides, bool fuse) {
    auto recipe = forge::pipeline::load_recipe(config, overrides_from(overrides));
    return forge::pipeline::build_plan(recipe, forge::OpRegistry::builtin(), {fuse, fuse}).describe();
  }, py::arg("config"), py::arg("overrides") = std::vector<std::string>{}, py::arg("fuse") = true);

  m.def("run_recipe", [](const std::filesystem::path& config, const std::vector<std::string>& overrides,
                         std::optional<std::size_t> workers) {
    auto recipe = forge::pipeline::load_recipe(config, overrides_from(overrides));
    forge::pipeline::RunOptions opts;
    opts.workers = workers;
    forge::pipeline::RunResult result;
    {
      py::gil_scoped_release release;
      result = forge::pipeline::run(recipe, opts);
    }
    return to_py(forge::pipeline::manifest_json(recipe, result));
  }, py::arg("config"), py::arg("overrides") = std::vector<std::string>{}, py::arg("workers") = py::none());

  m.def("plan_space", [](std::size_t mappers, std::size_t filters, std::size_t dedups, std::uint64_t input_bytes) {
    return to_py(forge::state::to_json(forge::state::plan_space(mappers, filters, dedups, input_bytes)));
  }, py::arg("mappers"), py::arg("filters"), py::arg("dedups"), py::arg("input_bytes"));

  m.def("analyze", [](const py::list& samples, std::vector<std::string> dims, std::size_t workers) {
    forge::insight::AnalyzeOptions opts;
    opts.dims = std::move(dims);
    opts.workers = workers;
    return to_py(forge::insight::to_json(forge::insight::analyze(dataset_from(samples), opts)));
  }, py::arg("samples"), py::arg("dims") = std::vector<std::string>{}, py::arg("workers") = 1);

  m.def("dedup_exact", [](const py::list& samples, bool lowercase) {
    forge::dedup::ExactParams p;
    p.lowercase = lowercase;
    return dedup_result(forge::dedup::exact_dedup(dataset_from(samples), p));
  }, py::arg("samples"), py::arg("lowercase") = false);
  m.def("dedup_minhash", [](const py::list& samples, double threshold, std::size_t k, std::uint64_t seed) {
    forge::dedup::LshParams p;
    p.threshold = threshold;
    p.k = k;
    p.seed = seed;
    return dedup_result(forge::dedup::lsh_dedup(dataset_from(samples), p));
  }, py::arg("samples"), py::arg("threshold") = 0.8, py::arg("k") = 5, py::arg("seed") = 42);
  m.def("dedup_simhash", [](const py::list& samples, int max_hamming) {
    forge::dedup::SimHashParams p;
    p.max_hamming = max_hamming;
    return dedup_result(forge::dedup::simhash_dedup(dataset_from(samples), p));
  }, py::arg("samples"), py::arg("max_hamming") = 4);
  m.def("jaccard", [](const std::string& a, const std::string& b, std::size_t k) {
    return forge::dedup::jaccard(forge::dedup::shingles(a, k), forge::dedup::shingles(b, k));
  }, py::arg("a"), py::arg("b"), py::arg("k") = 5);

  py::class_<forge::quality::QualityModel>(m, "QualityModel")
      .def_readonly("h", &forge::quality::QualityModel::h)
      .def_readonly("bias", &forge::quality::QualityModel::bias)
      .def_readonly("epoch_losses", &forge::quality::QualityModel::epoch_losses)
      .def_property_readonly("eval", [](const forge::quality::QualityModel& q) {
        const auto& e = q.eval;
        py::dict d;
        d["precision"] = e.precision;
        d["recall"] = e.recall;
        d["f1"] = e.f1;
        d["accuracy"] = e.accuracy;
        d["train_size"] = e.train_size;
        d["eval_size"] = e.eval_size;
        return d;
      })
      .def("score", [](const forge::quality::QualityModel& q, const std::string& text) {
        auto tok = forge::quality::make_tokenizer(q.tokenizer);
        return forge::quality::score(q, text, *tok);
      }, py::arg("text"))
      .def("save", [](const forge::quality::QualityModel& q, const std::filesystem::path& p) {
        forge::quality::save_model(q, p);
      }, py::arg("path"));

  m.def("train_quality", [](const std::vector<std::string>& positive, const std::vector<std::string>& negative, int h,
                            std::size_t epochs, std::uint64_t seed) {
    auto as_dataset = [](const std::vector<std::string>& texts) {
      std::vector<forge::Sample> v;
      for (std::size_t i = 0; i < texts.size(); ++i) v.push_back(forge::Sample{i, texts[i], Json::object(), {}});
      return forge::Dataset(std::move(v));
    };
    forge::quality::TrainOptions o;
    o.h = h;
    o.epochs = epochs;
    o.seed = seed;
    return forge::quality::train(as_dataset(positive), as_dataset(negative), o);
  }, py::arg("positive"), py::arg("negative"), py::arg("h") = 20, py::arg("epochs") = 10, py::arg("seed") = 42);
  m.def("load_quality_model", [](const std::filesystem::path& p) { return forge::quality::load_model(p); },
        py::arg("path"));

  m.def("objective_mix_quality", [](std::uint64_t n, std::uint64_t total, double mean_score) {
    return forge::hpo::objective_mix_quality(n, total, mean_score);
  }, py::arg("n"), py::arg("total_tokens"), py::arg("mean_score"));
}
