#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cstdlib>
#include <map>

#include "forge/error.hpp"
#include "forge/pipeline.hpp"

namespace forge::pipeline {

namespace {

struct Pos {
  std::size_t line = 0;
  std::size_t column = 0;
};

/// Parsed config plus source positions keyed by JSON pointer.
struct Doc {
  Json root;
  std::map<std::string, Pos> marks;

  Pos at(const std::string& ptr) const {
    auto it = marks.find(ptr);
    return it == marks.end() ? Pos{} : it->second;
  }
};

Pos to_pos(const YAML::Mark& m) {
  if (m.line < 0) return {};
  return {static_cast<std::size_t>(m.line) + 1, static_cast<std::size_t>(m.column) + 1};
}

[[noreturn]] void fail(const std::string& what, Pos pos) { throw ParseError(what, pos.line, pos.column); }

std::string prefix(Pos pos) {
  if (pos.line == 0) return "";
  return "line " + std::to_string(pos.line) + ", column " + std::to_string(pos.column) + ": ";
}

/// Plain YAML scalars follow the core schema: null, booleans, integers,
/// floats, otherwise strings. Quoted scalars are always strings.
Json scalar_value(const YAML::Node& n) {
  const std::string& s = n.Scalar();
  if (n.Tag() == "!") return s;
  if (s == "~" || s == "null" || s == "Null" || s == "NULL") return nullptr;
  if (s == "true" || s == "True" || s == "TRUE") return true;
  if (s == "false" || s == "False" || s == "FALSE") return false;
  if (!s.empty()) {
    std::int64_t i = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), i);
    if (ec == std::errc() && p == s.data() + s.size()) return i;
    std::string_view body = s;
    if (body.front() == '+') body.remove_prefix(1);
    double d = 0;
    auto [q, ec2] = std::from_chars(body.data(), body.data() + body.size(), d);
    if (ec2 == std::errc() && q == body.data() + body.size() && !body.empty()) return d;
  }
  return s;
}

Json convert(const YAML::Node& n, const std::string& ptr, std::map<std::string, Pos>& marks) {
  marks[ptr] = to_pos(n.Mark());
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar:
      return scalar_value(n);
    case YAML::NodeType::Sequence: {
      Json arr = Json::array();
      std::size_t i = 0;
      for (const auto& child : n) {
        arr.push_back(convert(child, ptr + "/" + std::to_string(i), marks));
        ++i;
      }
      return arr;
    }
    case YAML::NodeType::Map: {
      Json obj = Json::object();
      for (const auto& kv : n) {
        if (!kv.first.IsScalar()) fail("mapping keys must be scalars", to_pos(kv.first.Mark()));
        std::string key = kv.first.Scalar();
        std::string child = ptr + "/" + key;
        if (obj.contains(key)) fail("duplicate key '" + key + "'", to_pos(kv.first.Mark()));
        obj[key] = convert(kv.second, child, marks);
        marks[child + "#key"] = to_pos(kv.first.Mark());
      }
      return obj;
    }
  }
  return nullptr;
}

Doc parse_yaml(std::string_view source) {
  Doc doc;
  YAML::Node node;
  try {
    node = YAML::Load(std::string(source));
  } catch (const YAML::Exception& e) {
    throw ParseError(e.msg, e.mark.line >= 0 ? e.mark.line + 1 : 0, e.mark.column >= 0 ? e.mark.column + 1 : 0);
  }
  doc.root = convert(node, "", doc.marks);
  return doc;
}

Json override_value(const std::string& text) {
  if (text.empty()) return "";
  try {
    std::map<std::string, Pos> unused;
    return convert(YAML::Load(text), "", unused);
  } catch (const YAML::Exception&) {
    return text;
  }
}

const std::set<std::string>& top_level_keys() {
  static const std::set<std::string> keys = {
      "project",    "dataset_path", "export_path", "np",         "text_keys",          "process",
      "trace",      "trace_budget", "trace_dir",   "cache",      "checkpoint",         "compression",
      "cache_dir",  "checkpoint_dir", "keep_last_k_caches", "disk_budget", "batch_size", "op_fusion",
      "fused_short_circuit", "seed"};
  return keys;
}

std::vector<std::string> split_dots(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto dot = s.find('.', start);
    out.emplace_back(s.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return out;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

/// Index of the process entry an override addresses, or npos.
std::size_t find_process_entry(const Json& process, std::string_view selector) {
  if (!process.is_array()) return std::string::npos;
  if (all_digits(selector)) {
    std::size_t idx = std::stoul(std::string(selector));
    return idx < process.size() ? idx : std::string::npos;
  }
  for (std::size_t i = 0; i < process.size(); ++i) {
    const Json& e = process[i];
    if (e.is_object() && e.size() == 1 && e.begin().key() == selector) return i;
  }
  return std::string::npos;
}

void set_op_param(Json& process, std::size_t idx, const std::string& param, Json value) {
  Json& entry = process[idx];
  Json& params = entry.begin().value();
  if (params.is_null()) params = Json::object();
  if (!params.is_object()) throw ParseError("process entry " + std::to_string(idx) + " has non-mapping params");
  params[param] = std::move(value);
}

void apply_override(Json& root, const Override& o, const OpRegistry& registry) {
  auto segs = split_dots(o.path);
  Json value = override_value(o.value);
  if (segs.size() == 1 && top_level_keys().contains(segs[0])) {
    if (segs[0] == "process") throw ParseError("override cannot replace the whole process list");
    root[segs[0]] = std::move(value);
    return;
  }
  Json& process = root["process"];
  if (segs.size() == 3 && segs[0] == "process") {
    std::size_t idx = find_process_entry(process, segs[1]);
    if (idx == std::string::npos) throw ParseError("override '" + o.path + "': no process entry '" + segs[1] + "'");
    set_op_param(process, idx, segs[2], std::move(value));
    return;
  }
  if (segs.size() == 2 && registry.contains(segs[0])) {
    std::size_t idx = find_process_entry(process, segs[0]);
    if (idx == std::string::npos) {
      throw ParseError("override '" + o.path + "': op '" + segs[0] + "' is not in the recipe");
    }
    set_op_param(process, idx, segs[1], std::move(value));
    return;
  }
  throw ParseError("override '" + o.path + "' does not name a recipe key or an op parameter");
}

std::string get_string(const Doc& doc, const Json& v, const std::string& key) {
  if (!v.is_string()) fail("'" + key + "' must be a string", doc.at("/" + key));
  return v.get<std::string>();
}

bool get_bool(const Doc& doc, const Json& v, const std::string& key) {
  if (!v.is_boolean()) fail("'" + key + "' must be true or false", doc.at("/" + key));
  return v.get<bool>();
}

std::int64_t get_int(const Doc& doc, const Json& v, const std::string& key, std::int64_t min) {
  if (!v.is_number_integer()) fail("'" + key + "' must be an integer", doc.at("/" + key));
  auto i = v.get<std::int64_t>();
  if (i < min) fail("'" + key + "' must be >= " + std::to_string(min), doc.at("/" + key));
  return i;
}

std::vector<std::string> get_string_list(const Doc& doc, const Json& v, const std::string& key) {
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) fail("'" + key + "' must be a string or a list of strings", doc.at("/" + key));
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string()) fail("'" + key + "' entries must be strings", doc.at("/" + key + "/" + std::to_string(i)));
    out.push_back(v[i].get<std::string>());
  }
  return out;
}

fs::path default_cache_dir() {
  if (const char* env = std::getenv("FORGE_CACHE_DIR"); env && *env) return env;
  return ".forge-cache";
}

}  // namespace

Override parse_override(std::string_view text) {
  auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ParseError("override '" + std::string(text) + "' must look like dotted.path=value");
  }
  return {std::string(text.substr(0, eq)), std::string(text.substr(eq + 1))};
}

Recipe parse_recipe(std::string_view source, const std::vector<Override>& overrides, const OpRegistry& registry) {
  Doc doc = parse_yaml(source);
  if (doc.root.is_null()) doc.root = Json::object();
  if (!doc.root.is_object()) fail("recipe must be a mapping of keys to values", doc.at(""));
  if (auto it = doc.root.find("process"); it != doc.root.end() && it->is_array()) {
    for (auto& entry : *it) {
      if (entry.is_string()) entry = Json{{entry.get<std::string>(), nullptr}};
    }
  }
  for (const auto& o : overrides) apply_override(doc.root, o, registry);

  Recipe r;
  r.state.cache_dir = default_cache_dir();
  bool checkpoint_dir_set = false;
  for (auto it = doc.root.begin(); it != doc.root.end(); ++it) {
    const std::string& key = it.key();
    const Json& v = it.value();
    if (!top_level_keys().contains(key)) fail("unknown key '" + key + "'", doc.at("/" + key + "#key"));
    if (key == "project") {
      r.project = get_string(doc, v, key);
    } else if (key == "dataset_path") {
      r.dataset_paths = get_string_list(doc, v, key);
    } else if (key == "export_path") {
      r.export_path = get_string(doc, v, key);
    } else if (key == "np") {
      r.workers = static_cast<std::size_t>(get_int(doc, v, key, 1));
    } else if (key == "text_keys") {
      for (const auto& p : get_string_list(doc, v, key)) {
        try {
          r.text_keys.push_back(FieldPath::parse(p));
        } catch (const ParseError& e) {
          Pos pos = doc.at("/" + key);
          throw ParseError(e.what(), pos.line, pos.column);
        }
      }
    } else if (key == "trace") {
      r.trace = get_bool(doc, v, key);
    } else if (key == "trace_budget") {
      r.trace_budget = static_cast<std::size_t>(get_int(doc, v, key, 0));
    } else if (key == "trace_dir") {
      r.trace_dir = get_string(doc, v, key);
    } else if (key == "cache") {
      r.state.cache = get_bool(doc, v, key);
    } else if (key == "checkpoint") {
      if (v.is_boolean()) {
        r.state.checkpoint = v.get<bool>() ? state::CheckpointMode::On : state::CheckpointMode::Off;
      } else if (v.is_string() && (v == "auto" || v == "on" || v == "off")) {
        r.state.checkpoint = v == "auto" ? state::CheckpointMode::Auto
                             : v == "on" ? state::CheckpointMode::On
                                         : state::CheckpointMode::Off;
      } else {
        fail("'checkpoint' must be true, false or auto", doc.at("/" + key));
      }
    } else if (key == "compression") {
      try {
        r.state.compression = state::codec_from_string(get_string(doc, v, key));
      } catch (const ParamError& e) {
        fail(e.what(), doc.at("/" + key));
      }
    } else if (key == "cache_dir") {
      r.state.cache_dir = get_string(doc, v, key);
    } else if (key == "checkpoint_dir") {
      r.state.checkpoint_dir = get_string(doc, v, key);
      checkpoint_dir_set = true;
    } else if (key == "keep_last_k_caches") {
      if (v.is_string() && v == "all") {
        r.state.keep_last_k = std::nullopt;
      } else {
        r.state.keep_last_k = static_cast<std::size_t>(get_int(doc, v, key, 1));
      }
    } else if (key == "disk_budget") {
      if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        r.state.disk_budget = v.get<std::uint64_t>();
      } else if (v.is_string()) {
        try {
          r.state.disk_budget = state::parse_size(v.get<std::string>());
        } catch (const ParamError& e) {
          fail(e.what(), doc.at("/" + key));
        }
      } else {
        fail("'disk_budget' must be a byte count or a size like 20GB", doc.at("/" + key));
      }
    } else if (key == "batch_size") {
      r.batch_size = static_cast<std::size_t>(get_int(doc, v, key, 1));
    } else if (key == "op_fusion") {
      r.op_fusion = get_bool(doc, v, key);
    } else if (key == "fused_short_circuit") {
      r.fused_short_circuit = get_bool(doc, v, key);
    } else if (key == "seed") {
      r.seed = static_cast<std::uint64_t>(get_int(doc, v, key, 0));
    }
  }
  if (!checkpoint_dir_set) r.state.checkpoint_dir = r.state.cache_dir / "checkpoints";

  Json* process = doc.root.contains("process") ? &doc.root["process"] : nullptr;
  if (!process || process->is_null()) fail("recipe has no 'process' list", doc.at(""));
  if (!process->is_array()) fail("'process' must be a list of single-key mappings", doc.at("/process"));
  for (std::size_t i = 0; i < process->size(); ++i) {
    Json& entry = (*process)[i];
    std::string ptr = "/process/" + std::to_string(i);
    Pos pos = doc.at(ptr);
    if (!entry.is_object() || entry.size() != 1) {
      fail("process entry must be a single-key mapping 'op_name: {params}'", pos);
    }
    OpSpec spec;
    spec.name = entry.begin().key();
    spec.line = pos.line;
    spec.column = pos.column;
    const Json& given = entry.begin().value();
    if (!given.is_null() && !given.is_object()) fail("params of '" + spec.name + "' must be a mapping", pos);
    const RegistryEntry* reg = registry.find(spec.name);
    if (!reg) throw UnknownOp(prefix(pos) + "unknown op '" + spec.name + "'");
    try {
      spec.params = registry.resolve_params(spec.name, given.is_null() ? Json::object() : given);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), pos.line, pos.column);
    } catch (const TypeMismatch& e) {
      throw TypeMismatch(prefix(pos) + e.what());
    }
    if (reg->descriptor.category == Category::Formatter) {
      if (i != 0 || r.formatter) fail("a Formatter may only appear as the first process entry", pos);
      r.formatter = std::move(spec);
    } else {
      r.ops.push_back(std::move(spec));
    }
  }
  if (r.ops.empty()) fail("'process' must list at least one operator", doc.at("/process"));
  return r;
}

Json parse_config(std::string_view source) { return parse_yaml(source).root; }

Json load_config(const fs::path& path) { return parse_config(read_file(path)); }

Recipe load_recipe(const fs::path& path, const std::vector<Override>& overrides, const OpRegistry& registry) {
  return parse_recipe(read_file(path), overrides, registry);
}

Json Recipe::to_json() const {
  Json j = Json::object();
  j["project"] = project;
  j["dataset_path"] = dataset_paths;
  j["export_path"] = export_path;
  j["np"] = workers;
  Json keys = Json::array();
  for (const auto& k : text_keys) keys.push_back(k.str());
  j["text_keys"] = keys;
  Json process = Json::array();
  if (formatter) process.push_back(Json{{formatter->name, formatter->params}});
  for (const auto& op : ops) process.push_back(Json{{op.name, op.params}});
  j["process"] = process;
  j["trace"] = trace;
  j["trace_budget"] = trace_budget;
  j["cache"] = state.cache;
  j["checkpoint"] = state.checkpoint == state::CheckpointMode::Auto ? Json("auto")
                                                                     : Json(state.checkpoint == state::CheckpointMode::On);
  j["compression"] = std::string(state::to_string(state.compression));
  j["keep_last_k_caches"] = state.keep_last_k ? Json(*state.keep_last_k) : Json("all");
  j["batch_size"] = batch_size;
  j["op_fusion"] = op_fusion;
  j["fused_short_circuit"] = fused_short_circuit;
  j["seed"] = seed;
  return j;
}

}  // namespace forge::pipeline
