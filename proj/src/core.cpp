#include "forge/core.hpp"

#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "forge/error.hpp"
#include "forge/log.hpp"

namespace forge {

namespace {

std::vector<std::string> split_dots(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = path.find('.', start);
    parts.emplace_back(path.substr(start, dot == std::string_view::npos ? path.npos : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts;
}

void flatten_stats(const Json& node, const std::string& prefix, Stats& out) {
  for (const auto& [key, value] : node.items()) {
    std::string path = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      flatten_stats(value, path, out);
    } else if (value.is_number()) {
      double v = value.get<double>();
      if (!std::isfinite(v)) throw SchemaError("stat '" + path + "' is not finite");
      out[path] = v;
    } else if (value.is_boolean()) {
      out[path] = value.get<bool>() ? 1.0 : 0.0;
    } else {
      throw SchemaError("stat '" + path + "' is not numeric");
    }
  }
}

}  // namespace

FieldPath FieldPath::parse(std::string_view path) {
  if (path.empty()) throw ParseError("empty field path");
  auto parts = split_dots(path);
  for (const auto& p : parts) {
    if (p.empty()) throw ParseError("malformed field path '" + std::string(path) + "'");
  }
  FieldPath fp;
  fp.path_ = std::string(path);
  if (parts[0] == "text") {
    if (parts.size() != 1) {
      throw ParseError("'text' has no sub-fields; address structured fields as meta.<name>: '" +
                       std::string(path) + "'");
    }
    fp.root_ = Root::Text;
  } else if (parts[0] == "meta" || parts[0] == "stats") {
    if (parts.size() < 2) throw ParseError("field path '" + std::string(path) + "' needs a key");
    fp.root_ = parts[0] == "meta" ? Root::Meta : Root::Stats;
    fp.segments_.assign(parts.begin() + 1, parts.end());
  } else {
    throw ParseError("field path must start with text, meta or stats: '" + std::string(path) + "'");
  }
  return fp;
}

std::string FieldPath::stat_key() const {
  std::string key;
  for (const auto& s : segments_) {
    if (!key.empty()) key += '.';
    key += s;
  }
  return key;
}

const Json* find_meta(const Sample& sample, const FieldPath& path) {
  if (path.root() != FieldPath::Root::Meta) return nullptr;
  const Json* node = &sample.meta;
  for (const auto& seg : path.segments()) {
    if (!node->is_object()) return nullptr;
    auto it = node->find(seg);
    if (it == node->end()) return nullptr;
    node = &*it;
  }
  return node->is_null() ? nullptr : node;
}

FieldValue resolve_field(const Sample& sample, const FieldPath& path) {
  switch (path.root()) {
    case FieldPath::Root::Text:
      return std::string_view(sample.text);
    case FieldPath::Root::Meta: {
      const Json* node = find_meta(sample, path);
      if (!node) throw UnknownField("no field '" + path.str() + "'");
      return node;
    }
    case FieldPath::Root::Stats: {
      auto it = sample.stats.find(path.stat_key());
      if (it == sample.stats.end()) throw UnknownField("no field '" + path.str() + "'");
      return it->second;
    }
  }
  throw UnknownField(path.str());
}

std::string_view field_text(const Sample& sample, const FieldPath& path) {
  FieldValue v = resolve_field(sample, path);
  if (auto* s = std::get_if<std::string_view>(&v)) return *s;
  if (auto* j = std::get_if<const Json*>(&v); j && (*j)->is_string()) {
    return (*j)->get_ref<const std::string&>();
  }
  throw FieldTypeError("field '" + path.str() + "' is not text");
}

Sample with_field_text(Sample sample, const FieldPath& path, std::string value) {
  switch (path.root()) {
    case FieldPath::Root::Text:
      sample.text = std::move(value);
      return sample;
    case FieldPath::Root::Meta: {
      Json* node = &sample.meta;
      for (const auto& seg : path.segments()) {
        if (!node->is_object()) throw FieldTypeError("field '" + path.str() + "' is not text");
        auto it = node->find(seg);
        if (it == node->end()) throw UnknownField("no field '" + path.str() + "'");
        node = &*it;
      }
      if (!node->is_string()) throw FieldTypeError("field '" + path.str() + "' is not text");
      *node = std::move(value);
      return sample;
    }
    case FieldPath::Root::Stats:
      throw FieldTypeError("stats fields are numeric: '" + path.str() + "'");
  }
  return sample;
}

Fingerprint Dataset::fingerprint() const {
  Hasher h;
  h.update_bytes("forge.dataset.v1");
  h.update_u64(schema_.size());
  for (const auto& p : schema_) h.update_bytes(p);
  h.update_u64(samples_.size());
  for (const auto& s : samples_) {
    h.update_u64(s.id);
    h.update_bytes(s.text);
    h.update_bytes(s.meta.dump());
    h.update_u64(s.stats.size());
    for (const auto& [k, v] : s.stats) {
      h.update_bytes(k);
      h.update_f64(v);
    }
  }
  return h.digest();
}

std::size_t Dataset::approx_bytes() const {
  std::size_t total = 0;
  for (const auto& s : samples_) {
    total += s.text.size() + 8;
    if (!s.meta.empty()) total += s.meta.dump().size();
    for (const auto& [k, v] : s.stats) total += k.size() + 8;
  }
  return total;
}

Sample sample_from_json(const Json& object, std::uint64_t id) {
  if (!object.is_object()) throw SchemaError("sample is not a JSON object");
  Sample s;
  s.id = id;
  auto text = object.find("text");
  if (text == object.end() || !text->is_string()) throw SchemaError("sample lacks string 'text'");
  s.text = text->get<std::string>();
  for (const auto& [key, value] : object.items()) {
    if (key == "text") continue;
    if (key == "meta") {
      if (!value.is_object()) throw SchemaError("'meta' must be an object");
      s.meta = value;
    } else if (key == "stats") {
      if (!value.is_object()) throw SchemaError("'stats' must be an object");
      flatten_stats(value, "", s.stats);
    } else {
      throw SchemaError("unexpected top-level key '" + key + "'");
    }
  }
  return s;
}

Json sample_to_json(const Sample& sample) {
  Json out = Json::object();
  out["text"] = sample.text;
  out["meta"] = sample.meta;
  if (!sample.stats.empty()) {
    Json stats = Json::object();
    for (const auto& [k, v] : sample.stats) stats[k] = v;
    out["stats"] = std::move(stats);
  }
  return out;
}

std::string sample_to_jsonl(const Sample& sample) { return sample_to_json(sample).dump(); }

Dataset parse_jsonl(std::string_view content, const LoadOptions& options, LoadReport* report) {
  std::vector<Sample> samples;
  LoadReport local;
  std::size_t line_no = 0;
  std::uint64_t row = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    std::string_view line = content.substr(pos, nl == content.npos ? content.npos : nl - pos);
    pos = nl == content.npos ? content.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    ++local.lines;
    try {
      Sample s = sample_from_json(Json::parse(line), make_sample_id(options.shard_index, row));
      for (const auto& key : options.text_keys) field_text(s, key);
      samples.push_back(std::move(s));
      ++row;
    } catch (const std::exception& e) {
      if (options.strict) {
        throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
      }
      ++local.rejected;
      log::warn("rejecting line {}: {}", line_no, e.what());
    }
  }
  if (report) *report = local;
  Schema schema{"text"};
  for (const auto& key : options.text_keys) schema.insert(key.str());
  return Dataset(std::move(samples), std::move(schema));
}

Dataset read_jsonl(const std::filesystem::path& path, const LoadOptions& options, LoadReport* report) {
  return parse_jsonl(read_file(path), options, report);
}

std::string to_jsonl(const Dataset& dataset) {
  std::string out;
  for (const auto& s : dataset) {
    out += sample_to_jsonl(s);
    out += '\n';
  }
  return out;
}

void write_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  write_file_atomic(path, to_jsonl(dataset));
}

Dataset concat(std::vector<Dataset> parts) {
  if (parts.empty()) return Dataset();
  Schema schema;
  std::size_t total = 0;
  for (const auto& p : parts) {
    schema.insert(p.schema().begin(), p.schema().end());
    total += p.size();
  }
  std::vector<Sample> samples;
  samples.reserve(total);
  for (auto& p : parts) {
    auto moved = std::move(p).release();
    std::move(moved.begin(), moved.end(), std::back_inserter(samples));
  }
  return Dataset(std::move(samples), std::move(schema));
}

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  const auto* p = reinterpret_cast<const unsigned char*>(s.data());
  const std::size_t n = s.size();
  while (i < n) {
    unsigned char c = p[i];
    if (c < 0x80) {
      ++i;
      continue;
    }
    std::size_t len;
    std::uint32_t cp;
    if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      if ((p[i + k] & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (p[i + k] & 0x3F);
    }
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return false;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += len;
  }
  return true;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      int err = errno;
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      if (err == ENOSPC) throw DiskFull("no space left writing '" + path.string() + "'");
      throw IoError("write failed for '" + path.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace forge
