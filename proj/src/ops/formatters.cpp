#include <algorithm>
#include <filesystem>

#include "forge/error.hpp"
#include "forge/ops.hpp"

namespace forge {

namespace fs = std::filesystem;

namespace {

/// Expands directories into their regular files (sorted) filtered by
/// extension; plain file paths are kept as given.
std::vector<fs::path> expand(const std::vector<fs::path>& paths, const std::vector<std::string>& extensions) {
  std::vector<fs::path> out;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::recursive_directory_iterator(p)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        if (extensions.empty() || std::find(extensions.begin(), extensions.end(), ext) != extensions.end()) {
          found.push_back(entry.path());
        }
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (fs::exists(p)) {
      out.push_back(p);
    } else {
      throw IoError("dataset path '" + p.string() + "' does not exist");
    }
  }
  return out;
}

class JsonlFormatter final : public Formatter {
 public:
  using Formatter::Formatter;
  Dataset load(const std::vector<fs::path>& paths) const override {
    std::vector<Dataset> shards;
    std::uint64_t shard = 0;
    for (const auto& file : expand(paths, {".jsonl", ".json"})) {
      LoadOptions options;
      options.shard_index = shard++;
      options.strict = param_bool("strict");
      shards.push_back(read_jsonl(file, options));
    }
    return concat(std::move(shards));
  }
};

class PlaintextFormatter final : public Formatter {
 public:
  PlaintextFormatter(OpDescriptor d, Json p) : Formatter(std::move(d), std::move(p)) {
    split_ = param_string("split");
    if (split_ != "file" && split_ != "blank_line") throw ParamError("plaintext_formatter: split must be file or blank_line");
  }

  Dataset load(const std::vector<fs::path>& paths) const override {
    std::vector<Sample> samples;
    std::uint64_t shard = 0;
    for (const auto& file : expand(paths, {".txt", ".md"})) {
      std::string content = read_file(file);
      if (!is_valid_utf8(content)) throw SchemaError("'" + file.string() + "' is not valid UTF-8");
      std::uint64_t row = 0;
      auto push = [&](std::string text) {
        Sample s;
        s.id = make_sample_id(shard, row++);
        s.text = std::move(text);
        s.meta["source_file"] = file.filename().string();
        samples.push_back(std::move(s));
      };
      if (split_ == "file") {
        push(std::move(content));
      } else {
        std::string current;
        std::size_t pos = 0;
        while (pos <= content.size()) {
          std::size_t nl = content.find('\n', pos);
          std::string_view line(content.data() + pos, (nl == std::string::npos ? content.size() : nl) - pos);
          pos = nl == std::string::npos ? content.size() + 1 : nl + 1;
          if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            if (!current.empty()) push(std::move(current));
            current.clear();
          } else {
            if (!current.empty()) current += '\n';
            current.append(line);
          }
        }
        if (!current.empty()) push(std::move(current));
      }
      ++shard;
    }
    return Dataset(std::move(samples));
  }

 private:
  std::string split_;
};

/// RFC 4180 records: quoted fields may contain delimiters, quotes ("") and
/// newlines.
std::vector<std::vector<std::string>> parse_csv(std::string_view s, char delim) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < s.size() && s[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    any = true;
    if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < s.size() && s[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      field += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted CSV field");
  if (any || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

class CsvFormatter final : public Formatter {
 public:
  using Formatter::Formatter;
  Dataset load(const std::vector<fs::path>& paths) const override {
    std::string text_column = param_string("text_column");
    std::string delim = param_string("delimiter");
    if (delim.size() != 1) throw ParamError("csv_formatter: delimiter must be one character");
    std::vector<Sample> samples;
    std::uint64_t shard = 0;
    for (const auto& file : expand(paths, {".csv", ".tsv"})) {
      auto rows = parse_csv(read_file(file), delim[0]);
      if (rows.empty()) continue;
      const auto& header = rows.front();
      auto it = std::find(header.begin(), header.end(), text_column);
      if (it == header.end()) throw SchemaError("'" + file.string() + "' has no column '" + text_column + "'");
      std::size_t text_idx = static_cast<std::size_t>(it - header.begin());
      for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() != header.size()) {
          throw SchemaError(file.string() + ": row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                            " fields, header has " + std::to_string(header.size()));
        }
        Sample s;
        s.id = make_sample_id(shard, r - 1);
        s.text = row[text_idx];
        for (std::size_t c = 0; c < header.size(); ++c) {
          if (c != text_idx) s.meta[header[c]] = row[c];
        }
        samples.push_back(std::move(s));
      }
      ++shard;
    }
    return Dataset(std::move(samples));
  }
};

class CodeFormatter final : public Formatter {
 public:
  using Formatter::Formatter;
  Dataset load(const std::vector<fs::path>& paths) const override {
    std::vector<Sample> samples;
    std::uint64_t row = 0;
    for (const auto& root : paths) {
      for (const auto& file : expand({root}, param_strings("extensions"))) {
        std::string content = read_file(file);
        if (!is_valid_utf8(content)) continue;
        Sample s;
        s.id = make_sample_id(0, row++);
        s.text = std::move(content);
        s.meta["ext"] = file.extension().string();
        s.meta["path"] = fs::is_directory(root) ? fs::relative(file, root).generic_string() : file.filename().string();
        samples.push_back(std::move(s));
      }
    }
    return Dataset(std::move(samples));
  }
};

OpDescriptor formatter(std::string name, std::string description, std::set<std::string> tags = {"general"}) {
  OpDescriptor d;
  d.name = std::move(name);
  d.category = Category::Formatter;
  d.level = OpLevel::Dataset;
  d.tags = std::move(tags);
  d.description = std::move(description);
  return d;
}

template <typename T>
OpFactory make_factory() {
  return [](const OpDescriptor& d, Json params) -> std::unique_ptr<Op> {
    return std::make_unique<T>(d, std::move(params));
  };
}

}  // namespace

void register_formatters(OpRegistry& registry) {
  {
    auto d = formatter("jsonl_formatter", "one JSON object per line with text/meta/stats");
    d.params.push_back({"strict", ParamType::Bool, false, "fail on invalid lines instead of skipping"});
    registry.register_op(std::move(d), make_factory<JsonlFormatter>());
  }
  {
    auto d = formatter("plaintext_formatter", "plain text: one document per file or per blank-line block");
    d.params.push_back({"split", ParamType::String, "file", "file | blank_line"});
    registry.register_op(std::move(d), make_factory<PlaintextFormatter>());
  }
  {
    auto d = formatter("csv_formatter", "CSV rows; one column becomes text, the rest meta");
    d.params.push_back({"text_column", ParamType::String, "text", "column holding the text"});
    d.params.push_back({"delimiter", ParamType::String, ",", "field delimiter"});
    registry.register_op(std::move(d), make_factory<CsvFormatter>());
  }
  {
    auto d = formatter("code_formatter", "source files; text = file content, meta.ext = extension", {"code"});
    d.params.push_back({"extensions", ParamType::StringList,
                        Json::array({".py", ".c", ".h", ".cc", ".cpp", ".hpp", ".java", ".js", ".ts", ".go", ".rs"}),
                        "file extensions to include"});
    registry.register_op(std::move(d), make_factory<CodeFormatter>());
  }
}

}  // namespace forge
