#include <algorithm>
#include <cmath>
#include <limits>

#include "forge/error.hpp"
#include "forge/ops.hpp"

namespace forge {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Formatter: return "Formatter";
    case Category::Mapper: return "Mapper";
    case Category::Filter: return "Filter";
    case Category::Deduplicator: return "Deduplicator";
  }
  return "?";
}

std::string_view to_string(OpLevel l) { return l == OpLevel::Sample ? "sample" : "dataset"; }

std::string_view to_string(CostClass c) {
  switch (c) {
    case CostClass::Cheap: return "cheap";
    case CostClass::Moderate: return "moderate";
    case CostClass::Expensive: return "expensive";
  }
  return "?";
}

std::string_view to_string(ContextKey k) {
  switch (k) {
    case ContextKey::Words: return "words";
    case ContextKey::Lines: return "lines";
    case ContextKey::Sentences: return "sentences";
    case ContextKey::CharClasses: return "char_classes";
  }
  return "?";
}

std::string_view to_string(ParamType t) {
  switch (t) {
    case ParamType::Int: return "int";
    case ParamType::Double: return "double";
    case ParamType::Bool: return "bool";
    case ParamType::String: return "string";
    case ParamType::StringList: return "string_list";
  }
  return "?";
}

ContextKey context_key_from_string(std::string_view s) {
  for (auto k : {ContextKey::Words, ContextKey::Lines, ContextKey::Sentences, ContextKey::CharClasses}) {
    if (to_string(k) == s) return k;
  }
  throw ParseError("unknown context key '" + std::string(s) + "'");
}

const ParamSpec* OpDescriptor::find_param(std::string_view pname) const {
  for (const auto& p : params) {
    if (p.name == pname) return &p;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------

namespace {
// Samples move between calls; short strings change address when they do.
void rebase(std::optional<std::vector<std::string_view>>& views, const char* from, const char* to) {
  if (!views) return;
  for (auto& v : *views) v = std::string_view(to + (v.data() - from), v.size());
}
}  // namespace

ContextStore::Entry& ContextStore::entry(const FieldPath& field, std::string_view text) {
  for (auto& e : entries_) {
    if (e.field != field.str()) continue;
    if (e.base != text.data()) {
      rebase(e.lines, e.base, text.data());
      rebase(e.sentences, e.base, text.data());
      e.base = text.data();
    }
    return e;
  }
  entries_.push_back(Entry{field.str(), text.data(), {}, {}, {}, {}});
  return entries_.back();
}

void ContextStore::touched() { peak_ = std::max(peak_, entries()); }

const std::vector<std::string>& ContextStore::words(const FieldPath& field, std::string_view text) {
  Entry& e = entry(field, text);
  if (!e.words) {
    e.words = text::words(text);
    ++derivations_[ContextKey::Words];
    touched();
  }
  return *e.words;
}

const std::vector<std::string_view>& ContextStore::lines(const FieldPath& field, std::string_view text) {
  Entry& e = entry(field, text);
  if (!e.lines) {
    e.lines = text::lines(text);
    ++derivations_[ContextKey::Lines];
    touched();
  }
  return *e.lines;
}

const std::vector<std::string_view>& ContextStore::sentences(const FieldPath& field, std::string_view text) {
  Entry& e = entry(field, text);
  if (!e.sentences) {
    e.sentences = text::sentences(text);
    ++derivations_[ContextKey::Sentences];
    touched();
  }
  return *e.sentences;
}

const text::CharClasses& ContextStore::char_classes(const FieldPath& field, std::string_view text) {
  Entry& e = entry(field, text);
  if (!e.char_classes) {
    e.char_classes = text::char_classes(text);
    ++derivations_[ContextKey::CharClasses];
    touched();
  }
  return *e.char_classes;
}

std::size_t ContextStore::entries() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    n += e.words.has_value() + e.lines.has_value() + e.sentences.has_value() + e.char_classes.has_value();
  }
  return n;
}

void ContextStore::clear() noexcept { entries_.clear(); }

// ---------------------------------------------------------------------------

namespace {
FieldPath field_from_params(const OpDescriptor& d, const Json& params) {
  auto it = params.find("field");
  if (it != params.end() && it->is_string()) return FieldPath::parse(it->get<std::string>());
  return FieldPath::parse(d.field);
}
}  // namespace

Op::Op(OpDescriptor descriptor, Json params)
    : descriptor_(std::move(descriptor)), params_(std::move(params)),
      field_(field_from_params(descriptor_, params_)) {}

double Op::param_double(std::string_view pname) const {
  auto it = params_.find(pname);
  if (it == params_.end() || !it->is_number()) throw ParamError(name() + ": missing numeric param '" + std::string(pname) + "'");
  return it->get<double>();
}

std::int64_t Op::param_int(std::string_view pname) const {
  auto it = params_.find(pname);
  if (it == params_.end() || !it->is_number_integer()) throw ParamError(name() + ": missing integer param '" + std::string(pname) + "'");
  return it->get<std::int64_t>();
}

bool Op::param_bool(std::string_view pname) const {
  auto it = params_.find(pname);
  if (it == params_.end() || !it->is_boolean()) throw ParamError(name() + ": missing bool param '" + std::string(pname) + "'");
  return it->get<bool>();
}

std::string Op::param_string(std::string_view pname) const {
  auto it = params_.find(pname);
  if (it == params_.end() || !it->is_string()) throw ParamError(name() + ": missing string param '" + std::string(pname) + "'");
  return it->get<std::string>();
}

std::vector<std::string> Op::param_strings(std::string_view pname) const {
  auto it = params_.find(pname);
  if (it == params_.end() || !it->is_array()) throw ParamError(name() + ": missing list param '" + std::string(pname) + "'");
  return it->get<std::vector<std::string>>();
}

Sample Mapper::process(Sample sample, ContextStore&) const {
  std::string_view current = field_text(sample, field());
  std::string edited = transform(current);
  if (edited == current) return sample;
  return with_field_text(std::move(sample), field(), std::move(edited));
}

bool Filter::has_stats(const Sample& sample) const {
  for (const auto& key : descriptor().stat_keys) {
    if (!sample.stats.contains(key)) return false;
  }
  return true;
}

bool Filter::add_stats(Sample& sample, ContextStore& ctx) const {
  if (has_stats(sample)) return false;
  Stats out;
  compute(sample, ctx, out);
  for (auto& [k, v] : out) {
    sample.stats[k] = std::isfinite(v) ? v : 0.0;
  }
  return true;
}

Sample Filter::compute_stats(Sample sample, ContextStore& ctx) const {
  add_stats(sample, ctx);
  return sample;
}

bool Filter::keep(const Sample& sample) const {
  const auto& keys = descriptor().stat_keys;
  if (keys.empty()) return true;
  auto it = sample.stats.find(keys.front());
  if (it == sample.stats.end()) {
    throw MissingStat(name() + ": stat '" + keys.front() + "' missing; compute_stats was skipped");
  }
  double lo = param_double("min");
  double hi = param_double("max");
  return lo <= it->second && it->second <= hi;
}

FilterOutcome Filter::evaluate(const Sample& sample, ContextStore& ctx) const {
  Sample with = compute_stats(sample, ctx);
  FilterOutcome outcome;
  for (const auto& key : descriptor().stat_keys) {
    if (auto it = with.stats.find(key); it != with.stats.end()) outcome.stats_written[key] = it->second;
  }
  outcome.keep = keep(with);
  return outcome;
}

}  // namespace forge
