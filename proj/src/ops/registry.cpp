#include <algorithm>

#include "forge/error.hpp"
#include "forge/ops.hpp"

namespace forge {

bool param_type_accepts(ParamType type, const Json& value) {
  switch (type) {
    case ParamType::Int: return value.is_number_integer();
    case ParamType::Double: return value.is_number();
    case ParamType::Bool: return value.is_boolean();
    case ParamType::String: return value.is_string();
    case ParamType::StringList:
      return value.is_array() && std::all_of(value.begin(), value.end(), [](const Json& v) { return v.is_string(); });
  }
  return false;
}

void OpRegistry::register_op(OpDescriptor descriptor, OpFactory factory) {
  if (descriptor.name.empty()) throw ParamError("operator name is empty");
  if (entries_.contains(descriptor.name)) throw DuplicateName("operator '" + descriptor.name + "' already registered");
  if (descriptor.category == Category::Filter) {
    for (const auto& [name, entry] : entries_) {
      if (entry.descriptor.category != Category::Filter) continue;
      for (const auto& key : descriptor.stat_keys) {
        bool shared = std::find(entry.descriptor.stat_keys.begin(), entry.descriptor.stat_keys.end(), key) !=
                      entry.descriptor.stat_keys.end();
        if (shared && (descriptor.formula.empty() || descriptor.formula != entry.descriptor.formula)) {
          throw ConflictingStatKey("stat key '" + key + "' of '" + descriptor.name + "' is already written by '" +
                                   name + "' with a different formula");
        }
      }
    }
  }
  if ((descriptor.category == Category::Mapper || descriptor.category == Category::Filter) &&
      !descriptor.find_param("field")) {
    descriptor.params.push_back({"field", ParamType::String, descriptor.field, "target field path"});
  }
  for (const auto& p : descriptor.params) {
    if (!param_type_accepts(p.type, p.default_value)) {
      throw TypeMismatch("default of '" + descriptor.name + "." + p.name + "' does not match its type");
    }
  }
  std::string name = descriptor.name;
  entries_.emplace(std::move(name), RegistryEntry{std::move(descriptor), std::move(factory)});
}

const RegistryEntry* OpRegistry::find(std::string_view name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

const RegistryEntry& OpRegistry::at(std::string_view name) const {
  const RegistryEntry* e = find(name);
  if (!e) throw UnknownOp("unknown operator '" + std::string(name) + "'");
  return *e;
}

std::vector<const RegistryEntry*> OpRegistry::list(std::optional<std::string> tag) const {
  std::vector<const RegistryEntry*> out;
  for (const auto& [name, entry] : entries_) {
    if (tag && !entry.descriptor.tags.contains(*tag)) continue;
    out.push_back(&entry);
  }
  return out;
}

Json OpRegistry::resolve_params(std::string_view name, const Json& given) const {
  const RegistryEntry& entry = at(name);
  if (!given.is_null() && !given.is_object()) {
    throw TypeMismatch("parameters of '" + std::string(name) + "' must be a map");
  }
  Json resolved = Json::object();
  for (const auto& p : entry.descriptor.params) resolved[p.name] = p.default_value;
  if (given.is_object()) {
    for (const auto& [key, value] : given.items()) {
      const ParamSpec* spec = entry.descriptor.find_param(key);
      if (!spec) throw ParseError("unknown parameter '" + key + "' for operator '" + std::string(name) + "'");
      if (!param_type_accepts(spec->type, value)) {
        throw TypeMismatch("parameter '" + std::string(name) + "." + key + "' expects " +
                           std::string(to_string(spec->type)) + ", got " + value.dump());
      }
      // Normalize integers given for doubles so canonical forms agree.
      resolved[key] = spec->type == ParamType::Double ? Json(value.get<double>()) : value;
    }
  }
  if (auto f = resolved.find("field"); f != resolved.end()) FieldPath::parse(f->get<std::string>());
  return resolved;
}

std::unique_ptr<Op> OpRegistry::create(std::string_view name, const Json& params) const {
  const RegistryEntry& entry = at(name);
  return entry.factory(entry.descriptor, resolve_params(name, params));
}

OpRegistry OpRegistry::builtin() {
  OpRegistry registry;
  register_formatters(registry);
  register_mappers(registry);
  register_filters(registry);
  register_deduplicators(registry);
  return registry;
}

Json descriptor_to_json(const OpDescriptor& d) {
  Json params = Json::object();
  for (const auto& p : d.params) params[p.name] = p.default_value;
  Json param_types = Json::object();
  for (const auto& p : d.params) param_types[p.name] = std::string(to_string(p.type));
  Json contexts = Json::array();
  for (auto k : d.contexts) contexts.push_back(std::string(to_string(k)));
  Json out = Json::object();
  out["name"] = d.name;
  out["category"] = std::string(to_string(d.category));
  out["level"] = std::string(to_string(d.level));
  out["cost"] = std::string(to_string(d.cost));
  out["contexts"] = std::move(contexts);
  out["tags"] = d.tags;
  out["params"] = std::move(params);
  out["param_types"] = std::move(param_types);
  if (!d.stat_keys.empty()) out["stat_keys"] = d.stat_keys;
  if (!d.predicate.empty()) out["predicate"] = d.predicate;
  out["version"] = d.version;
  out["description"] = d.description;
  return out;
}

}  // namespace forge
