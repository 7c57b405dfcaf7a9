#include <algorithm>
#include <numeric>

#include "forge/error.hpp"
#include "forge/pipeline.hpp"

namespace forge::pipeline {

namespace {

std::vector<std::unique_ptr<Op>> instantiate(const Recipe& recipe, const OpRegistry& registry) {
  std::vector<std::unique_ptr<Op>> ops;
  ops.reserve(recipe.ops.size());
  for (const auto& spec : recipe.ops) ops.push_back(registry.create(spec.name, spec.params));
  return ops;
}

bool reorderable(const Op& op) {
  return op.category() == Category::Filter && op.descriptor().level == OpLevel::Sample;
}

Stage single(const Op& op, std::size_t index) {
  Stage s;
  s.ops = {index};
  s.contexts = op.descriptor().contexts;
  s.level = op.descriptor().level;
  s.cost = op.descriptor().cost;
  s.category = op.category();
  return s;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

/// Plans one maximal run of sample-level Filters, given as recipe indices.
std::vector<Stage> plan_run(const std::vector<std::unique_ptr<Op>>& ops, const std::vector<std::size_t>& run,
                            PlanOptions options) {
  std::vector<Stage> groups;
  if (options.fuse) {
    UnionFind uf(run.size());
    for (std::size_t i = 0; i < run.size(); ++i) {
      for (std::size_t j = i + 1; j < run.size(); ++j) {
        const Op& a = *ops[run[i]];
        const Op& b = *ops[run[j]];
        if (a.field() != b.field()) continue;
        const auto& ca = a.descriptor().contexts;
        const auto& cb = b.descriptor().contexts;
        bool shared = std::any_of(ca.begin(), ca.end(), [&](ContextKey k) { return cb.contains(k); });
        if (shared) uf.unite(i, j);
      }
    }
    std::vector<std::size_t> group_of(run.size(), SIZE_MAX);
    for (std::size_t i = 0; i < run.size(); ++i) {
      std::size_t root = uf.find(i);
      if (group_of[root] == SIZE_MAX) {
        group_of[root] = groups.size();
        groups.push_back(single(*ops[run[i]], run[i]));
      } else {
        Stage& g = groups[group_of[root]];
        g.ops.push_back(run[i]);
        const auto& ctx = ops[run[i]]->descriptor().contexts;
        g.contexts.insert(ctx.begin(), ctx.end());
      }
    }
    // Fused groups carry every member's work; they run last in their run.
    for (auto& g : groups) {
      if (g.fused()) g.cost = CostClass::Expensive;
    }
  } else {
    for (std::size_t idx : run) groups.push_back(single(*ops[idx], idx));
  }
  if (options.reorder) {
    std::stable_sort(groups.begin(), groups.end(),
                     [](const Stage& a, const Stage& b) { return static_cast<int>(a.cost) < static_cast<int>(b.cost); });
  }
  return groups;
}

}  // namespace

ExecutionPlan build_plan(const Recipe& recipe, const OpRegistry& registry, PlanOptions options) {
  ExecutionPlan plan;
  plan.ops = instantiate(recipe, registry);
  std::vector<std::size_t> run;
  auto flush = [&] {
    if (run.empty()) return;
    for (auto& s : plan_run(plan.ops, run, options)) plan.stages.push_back(std::move(s));
    run.clear();
  };
  for (std::size_t i = 0; i < plan.ops.size(); ++i) {
    if (reorderable(*plan.ops[i])) {
      run.push_back(i);
    } else {
      flush();
      plan.stages.push_back(single(*plan.ops[i], i));
    }
  }
  flush();
  return plan;
}

ExecutionPlan identity_plan(const Recipe& recipe, const OpRegistry& registry) {
  ExecutionPlan plan;
  plan.ops = instantiate(recipe, registry);
  for (std::size_t i = 0; i < plan.ops.size(); ++i) plan.stages.push_back(single(*plan.ops[i], i));
  return plan;
}

std::string ExecutionPlan::stage_label(std::size_t stage) const {
  const Stage& s = stages.at(stage);
  std::string label;
  for (std::size_t i = 0; i < s.ops.size(); ++i) {
    if (i) label += "+";
    label += ops[s.ops[i]]->name();
  }
  return s.fused() ? "fused[" + label + "]" : label;
}

std::vector<std::size_t> ExecutionPlan::flattened() const {
  std::vector<std::size_t> out;
  for (const auto& s : stages) out.insert(out.end(), s.ops.begin(), s.ops.end());
  return out;
}

std::size_t ExecutionPlan::max_stage_contexts() const {
  std::size_t m = 0;
  for (const auto& s : stages) m = std::max(m, s.contexts.size());
  return m;
}

Json ExecutionPlan::to_json() const {
  Json out = Json::array();
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const Stage& s = stages[i];
    Json members = Json::array();
    for (std::size_t idx : s.ops) {
      members.push_back({{"op", ops[idx]->name()}, {"recipe_index", idx}, {"params", ops[idx]->params()}});
    }
    Json ctx = Json::array();
    for (auto k : s.contexts) ctx.push_back(std::string(to_string(k)));
    out.push_back({{"stage", i},
                   {"label", stage_label(i)},
                   {"category", std::string(to_string(s.category))},
                   {"level", std::string(to_string(s.level))},
                   {"cost", std::string(to_string(s.cost))},
                   {"fused", s.fused()},
                   {"contexts", ctx},
                   {"ops", members}});
  }
  return out;
}

std::string ExecutionPlan::describe() const {
  std::string out;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const Stage& s = stages[i];
    out += "stage " + std::to_string(i) + ": " + stage_label(i) + "  [" + std::string(to_string(s.category)) + ", " +
           std::string(to_string(s.level)) + ", " + std::string(to_string(s.cost));
    if (!s.contexts.empty()) {
      out += ", contexts:";
      for (auto k : s.contexts) out += " " + std::string(to_string(k));
    }
    out += "]\n";
  }
  return out;
}

}  // namespace forge::pipeline
