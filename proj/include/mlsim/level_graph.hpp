#pragma once
// Levels and the three inter-level relations (influence, perception,
// hierarchy), plus static well-formedness checks on the hierarchical graph:
//   - a simple edge (a,b) is an inclusion link: a nests inside b
//   - a symmetric pair (a,b),(b,a) is a complementarity link: same scale,
//     different domain of interest
//   - a loop (a,a) marks spirit-only aggregation inside the level
// Rule 1: inclusion and complementarity are transitive.
// Rule 2: no level may include itself, directly or transitively.
// Rule 3: no two distinct levels may be both nested and complementary.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mlsim/agg_spec.hpp"
#include "mlsim/core.hpp"

namespace mlsim {

using LevelPair = std::pair<LevelId, LevelId>;

// Opaque scale descriptors; compared only for equality (complementary
// levels must sit at the same scale).
struct Extent {
    std::string spatial;
    std::string temporal;
    auto operator<=>(const Extent&) const = default;
};

struct HierarchicalModel {
    std::string name;
    std::map<LevelId, Extent> levels;
    std::set<LevelPair> influence_edges;   // (a,b): agents in a may act in b
    std::set<LevelPair> perception_edges;  // (a,b): agents in a may perceive b
    std::map<LevelPair, std::vector<std::string>> hierarchy_edges;  // edge -> labels

    // Declarative LOD configuration carried by the model file.
    std::vector<AggregationFunctionSpec> specs;
    std::string strategy = "GlobalBest";
    std::vector<std::pair<std::string, std::string>> precedence;  // (before, after)

    bool has_level(const LevelId& l) const { return levels.count(l) != 0; }

    bool influences(const LevelId& from, const LevelId& to) const {
        return from == to || influence_edges.count({from, to}) != 0;
    }
    bool perceives(const LevelId& from, const LevelId& to) const {
        return from == to || perception_edges.count({from, to}) != 0;
    }
};

enum class RelationKind { inclusion, complementarity, spirit_loop };

struct LevelRelation {
    RelationKind kind;
    LevelId source;
    LevelId target;  // == source for spirit loops; min-name endpoint first for complementarity
    auto operator<=>(const LevelRelation&) const = default;
};

// Maps every hierarchy edge to exactly one relation. (a,b)+(b,a) collapse to
// one complementarity; (a,a) is a spirit loop; the rest are inclusions.
inline std::vector<LevelRelation> classify_edges(const HierarchicalModel& model) {
    std::vector<LevelRelation> out;
    std::set<LevelPair> seen;
    for (const auto& [edge, labels] : model.hierarchy_edges) {
        const auto& [a, b] = edge;
        if (a == b) {
            out.push_back({RelationKind::spirit_loop, a, a});
        } else if (model.hierarchy_edges.count({b, a})) {
            LevelPair canon = a < b ? LevelPair{a, b} : LevelPair{b, a};
            if (seen.insert(canon).second)
                out.push_back({RelationKind::complementarity, canon.first, canon.second});
        } else {
            out.push_back({RelationKind::inclusion, a, b});
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct ClosureResult {
    std::set<LevelPair> inclusion_order;                  // transitive closure of inclusion links
    std::vector<std::vector<LevelId>> complementarity_classes;  // partition; singletons included
};

// Rule 1 applied: closes inclusion under transitivity and merges
// complementarity into equivalence classes (connected components).
inline ClosureResult transitive_closure(const HierarchicalModel& model) {
    std::vector<LevelId> ids;
    ids.reserve(model.levels.size());
    for (const auto& [l, _] : model.levels) ids.push_back(l);
    std::map<LevelId, std::size_t> index;
    for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;
    const std::size_t n = ids.size();

    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    std::vector<std::size_t> parent(n);
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };

    for (const auto& rel : classify_edges(model)) {
        auto si = index.find(rel.source);
        auto ti = index.find(rel.target);
        if (si == index.end() || ti == index.end()) continue;  // dangling endpoints are the validator's job
        if (rel.kind == RelationKind::inclusion) {
            reach[si->second][ti->second] = true;
        } else if (rel.kind == RelationKind::complementarity) {
            parent[find(si->second)] = find(ti->second);
        }
    }

    // Floyd-Warshall on the inclusion relation.
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            if (!reach[i][k]) continue;
            for (std::size_t j = 0; j < n; ++j)
                if (reach[k][j]) reach[i][j] = true;
        }

    ClosureResult res;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (reach[i][j]) res.inclusion_order.insert({ids[i], ids[j]});

    std::map<std::size_t, std::vector<LevelId>> classes;
    for (std::size_t i = 0; i < n; ++i) classes[find(i)].push_back(ids[i]);
    for (auto& [_, members] : classes) {
        std::sort(members.begin(), members.end());
        res.complementarity_classes.push_back(members);
    }
    std::sort(res.complementarity_classes.begin(), res.complementarity_classes.end());
    return res;
}

enum class ViolationKind {
    unknown_level,       // edge endpoint not declared
    missing_label,       // loop or simple edge without an aggregation label
    label_on_symmetric,  // complementarity pair carrying labels
    inclusion_cycle,     // Rule 2
    nested_and_complementary,  // Rule 3
    scale_mismatch,      // complementary levels with different extents
    unknown_label,       // label names no registered spec
    signature_mismatch,  // spec incompatible with every edge carrying its label
};

struct Violation {
    ViolationKind kind;
    std::string message;
    std::vector<LevelId> witness_cycle;        // inclusion_cycle
    std::optional<LevelPair> witness_pair;     // rule 3 / scale / edge-scoped kinds
    std::string witness_label;
};

struct ValidationReport {
    std::vector<Violation> violations;
    std::vector<std::string> warnings;
    bool ok() const { return violations.empty(); }
};

namespace detail {

// One directed cycle in the inclusion subgraph, as a closed vertex walk
// v0 -> ... -> v0. DFS with an explicit color array.
inline std::vector<LevelId> find_inclusion_cycle(const std::vector<LevelId>& ids,
                                                 const std::map<LevelId, std::vector<LevelId>>& adj) {
    std::map<LevelId, int> color;  // 0 white, 1 on stack, 2 done
    std::vector<LevelId> stack;
    std::vector<LevelId> cycle;

    std::function<bool(const LevelId&)> dfs = [&](const LevelId& v) {
        color[v] = 1;
        stack.push_back(v);
        if (auto it = adj.find(v); it != adj.end()) {
            for (const auto& w : it->second) {
                if (color[w] == 1) {
                    auto start = std::find(stack.begin(), stack.end(), w);
                    cycle.assign(start, stack.end());
                    cycle.push_back(w);
                    return true;
                }
                if (color[w] == 0 && dfs(w)) return true;
            }
        }
        stack.pop_back();
        color[v] = 2;
        return false;
    };

    for (const auto& v : ids)
        if (color[v] == 0 && dfs(v)) return cycle;
    return {};
}

inline std::string pair_text(const LevelPair& p) {
    return "(" + p.first.name + ", " + p.second.name + ")";
}

}  // namespace detail

// Rules 1-3 plus label placement and endpoint/scale checks. Violations are
// accumulated, not thrown: the report doubles as a modeling aid.
inline ValidationReport validate_hierarchical_graph(const HierarchicalModel& model) {
    ValidationReport report;

    auto check_endpoint = [&](const LevelId& l, const char* where) {
        if (model.has_level(l)) return;
        Violation v{ViolationKind::unknown_level,
                    std::string(where) + " edge endpoint '" + l.name + "' is not a declared level",
                    {}, std::nullopt, {}};
        report.violations.push_back(std::move(v));
    };
    for (const auto& [e, _] : model.hierarchy_edges) { check_endpoint(e.first, "hierarchy"); check_endpoint(e.second, "hierarchy"); }
    for (const auto& e : model.influence_edges)  { check_endpoint(e.first, "influence");  check_endpoint(e.second, "influence"); }
    for (const auto& e : model.perception_edges) { check_endpoint(e.first, "perceive");   check_endpoint(e.second, "perceive"); }

    // Label placement: symmetric pairs unlabeled, everything else labeled.
    for (const auto& [edge, labels] : model.hierarchy_edges) {
        const auto& [a, b] = edge;
        bool symmetric = a != b && model.hierarchy_edges.count({b, a}) != 0;
        if (symmetric && !labels.empty()) {
            report.violations.push_back({ViolationKind::label_on_symmetric,
                                         "complementarity pair " + detail::pair_text(edge) +
                                             " must not carry aggregation labels",
                                         {}, edge, labels.front()});
        } else if (!symmetric && labels.empty()) {
            report.violations.push_back({ViolationKind::missing_label,
                                         (a == b ? "loop " : "inclusion edge ") + detail::pair_text(edge) +
                                             " needs at least one aggregation function label",
                                         {}, edge, {}});
        }
    }

    // Rule 2 on the inclusion subgraph (loops and symmetric pairs removed:
    // loops mean spirit-only aggregation, not self-inclusion).
    std::vector<LevelId> ids;
    for (const auto& [l, _] : model.levels) ids.push_back(l);
    std::map<LevelId, std::vector<LevelId>> incl_adj;
    for (const auto& rel : classify_edges(model))
        if (rel.kind == RelationKind::inclusion && model.has_level(rel.source) && model.has_level(rel.target))
            incl_adj[rel.source].push_back(rel.target);
    if (auto cycle = detail::find_inclusion_cycle(ids, incl_adj); !cycle.empty()) {
        std::string msg = "level '" + cycle.front().name + "' is included in itself: ";
        for (std::size_t i = 0; i < cycle.size(); ++i) msg += (i ? " -> " : "") + cycle[i].name;
        report.violations.push_back({ViolationKind::inclusion_cycle, std::move(msg), std::move(cycle), std::nullopt, {}});
    }

    // Rule 3 on the closed relations, and scale equality within classes.
    auto closure = transitive_closure(model);
    std::map<LevelId, std::size_t> class_of;
    for (std::size_t c = 0; c < closure.complementarity_classes.size(); ++c)
        for (const auto& l : closure.complementarity_classes[c]) class_of[l] = c;
    for (const auto& [a, b] : closure.inclusion_order) {
        if (a != b && class_of.count(a) && class_of.count(b) && class_of[a] == class_of[b]) {
            report.violations.push_back({ViolationKind::nested_and_complementary,
                                         "levels " + detail::pair_text({a, b}) +
                                             " are both nested and complementary (Rule 3)",
                                         {}, LevelPair{a, b}, {}});
        }
    }
    for (const auto& cls : closure.complementarity_classes) {
        if (cls.size() < 2) continue;
        const auto& ref = model.levels.at(cls.front());
        for (std::size_t i = 1; i < cls.size(); ++i) {
            if (model.levels.at(cls[i]) != ref) {
                report.violations.push_back({ViolationKind::scale_mismatch,
                                             "complementary levels " + detail::pair_text({cls.front(), cls[i]}) +
                                                 " declare different extents",
                                             {}, LevelPair{cls.front(), cls[i]}, {}});
            }
        }
    }

    return report;
}

// Checks that every hierarchy-edge label names a registered spec whose
// signature fits at least one edge carrying it: loop labels bind spirit-only
// specs; inclusion-edge labels bind body specs aggregating from the edge
// source into the edge target. Warns when a body spec's member level cannot
// influence the output level (the relations are otherwise independent).
inline ValidationReport check_label_bindings(const HierarchicalModel& model,
                                             const std::vector<AggregationFunctionSpec>& registry) {
    ValidationReport report;
    std::map<std::string, const AggregationFunctionSpec*> by_name;
    for (const auto& s : registry) by_name[s.name] = &s;

    auto compatible = [](const AggregationFunctionSpec& spec, const LevelPair& edge) {
        if (edge.first == edge.second) return spec.spirit_only();
        if (spec.spirit_only() || !spec.output || spec.output->level != edge.second) return false;
        return std::any_of(spec.members.begin(), spec.members.end(), [&](const MemberSlot& m) {
            return m.level && *m.level == edge.first;
        });
    };

    for (const auto& [edge, labels] : model.hierarchy_edges) {
        for (const auto& label : labels) {
            auto it = by_name.find(label);
            if (it == by_name.end()) {
                report.violations.push_back({ViolationKind::unknown_label,
                                             "label '" + label + "' on edge " + detail::pair_text(edge) +
                                                 " names no registered aggregation function",
                                             {}, edge, label});
            } else if (!compatible(*it->second, edge)) {
                report.violations.push_back({ViolationKind::signature_mismatch,
                                             "aggregation function '" + label +
                                                 "' does not fit edge " + detail::pair_text(edge),
                                             {}, edge, label});
            }
        }
    }

    for (const auto& spec : registry) {
        if (spec.spirit_only() || !spec.output) continue;
        for (const auto& slot : spec.members) {
            if (slot.level && !model.influences(*slot.level, spec.output->level)) {
                report.warnings.push_back("spec '" + spec.name + "': member level '" + slot.level->name +
                                          "' has no influence edge to output level '" +
                                          spec.output->level.name + "'");
            }
        }
    }
    return report;
}

}  // namespace mlsim
