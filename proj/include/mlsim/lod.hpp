#pragma once
// When to change the level of detail: affinity scoring of candidate member
// groups, the three spec-selection strategies (best group anywhere, a fixed
// spec order, a partial order mixing both), and the policy tick the
// scheduler runs between level steps.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mlsim/aggregation.hpp"
#include "mlsim/agg_spec.hpp"
#include "mlsim/runlog.hpp"
#include "mlsim/world.hpp"

namespace mlsim {

// ---- affinity ---------------------------------------------------------------

namespace detail {

inline double member_distance(const MemberView& a, const MemberView& b,
                              const std::vector<std::string>& variables) {
    double sq = 0.0;
    for (const auto& var : variables) {
        const double* va = find_member_variable(a, var);
        const double* vb = find_member_variable(b, var);
        double da = va ? *va : 0.0, db = vb ? *vb : 0.0;
        sq += (da - db) * (da - db);
    }
    return std::sqrt(sq);
}

}  // namespace detail

class AffinityRegistry {
public:
    using Factory = std::function<AffinityFn(const AffinityFunction&)>;

    AffinityRegistry() {
        // Pairwise normalized inverse distance over the declared variables,
        // averaged over the group. Identical states score 1.
        add("inverse_distance", [](const AffinityFunction& cfg) {
            auto vars = cfg.variables;
            double scale = cfg.scale > 0 ? cfg.scale : 1.0;
            return [vars, scale](const std::vector<MemberView>& group) {
                if (group.size() < 2) return 1.0;
                double sum = 0.0;
                std::size_t pairs = 0;
                for (std::size_t i = 0; i < group.size(); ++i)
                    for (std::size_t j = i + 1; j < group.size(); ++j) {
                        sum += 1.0 / (1.0 + detail::member_distance(group[i], group[j], vars) / scale);
                        ++pairs;
                    }
                return sum / static_cast<double>(pairs);
            };
        });
    }

    void add(const std::string& name, Factory f) { factories_[name] = std::move(f); }

    AffinityFn resolve(const AffinityFunction& cfg) const {
        auto it = factories_.find(cfg.name);
        if (it == factories_.end())
            throw Error(Errc::unknown_reference, "unknown affinity function '" + cfg.name + "'");
        return it->second(cfg);
    }

private:
    std::map<std::string, Factory> factories_;
};

// ---- group enumeration & scoring ---------------------------------------------

struct ScoredGroup {
    std::vector<AgentId> members;  // sorted
    double score = 0.0;
};

namespace detail {

// All cardinality-feasible groups from the per-slot candidate lists, pruned
// by the diameter bound as they grow (radius <= 0 disables pruning, which
// makes enumeration exhaustive — the oracle-comparable configuration).
inline void enumerate_groups(const AggregationFunctionSpec& spec,
                             const std::vector<std::vector<AgentId>>& slot_candidates,
                             const std::map<AgentId, MemberView>& views,
                             const std::function<void(const std::vector<AgentId>&)>& emit) {
    std::vector<AgentId> current;
    std::vector<const MemberView*> current_views;

    std::function<void(std::size_t, std::size_t, int)> recurse = [&](std::size_t slot, std::size_t from,
                                                                     int picked) {
        const bool slot_done = picked >= spec.members[slot].min;
        const bool slot_full = picked >= spec.members[slot].max;
        if (slot_done) {
            if (slot + 1 == spec.members.size()) {
                emit(current);
            } else {
                recurse(slot + 1, 0, 0);
            }
            if (slot_full) return;
        }
        const auto& candidates = slot_candidates[slot];
        for (std::size_t i = from; i < candidates.size(); ++i) {
            const MemberView& v = views.at(candidates[i]);
            if (spec.radius > 0) {
                bool ok = std::all_of(current_views.begin(), current_views.end(), [&](const MemberView* o) {
                    return member_distance(*o, v, spec.affinity.variables) <= spec.radius;
                });
                if (!ok) continue;
            }
            current.push_back(candidates[i]);
            current_views.push_back(&v);
            recurse(slot, i + 1, picked + 1);
            current.pop_back();
            current_views.pop_back();
        }
    };
    recurse(0, 0, 0);
}

}  // namespace detail

// Scores every feasible group from `pool` against the spec's affinity and
// returns those at or above the threshold, best first; ties break on the
// member-id sequence so the result is independent of pool input order.
inline std::vector<ScoredGroup> score_groups(const World& world, const AggregationFunctionSpec& spec,
                                             const std::vector<AgentId>& pool) {
    if (!spec.affinity.score)
        throw Error(Errc::unknown_reference, "spec '" + spec.name + "' has no affinity function bound");

    std::map<AgentId, MemberView> views;
    std::vector<std::vector<AgentId>> slot_candidates(spec.members.size());
    std::set<AgentId> seen;
    for (AgentId id : pool) {
        if (!seen.insert(id).second || !world.has_agent(id)) continue;
        const SpiritAgent& s = world.spirit(id);
        for (std::size_t i = 0; i < spec.members.size(); ++i) {
            const MemberSlot& slot = spec.members[i];
            if (slot.class_name != s.class_name) continue;
            if (slot.level) {
                auto owned = world.bodies_of(id);
                if (owned.size() != 1) break;  // not fully consumable by a body spec
                const BodyAgent& b = world.body(owned.front());
                if (b.level != *slot.level || !b.active) break;
            }
            slot_candidates[i].push_back(id);
            views.emplace(id, detail::member_view(world, id, slot.level));
            break;
        }
    }
    for (std::size_t i = 0; i < spec.members.size(); ++i) {
        if (static_cast<int>(slot_candidates[i].size()) < spec.members[i].min) return {};
        std::sort(slot_candidates[i].begin(), slot_candidates[i].end());
    }

    std::vector<ScoredGroup> out;
    detail::enumerate_groups(spec, slot_candidates, views, [&](const std::vector<AgentId>& group) {
        std::vector<MemberView> group_views;
        group_views.reserve(group.size());
        for (AgentId id : group) group_views.push_back(views.at(id));
        double score = spec.affinity.score(group_views);
        if (score >= spec.threshold) {
            std::vector<AgentId> sorted = group;
            std::sort(sorted.begin(), sorted.end());
            out.push_back({std::move(sorted), score});
        }
    });
    std::sort(out.begin(), out.end(), [](const ScoredGroup& a, const ScoredGroup& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.members < b.members;
    });
    return out;
}

// ---- strategies ----------------------------------------------------------------

enum class SelectionStrategy { global_best, fixed_order, partial_order };

inline SelectionStrategy parse_strategy(const std::string& name) {
    if (name == "GlobalBest") return SelectionStrategy::global_best;
    if (name == "FixedOrder") return SelectionStrategy::fixed_order;
    if (name == "PartialOrder") return SelectionStrategy::partial_order;
    throw Error(Errc::parse, "unknown selection strategy '" + name + "'");
}

struct AppliedAggregation {
    std::string spec_name;
    std::vector<AgentId> members;
    AgentId aggregate = 0;
    double score = 0.0;
};

namespace detail {

inline void remove_from_pool(std::vector<AgentId>& pool, const std::vector<AgentId>& consumed) {
    pool.erase(std::remove_if(pool.begin(), pool.end(),
                              [&](AgentId id) {
                                  return std::find(consumed.begin(), consumed.end(), id) != consumed.end();
                              }),
               pool.end());
}

// Instantiate the best group across `specs`, remove its members from the
// pool, repeat until no group clears its threshold. Spec-name order breaks
// exact score ties.
inline void global_best_round(World& world, const std::vector<const AggregationFunctionSpec*>& specs,
                              std::vector<AgentId>& pool, Rational now,
                              std::vector<AppliedAggregation>& applied) {
    for (;;) {
        const AggregationFunctionSpec* best_spec = nullptr;
        const ScoredGroup* best = nullptr;
        std::vector<std::vector<ScoredGroup>> all;
        all.reserve(specs.size());
        for (const auto* spec : specs) all.push_back(score_groups(world, *spec, pool));
        for (std::size_t i = 0; i < specs.size(); ++i) {
            if (all[i].empty()) continue;
            const ScoredGroup& g = all[i].front();
            if (!best || g.score > best->score ||
                (g.score == best->score && specs[i]->name < best_spec->name)) {
                best = &g;
                best_spec = specs[i];
            }
        }
        if (!best) return;
        AggregateResult r = aggregate(world, *best_spec, best->members, now);
        applied.push_back({best_spec->name, best->members, r.aggregate, best->score});
        remove_from_pool(pool, best->members);
    }
}

}  // namespace detail

// The three selection possibilities. GlobalBest: highest-affinity group
// across all specs until none remains. FixedOrder: exhaust each spec in the
// given order. PartialOrder: walk the precedence relation in topological
// layers, running GlobalBest among each layer's incomparable specs.
inline std::vector<AppliedAggregation> select_and_apply(
    World& world, SelectionStrategy strategy, const std::vector<const AggregationFunctionSpec*>& specs,
    const std::vector<std::pair<std::string, std::string>>& precedence, std::vector<AgentId> pool,
    Rational now) {
    std::vector<AppliedAggregation> applied;
    switch (strategy) {
        case SelectionStrategy::global_best:
            detail::global_best_round(world, specs, pool, now, applied);
            break;

        case SelectionStrategy::fixed_order:
            for (const auto* spec : specs) {
                std::vector<const AggregationFunctionSpec*> one{spec};
                detail::global_best_round(world, one, pool, now, applied);
            }
            break;

        case SelectionStrategy::partial_order: {
            std::map<std::string, std::set<std::string>> preds;
            std::map<std::string, const AggregationFunctionSpec*> by_name;
            for (const auto* spec : specs) {
                by_name[spec->name] = spec;
                preds[spec->name];
            }
            for (const auto& [before, after] : precedence) {
                if (by_name.count(before) && by_name.count(after)) preds[after].insert(before);
            }
            std::set<std::string> done;
            while (done.size() < by_name.size()) {
                // Current layer: every unprocessed spec with no unprocessed
                // predecessor. They are mutually incomparable.
                std::vector<const AggregationFunctionSpec*> layer;
                for (const auto& [name, spec] : by_name) {
                    if (done.count(name)) continue;
                    bool ready = std::all_of(preds[name].begin(), preds[name].end(),
                                             [&](const std::string& p) { return done.count(p) != 0; });
                    if (ready) layer.push_back(spec);
                }
                if (layer.empty())
                    throw Error(Errc::precedence, "cyclic precedence relation between aggregation functions");
                detail::global_best_round(world, layer, pool, now, applied);
                for (const auto* spec : layer) done.insert(spec->name);
            }
            break;
        }
    }
    return applied;
}

// ---- policy tick ----------------------------------------------------------------

// A spatial rectangle in which entities must stay at full detail. Without a
// level filter it applies to every level sharing the coordinate frame, so
// one zone both triggers aggregate disaggregation and keeps the recreated
// members from re-aggregating while inside.
struct DetailZone {
    std::optional<LevelId> level;  // absent: any level
    std::string x_var = "x";
    std::string y_var = "y";
    double x_min = 0, x_max = 0, y_min = 0, y_max = 0;

    bool contains(const AttrMap& external) const {
        auto x = external.find(x_var);
        auto y = external.find(y_var);
        double xv = x != external.end() ? x->second : 0.0;
        double yv = y != external.end() ? y->second : 0.0;
        return xv >= x_min && xv <= x_max && yv >= y_min && yv <= y_max;
    }
};

using DisaggregationTrigger = std::function<bool(const World&, AgentId aggregate)>;

struct LodPolicy {
    SelectionStrategy strategy = SelectionStrategy::global_best;
    std::vector<const AggregationFunctionSpec*> specs;  // active, in declared order
    std::vector<std::pair<std::string, std::string>> precedence;
    std::vector<DetailZone> zones;
    std::vector<DisaggregationTrigger> triggers;  // extra scenario predicates
    Rational period{1, 2};
    Rational refractory{0};
};

struct LodTickResult {
    std::vector<AppliedAggregation> aggregations;
    std::vector<std::pair<AgentId, std::vector<AgentId>>> disaggregations;  // aggregate -> recreated
};

namespace detail {

inline const AggregationFunctionSpec* spec_by_name(const LodPolicy& policy, const std::string& name) {
    for (const auto* s : policy.specs)
        if (s->name == name) return s;
    return nullptr;
}

inline bool in_any_zone(const LodPolicy& policy, const World& world, BodyId body) {
    const BodyAgent& b = world.body(body);
    for (const auto& zone : policy.zones)
        if ((!zone.level || *zone.level == b.level) && zone.contains(b.external)) return true;
    return false;
}

}  // namespace detail

// Runs between level steps: disaggregation triggers first (zone entry and
// scenario predicates), then aggregation per the configured strategy over
// the eligible pool. Eligible = active, outside every detail zone, past its
// refractory window.
inline LodTickResult lod_policy_tick(World& world, const LodPolicy& policy, Rational now,
                                     std::map<AgentId, Rational>& refractory_until, RunLog* log) {
    LodTickResult result;

    // Disaggregation pass.
    std::vector<AgentId> to_split;
    for (const auto& [id, s] : world.spirits()) {
        if (!s.aggregate_of) continue;
        const AggregationFunctionSpec* spec = detail::spec_by_name(policy, s.aggregate_of->spec_name);
        if (!spec) continue;
        bool fire = false;
        for (BodyId bid : world.bodies_of(id))
            if (detail::in_any_zone(policy, world, bid)) { fire = true; break; }
        for (const auto& trigger : policy.triggers)
            if (!fire && trigger && trigger(world, id)) fire = true;
        if (fire) to_split.push_back(id);
    }
    for (AgentId id : to_split) {
        std::string spec_name = world.spirit(id).aggregate_of->spec_name;
        const AggregationFunctionSpec* spec = detail::spec_by_name(policy, spec_name);
        std::vector<AgentId> recreated = disaggregate(world, *spec, id, nullptr, now);
        for (AgentId rid : recreated) refractory_until[rid] = now + policy.refractory;
        if (log) {
            std::string ids;
            for (AgentId rid : recreated) ids += (ids.empty() ? "" : "|") + std::to_string(rid);
            log->event(now, spec->spirit_only() ? LevelId{} : spec->output->level, "disaggregate",
                       std::to_string(id), spec_name, ids);
            log->bump("disaggregations");
        }
        result.disaggregations.push_back({id, std::move(recreated)});
    }

    // Aggregation pass over the eligible pool.
    std::vector<AgentId> pool;
    for (const auto& [id, s] : world.spirits()) {
        auto ref = refractory_until.find(id);
        if (ref != refractory_until.end() && now < ref->second) continue;
        bool zoned = false;
        for (BodyId bid : world.bodies_of(id))
            if (detail::in_any_zone(policy, world, bid)) { zoned = true; break; }
        if (!zoned) pool.push_back(id);
    }
    result.aggregations =
        select_and_apply(world, policy.strategy, policy.specs, policy.precedence, std::move(pool), now);
    if (log) {
        for (const auto& a : result.aggregations) {
            std::string ids;
            for (AgentId mid : a.members) ids += (ids.empty() ? "" : "|") + std::to_string(mid);
            const AggregationFunctionSpec* spec = detail::spec_by_name(policy, a.spec_name);
            log->event(now, spec && !spec->spirit_only() ? spec->output->level : LevelId{}, "aggregate",
                       std::to_string(a.aggregate), a.spec_name, ids);
            log->bump("aggregations");
        }
    }

    // Records for agents that no longer exist are dead weight; drop them.
    for (auto it = refractory_until.begin(); it != refractory_until.end();)
        it = world.has_agent(it->first) ? std::next(it) : refractory_until.erase(it);

    return result;
}

}  // namespace mlsim
