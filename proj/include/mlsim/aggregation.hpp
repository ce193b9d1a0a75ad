#pragma once
// Applying aggregation functions: merge n conceptual agents into one
// aggregate (body-aggregating specs instantiate a new body in the output
// level and remove the member bodies; spirit-only specs merge the spirits
// and leave every body in place), capture the memorization record, and
// undo the whole thing on disaggregation.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mlsim/agg_spec.hpp"
#include "mlsim/world.hpp"

namespace mlsim {

// ---- combiners -------------------------------------------------------------

class CombinerRegistry {
public:
    CombinerRegistry() {
        add("mean", [](const std::vector<std::vector<double>>& members) {
            double sum = 0.0;
            std::size_t n = 0;
            for (const auto& vals : members)
                for (double v : vals) { sum += v; ++n; }
            return n ? sum / static_cast<double>(n) : 0.0;
        });
        add("sum", [](const std::vector<std::vector<double>>& members) {
            double sum = 0.0;
            for (const auto& vals : members)
                for (double v : vals) sum += v;
            return sum;
        });
        // Mean of the per-member product of its inputs, clamped to [0,1]:
        // the stamina-and-speed style compound where both factors are
        // normalized shares.
        add("mean_product", [](const std::vector<std::vector<double>>& members) {
            if (members.empty()) return 0.0;
            double sum = 0.0;
            for (const auto& vals : members) {
                double p = 1.0;
                for (double v : vals) p *= v;
                sum += p;
            }
            double mean = sum / static_cast<double>(members.size());
            return std::clamp(mean, 0.0, 1.0);
        });
        add("min", [](const std::vector<std::vector<double>>& members) {
            double m = 0.0;
            bool first = true;
            for (const auto& vals : members)
                for (double v : vals) { m = first ? v : std::min(m, v); first = false; }
            return m;
        });
        add("max", [](const std::vector<std::vector<double>>& members) {
            double m = 0.0;
            bool first = true;
            for (const auto& vals : members)
                for (double v : vals) { m = first ? v : std::max(m, v); first = false; }
            return m;
        });
    }

    void add(const std::string& name, CombinerFn fn) { fns_[name] = std::move(fn); }

    // "slot:<Class>" resolves dynamically: the single value of the [1;1]
    // member of that class (used to hand a leader's route to the aggregate).
    CombinerFn resolve(const std::string& name) const {
        if (name.rfind("slot:", 0) == 0) {
            return [](const std::vector<std::vector<double>>& members) {
                if (members.size() != 1 || members.front().size() != 1)
                    throw Error(Errc::class_mismatch, "slot combiner expects exactly one member value");
                return members.front().front();
            };
        }
        auto it = fns_.find(name);
        if (it == fns_.end()) throw Error(Errc::unknown_reference, "unknown combiner '" + name + "'");
        return it->second;
    }

private:
    std::map<std::string, CombinerFn> fns_;
};

// ---- slot matching ----------------------------------------------------------

namespace detail {

// Partitions `members` by slot class and checks the cardinality intervals.
// Slot classes must be distinct, so the assignment is unambiguous.
inline std::vector<std::vector<AgentId>> assign_slots(const AggregationFunctionSpec& spec,
                                                      const World& world,
                                                      const std::vector<AgentId>& members) {
    {
        std::vector<std::string> classes;
        for (const auto& s : spec.members) classes.push_back(s.class_name);
        std::sort(classes.begin(), classes.end());
        if (std::adjacent_find(classes.begin(), classes.end()) != classes.end())
            throw Error(Errc::class_mismatch, "spec '" + spec.name + "' repeats a member class across slots");
    }
    std::vector<std::vector<AgentId>> buckets(spec.members.size());
    for (AgentId id : members) {
        const SpiritAgent& s = world.spirit(id);
        bool placed = false;
        for (std::size_t i = 0; i < spec.members.size(); ++i) {
            if (spec.members[i].class_name == s.class_name) {
                buckets[i].push_back(id);
                placed = true;
                break;
            }
        }
        if (!placed)
            throw Error(Errc::class_mismatch, "agent " + std::to_string(id) + " of class '" + s.class_name +
                                                  "' matches no member slot of '" + spec.name + "'");
    }
    for (std::size_t i = 0; i < spec.members.size(); ++i) {
        const MemberSlot& slot = spec.members[i];
        auto n = static_cast<int>(buckets[i].size());
        if (n < slot.min || n > slot.max)
            throw Error(Errc::cardinality, "spec '" + spec.name + "': " + std::to_string(n) + " member(s) of class '" +
                                               slot.class_name + "', interval is [" + std::to_string(slot.min) +
                                               ";" + std::to_string(slot.max) + "]");
        std::sort(buckets[i].begin(), buckets[i].end());
    }
    return buckets;
}

// The single body a member contributes to a body-aggregating spec. Members
// must be fully consumed, so any body outside the slot level is an error.
inline BodyId slot_body(const World& world, AgentId agent, const LevelId& slot_level,
                        const std::string& spec_name) {
    std::vector<BodyId> owned = world.bodies_of(agent);
    if (owned.size() != 1)
        throw Error(Errc::member_state, "spec '" + spec_name + "': agent " + std::to_string(agent) +
                                            " owns " + std::to_string(owned.size()) +
                                            " bodies; body-aggregating members must own exactly one");
    const BodyAgent& b = world.body(owned.front());
    if (b.level != slot_level)
        throw Error(Errc::member_state, "spec '" + spec_name + "': body of agent " + std::to_string(agent) +
                                            " is in '" + b.level.name + "', slot requires '" + slot_level.name + "'");
    if (!b.active)
        throw Error(Errc::member_state, "spec '" + spec_name + "': body of agent " + std::to_string(agent) +
                                            " is inactive");
    return owned.front();
}

inline MemberView member_view(const World& world, AgentId agent, const std::optional<LevelId>& slot_level) {
    MemberView v;
    v.agent = agent;
    const SpiritAgent& s = world.spirit(agent);
    v.class_name = s.class_name;
    v.internal = s.internal;
    if (slot_level) {
        for (BodyId bid : world.bodies_of(agent)) {
            const BodyAgent& b = world.body(bid);
            if (b.level == *slot_level) { v.external = b.external; break; }
        }
    } else {
        // Spirit-only: expose the first body's external state (id order) so
        // affinity on positions still works.
        auto owned = world.bodies_of(agent);
        if (!owned.empty()) v.external = world.body(owned.front()).external;
    }
    return v;
}

}  // namespace detail

// ---- subfunctions ------------------------------------------------------------

// Evaluates one subfunction over the member views: gathers each member's
// input values (the entries matching its class, declaration order) and
// hands the per-member vectors to the combiner.
inline std::pair<std::string, double> apply_subfunction(const SubfunctionSpec& sub,
                                                        const std::vector<MemberView>& members) {
    if (!sub.combiner) throw Error(Errc::unknown_reference, "subfunction '" + sub.name + "' has no combiner bound");
    std::vector<std::vector<double>> inputs;
    for (const auto& m : members) {
        std::vector<double> vals;
        for (const auto& in : sub.inputs) {
            if (in.class_name != "*" && in.class_name != m.class_name) continue;
            const double* v = find_member_variable(m, in.variable);
            if (!v)
                throw Error(Errc::member_state, "subfunction '" + sub.name + "': member agent " +
                                                    std::to_string(m.agent) + " has no variable '" + in.variable + "'");
            vals.push_back(*v);
        }
        if (!vals.empty()) inputs.push_back(std::move(vals));
    }
    return {sub.output_variable, sub.combiner(inputs)};
}

// ---- memorization -------------------------------------------------------------

// Captures the per-member variable snapshot relative to the freshly computed
// aggregate state. Pure data; never updated while the aggregate runs.
inline void memorize(const MemorizationSpec& spec, const std::vector<MemberView>& members,
                     const AttrMap& aggregate_external, const AttrMap& aggregate_internal,
                     MemorizationRecord& record) {
    auto aggregate_value = [&](const std::string& var) -> double {
        if (auto it = aggregate_external.find(var); it != aggregate_external.end()) return it->second;
        if (auto it = aggregate_internal.find(var); it != aggregate_internal.end()) return it->second;
        throw Error(Errc::member_state, "memorization: aggregate has no variable '" + var + "'");
    };
    for (std::size_t i = 0; i < members.size(); ++i) {
        const MemberView& m = members[i];
        MemberMemo& memo = record.members[i];
        for (const auto& rule : spec.offsets) {
            const AttrMap& side = rule.internal ? m.internal : m.external;
            auto it = side.find(rule.member_variable);
            if (it == side.end())
                throw Error(Errc::member_state, "memorization: member agent " + std::to_string(m.agent) +
                                                    " has no variable '" + rule.member_variable + "'");
            double offset = it->second - aggregate_value(rule.aggregate_variable);
            (rule.internal ? memo.internal_offsets : memo.external_offsets)[rule.member_variable] = offset;
        }
        for (const auto& var : spec.external_absolutes) {
            auto it = m.external.find(var);
            if (it != m.external.end()) memo.external_absolutes[var] = it->second;
        }
        for (const auto& var : spec.internal_absolutes) {
            auto it = m.internal.find(var);
            if (it != m.internal.end()) memo.internal_absolutes[var] = it->second;
        }
    }
    record.has_variable_snapshot = true;
}

// ---- aggregation ---------------------------------------------------------------

struct AggregateResult {
    AgentId aggregate;
    std::optional<BodyId> aggregate_body;  // absent for spirit-only specs
    MemorizationRecord record;             // also stored in the aggregate's provenance
    std::vector<AgentId> consumed;
};

// Applies the aggregation function to `members` (conceptual agent handles).
// Body-aggregating: spirits merge, one aggregate body appears in the output
// level, member bodies leave their levels. Spirit-only: one merged spirit
// takes over the unchanged member bodies. n conceptual agents become 1.
inline AggregateResult aggregate(World& world, const AggregationFunctionSpec& spec,
                                 std::vector<AgentId> members, Rational now) {
    std::sort(members.begin(), members.end());
    for (AgentId id : members)
        if (!world.has_agent(id))
            throw Error(Errc::unknown_reference, "spec '" + spec.name + "': member agent " + std::to_string(id) +
                                                     " does not exist (already aggregated?)");
    auto buckets = detail::assign_slots(spec, world, members);

    // Views and (for body specs) the consumed bodies, slot by slot.
    std::vector<MemberView> views;
    std::vector<std::optional<LevelId>> view_levels;
    std::vector<std::vector<BodyId>> member_bodies;  // parallel to views
    for (std::size_t i = 0; i < spec.members.size(); ++i) {
        const MemberSlot& slot = spec.members[i];
        if (spec.spirit_only() != !slot.level.has_value())
            throw Error(Errc::class_mismatch, "spec '" + spec.name + "': slot levels must all be present "
                                              "(body-aggregating) or all absent (spirit-only)");
        for (AgentId id : buckets[i]) {
            views.push_back(detail::member_view(world, id, slot.level));
            view_levels.push_back(slot.level);
            if (slot.level) {
                member_bodies.push_back({detail::slot_body(world, id, *slot.level, spec.name)});
            } else {
                member_bodies.push_back(world.bodies_of(id));
            }
        }
    }

    // Aggregate state from the subfunctions.
    AttrMap agg_external, agg_internal;
    for (const auto& sub : spec.subfunctions) {
        auto [var, value] = apply_subfunction(sub, views);
        (sub.target == StateTarget::external ? agg_external : agg_internal)[var] = value;
    }

    // Bookkeeping record: always captured. Variable snapshots only with a
    // memorization spec.
    MemorizationRecord record{spec.name, {}, now, false};
    for (std::size_t i = 0; i < views.size(); ++i) {
        MemberMemo memo;
        memo.class_name = views[i].class_name;
        memo.level = view_levels[i];
        if (!view_levels[i]) memo.body_ids = member_bodies[i];
        const auto& prov = world.spirit(views[i].agent).aggregate_of;
        if (prov) memo.nested = std::make_shared<AggregateProvenance>(*prov);
        record.members.push_back(std::move(memo));
    }
    if (spec.memorization) memorize(*spec.memorization, views, agg_external, agg_internal, record);

    std::string aggregate_class;
    if (spec.spirit_only()) {
        aggregate_class = spec.merged_class.empty() ? spec.members.front().class_name : spec.merged_class;
    } else {
        aggregate_class = spec.output->class_name;
    }

    AggregateResult result{0, std::nullopt, record, members};

    // Commit. New spirit first, then move or remove the bodies, then drop
    // the member spirits.
    AgentId aid = world.allocate_agent_id();
    SpiritAgent merged{aid, aggregate_class, agg_internal,
                       AggregateProvenance{spec.name, record}};
    world.insert_spirit(std::move(merged));
    result.aggregate = aid;

    if (spec.spirit_only()) {
        for (const auto& bodies : member_bodies)
            for (BodyId bid : bodies) world.reassign_body(bid, aid);
    } else {
        for (const auto& bodies : member_bodies)
            for (BodyId bid : bodies) world.erase_body(bid);
        BodyId bid = world.allocate_body_id();
        world.insert_body(BodyAgent{bid, aid, aggregate_class, spec.output->level, agg_external, true});
        result.aggregate_body = bid;
    }
    for (AgentId id : members) world.erase_spirit(id);

    return result;
}

// ---- disaggregation -------------------------------------------------------------

namespace detail {

inline const std::vector<RestoreRule>* rules_for(const DisaggregationSpec& spec, const std::string& cls) {
    for (const auto& mr : spec.per_class)
        if (mr.class_name == cls) return &mr.rules;
    return nullptr;
}

}  // namespace detail

// Recreates the member agents from the aggregate's current state plus the
// record: offset rules land members relative to where the aggregate moved,
// absolutes restore retained values, copies follow the aggregate, and the
// spec's default layout stands in when no variable snapshot was taken.
// The merged spirit's internal state seeds every recreated spirit.
inline std::vector<AgentId> disaggregate(World& world, const AggregationFunctionSpec& spec, AgentId aggregate_id,
                                         const MemorizationRecord* record_override, Rational now) {
    if (!world.has_agent(aggregate_id))
        throw Error(Errc::unknown_reference, "no aggregate agent " + std::to_string(aggregate_id));
    const SpiritAgent& merged = world.spirit(aggregate_id);
    if (!merged.aggregate_of)
        throw Error(Errc::record_mismatch, "agent " + std::to_string(aggregate_id) + " is not an aggregate");
    if (merged.aggregate_of->spec_name != spec.name)
        throw Error(Errc::record_mismatch, "agent " + std::to_string(aggregate_id) + " was produced by '" +
                                               merged.aggregate_of->spec_name + "', not '" + spec.name + "'");
    const MemorizationRecord& record = record_override ? *record_override : merged.aggregate_of->record;
    if (record.function_name != spec.name)
        throw Error(Errc::record_mismatch, "record of '" + record.function_name + "' used with spec '" +
                                               spec.name + "'");

    // Current aggregate state, both sides, for copy/offset sources.
    AttrMap agg_internal = merged.internal;
    AttrMap agg_external;
    std::vector<BodyId> aggregate_bodies = world.bodies_of(aggregate_id);
    if (!spec.spirit_only()) {
        if (aggregate_bodies.size() != 1)
            throw Error(Errc::record_mismatch, "aggregate " + std::to_string(aggregate_id) +
                                                   " should own exactly one body");
        agg_external = world.body(aggregate_bodies.front()).external;
    }
    auto aggregate_value = [&](const std::string& var) -> double {
        if (auto it = agg_external.find(var); it != agg_external.end()) return it->second;
        if (auto it = agg_internal.find(var); it != agg_internal.end()) return it->second;
        throw Error(Errc::member_state, "disaggregation: aggregate has no variable '" + var + "'");
    };

    std::vector<AgentId> recreated;
    for (std::size_t i = 0; i < record.members.size(); ++i) {
        const MemberMemo& memo = record.members[i];
        AttrMap external, internal = agg_internal;  // spirit split: clone the merged mind

        const std::vector<RestoreRule>* rules = detail::rules_for(spec.disaggregation, memo.class_name);
        if (rules) {
            for (const auto& rule : *rules) {
                AttrMap& target = rule.internal ? internal : external;
                const AttrMap& offsets = rule.internal ? memo.internal_offsets : memo.external_offsets;
                const AttrMap& absolutes = rule.internal ? memo.internal_absolutes : memo.external_absolutes;
                switch (rule.kind) {
                    case RestoreRule::Kind::copy_aggregate:
                        target[rule.member_variable] = aggregate_value(rule.aggregate_variable.empty()
                                                                           ? rule.member_variable
                                                                           : rule.aggregate_variable);
                        break;
                    case RestoreRule::Kind::offset_from_memo: {
                        double base = aggregate_value(rule.aggregate_variable.empty() ? rule.member_variable
                                                                                      : rule.aggregate_variable);
                        if (auto it = offsets.find(rule.member_variable); it != offsets.end()) {
                            target[rule.member_variable] = base + it->second;
                        } else {
                            // No snapshot: line up behind the aggregate.
                            double off = rule.member_variable == spec.disaggregation.fallback.axis_variable
                                             ? -spec.disaggregation.fallback.spacing * static_cast<double>(i)
                                             : 0.0;
                            target[rule.member_variable] = base + off;
                        }
                        break;
                    }
                    case RestoreRule::Kind::absolute_from_memo:
                        if (auto it = absolutes.find(rule.member_variable); it != absolutes.end())
                            target[rule.member_variable] = it->second;
                        break;
                    case RestoreRule::Kind::constant:
                        target[rule.member_variable] = rule.constant;
                        break;
                }
            }
        }
        // Retained values with no explicit rule still restore verbatim.
        for (const auto& [var, v] : memo.external_absolutes)
            if (!external.count(var)) external[var] = v;
        for (const auto& [var, v] : memo.internal_absolutes)
            if (!internal.count(var)) internal[var] = v;

        AgentId aid = world.allocate_agent_id();
        SpiritAgent spirit{aid, memo.class_name, std::move(internal), std::nullopt};
        if (memo.nested) spirit.aggregate_of = *memo.nested;
        world.insert_spirit(std::move(spirit));

        if (memo.level) {
            BodyId bid = world.allocate_body_id();
            world.insert_body(BodyAgent{bid, aid, memo.class_name, *memo.level, std::move(external), true});
        } else {
            for (BodyId bid : memo.body_ids) world.reassign_body(bid, aid);
        }
        recreated.push_back(aid);
    }

    if (!spec.spirit_only())
        for (BodyId bid : aggregate_bodies) world.erase_body(bid);
    world.erase_spirit(aggregate_id);
    return recreated;
}

// The multiset of base-level (class, count) pairs the world represents,
// unfolding aggregates through their records. Invariant under aggregate/
// disaggregate pairs.
inline std::map<std::string, std::size_t> represented_members(const World& world) {
    std::map<std::string, std::size_t> counts;
    std::function<void(const std::string&, const AggregateProvenance*)> count =
        [&](const std::string& cls, const AggregateProvenance* prov) {
            if (!prov) {
                ++counts[cls];
                return;
            }
            for (const auto& memo : prov->record.members)
                count(memo.class_name, memo.nested ? memo.nested.get() : nullptr);
        };
    for (const auto& [id, s] : world.spirits())
        count(s.class_name, s.aggregate_of ? &*s.aggregate_of : nullptr);
    return counts;
}

}  // namespace mlsim
