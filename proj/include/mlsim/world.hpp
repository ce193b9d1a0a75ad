#pragma once
// The live simulation state: spirits, bodies, per-level inert objects and
// environments, influence inboxes, and frequency bookkeeping. One level step
// runs in two phases: every active body perceives the instant-start snapshot
// and emits influences, then the reaction folds all influences into the
// level's state at once.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mlsim/agent.hpp"
#include "mlsim/level_graph.hpp"
#include "mlsim/rational.hpp"
#include "mlsim/runlog.hpp"

namespace mlsim {

struct BodySeed {
    LevelId level;
    AttrMap external;
};

// A_l(t) projection handed to the pure reaction function.
struct LevelState {
    LevelId level;
    std::map<BodyId, AttrMap> body_externals;
    AttrMap inert_objects;
};

struct ReactionOutcome {
    LevelState state;
    std::vector<std::pair<std::string, std::string>> conflicts;  // (where, variable)
};

struct LifeCycleResult {
    std::vector<Influence> influences;
    AttrMap internal;  // spirit state after the decision phase
};

// Frequency constraints: a level adopts the highest minimal frequency among
// its agents' functions, so per-class function minimums apply while a body
// of that class is active in the level. Influence demands name the level
// whose frequency must rise.
struct AgentFunctionConstraint {
    std::string class_name;
    std::string function_name;
    Rational min_hz;
};

struct WorldConfig {
    BehaviorRegistry behaviors;
    std::map<LevelId, EnvironmentFn> environments;
    std::map<std::string, ReactionPolicy> reaction_policies;  // keyed by variable name
    std::map<LevelId, Rational> base_frequencies;
    std::vector<AgentFunctionConstraint> agent_functions;
};

class World {
public:
    World(HierarchicalModel model, WorldConfig config)
        : model_(std::move(model)), config_(std::move(config)) {
        for (const auto& [l, _] : model_.levels) {
            inert_[l] = {};
            inbox_[l] = {};
        }
    }

    const HierarchicalModel& model() const { return model_; }
    const WorldConfig& config() const { return config_; }

    // ---- population -------------------------------------------------------

    AgentId spawn_conceptual_agent(const std::string& class_name, const std::vector<BodySeed>& bodies,
                                   AttrMap internal) {
        if (bodies.empty())
            throw Error(Errc::cardinality, "conceptual agent '" + class_name + "' needs at least one body");
        for (const auto& seed : bodies)
            if (!model_.has_level(seed.level))
                throw Error(Errc::unknown_reference,
                            "spawn of '" + class_name + "': unknown level '" + seed.level.name + "'");

        // Bodies at nested scales are normally alternative representations
        // toggled by the LOD manager, not simultaneous ones.
        auto closure = transitive_closure(model_);
        for (std::size_t i = 0; i < bodies.size(); ++i)
            for (std::size_t j = 0; j < bodies.size(); ++j)
                if (i != j && closure.inclusion_order.count({bodies[i].level, bodies[j].level}))
                    warnings_.push_back("agent '" + class_name + "': bodies in nested levels '" +
                                        bodies[i].level.name + "' and '" + bodies[j].level.name + "'");

        AgentId aid = next_agent_++;
        spirits_[aid] = SpiritAgent{aid, class_name, std::move(internal), std::nullopt};
        for (const auto& seed : bodies) {
            BodyId bid = next_body_++;
            bodies_[bid] = BodyAgent{bid, aid, class_name, seed.level, seed.external, true};
        }
        return aid;
    }

    // Removes the conceptual agent and every body it owns.
    void despawn(AgentId id) {
        spirits_.erase(id);
        for (auto it = bodies_.begin(); it != bodies_.end();)
            it = it->second.owner == id ? bodies_.erase(it) : std::next(it);
    }

    void set_body_active(BodyId id, bool active) { body_at(id).active = active; }

    // ---- queries ----------------------------------------------------------

    const SpiritAgent& spirit(AgentId id) const {
        auto it = spirits_.find(id);
        if (it == spirits_.end()) throw Error(Errc::unknown_reference, "no agent " + std::to_string(id));
        return it->second;
    }
    SpiritAgent& spirit(AgentId id) { return const_cast<SpiritAgent&>(std::as_const(*this).spirit(id)); }

    const BodyAgent& body(BodyId id) const {
        auto it = bodies_.find(id);
        if (it == bodies_.end()) throw Error(Errc::unknown_reference, "no body " + std::to_string(id));
        return it->second;
    }
    bool has_agent(AgentId id) const { return spirits_.count(id) != 0; }

    const std::map<AgentId, SpiritAgent>& spirits() const { return spirits_; }
    const std::map<BodyId, BodyAgent>& bodies() const { return bodies_; }

    std::vector<BodyId> bodies_of(AgentId agent) const {
        std::vector<BodyId> out;
        for (const auto& [id, b] : bodies_)
            if (b.owner == agent) out.push_back(id);
        return out;
    }

    // A_l(t): bodies situated in l, id order.
    std::vector<BodyId> bodies_in_level(const LevelId& l, bool active_only = false) const {
        std::vector<BodyId> out;
        for (const auto& [id, b] : bodies_)
            if (b.level == l && (!active_only || b.active)) out.push_back(id);
        return out;
    }

    std::size_t conceptual_agent_count() const { return spirits_.size(); }

    AttrMap& inert_objects(const LevelId& l) { return inert_.at(l); }
    const AttrMap& inert_objects(const LevelId& l) const { return inert_.at(l); }

    const std::vector<std::string>& warnings() const { return warnings_; }

    // ---- perception -------------------------------------------------------

    // Value snapshot of every level at instant start. Inactive bodies are
    // frozen and invisible: they neither perceive nor are perceived.
    std::map<LevelId, LevelView> snapshot() const {
        std::map<LevelId, LevelView> snap;
        for (const auto& [l, _] : model_.levels) snap[l] = LevelView{l, {}, inert_.at(l)};
        for (const auto& [id, b] : bodies_)
            if (b.active) snap[b.level].bodies.push_back(BodyView{b.id, b.owner, b.class_name, b.external});
        return snap;
    }

    PerceptionBundle make_bundle(const std::map<LevelId, LevelView>& snap, const LevelId& origin,
                                 Rational now, double dt) const {
        PerceptionBundle bundle{origin, now, dt, {}};
        for (const auto& [l, view] : snap)
            if (model_.perceives(origin, l)) bundle.levels.push_back(view);
        return bundle;
    }

    // ---- life cycle -------------------------------------------------------

    // One body's five phases: perceive, offer menu + perceptions to the
    // spirit, spirit updates internal state, spirit picks one action, body
    // executes it. Does not mutate the world; the caller commits.
    LifeCycleResult step_body(const std::map<LevelId, LevelView>& snap, BodyId body_id, Rational now,
                              double dt) const {
        const BodyAgent& b = body(body_id);
        if (!b.active) throw Error(Errc::member_state, "inactive body " + std::to_string(body_id) + " cannot step");
        const SpiritAgent& s = spirit(b.owner);
        const Behavior& behavior = config_.behaviors.get(b.class_name);

        PerceptionBundle bundle = make_bundle(snap, b.level, now, dt);
        BodyView self{b.id, b.owner, b.class_name, b.external};
        std::vector<ActionOption> menu = behavior.menu ? behavior.menu(self, bundle) : std::vector<ActionOption>{};
        Decision decision = behavior.decide ? behavior.decide(self, bundle, s.internal, menu)
                                            : Decision{s.internal, std::nullopt};

        LifeCycleResult result{{}, std::move(decision.internal)};
        if (!decision.action || menu.empty()) return result;  // no available action: the body idles
        if (*decision.action >= menu.size())
            throw Error(Errc::behavior, "class '" + b.class_name + "' chose action index out of range");

        result.influences = behavior.effect ? behavior.effect(self, bundle, menu[*decision.action])
                                            : std::vector<Influence>{};
        for (const auto& inf : result.influences) {
            if (!model_.influences(b.level, inf.target_level))
                throw Error(Errc::behavior, "body " + std::to_string(b.id) + " in '" + b.level.name +
                                                "' cannot influence level '" + inf.target_level.name + "'");
        }
        return result;
    }

    // Routes influences into per-level inboxes, stamping source and sequence.
    void deliver(std::vector<Influence> influences, BodyId source) {
        for (auto& inf : influences) {
            inf.source_body = source;
            inf.sequence = next_sequence_++;
            inbox_.at(inf.target_level).push_back(std::move(inf));
        }
    }

    // ---- reaction ---------------------------------------------------------

    // Pure reaction: combines influences per attribute and returns the new
    // level state. Policies: all-add sums, all-assign keeps the last writer
    // in canonical order, anything mixed without a registered policy keeps
    // only the first proposal and reports a conflict.
    static ReactionOutcome reaction(const LevelState& state, const std::vector<Influence>& influences,
                                    const std::map<std::string, ReactionPolicy>& policies) {
        ReactionOutcome out{state, {}};
        using Key = std::pair<std::optional<BodyId>, std::string>;
        std::map<Key, std::vector<Influence>> grouped;
        std::vector<Key> order;  // first-arrival order per attribute
        for (const auto& inf : influences) {
            if (inf.target_level != state.level)
                throw Error(Errc::member_state, "influence for '" + inf.target_level.name +
                                                    "' delivered to reaction of '" + state.level.name + "'");
            Key key{inf.target_body, inf.variable};
            if (grouped[key].empty()) order.push_back(key);
            grouped[key].push_back(inf);
        }

        for (const auto& key : order) {
            const auto& [target, variable] = key;
            const auto& group = grouped[key];
            AttrMap* attrs = nullptr;
            if (target) {
                auto it = out.state.body_externals.find(*target);
                if (it == out.state.body_externals.end()) continue;  // target left the level; proposal lapses
                attrs = &it->second;
            } else {
                attrs = &out.state.inert_objects;
            }
            double current = (*attrs)[variable];

            if (auto pit = policies.find(variable); pit != policies.end()) {
                (*attrs)[variable] = pit->second(current, group);
                continue;
            }
            bool all_add = std::all_of(group.begin(), group.end(),
                                       [](const Influence& i) { return i.op == InfluenceOp::add; });
            bool all_assign = std::all_of(group.begin(), group.end(),
                                          [](const Influence& i) { return i.op == InfluenceOp::assign; });
            if (all_add) {
                for (const auto& i : group) current += i.value;
                (*attrs)[variable] = current;
            } else if (all_assign) {
                (*attrs)[variable] = group.back().value;
            } else {
                const Influence& first = group.front();
                (*attrs)[variable] = first.op == InfluenceOp::add ? current + first.value : first.value;
                out.conflicts.emplace_back(target ? "body " + std::to_string(*target) : "inert", variable);
            }
        }
        return out;
    }

    // Consumes the level's inbox, appends the environment's natural
    // influences, applies the reaction, and commits the new state.
    void react(const LevelId& l, Rational now, double dt, RunLog* log) {
        std::vector<Influence> pending = std::move(inbox_.at(l));
        inbox_.at(l).clear();

        LevelView env_view{l, {}, inert_.at(l)};
        for (const auto& [id, b] : bodies_)
            if (b.level == l && b.active) env_view.bodies.push_back(BodyView{b.id, b.owner, b.class_name, b.external});
        if (auto it = config_.environments.find(l); it != config_.environments.end() && it->second) {
            for (auto inf : it->second(env_view, now, dt)) {
                if (inf.target_level != l)
                    throw Error(Errc::behavior, "environment of '" + l.name + "' may only influence its own level");
                inf.source_body = 0;
                inf.sequence = next_sequence_++;
                pending.push_back(std::move(inf));
            }
        }

        // Inactive bodies are frozen: proposals against them lapse.
        LevelState state{l, {}, inert_.at(l)};
        for (const auto& [id, b] : bodies_)
            if (b.level == l && b.active) state.body_externals[id] = b.external;

        ReactionOutcome outcome = reaction(state, pending, config_.reaction_policies);

        for (const auto& [bid, attrs] : outcome.state.body_externals) {
            BodyAgent& b = body_at(bid);
            if (log) {
                for (const auto& [var, value] : attrs) {
                    auto old = b.external.find(var);
                    if (old == b.external.end() || old->second != value)
                        log->event(now, l, "delta", std::to_string(bid), var, format_double(value));
                }
            }
            b.external = attrs;
        }
        if (log) {
            for (const auto& [var, value] : outcome.state.inert_objects) {
                auto old = inert_.at(l).find(var);
                if (old == inert_.at(l).end() || old->second != value)
                    log->event(now, l, "inert", "", var, format_double(value));
            }
            for (const auto& [where, var] : outcome.conflicts) {
                log->event(now, l, "conflict", "", var, where);
                log->bump("conflicts");
            }
        }
        inert_.at(l) = outcome.state.inert_objects;
    }

    // Full level step at instant `now`: life cycles of all active bodies
    // against the instant-start snapshot, then the reaction. Behavior
    // failures surface with level, time, and agent.
    void fire_level(const LevelId& l, const std::map<LevelId, LevelView>& snap, Rational now, double dt,
                    RunLog* log) {
        std::vector<BodyId> ids = bodies_in_level(l, /*active_only=*/true);
        for (BodyId id : ids) {
            try {
                LifeCycleResult r = step_body(snap, id, now, dt);
                spirit(body(id).owner).internal = std::move(r.internal);
                deliver(std::move(r.influences), id);
            } catch (const Error& e) {
                throw Error(e.code(), "level '" + l.name + "' at t=" + now.str() + ", agent " +
                                          std::to_string(body(id).owner) + " (body " + std::to_string(id) +
                                          "): " + e.what());
            }
            ++agent_steps_;
        }
        if (log) log->event(now, l, "step", "", "bodies", std::to_string(ids.size()));
        react(l, now, dt, log);
    }

    std::uint64_t agent_steps() const { return agent_steps_; }

    // ---- frequency --------------------------------------------------------

    // Max of the base frequency, the function minimums of classes active in
    // the level, and the influence demands naming this level as source.
    Rational effective_frequency(const LevelId& l) const {
        auto base = config_.base_frequencies.find(l);
        std::optional<Rational> freq;
        if (base != config_.base_frequencies.end()) freq = base->second;

        std::set<std::string> classes_present;
        for (const auto& [id, b] : bodies_)
            if (b.level == l && b.active) classes_present.insert(b.class_name);
        for (const auto& fn : config_.agent_functions)
            if (classes_present.count(fn.class_name) && (!freq || fn.min_hz > *freq)) freq = fn.min_hz;

        for (const auto& [key, hz] : demands_)
            if (key.first == l && (!freq || hz > *freq)) freq = hz;

        if (!freq || !(*freq > Rational(0)))
            throw Error(Errc::frequency, "no frequency information for level '" + l.name + "'");
        return *freq;
    }

    void set_frequency_demand(const LevelId& source, const LevelId& demander, Rational hz) {
        if (!model_.influence_edges.count({source, demander}))
            throw Error(Errc::frequency, "demand on non-influencing pair (" + source.name + ", " +
                                             demander.name + ")");
        if (!(hz > Rational(0))) throw Error(Errc::frequency, "demanded frequency must be positive");
        demands_[{source, demander}] = hz;
    }

    void clear_frequency_demand(const LevelId& source, const LevelId& demander) {
        demands_.erase({source, demander});
    }

    // ---- misc -------------------------------------------------------------

    AgentId allocate_agent_id() { return next_agent_++; }
    BodyId allocate_body_id() { return next_body_++; }

    SpiritAgent& insert_spirit(SpiritAgent s) {
        AgentId id = s.id;
        spirits_[id] = std::move(s);
        return spirits_.at(id);
    }
    BodyAgent& insert_body(BodyAgent b) {
        BodyId id = b.id;
        bodies_[id] = std::move(b);
        return bodies_.at(id);
    }
    void erase_body(BodyId id) { bodies_.erase(id); }
    void erase_spirit(AgentId id) { spirits_.erase(id); }
    void reassign_body(BodyId id, AgentId new_owner) { body_at(id).owner = new_owner; }

private:
    BodyAgent& body_at(BodyId id) {
        auto it = bodies_.find(id);
        if (it == bodies_.end()) throw Error(Errc::unknown_reference, "no body " + std::to_string(id));
        return it->second;
    }

    HierarchicalModel model_;
    WorldConfig config_;
    std::map<AgentId, SpiritAgent> spirits_;
    std::map<BodyId, BodyAgent> bodies_;
    std::map<LevelId, AttrMap> inert_;
    std::map<LevelId, std::vector<Influence>> inbox_;
    std::map<std::pair<LevelId, LevelId>, Rational> demands_;  // (source, demander) -> hz
    std::vector<std::string> warnings_;
    AgentId next_agent_ = 1;
    BodyId next_body_ = 1;
    std::uint64_t next_sequence_ = 1;
    std::uint64_t agent_steps_ = 0;
};

}  // namespace mlsim
