#pragma once
// Spirit/body decomposition. A conceptual agent is one unsituated spirit
// (internal state + decision module) owning one or more bodies, each
// situated in exactly one level (external state + action module).

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mlsim/agg_spec.hpp"
#include "mlsim/core.hpp"
#include "mlsim/rational.hpp"

namespace mlsim {

struct SpiritAgent {
    AgentId id = 0;
    std::string class_name;
    AttrMap internal;
    std::optional<AggregateProvenance> aggregate_of;  // set when this agent was produced by an aggregation
};

struct BodyAgent {
    BodyId id = 0;
    AgentId owner = 0;
    std::string class_name;  // mirrors the owning conceptual agent's class
    LevelId level;
    AttrMap external;
    bool active = true;
};

enum class InfluenceOp { add, assign };

// An attempted change, not an effect: the level's reaction combines all
// influences of a step and applies them at once.
struct Influence {
    LevelId target_level;
    std::optional<BodyId> target_body;  // absent: the level's inert-object state
    std::string variable;
    InfluenceOp op = InfluenceOp::add;
    double value = 0.0;

    // Stamped by the engine on delivery. source_body 0 = environment.
    BodyId source_body = 0;
    std::uint64_t sequence = 0;
};

inline Influence add_influence(LevelId level, BodyId body, std::string var, double delta) {
    return Influence{std::move(level), body, std::move(var), InfluenceOp::add, delta, 0, 0};
}
inline Influence assign_influence(LevelId level, BodyId body, std::string var, double value) {
    return Influence{std::move(level), body, std::move(var), InfluenceOp::assign, value, 0, 0};
}

// Value snapshots handed to behaviors: the influence/reaction contract says
// no agent may observe another agent's same-step effect, so perception never
// aliases live state.
struct BodyView {
    BodyId id = 0;
    AgentId owner = 0;
    std::string class_name;
    AttrMap external;
};

struct LevelView {
    LevelId level;
    std::vector<BodyView> bodies;  // active bodies only, id order
    AttrMap inert_objects;

    const BodyView* body(BodyId id) const {
        for (const auto& b : bodies)
            if (b.id == id) return &b;
        return nullptr;
    }
};

struct PerceptionBundle {
    LevelId origin;       // the perceiving body's level
    Rational now;
    double dt = 0.0;      // the origin level's current period, seconds
    std::vector<LevelView> levels;  // origin + perceivable levels, name order

    const LevelView* view(const LevelId& l) const {
        for (const auto& v : levels)
            if (v.level == l) return &v;
        return nullptr;
    }
};

// An entry of the action menu the body offers its spirit. `meta` carries
// machine-readable parameters (e.g. a heading) so decision modules stay
// pure functions of their inputs.
struct ActionOption {
    std::string name;
    AttrMap meta;
};

struct Decision {
    AttrMap internal;                  // replacement internal state
    std::optional<std::size_t> action; // index into the offered menu; absent = idle
};

// Action module: what can the body do, and what influences does a chosen
// action produce. Decision module: pure (self view, perceptions, internal,
// menu) -> (new internal, choice); the spirit may read the active body's
// external state. Purity keeps spirits serializable and mergeable.
using MenuFn = std::function<std::vector<ActionOption>(const BodyView& self, const PerceptionBundle&)>;
using EffectFn = std::function<std::vector<Influence>(const BodyView& self, const PerceptionBundle&,
                                                      const ActionOption& chosen)>;
using DecideFn = std::function<Decision(const BodyView& self, const PerceptionBundle&,
                                        const AttrMap& internal, const std::vector<ActionOption>& menu)>;

struct Behavior {
    MenuFn menu;
    DecideFn decide;
    EffectFn effect;
};

class BehaviorRegistry {
public:
    void add(const std::string& class_name, Behavior b) { behaviors_[class_name] = std::move(b); }
    bool has(const std::string& class_name) const { return behaviors_.count(class_name) != 0; }
    const Behavior& get(const std::string& class_name) const {
        auto it = behaviors_.find(class_name);
        if (it == behaviors_.end())
            throw Error(Errc::unknown_reference, "no behavior registered for class '" + class_name + "'");
        return it->second;
    }

private:
    std::map<std::string, Behavior> behaviors_;
};

// Environments are the levels' natural-influence producers (gravity, drift).
// They have no internal state and act only on their own level.
using EnvironmentFn = std::function<std::vector<Influence>(const LevelView&, Rational now, double dt)>;

// Combines all influences proposed for one attribute during a reaction.
// Defaults: additive for deltas, last-writer in canonical order for
// assignments; mixed proposals without a policy keep only the first.
using ReactionPolicy = std::function<double(double current, const std::vector<Influence>&)>;

}  // namespace mlsim
