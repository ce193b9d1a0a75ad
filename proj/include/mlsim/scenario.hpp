#pragma once
// Scenario definitions: initial populations, behavior bindings, level
// frequencies, LOD policy configuration, and the registries that turn
// declarative names into callables. Bundled content registers itself into
// a Library (see behaviors.hpp); tests may add their own entries.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mlsim/aggregation.hpp"
#include "mlsim/lod.hpp"
#include "mlsim/world.hpp"

namespace mlsim {

// splitmix64 stream; all scenario randomness flows through this so runs are
// reproducible bit-for-bit across platforms.
class SeedStream {
public:
    explicit SeedStream(std::uint64_t seed) : state_(seed ^ 0x6a09e667f3bcc909ULL) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + unit() * (hi - lo); }

private:
    std::uint64_t state_;
};

struct GeneratedAgent {
    AttrMap external;
    AttrMap internal;
};

using GeneratorFn = std::function<std::vector<GeneratedAgent>(const AttrMap& params, int count, SeedStream&)>;
using EnvironmentFactory = std::function<EnvironmentFn(const AttrMap& params)>;

// The coded half of an aggregation function: subfunctions, reconstruction
// rules, memorization. Bound to the declarative half (model file) by name.
struct SpecCode {
    std::vector<SubfunctionSpec> subfunctions;
    DisaggregationSpec disaggregation;
    std::optional<MemorizationSpec> memorization;
    std::string merged_class;
};

struct Library {
    std::map<std::string, Behavior> behaviors;           // behavior name -> implementation
    std::map<std::string, GeneratorFn> generators;
    std::map<std::string, EnvironmentFactory> environments;
    std::map<std::string, SpecCode> spec_code;           // aggregation function name -> code
    CombinerRegistry combiners;
    AffinityRegistry affinities;

    template <typename M>
    static const typename M::mapped_type& lookup(const M& m, const std::string& key, const char* what) {
        auto it = m.find(key);
        if (it == m.end())
            throw Error(Errc::unknown_reference, std::string("unknown ") + what + " '" + key + "'");
        return it->second;
    }
};

// ---- scenario data -----------------------------------------------------------

struct PopulationDecl {
    std::string class_name;
    int count = 0;
    std::vector<LevelId> levels;  // one body per level, same generated external state
    std::string generator = "point";
    AttrMap params;
    std::uint64_t seed_salt = 0;
};

struct AgentFunctionDecl {
    std::string class_name;
    std::string function_name;
    Rational min_hz;
};

struct EnvironmentDecl {
    LevelId level;
    std::string name = "none";
    AttrMap params;
};

struct DemandScript {
    Rational time;
    bool set = true;
    LevelId source;    // the level whose frequency must rise
    LevelId demander;  // the influenced level that needs faster inputs
    Rational hz;
};

struct LodConfig {
    Rational period{1, 2};
    Rational refractory{0};
    std::vector<std::string> active_specs;  // empty = every spec the model declares
    std::vector<DetailZone> zones;
};

struct ScenarioDefinition {
    std::string name;
    std::string model_path;
    HierarchicalModel model;  // validated; specs carry resolved callables after resolve_specs
    std::map<std::string, std::string> behavior_bindings;  // class -> behavior name
    std::map<LevelId, Rational> base_frequencies;
    std::vector<AgentFunctionDecl> agent_functions;
    std::vector<PopulationDecl> populations;
    std::vector<EnvironmentDecl> environments;
    std::vector<DemandScript> demands;
    LodConfig lod;
};

// ---- resolution ------------------------------------------------------------------

// Merges registered SpecCode into the declared specs and binds combiners and
// affinity scorers. Only specs the LOD policy or an experiment projection
// will execute need code; purely declarative specs stay label-check-only.
inline void resolve_specs(HierarchicalModel& model, const Library& lib) {
    for (auto& spec : model.specs) {
        if (auto it = lib.spec_code.find(spec.name); it != lib.spec_code.end()) {
            const SpecCode& code = it->second;
            spec.subfunctions = code.subfunctions;
            spec.disaggregation = code.disaggregation;
            spec.memorization = code.memorization;
            if (!code.merged_class.empty()) spec.merged_class = code.merged_class;
        }
        for (auto& sub : spec.subfunctions)
            if (!sub.combiner) sub.combiner = lib.combiners.resolve(sub.combiner_name);
        if (!spec.affinity.score) spec.affinity.score = lib.affinities.resolve(spec.affinity);
    }
}

inline const AggregationFunctionSpec& find_spec(const HierarchicalModel& model, const std::string& name) {
    for (const auto& s : model.specs)
        if (s.name == name) return s;
    throw Error(Errc::unknown_reference, "model declares no aggregation function '" + name + "'");
}

// ---- world building ----------------------------------------------------------------

inline World build_world(const ScenarioDefinition& scenario, const Library& lib, std::uint64_t seed) {
    WorldConfig cfg;
    for (const auto& [cls, behavior_name] : scenario.behavior_bindings)
        cfg.behaviors.add(cls, Library::lookup(lib.behaviors, behavior_name, "behavior"));
    for (const auto& env : scenario.environments) {
        if (env.name == "none") continue;
        cfg.environments[env.level] = Library::lookup(lib.environments, env.name, "environment")(env.params);
    }
    cfg.base_frequencies = scenario.base_frequencies;
    for (const auto& fn : scenario.agent_functions)
        cfg.agent_functions.push_back({fn.class_name, fn.function_name, fn.min_hz});

    for (const auto& [l, _] : scenario.model.levels)
        if (!scenario.base_frequencies.count(l))
            throw Error(Errc::frequency, "no base frequency declared for level '" + l.name + "'");

    World world(scenario.model, std::move(cfg));

    std::uint64_t pop_index = 0;
    for (const auto& pop : scenario.populations) {
        SeedStream rng(seed * 0x9e3779b97f4a7c15ULL + pop_index * 0x100000001b3ULL + pop.seed_salt);
        ++pop_index;
        const GeneratorFn& gen = Library::lookup(lib.generators, pop.generator, "generator");
        std::vector<GeneratedAgent> agents = gen(pop.params, pop.count, rng);
        if (static_cast<int>(agents.size()) != pop.count)
            throw Error(Errc::behavior, "generator '" + pop.generator + "' produced " +
                                            std::to_string(agents.size()) + " agents, expected " +
                                            std::to_string(pop.count));
        for (const auto& agent : agents) {
            std::vector<BodySeed> seeds;
            for (const auto& l : pop.levels) seeds.push_back({l, agent.external});
            world.spawn_conceptual_agent(pop.class_name, seeds, agent.internal);
        }
    }
    return world;
}

// Active spec set for the LOD policy, in model declaration order.
inline std::vector<const AggregationFunctionSpec*> active_specs(const ScenarioDefinition& scenario) {
    std::vector<const AggregationFunctionSpec*> out;
    for (const auto& spec : scenario.model.specs) {
        if (scenario.lod.active_specs.empty()) {
            out.push_back(&spec);
        } else {
            for (const auto& name : scenario.lod.active_specs)
                if (name == spec.name) { out.push_back(&spec); break; }
        }
    }
    if (!scenario.lod.active_specs.empty() && out.size() != scenario.lod.active_specs.size())
        throw Error(Errc::unknown_reference, "scenario activates an undeclared aggregation function");
    return out;
}

}  // namespace mlsim
