#pragma once
// Discrete-event execution of one run. Each level fires at its own (exact
// rational) frequency; the queue pops the earliest event, ties resolve by
// kind then level name so traces are stable. Frequency changes — influence
// demands and population-driven function minimums alike — take effect at a
// level's next firing, never retroactively.

#include <cstdint>
#include <map>
#include <set>
#include <string>

#include "mlsim/lod.hpp"
#include "mlsim/runlog.hpp"
#include "mlsim/scenario.hpp"
#include "mlsim/world.hpp"

namespace mlsim {

enum class RunMode { full, lod };

inline RunMode parse_run_mode(const std::string& name) {
    if (name == "full") return RunMode::full;
    if (name == "lod") return RunMode::lod;
    throw Error(Errc::usage, "unknown run mode '" + name + "' (expected full|lod)");
}

struct RunOptions {
    Rational duration{0};
    std::uint64_t seed = 0;
    RunMode mode = RunMode::lod;
    std::optional<double> threshold_override;  // replaces every active spec's threshold
};

struct RunResult {
    World world;
    std::uint64_t agent_steps = 0;
    std::map<LevelId, std::uint64_t> firings;
};

namespace detail {

// Tie order at one instant: demand scripts, then level steps (name order),
// then the LOD tick. LOD changes land between level steps by construction.
enum EventKind : int { event_demand = 0, event_level = 1, event_lod = 2 };

struct Event {
    Rational time;
    int kind;
    std::string name;
    std::size_t payload = 0;  // demand index

    bool operator<(const Event& o) const {
        if (time != o.time) return time < o.time;
        if (kind != o.kind) return kind < o.kind;
        if (name != o.name) return name < o.name;
        return payload < o.payload;
    }
};

}  // namespace detail

// Executes the scenario for `duration` simulated seconds (events fire while
// t < duration). The model must validate; violations refuse to run.
inline RunResult run(const ScenarioDefinition& scenario, const Library& lib, const RunOptions& options,
                     RunLog& log) {
    if (options.duration < Rational(0)) throw Error(Errc::usage, "duration must be non-negative");
    {
        auto report = validate_hierarchical_graph(scenario.model);
        auto bindings = check_label_bindings(scenario.model, scenario.model.specs);
        if (!report.ok() || !bindings.ok())
            throw Error(Errc::validation, "model fails validation; run refused (see `validate`)");
    }

    World world = build_world(scenario, lib, options.seed);
    RunResult result{std::move(world), 0, {}};
    World& w = result.world;

    // Threshold override (e.g. +inf to disable aggregation) needs a local
    // spec copy; the policy points into it.
    std::vector<AggregationFunctionSpec> spec_storage;
    LodPolicy policy;
    if (options.mode == RunMode::lod) {
        for (const auto* spec : active_specs(scenario)) spec_storage.push_back(*spec);
        if (options.threshold_override)
            for (auto& spec : spec_storage) spec.threshold = *options.threshold_override;
        for (const auto& spec : spec_storage) policy.specs.push_back(&spec);
        policy.strategy = parse_strategy(scenario.model.strategy);
        policy.precedence = scenario.model.precedence;
        policy.zones = scenario.lod.zones;
        policy.period = scenario.lod.period;
        policy.refractory = scenario.lod.refractory;
    }

    std::set<detail::Event> queue;
    for (const auto& [l, _] : scenario.model.levels) queue.insert({Rational(0), detail::event_level, l.name, 0});
    if (options.mode == RunMode::lod && !policy.specs.empty())
        queue.insert({Rational(0), detail::event_lod, "", 0});
    for (std::size_t i = 0; i < scenario.demands.size(); ++i)
        queue.insert({scenario.demands[i].time, detail::event_demand, scenario.demands[i].source.name, i});

    std::map<LevelId, Rational> last_freq;
    std::map<AgentId, Rational> refractory_until;
    std::map<LevelId, LevelView> snapshot;
    Rational snapshot_time{-1};
    bool snapshot_valid = false;

    while (!queue.empty()) {
        detail::Event ev = *queue.begin();
        queue.erase(queue.begin());
        if (!(ev.time < options.duration)) break;

        if (!snapshot_valid || snapshot_time != ev.time) {
            snapshot = w.snapshot();
            snapshot_time = ev.time;
            snapshot_valid = true;
        }

        switch (ev.kind) {
            case detail::event_demand: {
                const DemandScript& d = scenario.demands[ev.payload];
                if (d.set) {
                    w.set_frequency_demand(d.source, d.demander, d.hz);
                    log.event(ev.time, d.source, "demand", "", d.demander.name, d.hz.str());
                } else {
                    w.clear_frequency_demand(d.source, d.demander);
                    log.event(ev.time, d.source, "demand", "", d.demander.name, "clear");
                }
                break;
            }
            case detail::event_level: {
                LevelId l{ev.name};
                Rational hz = w.effective_frequency(l);
                if (auto it = last_freq.find(l); it == last_freq.end() || it->second != hz) {
                    log.event(ev.time, l, "frequency", "", "hz", hz.str());
                    last_freq[l] = hz;
                }
                Rational period = hz.reciprocal();
                w.fire_level(l, snapshot, ev.time, period.to_double(), &log);
                ++result.firings[l];
                log.bump("firings." + l.name);
                queue.insert({ev.time + period, detail::event_level, ev.name, 0});
                break;
            }
            case detail::event_lod: {
                lod_policy_tick(w, policy, ev.time, refractory_until, &log);
                snapshot_valid = false;  // populations may have changed
                queue.insert({ev.time + policy.period, detail::event_lod, "", 0});
                break;
            }
        }
    }

    result.agent_steps = w.agent_steps();
    log.bump("agent_steps", static_cast<std::int64_t>(result.agent_steps));
    for (const auto& warning : w.warnings()) log.event(options.duration, LevelId{}, "note", "", "warning", warning);

    std::map<std::string, std::int64_t> final_classes;
    for (const auto& [id, s] : w.spirits()) ++final_classes[s.class_name];
    for (const auto& [cls, n] : final_classes) log.bump("final_agents." + cls, n);
    log.bump("final_conceptual_agents", static_cast<std::int64_t>(w.conceptual_agent_count()));
    return result;
}

}  // namespace mlsim
