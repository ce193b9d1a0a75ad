#include <doctest.h>

#include "mlsim/behaviors.hpp"
#include "mlsim/consistency.hpp"
#include "mlsim/scheduler.hpp"
#include "test_helpers.hpp"

// End-to-end checks of the bundled platoon scenario: the full LOD cycle
// (aggregate, cruise, zone-triggered disaggregation, re-aggregation), the
// frequency dynamics it causes, and the conservation bookkeeping.

using namespace mlsim;

namespace {

std::string fixture(const std::string& name) { return std::string(MLSIM_FIXTURE_DIR) + "/" + name; }

}  // namespace

TEST_CASE("platoon demo runs the full aggregate/disaggregate cycle") {
    Library lib = builtin_library();
    ScenarioDefinition scenario = load_scenario(fixture("platoon.scenario"), lib);
    RunLog log;
    RunResult result = run(scenario, lib, {Rational(30), 7, RunMode::lod, {}}, log);

    // both clusters aggregate, cross the observer zone, and re-form
    CHECK(log.counters().at("aggregations") >= 4);
    CHECK(log.counters().at("disaggregations") >= 2);

    // aggregation events carry function name, member ids, aggregate id, time
    bool saw_aggregate = false, saw_disaggregate = false;
    for (const auto& rec : log.records()) {
        if (rec.event == "aggregate") {
            saw_aggregate = true;
            CHECK(rec.variable == "F_Ag2");
            CHECK(!rec.agent.empty());
            CHECK(rec.value.find('|') != std::string::npos);  // several member ids
        }
        if (rec.event == "disaggregate") saw_disaggregate = true;
    }
    CHECK(saw_aggregate);
    CHECK(saw_disaggregate);

    // conservation: the final world still represents every spawned agent
    auto represented = represented_members(result.world);
    CHECK(represented.at("Leader") == 2);
    CHECK(represented.at("Follower") == 12);
    CHECK(represented.at("Inspector") == 1);

    // the run ends aggregated: two platoons and the inspector
    std::map<std::string, int> final_classes;
    for (const auto& [id, s] : result.world.spirits()) ++final_classes[s.class_name];
    CHECK(final_classes["Platoon"] == 2);
    CHECK(final_classes["Inspector"] == 1);

    // l1 sheds its 60 Hz diagnostic constraint once the vehicles aggregate
    // away, and picks it back up during the zone transit
    std::vector<std::string> l1_freqs;
    for (const auto& rec : log.records())
        if (rec.event == "frequency" && rec.level == "l1") l1_freqs.push_back(rec.value);
    REQUIRE(l1_freqs.size() >= 3);
    CHECK(l1_freqs.front() == "60");
    CHECK(std::find(l1_freqs.begin(), l1_freqs.end(), "10") != l1_freqs.end());
    CHECK(std::count(l1_freqs.begin(), l1_freqs.end(), "60") >= 2);

    // the scripted demand bumps l2 to 30 Hz and back
    std::vector<std::string> l2_freqs;
    for (const auto& rec : log.records())
        if (rec.event == "frequency" && rec.level == "l2") l2_freqs.push_back(rec.value);
    CHECK(l2_freqs == std::vector<std::string>{"20", "30", "20"});

    // the inspector's two bodies fed one mind from both domains
    for (const auto& [id, s] : result.world.spirits()) {
        if (s.class_name != "Inspector") continue;
        CHECK(result.world.bodies_of(id).size() == 2);
        CHECK(s.internal.at("probes") > 0);
        CHECK(s.internal.at("seen") > 0);
    }
}

TEST_CASE("lod mode spends far fewer agent steps than full mode") {
    Library lib = builtin_library();
    ScenarioDefinition scenario = load_scenario(fixture("platoon.scenario"), lib);
    RunLog lod_log, full_log;
    RunResult lod = run(scenario, lib, {Rational(20), 3, RunMode::lod, {}}, lod_log);
    RunResult full = run(scenario, lib, {Rational(20), 3, RunMode::full, {}}, full_log);
    CHECK(lod.agent_steps < full.agent_steps);
    CHECK(full.firings.at(level("l1")) == 1200);  // 60 Hz throughout
    CHECK(lod.firings.at(level("l1")) < 1200);    // drops to base while aggregated
}

TEST_CASE("run refuses a model that fails validation") {
    Library lib = builtin_library();
    ScenarioDefinition s;
    s.name = "broken";
    s.model.levels[level("a")] = {"s", "t"};
    s.model.levels[level("b")] = {"s", "t"};
    s.model.levels[level("c")] = {"s", "t"};
    s.model.hierarchy_edges[{level("a"), level("b")}] = {"F"};
    s.model.hierarchy_edges[{level("b"), level("c")}] = {"F"};
    s.model.hierarchy_edges[{level("c"), level("a")}] = {"F"};
    for (auto n : {"a", "b", "c"}) s.base_frequencies[level(n)] = Rational(1);
    RunLog log;
    CHECK_THROWS_AS(run(s, lib, {Rational(1), 0, RunMode::full, {}}, log), Error);
}

TEST_CASE("behavior failures surface with level, time, and agent") {
    Library lib;
    lib.behaviors["explode"] = Behavior{
        [](const BodyView&, const PerceptionBundle&) {
            return std::vector<ActionOption>{{"boom", {}}};
        },
        [](const BodyView&, const PerceptionBundle&, const AttrMap& internal,
           const std::vector<ActionOption>&) { return Decision{internal, 5}; },  // out of range
        {}};
    lib.generators["point"] = builtin::point_generator();

    ScenarioDefinition s;
    s.name = "boom";
    s.model.levels[level("l1")] = {"s", "t"};
    s.base_frequencies[level("l1")] = Rational(2);
    s.behavior_bindings["Bomb"] = "explode";
    PopulationDecl pop;
    pop.class_name = "Bomb";
    pop.count = 1;
    pop.levels = {level("l1")};
    s.populations.push_back(pop);

    RunLog log;
    try {
        run(s, lib, {Rational(1), 0, RunMode::full, {}}, log);
        FAIL("expected a behavior error");
    } catch (const Error& e) {
        std::string what = e.what();
        CHECK(what.find("l1") != std::string::npos);
        CHECK(what.find("t=0") != std::string::npos);
        CHECK(what.find("agent") != std::string::npos);
    }
}
