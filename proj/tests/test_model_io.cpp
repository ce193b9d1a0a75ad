#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "mlsim/behaviors.hpp"
#include "mlsim/model_io.hpp"
#include "test_helpers.hpp"

using namespace mlsim;

namespace {

std::string fixture(const std::string& name) { return std::string(MLSIM_FIXTURE_DIR) + "/" + name; }

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& content) {
        static int counter = 0;
        path = (std::filesystem::temp_directory_path() /
                ("mlsim_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".txt"))
                   .string();
        std::ofstream f(path);
        f << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

bool has_kind(const ValidationReport& r, ViolationKind kind) {
    for (const auto& v : r.violations)
        if (v.kind == kind) return true;
    return false;
}

}  // namespace

TEST_CASE("bundled platoon model parses: three levels, three relation groups, three specs") {
    HierarchicalModel m = parse_model(fixture("platoon.model"));
    CHECK(m.name == "platoon");
    CHECK(m.levels.size() == 3);
    CHECK(classify_edges(m).size() == 3);  // loop, inclusion, complementarity pair
    REQUIRE(m.specs.size() == 3);
    CHECK(m.specs[0].name == "F_Ag1");
    CHECK(m.specs[0].spirit_only());
    const auto& platoon = m.specs[1];
    CHECK(platoon.name == "F_Ag2");
    REQUIRE(platoon.members.size() == 2);
    CHECK(platoon.members[0].class_name == "Leader");
    CHECK(platoon.members[0].min == 1);
    CHECK(platoon.members[0].max == 1);
    CHECK(platoon.members[1].min == 4);
    CHECK(platoon.members[1].max == 9);
    CHECK(platoon.members[1].level == level("l1"));
    REQUIRE(platoon.output.has_value());
    CHECK(platoon.output->class_name == "Platoon");
    CHECK(platoon.output->level == level("l2"));
    CHECK(m.strategy == "GlobalBest");
    REQUIRE(m.precedence.size() == 1);

    CHECK(validate_hierarchical_graph(m).ok());
    CHECK(check_label_bindings(m, m.specs).ok());
    CHECK_NOTHROW(load_model(fixture("platoon.model")));
}

TEST_CASE("invalid fixtures report the right rule violations and refuse to load") {
    SUBCASE("three-cycle") {
        HierarchicalModel m = parse_model(fixture("invalid_cycle.model"));
        auto report = validate_hierarchical_graph(m);
        CHECK(has_kind(report, ViolationKind::inclusion_cycle));
        CHECK_THROWS_AS(load_model(fixture("invalid_cycle.model")), Error);
    }
    SUBCASE("nested and complementary") {
        HierarchicalModel m = parse_model(fixture("invalid_rule3.model"));
        auto report = validate_hierarchical_graph(m);
        CHECK(has_kind(report, ViolationKind::nested_and_complementary));
        CHECK_THROWS_AS(load_model(fixture("invalid_rule3.model")), Error);
    }
    SUBCASE("label on a symmetric pair plus unlabeled inclusion") {
        HierarchicalModel m = parse_model(fixture("invalid_labels.model"));
        auto report = validate_hierarchical_graph(m);
        CHECK(has_kind(report, ViolationKind::label_on_symmetric));
        CHECK(has_kind(report, ViolationKind::missing_label));
        CHECK_THROWS_AS(load_model(fixture("invalid_labels.model")), Error);
    }
}

TEST_CASE("parse diagnostics carry the line number") {
    TempFile bad("model broken\nlevel a spatial=s temporal=t\nhierarchy a b\n");
    try {
        parse_model(bad.path);
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::parse);
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
}

TEST_CASE("empty levels section is a load error") {
    TempFile empty("model hollow\n");
    CHECK_THROWS_AS(parse_model(empty.path), Error);
}

TEST_CASE("duplicate hierarchy edges collapse to one, merging labels") {
    TempFile dup(
        "model dup\nlevel a spatial=s temporal=t\nlevel b spatial=s temporal=t\n"
        "hierarchy a -> b : F1\nhierarchy a -> b : F1, F2\n");
    HierarchicalModel m = parse_model(dup.path);
    REQUIRE(m.hierarchy_edges.size() == 1);
    CHECK(m.hierarchy_edges.begin()->second == std::vector<std::string>{"F1", "F2"});
}

TEST_CASE("model round-trips through serialize/parse") {
    for (const char* name : {"platoon.model", "invalid_cycle.model", "invalid_rule3.model",
                             "invalid_labels.model"}) {
        HierarchicalModel m = parse_model(fixture(name));
        TempFile rt(serialize_model(m));
        HierarchicalModel again = parse_model(rt.path);
        CHECK(models_equal(m, again));
    }
}

TEST_CASE("bundled scenario loads, resolves, and round-trips") {
    Library lib = builtin_library();
    ScenarioDefinition s = load_scenario(fixture("platoon.scenario"), lib);
    CHECK(s.name == "platoon_demo");
    CHECK(s.model.name == "platoon");
    CHECK(s.base_frequencies.at(level("l1")) == Rational(10));
    CHECK(s.agent_functions.size() == 2);
    CHECK(s.populations.size() == 4);
    CHECK(s.populations[3].levels.size() == 2);  // the inspector spans l1 and l3
    CHECK(s.lod.active_specs == std::vector<std::string>{"F_Ag2"});
    CHECK(s.lod.zones.size() == 1);
    CHECK(s.demands.size() == 2);

    // spec code and scorers are bound after load
    const auto& spec = find_spec(s.model, "F_Ag2");
    CHECK(!spec.subfunctions.empty());
    for (const auto& sub : spec.subfunctions) CHECK(static_cast<bool>(sub.combiner));
    CHECK(static_cast<bool>(spec.affinity.score));
    CHECK(spec.memorization.has_value());

    ScenarioDefinition parsed = parse_scenario(fixture("platoon.scenario"));
    TempFile rt(serialize_scenario(parsed));
    ScenarioDefinition again = parse_scenario(rt.path);
    again.model_path = parsed.model_path;  // absolute vs re-resolved paths differ
    CHECK(scenarios_equal(parsed, again));
}

TEST_CASE("scenario referencing unknown names is rejected") {
    Library lib = builtin_library();
    SUBCASE("unknown behavior") {
        TempFile s("scenario s\nmodel " + fixture("platoon.model") +
                   "\nfrequency l1 base=10\nfrequency l2 base=10\nfrequency l3 base=10\n"
                   "behavior Leader no_such_behavior\n");
        CHECK_THROWS_AS(load_scenario(s.path, lib), Error);
    }
    SUBCASE("unknown active spec") {
        TempFile s("scenario s\nmodel " + fixture("platoon.model") +
                   "\nfrequency l1 base=10\nfrequency l2 base=10\nfrequency l3 base=10\n"
                   "lod period=1 specs=F_Nope\n");
        CHECK_THROWS_AS(load_scenario(s.path, lib), Error);
    }
    SUBCASE("scenario over an invalid model fails with the validation error") {
        TempFile s("scenario s\nmodel " + fixture("invalid_cycle.model") + "\nfrequency a base=1\n");
        CHECK_THROWS_AS(load_scenario(s.path, lib), Error);
    }
}

TEST_CASE("bundled experiment parses and round-trips") {
    ConsistencyExperiment e = parse_experiment(fixture("platoon.experiment"));
    CHECK(e.name == "platoon_weak_consistency");
    CHECK(e.duration == Rational(30));
    CHECK(e.replicates == 10);
    CHECK(e.seed_base == 1000);
    REQUIRE(e.elements.size() == 2);
    CHECK(e.elements[0].kind == SignificantElement::Kind::agent_class);
    CHECK(e.elements[0].name == "Platoon");
    CHECK(e.projection_specs == std::vector<std::string>{"F_Ag2"});
    CHECK(e.metric == "range_normalized");
    CHECK(e.tolerance == 0.2);

    TempFile rt(serialize_experiment(e));
    ConsistencyExperiment again = parse_experiment(rt.path);
    again.scenario_path = e.scenario_path;
    CHECK(experiments_equal(e, again));

    SUBCASE("threshold_override inf round-trips") {
        ConsistencyExperiment inf = e;
        inf.threshold_override = std::numeric_limits<double>::infinity();
        TempFile f(serialize_experiment(inf));
        ConsistencyExperiment back = parse_experiment(f.path);
        REQUIRE(back.threshold_override.has_value());
        CHECK(std::isinf(*back.threshold_override));
    }
}
