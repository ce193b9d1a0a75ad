#include <doctest.h>

#include <algorithm>
#include <set>

#include "mlsim/level_graph.hpp"
#include "test_helpers.hpp"

using namespace mlsim;
using mlsim::test::example_model;

namespace {

bool has_violation(const ValidationReport& r, ViolationKind kind) {
    return std::any_of(r.violations.begin(), r.violations.end(),
                       [&](const Violation& v) { return v.kind == kind; });
}

// Independent brute-force oracle: closes inclusion by iterating the
// definition, merges complementarity by fixpoint, checks Rules 2 and 3
// directly on the closed relations.
struct RuleOracle {
    std::set<LevelPair> inclusion;
    std::set<LevelPair> comp;  // both orientations

    explicit RuleOracle(const HierarchicalModel& m) {
        for (const auto& [edge, _] : m.hierarchy_edges) {
            const auto& [a, b] = edge;
            if (a == b) continue;
            if (m.hierarchy_edges.count({b, a})) {
                comp.insert({a, b});
                comp.insert({b, a});
            } else {
                inclusion.insert(edge);
            }
        }
        close(inclusion);
        close(comp);
    }

    static void close(std::set<LevelPair>& rel) {
        bool changed = true;
        while (changed) {
            changed = false;
            std::set<LevelPair> add;
            for (const auto& [a, b] : rel)
                for (const auto& [c, d] : rel)
                    if (b == c && !rel.count({a, d})) add.insert({a, d});
            if (!add.empty()) {
                rel.insert(add.begin(), add.end());
                changed = true;
            }
        }
    }

    bool rule2_violated() const {
        return std::any_of(inclusion.begin(), inclusion.end(),
                           [](const LevelPair& p) { return p.first == p.second; });
    }
    bool rule3_violated() const {
        return std::any_of(inclusion.begin(), inclusion.end(), [&](const LevelPair& p) {
            return p.first != p.second && comp.count(p);
        });
    }
};

HierarchicalModel model_from_edges(int n, const std::set<LevelPair>& edges) {
    HierarchicalModel m;
    for (int i = 0; i < n; ++i) m.levels[level("l" + std::to_string(i))] = {"s", "t"};
    for (const auto& e : edges) {
        bool symmetric = e.first != e.second && edges.count({e.second, e.first});
        m.hierarchy_edges[e] = symmetric ? std::vector<std::string>{} : std::vector<std::string>{"F"};
    }
    return m;
}

}  // namespace

TEST_CASE("classify_edges on the example graph") {
    auto rels = classify_edges(example_model());
    REQUIRE(rels.size() == 3);
    CHECK(std::count(rels.begin(), rels.end(),
                     LevelRelation{RelationKind::spirit_loop, level("l1"), level("l1")}) == 1);
    CHECK(std::count(rels.begin(), rels.end(),
                     LevelRelation{RelationKind::inclusion, level("l1"), level("l2")}) == 1);
    CHECK(std::count(rels.begin(), rels.end(),
                     LevelRelation{RelationKind::complementarity, level("l1"), level("l3")}) == 1);
}

TEST_CASE("classify_edges trivial cases") {
    HierarchicalModel empty;
    empty.levels[level("a")] = {};
    CHECK(classify_edges(empty).empty());

    HierarchicalModel chain;
    chain.levels[level("a")] = {};
    chain.levels[level("b")] = {};
    chain.levels[level("c")] = {};
    chain.hierarchy_edges[{level("a"), level("b")}] = {"F"};
    chain.hierarchy_edges[{level("b"), level("c")}] = {"F"};
    auto rels = classify_edges(chain);
    REQUIRE(rels.size() == 2);
    CHECK(rels[0] == LevelRelation{RelationKind::inclusion, level("a"), level("b")});
    CHECK(rels[1] == LevelRelation{RelationKind::inclusion, level("b"), level("c")});
}

TEST_CASE("symmetric-pair detection is orientation independent") {
    for (bool flip : {false, true}) {
        HierarchicalModel m;
        m.levels[level("a")] = {};
        m.levels[level("b")] = {};
        if (flip) {
            m.hierarchy_edges[{level("b"), level("a")}] = {};
            m.hierarchy_edges[{level("a"), level("b")}] = {};
        } else {
            m.hierarchy_edges[{level("a"), level("b")}] = {};
            m.hierarchy_edges[{level("b"), level("a")}] = {};
        }
        auto rels = classify_edges(m);
        REQUIRE(rels.size() == 1);
        CHECK(rels[0] == LevelRelation{RelationKind::complementarity, level("a"), level("b")});
    }
}

TEST_CASE("transitive closure of inclusion and complementarity") {
    HierarchicalModel m;
    for (auto n : {"a", "b", "c", "d", "e", "f"}) m.levels[level(n)] = {"s", "t"};
    m.hierarchy_edges[{level("a"), level("b")}] = {"F"};
    m.hierarchy_edges[{level("b"), level("c")}] = {"F"};
    m.hierarchy_edges[{level("d"), level("e")}] = {};
    m.hierarchy_edges[{level("e"), level("d")}] = {};
    m.hierarchy_edges[{level("e"), level("f")}] = {};
    m.hierarchy_edges[{level("f"), level("e")}] = {};

    auto closure = transitive_closure(m);
    CHECK(closure.inclusion_order.count({level("a"), level("c")}) == 1);
    CHECK(closure.inclusion_order.size() == 3);  // ab, bc, ac

    // d, e, f form one class; a, b, c are singletons.
    std::vector<LevelId> def{level("d"), level("e"), level("f")};
    CHECK(std::count(closure.complementarity_classes.begin(), closure.complementarity_classes.end(), def) == 1);
    CHECK(closure.complementarity_classes.size() == 4);
}

TEST_CASE("transitive closure is idempotent") {
    auto m = example_model();
    auto once = transitive_closure(m);
    // Re-encode the closed order as a model and close again.
    HierarchicalModel closed = m;
    for (const auto& p : once.inclusion_order)
        if (!closed.hierarchy_edges.count(p)) closed.hierarchy_edges[p] = {"F"};
    auto twice = transitive_closure(closed);
    CHECK(once.inclusion_order == twice.inclusion_order);
}

TEST_CASE("single level, no edges") {
    HierarchicalModel m;
    m.levels[level("only")] = {};
    auto closure = transitive_closure(m);
    CHECK(closure.inclusion_order.empty());
    REQUIRE(closure.complementarity_classes.size() == 1);
    CHECK(closure.complementarity_classes[0] == std::vector<LevelId>{level("only")});
}

TEST_CASE("validator accepts the example graph") {
    auto report = validate_hierarchical_graph(example_model());
    CHECK(report.ok());
}

TEST_CASE("rule 2: labeled 3-cycle is rejected with a cycle witness") {
    HierarchicalModel m;
    for (auto n : {"a", "b", "c"}) m.levels[level(n)] = {};
    m.hierarchy_edges[{level("a"), level("b")}] = {"F"};
    m.hierarchy_edges[{level("b"), level("c")}] = {"F"};
    m.hierarchy_edges[{level("c"), level("a")}] = {"F"};
    auto report = validate_hierarchical_graph(m);
    REQUIRE(has_violation(report, ViolationKind::inclusion_cycle));
    for (const auto& v : report.violations) {
        if (v.kind != ViolationKind::inclusion_cycle) continue;
        REQUIRE(v.witness_cycle.size() == 4);
        CHECK(v.witness_cycle.front() == v.witness_cycle.back());
    }
}

TEST_CASE("rule 3: inclusion and complementarity via transitivity") {
    // a includes into b directly; a=c and c=b transitively make a=b.
    HierarchicalModel m;
    for (auto n : {"a", "b", "c"}) m.levels[level(n)] = {};
    m.hierarchy_edges[{level("a"), level("b")}] = {"F"};
    m.hierarchy_edges[{level("a"), level("c")}] = {};
    m.hierarchy_edges[{level("c"), level("a")}] = {};
    m.hierarchy_edges[{level("c"), level("b")}] = {};
    m.hierarchy_edges[{level("b"), level("c")}] = {};
    auto report = validate_hierarchical_graph(m);
    CHECK(has_violation(report, ViolationKind::nested_and_complementary));
}

TEST_CASE("label placement violations") {
    auto m = example_model();
    m.hierarchy_edges[{level("l1"), level("l3")}] = {"F_Ag9"};  // label on a symmetric pair
    m.hierarchy_edges[{level("l1"), level("l2")}] = {};         // inclusion without label
    auto report = validate_hierarchical_graph(m);
    CHECK(has_violation(report, ViolationKind::label_on_symmetric));
    CHECK(has_violation(report, ViolationKind::missing_label));
}

TEST_CASE("unknown endpoints and scale mismatches are reported") {
    auto m = example_model();
    m.hierarchy_edges[{level("l1"), level("zz")}] = {"F"};
    m.levels[level("l3")] = {"other-scale", "fine"};
    auto report = validate_hierarchical_graph(m);
    CHECK(has_violation(report, ViolationKind::unknown_level));
    CHECK(has_violation(report, ViolationKind::scale_mismatch));
}

TEST_CASE("violations accumulate instead of failing fast") {
    HierarchicalModel m;
    for (auto n : {"a", "b", "c"}) m.levels[level(n)] = {};
    m.hierarchy_edges[{level("a"), level("b")}] = {"F"};
    m.hierarchy_edges[{level("b"), level("c")}] = {"F"};
    m.hierarchy_edges[{level("c"), level("a")}] = {};  // missing label AND part of a cycle
    auto report = validate_hierarchical_graph(m);
    CHECK(report.violations.size() >= 2);
}

TEST_CASE("rule verdicts match the brute-force oracle on random digraphs") {
    mlsim::test::Rng rng(7);
    for (int trial = 0; trial < 120; ++trial) {
        int n = 2 + static_cast<int>(rng.below(6));  // up to 7 levels
        std::set<LevelPair> edges;
        int count = static_cast<int>(rng.below(static_cast<std::uint64_t>(n * n)));
        for (int e = 0; e < count; ++e)
            edges.insert({level("l" + std::to_string(rng.below(n))), level("l" + std::to_string(rng.below(n)))});
        auto m = model_from_edges(n, edges);
        auto report = validate_hierarchical_graph(m);
        RuleOracle oracle(m);
        CHECK(has_violation(report, ViolationKind::inclusion_cycle) == oracle.rule2_violated());
        CHECK(has_violation(report, ViolationKind::nested_and_complementary) == oracle.rule3_violated());
    }
}

TEST_CASE("closed inclusion order never meets a complementarity pair on valid models") {
    mlsim::test::Rng rng(11);
    int checked = 0;
    for (int trial = 0; trial < 300 && checked < 60; ++trial) {
        int n = 2 + static_cast<int>(rng.below(5));
        std::set<LevelPair> edges;
        for (int e = 0; e < n; ++e)
            edges.insert({level("l" + std::to_string(rng.below(n))), level("l" + std::to_string(rng.below(n)))});
        auto m = model_from_edges(n, edges);
        if (!validate_hierarchical_graph(m).ok()) continue;
        ++checked;
        auto closure = transitive_closure(m);
        std::map<LevelId, std::size_t> cls;
        for (std::size_t c = 0; c < closure.complementarity_classes.size(); ++c)
            for (const auto& l : closure.complementarity_classes[c]) cls[l] = c;
        for (const auto& [a, b] : closure.inclusion_order) CHECK(cls[a] != cls[b]);
    }
    CHECK(checked > 0);
}

TEST_CASE("label bindings: example specs bind, unknown and mismatched labels do not") {
    auto m = example_model();

    AggregationFunctionSpec spirit_spec;
    spirit_spec.name = "F_Ag1";
    spirit_spec.members = {{"Follower", 2, 6, std::nullopt}};

    AggregationFunctionSpec platoon;
    platoon.name = "F_Ag2";
    platoon.members = {{"Leader", 1, 1, level("l1")}, {"Follower", 4, 9, level("l1")}};
    platoon.output = AggregateOutput{"Platoon", level("l2")};

    AggregationFunctionSpec convoy = platoon;
    convoy.name = "F_Ag3";
    convoy.output = AggregateOutput{"Convoy", level("l2")};

    auto ok = check_label_bindings(m, {spirit_spec, platoon, convoy});
    CHECK(ok.ok());

    SUBCASE("unknown label") {
        m.hierarchy_edges[{level("l1"), level("l2")}].push_back("F_Ag9");
        auto report = check_label_bindings(m, {spirit_spec, platoon, convoy});
        CHECK(has_violation(report, ViolationKind::unknown_label));
    }
    SUBCASE("body-aggregating spec on a loop is a signature mismatch") {
        m.hierarchy_edges[{level("l1"), level("l1")}] = {"F_Ag2"};
        auto report = check_label_bindings(m, {platoon});
        CHECK(has_violation(report, ViolationKind::signature_mismatch));
    }
    SUBCASE("member level without influence edge to output level warns") {
        m.influence_edges.erase({level("l1"), level("l2")});
        auto report = check_label_bindings(m, {spirit_spec, platoon, convoy});
        CHECK(report.ok());
        CHECK(!report.warnings.empty());
    }
}
