#pragma once
// Compiled-in scenario content, selected by name from scenario files:
// driving behaviors for the bundled platoon demo, population generators,
// environments, and the coded halves of the bundled aggregation functions.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mlsim/scenario.hpp"

namespace mlsim {
namespace builtin {

inline double attr(const AttrMap& m, const std::string& key, double fallback = 0.0) {
    auto it = m.find(key);
    return it != m.end() ? it->second : fallback;
}

// ---- behaviors -----------------------------------------------------------------

// 16 compass headings plus hold. Movement per step is heading * speed * dt,
// with the cruise speed read from the body's external state.
inline Behavior waypoint_driver() {
    Behavior b;
    b.menu = [](const BodyView&, const PerceptionBundle&) {
        std::vector<ActionOption> menu;
        menu.push_back({"hold", {{"dx", 0.0}, {"dy", 0.0}}});
        for (int k = 0; k < 16; ++k) {
            double angle = 2.0 * M_PI * static_cast<double>(k) / 16.0;
            menu.push_back({"move" + std::to_string(k), {{"dx", std::cos(angle)}, {"dy", std::sin(angle)}}});
        }
        return menu;
    };
    b.decide = [](const BodyView& self, const PerceptionBundle&, const AttrMap& internal,
                  const std::vector<ActionOption>& menu) {
        Decision d{internal, 0};
        int count = static_cast<int>(attr(internal, "wp_count"));
        int idx = static_cast<int>(attr(internal, "wp_idx", 1.0));
        if (count <= 0 || menu.empty()) return d;
        double arrive = attr(internal, "arrive", 1.0);
        double x = attr(self.external, "x"), y = attr(self.external, "y");

        std::string key = "wp" + std::to_string(std::min(idx, count));
        double tx = attr(internal, key + "_x"), ty = attr(internal, key + "_y");
        double dx = tx - x, dy = ty - y;
        double dist = std::sqrt(dx * dx + dy * dy);
        if (dist <= arrive && idx < count) {
            idx += 1;
            d.internal["wp_idx"] = static_cast<double>(idx);
            key = "wp" + std::to_string(idx);
            tx = attr(internal, key + "_x");
            ty = attr(internal, key + "_y");
            dx = tx - x;
            dy = ty - y;
            dist = std::sqrt(dx * dx + dy * dy);
        }
        if (dist <= arrive) return d;  // at the final waypoint: hold

        std::size_t best = 0;
        double best_dot = -2.0;
        for (std::size_t i = 1; i < menu.size(); ++i) {
            double dot = (attr(menu[i].meta, "dx") * dx + attr(menu[i].meta, "dy") * dy) / dist;
            if (dot > best_dot) { best_dot = dot; best = i; }
        }
        d.action = best;
        return d;
    };
    b.effect = [](const BodyView& self, const PerceptionBundle& bundle, const ActionOption& chosen) {
        double speed = attr(self.external, "speed");
        double step = speed * bundle.dt;
        std::vector<Influence> out;
        double dx = attr(chosen.meta, "dx") * step, dy = attr(chosen.meta, "dy") * step;
        if (dx != 0.0) out.push_back(add_influence(bundle.origin, self.id, "x", dx));
        if (dy != 0.0) out.push_back(add_influence(bundle.origin, self.id, "y", dy));
        return out;
    };
    return b;
}

// Steer toward the nearest Leader in the own level, stop at standoff range,
// clamp to vmax. Updates the external "speed" to the realized speed.
inline Behavior follower_steer() {
    Behavior b;
    b.menu = [](const BodyView& self, const PerceptionBundle& bundle) {
        std::vector<ActionOption> menu;
        menu.push_back({"hold", {}});
        const LevelView* own = bundle.view(bundle.origin);
        if (!own) return menu;
        const BodyView* leader = nullptr;
        double best = 0.0;
        for (const auto& other : own->bodies) {
            if (other.class_name != "Leader") continue;
            double dx = attr(other.external, "x") - attr(self.external, "x");
            double dy = attr(other.external, "y") - attr(self.external, "y");
            double d = std::sqrt(dx * dx + dy * dy);
            if (!leader || d < best) { leader = &other; best = d; }
        }
        if (leader)
            menu.push_back({"approach",
                            {{"tx", attr(leader->external, "x")}, {"ty", attr(leader->external, "y")},
                             {"dist", best}}});
        return menu;
    };
    b.decide = [](const BodyView&, const PerceptionBundle&, const AttrMap& internal,
                  const std::vector<ActionOption>& menu) {
        Decision d{internal, 0};
        double standoff = attr(internal, "standoff", 2.0);
        for (std::size_t i = 0; i < menu.size(); ++i) {
            if (menu[i].name == "approach" && attr(menu[i].meta, "dist") > standoff) {
                d.action = i;
                break;
            }
        }
        return d;
    };
    b.effect = [](const BodyView& self, const PerceptionBundle& bundle, const ActionOption& chosen) {
        std::vector<Influence> out;
        if (chosen.name != "approach") {
            if (attr(self.external, "speed") != 0.0)
                out.push_back(assign_influence(bundle.origin, self.id, "speed", 0.0));
            return out;
        }
        double dx = attr(chosen.meta, "tx") - attr(self.external, "x");
        double dy = attr(chosen.meta, "ty") - attr(self.external, "y");
        double dist = std::sqrt(dx * dx + dy * dy);
        if (dist < 1e-12 || bundle.dt <= 0.0) return out;
        double vmax = attr(self.external, "vmax", 1.0);
        double step = std::min(vmax * bundle.dt, dist);
        out.push_back(add_influence(bundle.origin, self.id, "x", dx / dist * step));
        out.push_back(add_influence(bundle.origin, self.id, "y", dy / dist * step));
        out.push_back(assign_influence(bundle.origin, self.id, "speed", step / bundle.dt));
        return out;
    };
    return b;
}

// Counts the bodies visible from the own and perceivable levels into the
// spirit's internal state. Demonstrates a multi-body spirit whose domains
// feed one mind.
inline Behavior observer() {
    Behavior b;
    b.menu = [](const BodyView&, const PerceptionBundle&) { return std::vector<ActionOption>{}; };
    b.decide = [](const BodyView& self, const PerceptionBundle& bundle, const AttrMap& internal,
                  const std::vector<ActionOption>&) {
        Decision d{internal, std::nullopt};
        double seen = 0;
        for (const auto& view : bundle.levels)
            for (const auto& body : view.bodies)
                if (body.owner != self.owner) seen += 1;
        d.internal["seen"] = attr(internal, "seen") + seen;
        d.internal["probes"] = attr(internal, "probes") + 1;
        return d;
    };
    return b;
}

inline Behavior idle() {
    Behavior b;
    b.menu = [](const BodyView&, const PerceptionBundle&) { return std::vector<ActionOption>{}; };
    b.decide = [](const BodyView&, const PerceptionBundle&, const AttrMap& internal,
                  const std::vector<ActionOption>&) { return Decision{internal, std::nullopt}; };
    return b;
}

// ---- generators -----------------------------------------------------------------

// Every agent at exactly (x, y); speed/vmax/standoff/stamina from params.
inline GeneratorFn point_generator() {
    return [](const AttrMap& params, int count, SeedStream&) {
        std::vector<GeneratedAgent> out;
        for (int i = 0; i < count; ++i) {
            GeneratedAgent a;
            a.external = {{"x", attr(params, "x")}, {"y", attr(params, "y")}, {"speed", attr(params, "speed")}};
            a.internal = {};
            out.push_back(std::move(a));
        }
        return out;
    };
}

// Followers jittered uniformly in a square around a (jittered) cluster
// center. stamina is drawn per agent.
inline GeneratorFn cluster_generator() {
    return [](const AttrMap& params, int count, SeedStream& rng) {
        double jitter = attr(params, "center_jitter");
        double cx = attr(params, "cx") + rng.uniform(-jitter, jitter);
        double cy = attr(params, "cy") + rng.uniform(-jitter, jitter);
        double radius = attr(params, "radius", 1.0);
        std::vector<GeneratedAgent> out;
        for (int i = 0; i < count; ++i) {
            GeneratedAgent a;
            a.external = {{"x", cx + rng.uniform(-radius, radius)},
                          {"y", cy + rng.uniform(-radius, radius)},
                          {"speed", 0.0},
                          {"vmax", attr(params, "vmax", 1.0)}};
            a.internal = {{"standoff", attr(params, "standoff", 2.0)},
                          {"stamina", rng.uniform(attr(params, "stamina_min", 0.5),
                                                  attr(params, "stamina_max", 1.0))}};
            out.push_back(std::move(a));
        }
        return out;
    };
}

// Leaders on a vertical line at x0 (jittered per leader), cruising through
// two waypoints offset from their own lane.
inline GeneratorFn leader_line_generator() {
    return [](const AttrMap& params, int count, SeedStream& rng) {
        std::vector<GeneratedAgent> out;
        for (int i = 0; i < count; ++i) {
            double jy = attr(params, "jitter_y");
            double y = attr(params, "y0") + attr(params, "dy", 30.0) * static_cast<double>(i) +
                       rng.uniform(-jy, jy);
            double jx = attr(params, "jitter_x");
            double x = attr(params, "x0") + rng.uniform(-jx, jx);
            double speed = attr(params, "speed", 3.0) +
                           rng.uniform(-attr(params, "jitter_speed"), attr(params, "jitter_speed"));
            GeneratedAgent a;
            a.external = {{"x", x}, {"y", y}, {"speed", speed}, {"vmax", speed}};
            a.internal = {{"wp_count", 2.0},
                          {"wp_idx", 1.0},
                          {"arrive", attr(params, "arrive", 2.0)},
                          {"wp1_x", attr(params, "wp1_x", 100.0)},
                          {"wp1_y", y + attr(params, "wp1_dy")},
                          {"wp2_x", attr(params, "wp2_x", 1000.0)},
                          {"wp2_y", y + attr(params, "wp2_dy")},
                          {"stamina", rng.uniform(attr(params, "stamina_min", 0.5),
                                                  attr(params, "stamina_max", 1.0))}};
            out.push_back(std::move(a));
        }
        return out;
    };
}

// ---- environments ----------------------------------------------------------------

// Constant drift (vx, vy units/second) applied to every active body.
inline EnvironmentFactory drift_environment() {
    return [](const AttrMap& params) -> EnvironmentFn {
        double vx = attr(params, "vx"), vy = attr(params, "vy");
        return [vx, vy](const LevelView& view, Rational, double dt) {
            std::vector<Influence> out;
            for (const auto& b : view.bodies) {
                if (vx != 0.0) out.push_back(add_influence(view.level, b.id, "x", vx * dt));
                if (vy != 0.0) out.push_back(add_influence(view.level, b.id, "y", vy * dt));
            }
            return out;
        };
    };
}

// ---- aggregation function code -----------------------------------------------------

// Leader+followers -> one driving aggregate. Mean positions, the leader's
// cruise speed and route, and a priority compounded from each member's
// stamina and speed.
inline SpecCode platoon_code() {
    SpecCode code;
    auto member_inputs = [](const std::string& var) {
        return std::vector<SubfunctionInput>{{"Leader", var, std::nullopt}, {"Follower", var, std::nullopt}};
    };
    code.subfunctions.push_back({"mean_x", member_inputs("x"), "x", StateTarget::external, "mean", {}});
    code.subfunctions.push_back({"mean_y", member_inputs("y"), "y", StateTarget::external, "mean", {}});
    code.subfunctions.push_back(
        {"cruise", {{"Leader", "speed", std::nullopt}}, "speed", StateTarget::external, "slot:Leader", {}});
    std::vector<SubfunctionInput> priority_inputs{{"Leader", "stamina", std::nullopt},
                                                  {"Leader", "speed", std::nullopt},
                                                  {"Follower", "stamina", std::nullopt},
                                                  {"Follower", "speed", std::nullopt}};
    code.subfunctions.push_back(
        {"priority", priority_inputs, "priority", StateTarget::internal, "scaled_mean_product", {}});
    for (const char* var : {"wp_count", "wp_idx", "arrive", "wp1_x", "wp1_y", "wp2_x", "wp2_y"})
        code.subfunctions.push_back({std::string("route_") + var,
                                     {{"Leader", var, std::nullopt}},
                                     var,
                                     StateTarget::internal,
                                     "slot:Leader",
                                     {}});

    code.memorization = MemorizationSpec{
        {{"x", "x", false}, {"y", "y", false}},  // position offsets from the aggregate
        {"vmax"},
        {"stamina", "standoff"},
    };

    auto offset = [](const char* var) {
        return RestoreRule{var, RestoreRule::Kind::offset_from_memo, var, 0.0, false};
    };
    auto copy_ext = [](const char* var, const char* from) {
        return RestoreRule{var, RestoreRule::Kind::copy_aggregate, from, 0.0, false};
    };
    auto absolute_ext = [](const char* var) {
        return RestoreRule{var, RestoreRule::Kind::absolute_from_memo, "", 0.0, false};
    };
    code.disaggregation.per_class = {
        {"Leader", {offset("x"), offset("y"), copy_ext("speed", "speed"), absolute_ext("vmax")}},
        {"Follower", {offset("x"), offset("y"), copy_ext("speed", "speed"), absolute_ext("vmax")}},
    };
    code.disaggregation.fallback = {"x", 2.0};
    return code;
}

// Spirit-only merge of followers: one mind, the bodies stay where they are.
inline SpecCode follower_minds_code() {
    SpecCode code;
    code.subfunctions.push_back({"mean_stamina",
                                 {{"Follower", "stamina", std::nullopt}},
                                 "stamina",
                                 StateTarget::internal,
                                 "mean",
                                 {}});
    code.subfunctions.push_back({"mean_standoff",
                                 {{"Follower", "standoff", std::nullopt}},
                                 "standoff",
                                 StateTarget::internal,
                                 "mean",
                                 {}});
    code.memorization = MemorizationSpec{{}, {}, {"stamina", "standoff"}};
    code.disaggregation.per_class = {
        {"Follower",
         {RestoreRule{"stamina", RestoreRule::Kind::absolute_from_memo, "", 0.0, true},
          RestoreRule{"standoff", RestoreRule::Kind::absolute_from_memo, "", 0.0, true}}},
    };
    return code;
}

}  // namespace builtin

// Affinity: pairwise inverse distance weighted by a group-size factor
// n/(n+1). Prefers taking the whole cluster over its tightest subset, so
// greedy selection does not strand leftover members.
inline void register_group_cohesion(AffinityRegistry& reg) {
    reg.add("group_cohesion", [](const AffinityFunction& cfg) {
        auto vars = cfg.variables;
        double scale = cfg.scale > 0 ? cfg.scale : 1.0;
        return [vars, scale](const std::vector<MemberView>& group) {
            if (group.empty()) return 0.0;
            double pair_score = 1.0;
            if (group.size() >= 2) {
                double sum = 0.0;
                std::size_t pairs = 0;
                for (std::size_t i = 0; i < group.size(); ++i)
                    for (std::size_t j = i + 1; j < group.size(); ++j) {
                        sum += 1.0 / (1.0 + detail::member_distance(group[i], group[j], vars) / scale);
                        ++pairs;
                    }
                pair_score = sum / static_cast<double>(pairs);
            }
            double n = static_cast<double>(group.size());
            return pair_score * n / (n + 1.0);
        };
    });
}

// Everything the bundled fixtures reference by name.
inline Library builtin_library() {
    Library lib;
    lib.behaviors["waypoint_driver"] = builtin::waypoint_driver();
    lib.behaviors["follower_steer"] = builtin::follower_steer();
    lib.behaviors["observer"] = builtin::observer();
    lib.behaviors["idle"] = builtin::idle();

    lib.generators["point"] = builtin::point_generator();
    lib.generators["cluster"] = builtin::cluster_generator();
    lib.generators["leader_line"] = builtin::leader_line_generator();

    lib.environments["drift"] = builtin::drift_environment();

    lib.spec_code["F_Ag1"] = builtin::follower_minds_code();
    lib.spec_code["F_Ag2"] = builtin::platoon_code();
    lib.spec_code["F_Ag3"] = builtin::platoon_code();

    // mean of per-member products, rescaled into [0,1] by the group maximum
    lib.combiners.add("scaled_mean_product", [](const std::vector<std::vector<double>>& members) {
        if (members.empty()) return 0.0;
        double sum = 0.0, peak = 0.0;
        for (const auto& vals : members) {
            double p = 1.0;
            for (double v : vals) p *= v;
            sum += p;
            peak = std::max(peak, std::abs(p));
        }
        double mean = sum / static_cast<double>(members.size());
        return peak > 0.0 ? mean / peak : 0.0;
    });

    register_group_cohesion(lib.affinities);
    return lib;
}

}  // namespace mlsim
