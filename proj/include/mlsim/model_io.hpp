#pragma once
// Declarative file formats. All three are line-oriented, order-independent,
// and `#`-commented; parse errors carry file:line. The exact grammar is
// documented in the README and exercised by the bundled fixtures.
//
//   model:      level / influence / perceive / hierarchy / spec /
//               strategy / precedence
//   scenario:   model / frequency / agent_function / behavior / population /
//               environment / lod / zone / demand
//   experiment: scenario / duration / replicates / seed_base / element /
//               projection / metric / tolerance / checkpoints /
//               threshold_override

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mlsim/level_graph.hpp"
#include "mlsim/scenario.hpp"

namespace mlsim {

namespace io_detail {

struct Line {
    int number = 0;
    std::vector<std::string> tokens;
};

inline std::vector<Line> read_lines(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(Errc::io, "cannot open '" + path + "'");
    std::vector<Line> out;
    std::string raw;
    int number = 0;
    while (std::getline(f, raw)) {
        ++number;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::istringstream ss(raw);
        Line line{number, {}};
        std::string tok;
        while (ss >> tok) line.tokens.push_back(tok);
        if (!line.tokens.empty()) out.push_back(std::move(line));
    }
    return out;
}

[[noreturn]] inline void fail(const std::string& path, int line, const std::string& message) {
    throw Error(Errc::parse, path + ":" + std::to_string(line) + ": " + message);
}

// key=value tokens after a fixed prefix; bare tokens are rejected.
inline std::map<std::string, std::string> keyvalues(const std::string& path, const Line& line,
                                                    std::size_t from) {
    std::map<std::string, std::string> out;
    for (std::size_t i = from; i < line.tokens.size(); ++i) {
        auto eq = line.tokens[i].find('=');
        if (eq == std::string::npos || eq == 0)
            fail(path, line.number, "expected key=value, got '" + line.tokens[i] + "'");
        out[line.tokens[i].substr(0, eq)] = line.tokens[i].substr(eq + 1);
    }
    return out;
}

inline double to_double(const std::string& path, int line, const std::string& text) {
    try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used != text.size()) fail(path, line, "bad number '" + text + "'");
        return v;
    } catch (const std::exception&) {
        fail(path, line, "bad number '" + text + "'");
    }
}

inline Rational to_rational(const std::string& path, int line, const std::string& text) {
    try {
        return Rational::parse(text);
    } catch (const Error&) {
        fail(path, line, "bad rational '" + text + "'");
    }
}

inline std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

// Class[min:max][@level]
inline MemberSlot parse_member(const std::string& path, int line, const std::string& text) {
    MemberSlot slot;
    auto bracket = text.find('[');
    auto close = text.find(']');
    if (bracket == std::string::npos || close == std::string::npos || close < bracket)
        fail(path, line, "member slot '" + text + "' needs Class[min:max]");
    slot.class_name = text.substr(0, bracket);
    auto interval = split(text.substr(bracket + 1, close - bracket - 1), ':');
    if (interval.size() != 2) fail(path, line, "member interval in '" + text + "' needs min:max");
    slot.min = static_cast<int>(to_double(path, line, interval[0]));
    slot.max = static_cast<int>(to_double(path, line, interval[1]));
    if (slot.min < 1 || slot.max < slot.min)
        fail(path, line, "member interval in '" + text + "' must satisfy 1 <= min <= max");
    if (close + 1 < text.size()) {
        if (text[close + 1] != '@') fail(path, line, "expected @level in '" + text + "'");
        slot.level = level(text.substr(close + 2));
    }
    return slot;
}

inline std::string resolve_relative(const std::string& base_file, const std::string& ref) {
    std::filesystem::path p(ref);
    if (p.is_absolute()) return ref;
    return (std::filesystem::path(base_file).parent_path() / p).string();
}

}  // namespace io_detail

// ---- model ------------------------------------------------------------------------

inline HierarchicalModel parse_model(const std::string& path) {
    using namespace io_detail;
    HierarchicalModel m;
    for (const Line& line : read_lines(path)) {
        const auto& t = line.tokens;
        const std::string& kind = t[0];
        if (kind == "model") {
            if (t.size() != 2) fail(path, line.number, "model needs a name");
            m.name = t[1];
        } else if (kind == "level") {
            if (t.size() < 2) fail(path, line.number, "level needs a name");
            auto kv = keyvalues(path, line, 2);
            m.levels[level(t[1])] = Extent{kv.count("spatial") ? kv["spatial"] : "",
                                           kv.count("temporal") ? kv["temporal"] : ""};
        } else if (kind == "influence" || kind == "perceive") {
            if (t.size() != 4 || t[2] != "->")
                fail(path, line.number, kind + " needs the form: " + kind + " a -> b");
            auto& edges = kind == "influence" ? m.influence_edges : m.perception_edges;
            edges.insert({level(t[1]), level(t[3])});
        } else if (kind == "hierarchy") {
            if (t.size() < 4 || t[2] != "->")
                fail(path, line.number, "hierarchy needs the form: hierarchy a -> b [: labels]");
            std::vector<std::string> labels;
            if (t.size() > 4) {
                if (t[4] != ":") fail(path, line.number, "labels start with ':'");
                std::string joined;
                for (std::size_t i = 5; i < t.size(); ++i) joined += t[i];
                for (const auto& label : split(joined, ','))
                    if (!label.empty()) labels.push_back(label);
                if (labels.empty()) fail(path, line.number, "':' without labels");
            }
            auto& existing = m.hierarchy_edges[{level(t[1]), level(t[3])}];  // duplicates collapse
            for (const auto& label : labels)
                if (std::find(existing.begin(), existing.end(), label) == existing.end())
                    existing.push_back(label);
        } else if (kind == "spec") {
            if (t.size() < 3) fail(path, line.number, "spec needs a name and key=value fields");
            AggregationFunctionSpec spec;
            spec.name = t[1];
            auto kv = keyvalues(path, line, 2);
            if (!kv.count("members")) fail(path, line.number, "spec needs members=...");
            for (const auto& item : split(kv["members"], ','))
                spec.members.push_back(parse_member(path, line.number, item));
            if (kv.count("output")) {
                auto at = kv["output"].find('@');
                if (at == std::string::npos) fail(path, line.number, "output needs Class@level");
                spec.output = AggregateOutput{kv["output"].substr(0, at), level(kv["output"].substr(at + 1))};
            }
            if (kv.count("threshold")) spec.threshold = to_double(path, line.number, kv["threshold"]);
            if (kv.count("affinity")) spec.affinity.name = kv["affinity"];
            if (kv.count("vars")) spec.affinity.variables = split(kv["vars"], ',');
            if (kv.count("scale")) spec.affinity.scale = to_double(path, line.number, kv["scale"]);
            if (kv.count("radius")) spec.radius = to_double(path, line.number, kv["radius"]);
            if (kv.count("merged_class")) spec.merged_class = kv["merged_class"];
            m.specs.push_back(std::move(spec));
        } else if (kind == "strategy") {
            if (t.size() != 2) fail(path, line.number, "strategy needs a name");
            m.strategy = t[1];
        } else if (kind == "precedence") {
            if (t.size() != 3) fail(path, line.number, "precedence needs: precedence before after");
            m.precedence.push_back({t[1], t[2]});
        } else {
            fail(path, line.number, "unknown model directive '" + kind + "'");
        }
    }
    if (m.levels.empty()) throw Error(Errc::parse, path + ": model declares no levels");
    return m;
}

inline std::string serialize_model(const HierarchicalModel& m) {
    std::string out = "model " + m.name + "\n\n";
    for (const auto& [l, extent] : m.levels)
        out += "level " + l.name + " spatial=" + extent.spatial + " temporal=" + extent.temporal + "\n";
    out += "\n";
    for (const auto& [a, b] : m.influence_edges) out += "influence " + a.name + " -> " + b.name + "\n";
    for (const auto& [a, b] : m.perception_edges) out += "perceive " + a.name + " -> " + b.name + "\n";
    for (const auto& [edge, labels] : m.hierarchy_edges) {
        out += "hierarchy " + edge.first.name + " -> " + edge.second.name;
        for (std::size_t i = 0; i < labels.size(); ++i) out += (i ? ", " : " : ") + labels[i];
        out += "\n";
    }
    for (const auto& spec : m.specs) {
        out += "spec " + spec.name + " members=";
        for (std::size_t i = 0; i < spec.members.size(); ++i) {
            const MemberSlot& s = spec.members[i];
            out += (i ? "," : "") + s.class_name + "[" + std::to_string(s.min) + ":" +
                   std::to_string(s.max) + "]";
            if (s.level) out += "@" + s.level->name;
        }
        if (spec.output) out += " output=" + spec.output->class_name + "@" + spec.output->level.name;
        out += " threshold=" + format_double(spec.threshold);
        out += " affinity=" + spec.affinity.name;
        out += " vars=";
        for (std::size_t i = 0; i < spec.affinity.variables.size(); ++i)
            out += (i ? "," : "") + spec.affinity.variables[i];
        out += " scale=" + format_double(spec.affinity.scale);
        if (spec.radius > 0) out += " radius=" + format_double(spec.radius);
        if (!spec.merged_class.empty()) out += " merged_class=" + spec.merged_class;
        out += "\n";
    }
    out += "strategy " + m.strategy + "\n";
    for (const auto& [before, after] : m.precedence) out += "precedence " + before + " " + after + "\n";
    return out;
}

// Parse plus validation; the CLI `validate` subcommand parses and validates
// separately so it can print the violations instead.
inline HierarchicalModel load_model(const std::string& path) {
    HierarchicalModel m = parse_model(path);
    auto report = validate_hierarchical_graph(m);
    auto bindings = check_label_bindings(m, m.specs);
    if (!report.ok() || !bindings.ok()) {
        std::string msg = path + ": model validation failed:";
        for (const auto& v : report.violations) msg += "\n  " + v.message;
        for (const auto& v : bindings.violations) msg += "\n  " + v.message;
        throw Error(Errc::validation, msg);
    }
    return m;
}

// ---- scenario ------------------------------------------------------------------------

inline ScenarioDefinition parse_scenario(const std::string& path) {
    using namespace io_detail;
    ScenarioDefinition s;
    for (const Line& line : read_lines(path)) {
        const auto& t = line.tokens;
        const std::string& kind = t[0];
        if (kind == "scenario") {
            if (t.size() != 2) fail(path, line.number, "scenario needs a name");
            s.name = t[1];
        } else if (kind == "model") {
            if (t.size() != 2) fail(path, line.number, "model needs a path");
            s.model_path = resolve_relative(path, t[1]);
        } else if (kind == "frequency") {
            if (t.size() != 3) fail(path, line.number, "frequency needs: frequency <level> base=<hz>");
            auto kv = keyvalues(path, line, 2);
            if (!kv.count("base")) fail(path, line.number, "frequency needs base=<hz>");
            s.base_frequencies[level(t[1])] = to_rational(path, line.number, kv["base"]);
        } else if (kind == "agent_function") {
            if (t.size() != 4) fail(path, line.number, "agent_function needs: <class> <name> min_hz=<hz>");
            auto kv = keyvalues(path, line, 3);
            if (!kv.count("min_hz")) fail(path, line.number, "agent_function needs min_hz=<hz>");
            s.agent_functions.push_back({t[1], t[2], to_rational(path, line.number, kv["min_hz"])});
        } else if (kind == "behavior") {
            if (t.size() != 3) fail(path, line.number, "behavior needs: behavior <class> <name>");
            s.behavior_bindings[t[1]] = t[2];
        } else if (kind == "population") {
            if (t.size() < 2) fail(path, line.number, "population needs a class");
            PopulationDecl pop;
            pop.class_name = t[1];
            auto kv = keyvalues(path, line, 2);
            for (const auto& [key, value] : kv) {
                if (key == "count") {
                    pop.count = static_cast<int>(to_double(path, line.number, value));
                } else if (key == "levels" || key == "level") {
                    for (const auto& l : split(value, '+')) pop.levels.push_back(level(l));
                } else if (key == "generator") {
                    pop.generator = value;
                } else if (key == "seed_salt") {
                    pop.seed_salt = static_cast<std::uint64_t>(to_double(path, line.number, value));
                } else {
                    pop.params[key] = to_double(path, line.number, value);
                }
            }
            if (pop.count < 0) fail(path, line.number, "population count must be non-negative");
            if (pop.levels.empty()) fail(path, line.number, "population needs level=... or levels=...");
            s.populations.push_back(std::move(pop));
        } else if (kind == "environment") {
            if (t.size() < 3) fail(path, line.number, "environment needs: environment <level> <name>");
            EnvironmentDecl env;
            env.level = level(t[1]);
            env.name = t[2];
            auto kv = keyvalues(path, line, 3);
            for (const auto& [key, value] : kv) env.params[key] = to_double(path, line.number, value);
            s.environments.push_back(std::move(env));
        } else if (kind == "lod") {
            auto kv = keyvalues(path, line, 1);
            if (kv.count("period")) s.lod.period = to_rational(path, line.number, kv["period"]);
            if (kv.count("refractory")) s.lod.refractory = to_rational(path, line.number, kv["refractory"]);
            if (kv.count("specs"))
                for (const auto& name : split(kv["specs"], ','))
                    if (!name.empty()) s.lod.active_specs.push_back(name);
        } else if (kind == "zone") {
            DetailZone zone;
            auto kv = keyvalues(path, line, 1);
            for (const auto& [key, value] : kv) {
                if (key == "level") {
                    zone.level = level(value);
                } else if (key == "x_var") {
                    zone.x_var = value;
                } else if (key == "y_var") {
                    zone.y_var = value;
                } else if (key == "x_min") {
                    zone.x_min = to_double(path, line.number, value);
                } else if (key == "x_max") {
                    zone.x_max = to_double(path, line.number, value);
                } else if (key == "y_min") {
                    zone.y_min = to_double(path, line.number, value);
                } else if (key == "y_max") {
                    zone.y_max = to_double(path, line.number, value);
                } else {
                    fail(path, line.number, "unknown zone field '" + key + "'");
                }
            }
            s.lod.zones.push_back(zone);
        } else if (kind == "demand") {
            if (t.size() < 2 || (t[1] != "set" && t[1] != "clear"))
                fail(path, line.number, "demand needs: demand set|clear t=.. source=.. demander=.. [hz=..]");
            DemandScript d;
            d.set = t[1] == "set";
            auto kv = keyvalues(path, line, 2);
            if (!kv.count("t") || !kv.count("source") || !kv.count("demander"))
                fail(path, line.number, "demand needs t=, source=, demander=");
            d.time = to_rational(path, line.number, kv["t"]);
            d.source = level(kv["source"]);
            d.demander = level(kv["demander"]);
            if (d.set) {
                if (!kv.count("hz")) fail(path, line.number, "demand set needs hz=");
                d.hz = to_rational(path, line.number, kv["hz"]);
            }
            s.demands.push_back(std::move(d));
        } else {
            fail(path, line.number, "unknown scenario directive '" + kind + "'");
        }
    }
    if (s.model_path.empty()) throw Error(Errc::parse, path + ": scenario names no model file");
    return s;
}

inline std::string serialize_scenario(const ScenarioDefinition& s) {
    std::string out = "scenario " + s.name + "\nmodel " + s.model_path + "\n\n";
    for (const auto& [l, hz] : s.base_frequencies) out += "frequency " + l.name + " base=" + hz.str() + "\n";
    for (const auto& fn : s.agent_functions)
        out += "agent_function " + fn.class_name + " " + fn.function_name + " min_hz=" + fn.min_hz.str() + "\n";
    for (const auto& [cls, name] : s.behavior_bindings) out += "behavior " + cls + " " + name + "\n";
    for (const auto& pop : s.populations) {
        out += "population " + pop.class_name + " count=" + std::to_string(pop.count) + " levels=";
        for (std::size_t i = 0; i < pop.levels.size(); ++i) out += (i ? "+" : "") + pop.levels[i].name;
        out += " generator=" + pop.generator;
        if (pop.seed_salt) out += " seed_salt=" + std::to_string(pop.seed_salt);
        for (const auto& [key, value] : pop.params) out += " " + key + "=" + format_double(value);
        out += "\n";
    }
    for (const auto& env : s.environments) {
        out += "environment " + env.level.name + " " + env.name;
        for (const auto& [key, value] : env.params) out += " " + key + "=" + format_double(value);
        out += "\n";
    }
    out += "lod period=" + s.lod.period.str() + " refractory=" + s.lod.refractory.str();
    if (!s.lod.active_specs.empty()) {
        out += " specs=";
        for (std::size_t i = 0; i < s.lod.active_specs.size(); ++i)
            out += (i ? "," : "") + s.lod.active_specs[i];
    }
    out += "\n";
    for (const auto& zone : s.lod.zones) {
        out += "zone";
        if (zone.level) out += " level=" + zone.level->name;
        out += " x_min=" + format_double(zone.x_min) + " x_max=" + format_double(zone.x_max);
        out += " y_min=" + format_double(zone.y_min) + " y_max=" + format_double(zone.y_max) + "\n";
    }
    for (const auto& d : s.demands) {
        out += std::string("demand ") + (d.set ? "set" : "clear") + " t=" + d.time.str() +
               " source=" + d.source.name + " demander=" + d.demander.name;
        if (d.set) out += " hz=" + d.hz.str();
        out += "\n";
    }
    return out;
}

// Loads the scenario plus its model, validates, and binds the spec code.
inline ScenarioDefinition load_scenario(const std::string& path, const Library& lib) {
    ScenarioDefinition s = parse_scenario(path);
    s.model = load_model(s.model_path);
    resolve_specs(s.model, lib);
    for (const auto& [cls, behavior] : s.behavior_bindings)
        if (!lib.behaviors.count(behavior))
            throw Error(Errc::unknown_reference,
                        path + ": behavior '" + behavior + "' (class " + cls + ") is not registered");
    active_specs(s);  // throws on unknown spec names
    return s;
}

// ---- experiment -------------------------------------------------------------------------

struct SignificantElement {
    enum class Kind { agent_class, level };
    Kind kind = Kind::agent_class;
    std::string name;
    std::string variable;

    std::string key() const {
        return (kind == Kind::agent_class ? "class:" : "level:") + name + "." + variable;
    }
};

struct ConsistencyExperiment {
    std::string name;
    std::string scenario_path;
    Rational duration{0};
    int replicates = 1;
    std::uint64_t seed_base = 0;
    std::vector<SignificantElement> elements;
    std::vector<std::string> projection_specs;  // aggregation functions projecting high-res outputs
    std::string metric = "range_normalized";
    double tolerance = 0.0;
    int checkpoints = 0;                        // extension: sampled mid-run comparison points
    std::optional<double> threshold_override;   // e.g. +inf to disable LOD aggregation
};

inline ConsistencyExperiment parse_experiment(const std::string& path) {
    using namespace io_detail;
    ConsistencyExperiment e;
    for (const Line& line : read_lines(path)) {
        const auto& t = line.tokens;
        const std::string& kind = t[0];
        if (kind == "experiment") {
            if (t.size() != 2) fail(path, line.number, "experiment needs a name");
            e.name = t[1];
        } else if (kind == "scenario") {
            if (t.size() != 2) fail(path, line.number, "scenario needs a path");
            e.scenario_path = resolve_relative(path, t[1]);
        } else if (kind == "duration") {
            if (t.size() != 2) fail(path, line.number, "duration needs a value");
            e.duration = to_rational(path, line.number, t[1]);
        } else if (kind == "replicates") {
            if (t.size() != 2) fail(path, line.number, "replicates needs a count");
            e.replicates = static_cast<int>(to_double(path, line.number, t[1]));
            if (e.replicates < 1) fail(path, line.number, "replicates must be >= 1");
        } else if (kind == "seed_base") {
            if (t.size() != 2) fail(path, line.number, "seed_base needs a value");
            e.seed_base = static_cast<std::uint64_t>(to_double(path, line.number, t[1]));
        } else if (kind == "element") {
            if (t.size() != 4 || (t[1] != "class" && t[1] != "level"))
                fail(path, line.number, "element needs: element class|level <name> <variable>");
            e.elements.push_back({t[1] == "class" ? SignificantElement::Kind::agent_class
                                                  : SignificantElement::Kind::level,
                                  t[2], t[3]});
        } else if (kind == "projection") {
            for (std::size_t i = 1; i < t.size(); ++i)
                for (const auto& name : split(t[i], ','))
                    if (!name.empty()) e.projection_specs.push_back(name);
        } else if (kind == "metric") {
            if (t.size() != 2) fail(path, line.number, "metric needs a name");
            e.metric = t[1];
        } else if (kind == "tolerance") {
            if (t.size() != 2) fail(path, line.number, "tolerance needs a value");
            e.tolerance = to_double(path, line.number, t[1]);
        } else if (kind == "checkpoints") {
            if (t.size() != 2) fail(path, line.number, "checkpoints needs a count");
            e.checkpoints = static_cast<int>(to_double(path, line.number, t[1]));
        } else if (kind == "threshold_override") {
            if (t.size() != 2) fail(path, line.number, "threshold_override needs a value or 'inf'");
            e.threshold_override = t[1] == "inf" ? std::numeric_limits<double>::infinity()
                                                 : to_double(path, line.number, t[1]);
        } else {
            fail(path, line.number, "unknown experiment directive '" + kind + "'");
        }
    }
    if (e.scenario_path.empty()) throw Error(Errc::parse, path + ": experiment names no scenario");
    if (e.elements.empty()) throw Error(Errc::parse, path + ": experiment lists no significant elements");
    return e;
}

inline std::string serialize_experiment(const ConsistencyExperiment& e) {
    std::string out = "experiment " + e.name + "\nscenario " + e.scenario_path + "\n";
    out += "duration " + e.duration.str() + "\n";
    out += "replicates " + std::to_string(e.replicates) + "\n";
    out += "seed_base " + std::to_string(e.seed_base) + "\n";
    for (const auto& el : e.elements)
        out += "element " + std::string(el.kind == SignificantElement::Kind::agent_class ? "class" : "level") +
               " " + el.name + " " + el.variable + "\n";
    if (!e.projection_specs.empty()) {
        out += "projection ";
        for (std::size_t i = 0; i < e.projection_specs.size(); ++i)
            out += (i ? "," : "") + e.projection_specs[i];
        out += "\n";
    }
    out += "metric " + e.metric + "\n";
    out += "tolerance " + format_double(e.tolerance) + "\n";
    if (e.checkpoints) out += "checkpoints " + std::to_string(e.checkpoints) + "\n";
    if (e.threshold_override) {
        out += "threshold_override ";
        out += std::isinf(*e.threshold_override) ? "inf" : format_double(*e.threshold_override);
        out += "\n";
    }
    return out;
}

// ---- declarative equality (round-trip checks) --------------------------------------------

inline bool specs_equal(const AggregationFunctionSpec& a, const AggregationFunctionSpec& b) {
    auto slot_eq = [](const MemberSlot& x, const MemberSlot& y) {
        return x.class_name == y.class_name && x.min == y.min && x.max == y.max && x.level == y.level;
    };
    if (a.name != b.name || a.members.size() != b.members.size()) return false;
    for (std::size_t i = 0; i < a.members.size(); ++i)
        if (!slot_eq(a.members[i], b.members[i])) return false;
    if (a.output.has_value() != b.output.has_value()) return false;
    if (a.output && (a.output->class_name != b.output->class_name || a.output->level != b.output->level))
        return false;
    return a.threshold == b.threshold && a.radius == b.radius && a.affinity.name == b.affinity.name &&
           a.affinity.variables == b.affinity.variables && a.affinity.scale == b.affinity.scale &&
           a.merged_class == b.merged_class;
}

inline bool models_equal(const HierarchicalModel& a, const HierarchicalModel& b) {
    if (a.name != b.name || a.levels != b.levels || a.influence_edges != b.influence_edges ||
        a.perception_edges != b.perception_edges || a.hierarchy_edges != b.hierarchy_edges ||
        a.strategy != b.strategy || a.precedence != b.precedence || a.specs.size() != b.specs.size())
        return false;
    for (std::size_t i = 0; i < a.specs.size(); ++i)
        if (!specs_equal(a.specs[i], b.specs[i])) return false;
    return true;
}

inline bool scenarios_equal(const ScenarioDefinition& a, const ScenarioDefinition& b) {
    auto zones_eq = [](const DetailZone& x, const DetailZone& y) {
        return x.level == y.level && x.x_var == y.x_var && x.y_var == y.y_var && x.x_min == y.x_min &&
               x.x_max == y.x_max && x.y_min == y.y_min && x.y_max == y.y_max;
    };
    if (a.name != b.name || a.base_frequencies != b.base_frequencies ||
        a.behavior_bindings != b.behavior_bindings || a.populations.size() != b.populations.size() ||
        a.environments.size() != b.environments.size() || a.demands.size() != b.demands.size() ||
        a.lod.period != b.lod.period || a.lod.refractory != b.lod.refractory ||
        a.lod.active_specs != b.lod.active_specs || a.lod.zones.size() != b.lod.zones.size())
        return false;
    for (std::size_t i = 0; i < a.populations.size(); ++i) {
        const auto& x = a.populations[i];
        const auto& y = b.populations[i];
        if (x.class_name != y.class_name || x.count != y.count || x.levels != y.levels ||
            x.generator != y.generator || x.params != y.params || x.seed_salt != y.seed_salt)
            return false;
    }
    for (std::size_t i = 0; i < a.environments.size(); ++i) {
        const auto& x = a.environments[i];
        const auto& y = b.environments[i];
        if (x.level != y.level || x.name != y.name || x.params != y.params) return false;
    }
    for (std::size_t i = 0; i < a.demands.size(); ++i) {
        const auto& x = a.demands[i];
        const auto& y = b.demands[i];
        if (x.time != y.time || x.set != y.set || x.source != y.source || x.demander != y.demander ||
            (x.set && x.hz != y.hz))
            return false;
    }
    for (std::size_t i = 0; i < a.lod.zones.size(); ++i)
        if (!zones_eq(a.lod.zones[i], b.lod.zones[i])) return false;
    return true;
}

inline bool experiments_equal(const ConsistencyExperiment& a, const ConsistencyExperiment& b) {
    if (a.name != b.name || a.duration != b.duration || a.replicates != b.replicates ||
        a.seed_base != b.seed_base || a.metric != b.metric || a.tolerance != b.tolerance ||
        a.checkpoints != b.checkpoints || a.projection_specs != b.projection_specs ||
        a.elements.size() != b.elements.size())
        return false;
    if (a.threshold_override.has_value() != b.threshold_override.has_value()) return false;
    if (a.threshold_override && *a.threshold_override != *b.threshold_override &&
        !(std::isinf(*a.threshold_override) && std::isinf(*b.threshold_override)))
        return false;
    for (std::size_t i = 0; i < a.elements.size(); ++i) {
        const auto& x = a.elements[i];
        const auto& y = b.elements[i];
        if (x.kind != y.kind || x.name != y.name || x.variable != y.variable) return false;
    }
    return true;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::io, "cannot open '" + path + "' for writing");
    f << content;
}

}  // namespace mlsim
