#pragma once
// Weak-consistency measurement: replicate runs of the same scenario in
// full-resolution mode and dynamic-LOD mode with identical seeds, project
// the outputs of both through the experiment's aggregation functions (the
// comparison always lifts detail upward, never the reverse), and score the
// dissimilarity of the per-mode mean states.

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "mlsim/model_io.hpp"
#include "mlsim/scheduler.hpp"

namespace mlsim {

// ---- element extraction -------------------------------------------------------

struct ElementSample {
    double value = 0.0;   // mean over matching units; 0 when none matched
    std::size_t units = 0;
};

namespace consistency_detail {

inline const double* agent_variable(const World& w, AgentId id, const std::string& var) {
    for (BodyId bid : w.bodies_of(id)) {
        const auto& ext = w.body(bid).external;
        if (auto it = ext.find(var); it != ext.end()) return &it->second;
    }
    const auto& internal = w.spirit(id).internal;
    if (auto it = internal.find(var); it != internal.end()) return &it->second;
    return nullptr;
}

inline ElementSample extract(const World& w, const SignificantElement& element) {
    ElementSample sample;
    double sum = 0.0;
    if (element.kind == SignificantElement::Kind::agent_class) {
        for (const auto& [id, s] : w.spirits()) {
            if (s.class_name != element.name) continue;
            if (const double* v = agent_variable(w, id, element.variable)) {
                sum += *v;
                ++sample.units;
            }
        }
    } else {
        for (BodyId bid : w.bodies_in_level(level(element.name), /*active_only=*/true)) {
            const auto& ext = w.body(bid).external;
            if (auto it = ext.find(element.variable); it != ext.end()) {
                sum += it->second;
                ++sample.units;
            }
        }
    }
    if (sample.units) sample.value = sum / static_cast<double>(sample.units);
    return sample;
}

// Folds the final state through the experiment's aggregation functions so
// both modes are compared at aggregate resolution. A measurement, not LOD
// policy, so thresholds, zones, and hysteresis do not apply; the structural
// parts (classes, intervals, levels, radius) do.
inline World project(const World& final_world, const ScenarioDefinition& scenario,
                     const std::vector<std::string>& spec_names, Rational now) {
    World w = final_world;
    std::vector<AggregationFunctionSpec> projection;
    for (const auto& name : spec_names) {
        AggregationFunctionSpec spec = find_spec(scenario.model, name);
        spec.threshold = -std::numeric_limits<double>::infinity();
        projection.push_back(std::move(spec));
    }
    std::vector<const AggregationFunctionSpec*> ptrs;
    for (const auto& s : projection) ptrs.push_back(&s);
    std::vector<AgentId> pool;
    for (const auto& [id, _] : w.spirits()) pool.push_back(id);
    select_and_apply(w, SelectionStrategy::global_best, ptrs, {}, std::move(pool), now);
    return w;
}

}  // namespace consistency_detail

// ---- dissimilarity ---------------------------------------------------------------

struct ElementComparison {
    std::string key;
    double mean_a = 0.0;
    double mean_b = 0.0;
    double range = 0.0;  // observed spread of this element across both runs
};

using MetricFn = std::function<double(const std::vector<ElementComparison>&)>;

// Per-element normalized absolute difference, averaged. Elements whose
// observed range is zero contribute zero.
inline MetricFn range_normalized_metric() {
    return [](const std::vector<ElementComparison>& elements) {
        if (elements.empty()) return 0.0;
        double sum = 0.0;
        for (const auto& e : elements)
            if (e.range > 0.0) sum += std::abs(e.mean_a - e.mean_b) / e.range;
        return sum / static_cast<double>(elements.size());
    };
}

struct MetricRegistry {
    std::map<std::string, MetricFn> metrics;

    MetricRegistry() { metrics["range_normalized"] = range_normalized_metric(); }

    const MetricFn& resolve(const std::string& name) const {
        auto it = metrics.find(name);
        if (it == metrics.end()) throw Error(Errc::unknown_reference, "unknown metric '" + name + "'");
        return it->second;
    }
};

// Symmetric by construction of the comparisons; errors on mismatched sets.
inline double dissimilarity(const std::map<std::string, double>& a, const std::map<std::string, double>& b,
                            const std::map<std::string, double>& ranges, const MetricFn& metric) {
    if (a.size() != b.size()) throw Error(Errc::class_mismatch, "dissimilarity over mismatched element sets");
    std::vector<ElementComparison> cmp;
    for (const auto& [key, va] : a) {
        auto it = b.find(key);
        if (it == b.end()) throw Error(Errc::class_mismatch, "element '" + key + "' missing from one side");
        auto r = ranges.find(key);
        cmp.push_back({key, va, it->second, r != ranges.end() ? r->second : 0.0});
    }
    return metric(cmp);
}

// ---- the experiment --------------------------------------------------------------

struct ReplicateRow {
    int replicate = 0;
    std::string mode;       // full | lod
    Rational time;          // sample time (duration for the final sample)
    bool final_sample = true;
    std::map<std::string, ElementSample> values;
    std::uint64_t agent_steps = 0;
};

struct ConsistencyReport {
    std::string experiment;
    std::string scenario;
    Rational duration;
    int replicates = 1;
    std::uint64_t seed_base = 0;
    std::string metric;
    double tolerance = 0.0;

    std::vector<ReplicateRow> rows;                 // replicate-major, full before lod
    std::map<std::string, double> mean_full, mean_lod, ranges;
    double dissimilarity_value = 0.0;
    std::map<std::string, double> checkpoint_dissimilarity;  // extension samples, keyed by time
    std::uint64_t steps_full = 0, steps_lod = 0;

    bool consistent() const { return dissimilarity_value <= tolerance; }

    std::string csv() const {
        std::string out = "replicate,mode,time,key,value,units\n";
        for (const auto& row : rows) {
            std::string prefix = std::to_string(row.replicate) + "," + row.mode + "," +
                                 format_double(row.time.to_double()) + ",";
            for (const auto& [key, sample] : row.values)
                out += prefix + key + "," + format_double(sample.value) + "," +
                       std::to_string(sample.units) + "\n";
            out += prefix + "agent_steps," + std::to_string(row.agent_steps) + ",\n";
        }
        return out;
    }

    std::string summary() const {
        std::string out;
        out += "experiment " + experiment + "\n";
        out += "scenario " + scenario + "\n";
        out += "duration " + duration.str() + "  replicates " + std::to_string(replicates) +
               "  seed_base " + std::to_string(seed_base) + "\n";
        out += "metric " + metric + "\n\n";
        for (const auto& [key, mf] : mean_full) {
            double ml = mean_lod.at(key);
            out += "element " + key + ": mean_full=" + format_double(mf) + " mean_lod=" +
                   format_double(ml) + " |diff|=" + format_double(std::abs(mf - ml)) + " range=" +
                   format_double(ranges.at(key)) + "\n";
        }
        out += "\nagent_steps full=" + std::to_string(steps_full) + " lod=" + std::to_string(steps_lod) +
               "\n";
        out += "dissimilarity " + format_double(dissimilarity_value) + "\n";
        out += "tolerance " + format_double(tolerance) + "\n";
        out += std::string("verdict ") + (consistent() ? "CONSISTENT" : "INCONSISTENT") + "\n";
        if (!checkpoint_dissimilarity.empty()) {
            out += "\n# sampled checkpoints (extension beyond the end-of-run comparison)\n";
            for (const auto& [t, d] : checkpoint_dissimilarity)
                out += "checkpoint t=" + t + " dissimilarity=" + format_double(d) + "\n";
        }
        return out;
    }
};

// Runs the full experiment. Replicates execute in parallel; assembly is a
// deterministic reduction in replicate order.
inline ConsistencyReport run_experiment(const ConsistencyExperiment& exp, const ScenarioDefinition& scenario,
                                        const Library& lib) {
    MetricRegistry metrics;
    const MetricFn& metric = metrics.resolve(exp.metric);

    // Sample times: optional evenly spaced checkpoints, then the end of run.
    std::vector<Rational> sample_times;
    for (int k = 1; k <= exp.checkpoints; ++k) {
        Rational t = exp.duration * Rational(k, exp.checkpoints + 1);
        if (t != exp.duration &&
            std::find(sample_times.begin(), sample_times.end(), t) == sample_times.end())
            sample_times.push_back(t);
    }
    sample_times.push_back(exp.duration);

    struct ReplicateResult {
        std::vector<ReplicateRow> rows;
    };

    auto run_replicate = [&](int rep) {
        ReplicateResult result;
        std::uint64_t seed = exp.seed_base + static_cast<std::uint64_t>(rep);
        for (const char* mode_name : {"full", "lod"}) {
            RunMode mode = parse_run_mode(mode_name);
            for (const Rational& t : sample_times) {
                // Determinism makes a shorter run a prefix of a longer one,
                // so checkpoints re-run the scenario up to the sample time.
                try {
                    RunLog log;
                    RunOptions options{t, seed, mode,
                                       mode == RunMode::lod ? exp.threshold_override : std::nullopt};
                    RunResult rr = run(scenario, lib, options, log);
                    World projected =
                        consistency_detail::project(rr.world, scenario, exp.projection_specs, t);
                    ReplicateRow row{rep, mode_name, t, t == exp.duration, {}, rr.agent_steps};
                    for (const auto& element : exp.elements)
                        row.values[element.key()] = consistency_detail::extract(projected, element);
                    result.rows.push_back(std::move(row));
                } catch (const Error& e) {
                    throw Error(e.code(), "replicate " + std::to_string(rep) + ", mode " + mode_name +
                                              ": " + e.what());
                }
            }
        }
        return result;
    };

    std::vector<std::future<ReplicateResult>> futures;
    futures.reserve(exp.replicates);
    for (int rep = 0; rep < exp.replicates; ++rep)
        futures.push_back(std::async(std::launch::async, run_replicate, rep));

    ConsistencyReport report;
    report.experiment = exp.name;
    report.scenario = scenario.name;
    report.duration = exp.duration;
    report.replicates = exp.replicates;
    report.seed_base = exp.seed_base;
    report.metric = exp.metric;
    report.tolerance = exp.tolerance;

    for (auto& f : futures) {
        ReplicateResult r = f.get();
        report.rows.insert(report.rows.end(), r.rows.begin(), r.rows.end());
    }

    // Observed range per element across every recorded value of both modes.
    std::map<std::string, std::pair<double, double>> spread;
    for (const auto& row : report.rows) {
        for (const auto& [key, sample] : row.values) {
            auto [it, inserted] = spread.emplace(key, std::pair{sample.value, sample.value});
            if (!inserted) {
                it->second.first = std::min(it->second.first, sample.value);
                it->second.second = std::max(it->second.second, sample.value);
            }
        }
    }
    for (const auto& [key, mm] : spread) report.ranges[key] = mm.second - mm.first;

    // Mean state per mode at each sample time; the final time is the
    // headline comparison.
    auto means_at = [&](const std::string& mode, const Rational& t) {
        std::map<std::string, double> means;
        std::map<std::string, int> counts;
        for (const auto& row : report.rows) {
            if (row.mode != mode || row.time != t) continue;
            for (const auto& [key, sample] : row.values) {
                means[key] += sample.value;
                counts[key] += 1;
            }
        }
        for (auto& [key, sum] : means) sum /= static_cast<double>(counts.at(key));
        return means;
    };

    report.mean_full = means_at("full", exp.duration);
    report.mean_lod = means_at("lod", exp.duration);
    report.dissimilarity_value = dissimilarity(report.mean_full, report.mean_lod, report.ranges, metric);
    for (const Rational& t : sample_times) {
        if (t == exp.duration) continue;
        report.checkpoint_dissimilarity[t.str()] =
            dissimilarity(means_at("full", t), means_at("lod", t), report.ranges, metric);
    }

    for (const auto& row : report.rows) {
        if (!row.final_sample) continue;
        (row.mode == "full" ? report.steps_full : report.steps_lod) += row.agent_steps;
    }
    return report;
}

}  // namespace mlsim
