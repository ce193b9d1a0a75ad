#pragma once
// Subcommand implementations shared by the CLI binary and the acceptance
// suite. Exit codes: 0 success, 1 domain violation (invalid model, failed
// run, inconsistent experiment), 2 usage or I/O error.

#include <filesystem>
#include <iostream>
#include <string>

#include "mlsim/behaviors.hpp"
#include "mlsim/consistency.hpp"
#include "mlsim/model_io.hpp"
#include "mlsim/scheduler.hpp"

namespace mlsim::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_domain = 1;
inline constexpr int exit_usage = 2;

inline int classify_error(const Error& e) {
    switch (e.code()) {
        case Errc::parse:
        case Errc::io:
        case Errc::usage:
        case Errc::unknown_reference:
            return exit_usage;
        default:
            return exit_domain;
    }
}

inline void print_report(const ValidationReport& report, std::ostream& out) {
    for (const auto& v : report.violations) out << "violation: " << v.message << "\n";
    for (const auto& w : report.warnings) out << "warning: " << w << "\n";
}

inline int cmd_validate(const std::string& model_path, std::ostream& out, std::ostream& err) {
    try {
        HierarchicalModel model = parse_model(model_path);
        ValidationReport rules = validate_hierarchical_graph(model);
        ValidationReport bindings = check_label_bindings(model, model.specs);
        print_report(rules, out);
        print_report(bindings, out);
        if (rules.ok() && bindings.ok()) {
            out << "ok: " << model.name << " (" << model.levels.size() << " levels, "
                << model.hierarchy_edges.size() << " hierarchy edges, " << model.specs.size()
                << " aggregation functions)\n";
            return exit_ok;
        }
        return exit_domain;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return classify_error(e);
    }
}

inline int cmd_inspect(const std::string& model_path, std::ostream& out, std::ostream& err) {
    try {
        HierarchicalModel model = parse_model(model_path);
        ValidationReport rules = validate_hierarchical_graph(model);
        if (!rules.ok()) {
            print_report(rules, out);
            return exit_domain;
        }
        out << "model " << model.name << "\n\nrelations:\n";
        for (const auto& rel : classify_edges(model)) {
            switch (rel.kind) {
                case RelationKind::inclusion:
                    out << "  " << rel.source.name << " nests into " << rel.target.name << "\n";
                    break;
                case RelationKind::complementarity:
                    out << "  " << rel.source.name << " complements " << rel.target.name << "\n";
                    break;
                case RelationKind::spirit_loop:
                    out << "  " << rel.source.name << " allows spirit-only aggregation\n";
                    break;
            }
        }
        auto closure = transitive_closure(model);
        out << "\ninclusion order (closed):\n";
        for (const auto& [a, b] : closure.inclusion_order)
            out << "  " << a.name << " < " << b.name << "\n";
        out << "\ncomplementarity classes:\n";
        for (const auto& cls : closure.complementarity_classes) {
            out << "  {";
            for (std::size_t i = 0; i < cls.size(); ++i) out << (i ? ", " : " ") << cls[i].name;
            out << " }\n";
        }
        out << "\nlabel bindings:\n";
        for (const auto& spec : model.specs) {
            out << "  " << spec.name << ": ";
            if (spec.spirit_only()) {
                out << "spirit-only over";
            } else {
                out << spec.output->class_name << "@" << spec.output->level.name << " from";
            }
            for (const auto& slot : spec.members) {
                out << " " << slot.class_name << "[" << slot.min << ":" << slot.max << "]";
                if (slot.level) out << "@" << slot.level->name;
            }
            out << "\n";
        }
        ValidationReport bindings = check_label_bindings(model, model.specs);
        print_report(bindings, out);
        return bindings.ok() ? exit_ok : exit_domain;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return classify_error(e);
    }
}

struct RunCommand {
    std::string scenario_path;
    std::string duration = "30";
    std::uint64_t seed = 0;
    std::string mode = "lod";
    std::string out_dir = ".";
};

inline int cmd_run(const RunCommand& cmd, std::ostream& out, std::ostream& err) {
    try {
        Library lib = builtin_library();
        ScenarioDefinition scenario = load_scenario(cmd.scenario_path, lib);
        RunOptions options{Rational::parse(cmd.duration), cmd.seed, parse_run_mode(cmd.mode), {}};

        RunLog log;
        RunResult result = run(scenario, lib, options, log);

        std::filesystem::create_directories(cmd.out_dir);
        std::string base = cmd.out_dir + "/runlog";
        log.write_csv(base + ".csv");
        log.write_jsonl(base + ".jsonl");

        std::string summary;
        summary += "scenario " + scenario.name + "\n";
        summary += "mode " + cmd.mode + "  duration " + options.duration.str() + "  seed " +
                   std::to_string(cmd.seed) + "\n";
        for (const auto& [key, value] : log.counters())
            summary += key + " " + std::to_string(value) + "\n";
        write_text_file(cmd.out_dir + "/summary.txt", summary);

        out << summary;
        out << "wrote " << base << ".csv, " << base << ".jsonl, " << cmd.out_dir << "/summary.txt\n";
        return exit_ok;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return classify_error(e);
    }
}

struct ConsistencyCommand {
    std::string experiment_path;
    std::string out_dir = ".";
};

inline int cmd_consistency(const ConsistencyCommand& cmd, std::ostream& out, std::ostream& err) {
    try {
        Library lib = builtin_library();
        ConsistencyExperiment exp = parse_experiment(cmd.experiment_path);
        ScenarioDefinition scenario = load_scenario(exp.scenario_path, lib);

        auto started = std::chrono::steady_clock::now();
        ConsistencyReport report = run_experiment(exp, scenario, lib);
        auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - started)
                           .count();

        std::filesystem::create_directories(cmd.out_dir);
        write_text_file(cmd.out_dir + "/report.csv", report.csv());
        write_text_file(cmd.out_dir + "/summary.txt", report.summary());

        out << report.summary();
        // wall time goes to the console only: report files stay byte-identical
        out << "wall_time_ms " << elapsed << "\n";
        out << "wrote " << cmd.out_dir << "/report.csv, " << cmd.out_dir << "/summary.txt\n";
        return report.consistent() ? exit_ok : exit_domain;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return classify_error(e);
    }
}

}  // namespace mlsim::cli
