// mlsim command-line driver: validate and inspect models, execute scenario
// runs, and measure weak consistency between full-resolution and LOD runs.

#include <CLI11.hpp>

#include "mlsim/cli_commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"multi-level agent simulation engine with dynamic level of detail"};
    app.require_subcommand(1);

    std::string model_path;
    auto* validate = app.add_subcommand("validate", "check a model file against the graph rules");
    validate->add_option("model", model_path, "model file")->required();

    std::string inspect_path;
    auto* inspect = app.add_subcommand("inspect", "print derived relations and label bindings");
    inspect->add_option("model", inspect_path, "model file")->required();

    mlsim::cli::RunCommand run_cmd;
    auto* run = app.add_subcommand("run", "execute a scenario and write its run log");
    run->add_option("scenario", run_cmd.scenario_path, "scenario file")->required();
    run->add_option("--duration", run_cmd.duration, "simulated seconds (rational or decimal)");
    run->add_option("--seed", run_cmd.seed, "random seed");
    run->add_option("--mode", run_cmd.mode, "full|lod")->check(CLI::IsMember({"full", "lod"}));
    run->add_option("--out", run_cmd.out_dir, "output directory")->envname("MLSIM_OUT_DIR");

    mlsim::cli::ConsistencyCommand cons_cmd;
    auto* cons = app.add_subcommand("consistency", "run a weak-consistency experiment");
    cons->add_option("experiment", cons_cmd.experiment_path, "experiment file")->required();
    cons->add_option("--out", cons_cmd.out_dir, "output directory")->envname("MLSIM_OUT_DIR");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : mlsim::cli::exit_usage;
    }

    if (validate->parsed()) return mlsim::cli::cmd_validate(model_path, std::cout, std::cerr);
    if (inspect->parsed()) return mlsim::cli::cmd_inspect(inspect_path, std::cout, std::cerr);
    if (run->parsed()) return mlsim::cli::cmd_run(run_cmd, std::cout, std::cerr);
    if (cons->parsed()) return mlsim::cli::cmd_consistency(cons_cmd, std::cout, std::cerr);
    return mlsim::cli::exit_usage;
}
