// Command-line front end: run a scenario with full diagnostics, run a
// manufactured convergence study, audit a stored trajectory, or inspect the
// model/mesh of a scenario without simulating.

#include <string>

#include "CLI11.hpp"
#include "poromem/scenario.hpp"

int main(int argc, char** argv) {
    CLI::App app{"poromem: coupled moisture-solute-heat transport in porous media "
                 "with hydration memory, with runtime auditing of the scheme's "
                 "a-priori estimates"};
    app.require_subcommand(1);

    std::string scenario, out_dir, trajectory;
    int threads = 1;
    int n_override = 0;
    bool streaming = false;

    auto add_common = [&](CLI::App* cmd, bool need_scenario = true) {
        cmd->add_option("--scenario", scenario, "Scenario file (searched as given, then in "
                                                "$POROMEM_CONFIG_DIR)")
            ->required(need_scenario);
        cmd->add_option("--out", out_dir, "Output directory (default: current directory)");
        cmd->add_option("--threads", threads, "Worker threads (runs are internally sequential; "
                                              "reserved for study-level parallelism)");
    };

    CLI::App* c_run = app.add_subcommand("run", "Simulate a scenario and audit every estimate");
    add_common(c_run);
    c_run->add_option("--n-override", n_override, "Override the scenario's time-level count");
    c_run->add_flag("--streaming", streaming,
                    "Stream levels to disk instead of holding the trajectory in memory");

    CLI::App* c_conv =
        app.add_subcommand("convergence", "Manufactured-solution convergence study");
    add_common(c_conv);
    c_conv->add_option("--n-override", n_override, "Additional time-level count to include");

    CLI::App* c_audit =
        app.add_subcommand("audit", "Re-run diagnostics on a stored trajectory");
    add_common(c_audit);
    c_audit->add_option("--trajectory", trajectory, "Stored trajectory file")->required();

    CLI::App* c_validate =
        app.add_subcommand("validate-model", "Validate model assumptions and initial data");
    add_common(c_validate);

    CLI::App* c_mesh = app.add_subcommand("mesh-info", "Print mesh statistics and validity");
    add_common(c_mesh);

    CLI11_PARSE(app, argc, argv);

    if (c_run->parsed())
        return poromem::cli_run(scenario, out_dir, n_override, streaming, threads);
    if (c_conv->parsed())
        return poromem::cli_convergence(scenario, out_dir, n_override, threads);
    if (c_audit->parsed()) return poromem::cli_audit(trajectory, scenario, out_dir);
    if (c_validate->parsed()) return poromem::cli_validate_model(scenario);
    if (c_mesh->parsed()) return poromem::cli_mesh_info(scenario);
    return 2;
}
