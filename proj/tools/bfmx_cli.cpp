#include <iostream>

#include "CLI11.hpp"
#include "bfmx/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"branch-flow conic relaxation toolkit"};
    app.require_subcommand(1);
    bfmx::RunConfig config;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("case", config.case_path, "MATPOWER case file")->required();
        sub->add_option("--format", config.format, "output format: text, json, csv");
        sub->add_option("--tol", config.tol, "solver feasibility and gap tolerance");
        sub->add_option("--max-iter", config.max_iter, "interior-point iteration cap");
        sub->add_option("--epsilon-l", config.epsilon_l,
                        "loss objective weight on squared branch currents");
        sub->add_option("--tight-tol", config.tight_tol,
                        "relative cone gap below which a branch counts as binding");
        sub->add_flag("--trace", config.trace, "write a per-iteration solver trace to stderr");
        return sub;
    };

    add_common(app.add_subcommand("solve", "solve the conic relaxation and report cone gaps"));
    auto* audit = add_common(
        app.add_subcommand("audit", "check the structural exactness preconditions"));
    audit->add_flag("--strict", config.strict, "exit non-zero when a condition fails");
    auto* sweep = add_common(
        app.add_subcommand("sweep", "re-solve once per line with that line's reactance negated"));
    sweep->add_option("--workers", config.workers, "parallel solves (0 = hardware threads)");
    auto* flip = add_common(app.add_subcommand(
        "flip", "compare the relaxation before and after negating one line's reactance"));
    flip->add_option("--branch", config.branch,
                     "1-based line to flip (0 = the unique negative-reactance line)");
    auto* recover = add_common(
        app.add_subcommand("recover", "recover bus voltage angles from a solved relaxation"));
    recover->add_flag("--force-recovery", config.force_recovery,
                      "recover even when the relaxation is not exact");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    config.command = app.get_subcommands().front()->get_name();
    return bfmx::run_cli(config, std::cout, std::cerr);
}
