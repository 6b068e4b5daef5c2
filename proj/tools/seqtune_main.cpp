#include <CLI11.hpp>

#include <optional>
#include <string>
#include <vector>

#include "seqtune/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"exact objectives, oracles and training for tabular sequence models"};
    app.require_subcommand(1);

    struct Args {
        std::string config;
        std::string out;
        std::int64_t seed = 0;
        bool seed_set = false;
        std::vector<double> betas;
        double corrupt_log_z = 0.0;
    };
    Args args;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", args.config, "experiment config (JSON)")
            ->required();
        sub->add_option("--out", args.out, "output directory (overrides config)");
        sub->add_option("--seed", args.seed, "seed override for training")
            ->each([&](const std::string&) { args.seed_set = true; });
    };

    add_common(app.add_subcommand("enumerate",
                                  "write every sequence with its reward"));
    add_common(app.add_subcommand("oracle", "write the exact tilted posterior"));
    add_common(app.add_subcommand("train", "run gradient ascent with diagnostics"));
    CLI::App* verify =
        app.add_subcommand("verify", "check the objective/posterior identities");
    add_common(verify);
    verify->add_option("--betas", args.betas, "temperatures to verify");
    verify->add_option("--corrupt-log-z", args.corrupt_log_z, "")
        ->group("");  // test hook, hidden from help
    CLI::App* sweep =
        app.add_subcommand("sweep", "exact posterior statistics across temperatures");
    add_common(sweep);
    sweep->add_option("--betas", args.betas, "temperatures, ascending");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? seqtune::kExitOk : seqtune::kExitConfigInvalid;
    }

    seqtune::CommandOptions opts;
    if (!args.out.empty()) opts.out_dir = args.out;
    if (args.seed_set) opts.seed = static_cast<std::uint64_t>(args.seed);
    if (!args.betas.empty()) opts.betas = args.betas;
    opts.corrupt_log_z = args.corrupt_log_z;

    return seqtune::run_command(app.get_subcommands().front()->get_name(),
                                args.config, opts);
}
