#include "cpl/commands.hpp"
#include "cpl/config.hpp"
#include "cpl/error.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <map>

int main(int argc, char** argv) {
    using Command = std::function<int(const cpl::RunConfig&, std::ostream&)>;
    const std::map<std::string, std::pair<Command, std::string>> commands = {
        {"train", {cpl::cmd_train, "Train one model; writes checkpoint.json, metrics.csv, summary.csv"}},
        {"eval", {cpl::cmd_eval, "Score a checkpoint on the configured split; writes eval.csv"}},
        {"sweep", {cpl::cmd_sweep, "Train once per value of sweep_parameter; writes sweep_<p>.csv"}},
        {"ablate", {cpl::cmd_ablate, "Train an ablation against its reference; writes ablate_<name>.csv"}},
        {"viz", {cpl::cmd_viz, "Export proxies.csv, features.csv and layout.svg for a d=2 checkpoint"}},
    };

    CLI::App app{"Constrained proxies learning for ordinal classification"};
    app.require_subcommand(1);
    std::string config_path;
    std::vector<std::string> overrides;
    for (const auto& [name, entry] : commands) {
        auto* sub = app.add_subcommand(name, entry.second);
        sub->add_option("--config", config_path, "JSON file with flat configuration keys")->required();
        sub->add_option("--set", overrides, "Override one key, e.g. --set layout=soft-free")
            ->allow_extra_args(false);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(cpl::ExitCode::Usage);
    }

    try {
        const cpl::RunConfig config = cpl::build_run_config(std::filesystem::path(config_path), overrides);
        for (const auto& [name, entry] : commands) {
            if (app.got_subcommand(name)) return entry.first(config, std::cout);
        }
    } catch (const cpl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.exit_code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(cpl::ExitCode::Usage);
    }
    return static_cast<int>(cpl::ExitCode::Usage);
}
