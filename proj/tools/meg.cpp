// meg: meta-graph spectral embedding toolkit.
//
// Subcommands wire the pipeline stages together:
//   project -> assess -> combine -> eval   (or `pipeline` for all four)
//
// Exit codes: 0 ok, 2 config error, 3 data error, 4 numerical failure.

#include "meg/common.hpp"
#include "meg/errors.hpp"
#include "meg/pipeline.hpp"

#include <cstdio>
#include <functional>
#include <string>

#include "CLI11.hpp"

namespace {

struct GlobalArgs {
    std::string config_path;
    meg::CommandOverrides overrides;
};

void add_common_options(CLI::App* cmd, GlobalArgs& args) {
    cmd->add_option("--config", args.config_path, "Pipeline configuration file")->required();
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&args](std::uint64_t v) { args.overrides.seed = v; },
        "Override the configured random seed");
    cmd->add_option_function<int>(
        "--threads", [&args](int v) { args.overrides.threads = v; },
        "Worker threads (0 = all cores)");
    cmd->add_option_function<std::string>(
        "--out", [&args](const std::string& v) { args.overrides.output = v; },
        "Override the configured output directory");
}

int run_command(const GlobalArgs& args, const std::function<void(const meg::PipelineConfig&)>& fn) {
    try {
        meg::PipelineConfig config =
            meg::apply_overrides(meg::load_config(args.config_path), args.overrides);
        fn(config);
        return 0;
    } catch (const meg::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"meg: meta-graph spectral embedding toolkit"};
    app.set_version_flag("--version", std::string("meg ") + meg::kVersion);
    app.require_subcommand(1);

    struct Command {
        const char* name;
        const char* help;
        void (*fn)(const meg::PipelineConfig&);
    };
    const Command commands[] = {
        {"project", "Project the network through each meta-graph", meg::cmd_project},
        {"assess", "Rank meta-graphs by spectrum shape (FPP, curvature, LC3)", meg::cmd_assess},
        {"combine", "Train the group-sparse autoencoder and emit the combined embedding",
         meg::cmd_combine},
        {"eval", "Score the combined embedding on classification and link prediction",
         meg::cmd_eval},
        {"pipeline", "Run project, assess, combine and eval in order", meg::cmd_pipeline},
    };

    std::vector<std::unique_ptr<GlobalArgs>> arg_blocks;
    int exit_code = 0;
    for (const Command& command : commands) {
        CLI::App* sub = app.add_subcommand(command.name, command.help);
        arg_blocks.push_back(std::make_unique<GlobalArgs>());
        GlobalArgs* args = arg_blocks.back().get();
        add_common_options(sub, *args);
        sub->callback([args, &command, &exit_code]() { exit_code = run_command(*args, command.fn); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help/--version land here too; anything else is a usage error.
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return exit_code;
}
