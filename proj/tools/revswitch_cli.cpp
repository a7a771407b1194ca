#include <iostream>

#include <CLI11.hpp>

#include "revswitch/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Reversible phase transitions in attractive-repulsive interaction models"};
    std::string config;
    std::string out;
    revswitch::commands::RunOptions options;
    app.add_option("--config", config, "JSON run configuration")->required();
    app.add_option("--out", out, "output directory (overrides the config's \"output\")");
    app.add_option("--threads", options.threads, "worker threads for ensemble runs")->check(CLI::PositiveNumber);
    app.add_flag("--verbose", options.verbose, "progress messages on stderr");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    options.out = out;
    return revswitch::commands::execute(config, options);
}
