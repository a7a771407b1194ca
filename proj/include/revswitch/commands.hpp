#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "revswitch/config.hpp"

namespace revswitch::commands {

inline constexpr const char* version = "revswitch 1.0.0";

struct RunOptions {
    std::filesystem::path out;  ///< empty: the config's "output" key, else "out"
    int threads = 0;            ///< 0: the config's "threads" key, else 1
    bool verbose = false;
};

/// Runs the command named in the document; throws on failure.
void run(const config::Document& doc, const RunOptions& options);

/// Machine-readable description of an exception.
nlohmann::json error_json(const std::exception& e);

/// Loads, runs and maps failures to exit codes (0 ok, 1 solver failure,
/// 2 config error). Errors go to stderr and <out>/error.json as JSON.
int execute(const std::filesystem::path& config_path, const RunOptions& options);

} // namespace revswitch::commands
