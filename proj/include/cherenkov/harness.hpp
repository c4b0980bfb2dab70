#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cherenkov/config.hpp"

namespace cherenkov {

enum ExitCode : int {
    exit_ok = 0,
    exit_parse = 1,       // malformed config, unknown key, missing file or fixture
    exit_hypothesis = 2,  // a hypothesis validator rejected the run
    exit_numerical = 3,   // quadrature or integration failure, crash inside a sweep
    exit_regression = 4,  // regress: at least one metric outside its stored tolerance
};

struct HarnessOptions {
    std::string config_path;  // empty: built-in defaults
    std::string out_dir;      // empty: CHERENKOV_LAB_OUT, then [output] dir
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool force = false;
    std::string fixtures_dir; // regress only
};

const std::vector<std::string>& command_names();

// resolves config and output directory, runs one subcommand, writes artifacts
int run_command(const std::string& command, const HarnessOptions& opt, std::ostream& log);

// runs one subcommand on an already resolved config; artifacts go to dir.
// metrics_json receives the summary document as text.
int execute(const std::string& command, const ExperimentConfig& cfg, const std::string& dir, bool force,
            std::ostream& log, std::string* summary_json = nullptr);

std::string resolve_out_dir(const HarnessOptions& opt, const ExperimentConfig& cfg);

} // namespace cherenkov
