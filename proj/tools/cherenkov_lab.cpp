#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cherenkov/harness.hpp"

int main(int argc, char** argv) {
    using namespace cherenkov;
    CLI::App app{"cherenkov-lab: tracer particle in a Bose gas, friction and decay experiments"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    HarnessOptions opt;
    std::uint64_t seed = 0;
    int threads = 0;
    auto* seed_opt = app.add_option("--seed", seed, "64-bit seed for randomized sampling");
    auto* thr_opt = app.add_option("--threads", threads, "worker threads for FFTs and kernel grids")->check(CLI::PositiveNumber);
    app.add_option("--config", opt.config_path, "experiment config (sectioned key = value)");
    app.add_option("--out", opt.out_dir, "output directory (overrides CHERENKOV_LAB_OUT)");
    app.add_flag("--force", opt.force, "skip hypothesis checks");

    const char* help[] = {"coupled particle-field run",
                          "friction law table and threshold exponent fit",
                          "effective ODE dP/dt = D1(P) with power-law and sandwich checks",
                          "kernel F decay fit over a tau grid",
                          "sonic traveling wave, residual and distance trend",
                          "Lorentzian limit identity check",
                          "run a command over [sweep] values",
                          "replay stored fixtures and compare metrics"};
    std::string chosen;
    for (size_t i = 0; i < command_names().size(); ++i) {
        const std::string name = command_names()[i];
        auto* sub = app.add_subcommand(name, help[i]);
        if (name == "regress") sub->add_option("fixtures", opt.fixtures_dir, "fixtures directory")->required();
        sub->callback([&chosen, name] { chosen = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_parse;
    }
    if (*seed_opt) opt.seed = seed;
    if (*thr_opt) opt.threads = threads;
    return run_command(chosen, opt, std::cout);
}
