#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wavectrl/experiment.hpp"

namespace {

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace wavectrl;
    CLI::App app{"Exact controls for semilinear wave equations by least-squares iteration"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    int threads = 0;
    long long seed = -1;
    bool verbose = false;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config,-c", config, "experiment configuration (JSON)")->required();
        sub->add_option("--out,-o", out, "output directory (env WAVECTRL_OUT)");
        sub->add_option("--threads,-j", threads, "worker threads for sweeps (env WAVECTRL_THREADS)")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--seed", seed, "seed for randomized profiles")->check(CLI::NonNegativeNumber);
        sub->add_flag("--verbose,-v", verbose, "print every iterate");
    };
    auto* run_cmd = app.add_subcommand("run", "run the configured methods");
    auto* cmp_cmd = app.add_subcommand("compare", "run every method on one scenario");
    auto* swp_cmd = app.add_subcommand("sweep", "run a one-parameter sweep");
    auto* chk_cmd = app.add_subcommand("check", "report the hypotheses of the convergence theory");
    for (auto* s : {run_cmd, cmp_cmd, swp_cmd, chk_cmd}) add_common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : exit_config;
    }

    RunOptions opts;
    opts.verbose = verbose;
    if (!out.empty())
        opts.out_dir = out;
    else if (auto e = env("WAVECTRL_OUT"))
        opts.out_dir = *e;
    opts.threads = threads;
    if (opts.threads == 0) {
        if (auto e = env("WAVECTRL_THREADS")) {
            try {
                opts.threads = std::stoi(*e);
            } catch (const std::exception&) {
                std::cerr << "error: WAVECTRL_THREADS must be an integer\n";
                return exit_config;
            }
        }
    }
    if (opts.threads <= 0) opts.threads = 1;
    if (seed >= 0) opts.seed = static_cast<std::uint64_t>(seed);

    try {
        ExperimentConfig cfg = load_config(config);
        if (run_cmd->parsed()) return run(std::move(cfg), opts);
        if (cmp_cmd->parsed()) return compare(std::move(cfg), opts);
        if (swp_cmd->parsed()) return sweep(std::move(cfg), opts);
        return check(std::move(cfg), opts);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_method_failure;
    }
}
