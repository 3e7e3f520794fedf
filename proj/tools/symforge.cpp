#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include <symforge/runner.hpp>

int main(int argc, char** argv) {
    using namespace symforge;
    CLI::App app{"symforge: subgroup discovery for locally invariant regression"};
    app.require_subcommand(1);

    std::string config_path, suite;
    std::optional<std::uint64_t> seed;
    bool sgd_only = false, quiet = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override the configured seed");
        sub->add_flag("--quiet", quiet, "suppress progress output");
    };
    auto* gen = app.add_subcommand("gen-data", "generate train/validation/test CSVs");
    auto* disc = app.add_subcommand("discover", "run the bandit subgroup search");
    auto* ver = app.add_subcommand("verify", "run a property suite");
    auto* sim = app.add_subcommand("bandit-sim", "misidentification rate on a synthetic linear bandit");
    for (auto* s : {gen, disc, ver, sim}) add_common(s);
    disc->add_flag("--sgd-only", sgd_only, "train relaxed M1/M2 by gradient descent instead of searching");
    ver->add_option("--suite", suite, "orbits | structure | product | nonreal | gradients | invariance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_ok : exit_usage;
    }

    try {
        run_config cfg = load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (sgd_only) cfg.sgd_only = true;
        if (!suite.empty()) cfg.suite = suite;
        std::ostringstream sink;
        std::ostream& log = quiet ? static_cast<std::ostream&>(sink) : std::cout;
        command_result res;
        if (*gen) res = cmd_gen_data(cfg, log);
        else if (*disc) res = cmd_discover(cfg, log, quiet ? nullptr : &std::cerr);
        else if (*ver) res = cmd_verify(cfg, log);
        else res = cmd_bandit_sim(cfg, log);
        return res.code;
    } catch (const parse_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_usage;
    } catch (const invalid_descriptor& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_usage;
    } catch (const empty_dataset& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_failure;
    }
}
