#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "config.hpp"
#include "eqd/errors.hpp"
#include "eqd/version.hpp"
#include "runner.hpp"

using namespace eqd::cli;

namespace {

struct Common {
    std::string config;
    std::string out;
    unsigned workers = 0;
    bool verbose = false;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "experiment config file")->required();
    sub->add_option("--out", c.out, "output directory (overrides [run] output)");
    sub->add_option("--workers", c.workers, "worker threads (0 = hardware concurrency)");
    sub->add_flag("--verbose", c.verbose, "progress messages on stderr");
}

int run_config(const Common& c, std::optional<std::vector<std::string>> only) {
    const ExperimentConfig cfg = load_config(c.config);
    RunOptions opt;
    opt.out = c.out;
    opt.workers = c.workers;
    opt.verbose = c.verbose;
    opt.only = std::move(only);
    opt.log = &std::cerr;
    const RunResult r = run(cfg, opt);
    for (const auto& t : r.manifest["tasks"])
        if (t["status"] != "ok")
            std::cerr << "eqd: task " << t["name"].get<std::string>() << " " << t["status"].get<std::string>() << ": "
                      << t["error"].get<std::string>() << "\n";
    if (c.verbose) std::cerr << "eqd: artifacts in " << r.out_dir << "\n";
    return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"eqd: equilibrium measures, transfer operators and mixing statistics"};
    app.set_version_flag("--version", EQD_VERSION);
    app.require_subcommand(1);

    Common common;
    auto* run_cmd = app.add_subcommand("run", "run every task of a config");
    add_common(run_cmd, common);

    std::string map_spec;
    auto* deg = app.add_subcommand("degrees", "print the degree report of a map");
    deg->add_option("mapspec", map_spec, "map, e.g. \"rational1d: num=[1,0,0] den=[0,0,1]\"")->required();

    std::map<std::string, CLI::App*> single;
    for (const char* task : {"sample", "correlate", "clt", "transfer"}) {
        single[task] = app.add_subcommand(task, std::string("run the ") + task + " task of a config");
        add_common(single[task], common);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*deg) {
            const auto j = degrees_json(map_spec);
            std::cout << j.dump(2) << "\n";
            return kOk;
        }
        if (*run_cmd) return run_config(common, std::nullopt);
        for (const auto& [task, sub] : single)
            if (*sub) return run_config(common, std::vector<std::string>{task});
    } catch (const ConfigError& e) {
        std::cerr << "eqd: " << e.what() << "\n";
        return kConfigError;
    } catch (const eqd::ParseError& e) {
        std::cerr << "eqd: " << e.what() << "\n";
        return kConfigError;
    } catch (const eqd::HypothesisViolated& e) {
        std::cerr << "eqd: " << e.what() << "\n";
        return kHypothesisViolated;
    } catch (const std::exception& e) {
        std::cerr << "eqd: " << e.what() << "\n";
        return kNumericalFailure;
    }
    return kOk;
}
