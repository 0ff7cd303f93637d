#include "apxtune/config.hpp"
#include "apxtune/error.hpp"
#include "apxtune/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

namespace {

int exit_code_for(apxtune::ErrorCategory cat) {
    switch (cat) {
    case apxtune::ErrorCategory::usage: return 2;
    case apxtune::ErrorCategory::config: return 3;
    case apxtune::ErrorCategory::io: return 4;
    case apxtune::ErrorCategory::data: return 5;
    case apxtune::ErrorCategory::dependency: return 6;
    case apxtune::ErrorCategory::internal: return 7;
    }
    return 7;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"apxtune - proactive knob control for tunable approximate programs"};

    std::string bench;
    std::string input_selector = "all";
    std::string output_dir;
    std::string tasks = "run,stats,predict,result";
    std::string config_path;
    std::string controller = "all";
    std::int64_t seed = -1;
    int workers = 0;
    bool quiet = false;

    app.add_option("--bench", bench, "Benchmark name; resolves the config to configs/<bench>.ini");
    app.add_option("--input", input_selector, "Input selector: 'all' or a comma-separated id list")
        ->capture_default_str();
    app.add_option("--outputDir", output_dir, "Directory for profiles, models and reports")->required();
    app.add_option("--tasks", tasks, "Comma-separated subset of run,stats,predict,result")->capture_default_str();
    app.add_option("--config", config_path, "Explicit config file path (overrides --bench resolution)");
    app.add_option("--seed", seed, "Random seed override for the split and synthetic data");
    app.add_option("--workers", workers, "Worker/thread bound for run and result (0 = hardware default)")
        ->capture_default_str();
    app.add_option("--controller", controller, "all, exhaustive, precimonious, oracle or baseline")
        ->capture_default_str();
    app.add_flag("--quiet", quiet, "Suppress progress lines");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e); // --help / --version
        std::cerr << "apxtune: error: usage: " << e.what() << "\n";
        return 2;
    }

    try {
        if (config_path.empty()) {
            if (bench.empty())
                apxtune::fail(apxtune::ErrorCategory::usage, "either --config or --bench is required");
            config_path = "configs/" + bench + ".ini";
        }
        const apxtune::AppConfig cfg = apxtune::load_config(config_path);

        apxtune::TaskPlan plan;
        plan.tasks = apxtune::normalize_tasks(tasks);
        plan.bench = bench.empty() ? config_path : bench;
        plan.input_selector = input_selector;
        plan.output_dir = output_dir;
        if (seed >= 0)
            plan.seed = static_cast<std::uint64_t>(seed);
        plan.workers = workers;
        plan.controller = controller;
        plan.quiet = quiet;

        apxtune::run_tasks(cfg, plan);
        return 0;
    } catch (const apxtune::Error& e) {
        std::cerr << "apxtune: error: " << apxtune::to_string(e.category()) << ": " << e.what() << "\n";
        return exit_code_for(e.category());
    } catch (const std::exception& e) {
        std::cerr << "apxtune: error: internal: " << e.what() << "\n";
        return exit_code_for(apxtune::ErrorCategory::internal);
    }
}
