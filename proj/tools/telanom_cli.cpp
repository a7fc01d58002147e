#include "telanom/telanom.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"telematics anomaly profiling and claim classification"};
    app.require_subcommand(1);
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
    std::optional<std::string> out;
    const char* names[] = {"simulate", "profile", "tune-detector", "tune-model", "train", "evaluate", "report"};
    for (const char* n : names) {
        auto* sub = app.add_subcommand(n);
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--seed", seed, "override the base seed");
        sub->add_option("--jobs", jobs, "worker threads");
        sub->add_option("--out", out, "output directory");
    }
    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        telanom::RunConfig cfg = telanom::load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (jobs) cfg.jobs = std::max(1u, *jobs);
        if (out) cfg.out_dir = *out;
        telanom::finalize(cfg);
        const auto written = telanom::run_command(command, cfg);
        std::cout << nlohmann::json{{"command", command}, {"status", "ok"}, {"written", written}}.dump() << '\n';
        return 0;
    } catch (const telanom::Error& e) {
        std::cerr << nlohmann::json{{"command", command}, {"error", e.kind()}, {"message", e.what()}}.dump() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"command", command}, {"error", "internal"}, {"message", e.what()}}.dump()
                  << '\n';
        return 3;
    }
}
