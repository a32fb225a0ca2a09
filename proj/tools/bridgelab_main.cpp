#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "bridgelab/config.hpp"
#include "bridgelab/errors.hpp"
#include "bridgelab/runner.hpp"
#include "bridgelab/verify.hpp"

namespace {

int do_run(const std::string& config_path, const std::string& out_override,
           int workers) {
    const bridgelab::ExperimentConfig config = bridgelab::load_config(config_path);
    std::string out_dir = config.output_dir;
    // Only sanctioned environment knob: where artifacts land.
    if (const char* env = std::getenv("BRIDGELAB_OUTPUT_DIR")) {
        out_dir = env;
    }
    if (!out_override.empty()) {
        out_dir = out_override;
    }
    const bridgelab::RunResult result =
        bridgelab::run_experiment(config, out_dir, workers);
    for (const auto& warning : result.warnings) {
        std::cerr << "warning: " << warning << '\n';
    }
    std::cout << "wrote " << result.artifacts.size() << " artifacts to " << out_dir
              << '\n';
    return 0;
}

int do_verify(const std::string& suite) {
    const auto rows = bridgelab::verify_suite(suite);
    std::cout << bridgelab::verify_table(rows);
    if (!bridgelab::all_pass(rows)) {
        std::cerr << "error: verification failed\n";
        return 1;
    }
    return 0;
}

int do_plot(const std::string& trace_path, std::string svg_path) {
    std::ifstream file(trace_path, std::ios::binary);
    if (!file) {
        throw bridgelab::ValidationError("cannot open trace file '" + trace_path + "'");
    }
    std::ostringstream buffer;
    buffer << file.rdbuf();
    const std::string svg = bridgelab::trace_svg_from_csv(buffer.str());

    if (svg_path.empty()) {
        const std::size_t dot = trace_path.rfind('.');
        svg_path = (dot == std::string::npos ? trace_path : trace_path.substr(0, dot)) +
                   ".svg";
    }
    std::ofstream out(svg_path, std::ios::binary);
    if (!out) {
        throw bridgelab::ValidationError("cannot write '" + svg_path + "'");
    }
    out << svg;
    std::cout << "wrote " << svg_path << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bridgelab: backward-process editing experiments on mixture models"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    int workers = 0;
    auto* run_cmd = app.add_subcommand("run", "run an experiment from a JSON config");
    run_cmd->add_option("config", config_path, "experiment config file")->required();
    run_cmd->add_option("--out", out_override, "output directory (overrides config)");
    run_cmd->add_option("--workers", workers, "worker threads, 0 = auto");

    std::string suite;
    auto* verify_cmd =
        app.add_subcommand("verify", "run a built-in verification suite");
    verify_cmd->add_option("suite", suite, "oracle | gradients | reconstruction | all")
        ->required();

    std::string trace_path;
    std::string svg_path;
    auto* plot_cmd = app.add_subcommand("plot", "render a trace CSV as SVG");
    plot_cmd->add_option("trace", trace_path, "trace CSV produced by run")->required();
    plot_cmd->add_option("--out", svg_path, "SVG path (default: trace path with .svg)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Collapse CLI11's exit-code zoo onto the documented contract:
        // 0 for --help and friends, 1 for every usage problem.
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (run_cmd->parsed()) return do_run(config_path, out_override, workers);
        if (verify_cmd->parsed()) return do_verify(suite);
        return do_plot(trace_path, svg_path);
    } catch (const bridgelab::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const bridgelab::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
