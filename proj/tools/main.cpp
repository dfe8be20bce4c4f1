#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "adpetc/workbench.hpp"

int main(int argc, char** argv) {
    using namespace adpetc::cli;

    CLI::App app{"ADPETC design and simulation workbench"};
    app.require_subcommand(1);

    std::string config;
    std::string cert;
    std::string out_path;

    auto* design = app.add_subcommand("design", "search varrho, size eta_min and write a certificate");
    design->add_option("--config", config, "workbench config (JSON)")->required();
    design->add_option("--out", out_path, "certificate output path")->required();

    auto* verify = app.add_subcommand("verify", "re-check a certificate against a model");
    verify->add_option("--cert", cert, "certificate path")->required();
    verify->add_option("--config", config, "workbench config (JSON)")->required();

    SimulateArgs sim_args;
    std::string trace_path;
    std::string report_path;
    std::string hist_path;
    double duration = 0.0;
    auto* simulate = app.add_subcommand("simulate", "run the closed loop and export trace + report");
    simulate->add_option("--config", sim_args.config_path, "workbench config (JSON)")->required();
    simulate->add_option("--cert", sim_args.cert_path, "certificate path")->required();
    simulate->add_option("--trace", trace_path, "trace CSV output");
    simulate->add_option("--report", report_path, "report JSON output");
    simulate->add_option("--histogram", hist_path, "bits histogram CSV (default <report>.bits.csv)");
    auto* dur_opt = simulate->add_option("--duration", duration, "override simulation length (s)");

    double w_inf = 0.0;
    double w0 = 0.0;
    auto* bounds = app.add_subcommand("bounds", "bit and zoom-level bounds for given W(0), |w|_inf");
    bounds->add_option("--cert", cert, "certificate path")->required();
    bounds->add_option("--w-inf", w_inf, "L-infinity norm of w")->required()->check(CLI::NonNegativeNumber);
    bounds->add_option("--w0", w0, "initial value of W")->required()->check(CLI::NonNegativeNumber);

    SimulateArgs rep_args;
    std::string rep_out;
    double rep_duration = 0.0;
    auto* report = app.add_subcommand("report", "simulate and print the statistics table");
    report->add_option("--config", rep_args.config_path, "workbench config (JSON)")->required();
    report->add_option("--cert", rep_args.cert_path, "certificate path")->required();
    report->add_option("--out", rep_out, "optional report JSON output");
    auto* rep_dur = report->add_option("--duration", rep_duration, "override simulation length (s)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kParse;
    }

    if (design->parsed()) {
        return cmd_design(config, out_path, std::cout, std::cerr);
    }
    if (verify->parsed()) {
        return cmd_verify(cert, config, std::cout, std::cerr);
    }
    if (simulate->parsed()) {
        if (!trace_path.empty()) {
            sim_args.trace_path = trace_path;
        }
        if (!report_path.empty()) {
            sim_args.report_path = report_path;
        }
        if (!hist_path.empty()) {
            sim_args.histogram_path = hist_path;
        }
        if (dur_opt->count() > 0) {
            sim_args.duration = duration;
        }
        return cmd_simulate(sim_args, std::cout, std::cerr);
    }
    if (bounds->parsed()) {
        return cmd_bounds(cert, w_inf, w0, std::cout, std::cerr);
    }
    if (report->parsed()) {
        if (!rep_out.empty()) {
            rep_args.report_path = rep_out;
        }
        if (rep_dur->count() > 0) {
            rep_args.duration = rep_duration;
        }
        return cmd_report(rep_args, std::cout, std::cerr);
    }
    return kFailure;
}
