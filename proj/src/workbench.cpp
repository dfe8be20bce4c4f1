#include "adpetc/workbench.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "adpetc/analysis.hpp"
#include "adpetc/errors.hpp"
#include "adpetc/etcsim.hpp"
#include "adpetc/persistence.hpp"

namespace adpetc::cli {

namespace {

std::string fmt(double v, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    return buf;
}

void print_report(std::ostream& out, const design::VerificationReport& rep) {
    out << std::left << std::setw(16) << "check" << std::setw(16) << "value" << std::setw(12)
        << "threshold"
        << "result\n";
    for (const auto& c : rep.checks) {
        out << std::left << std::setw(16) << c.name << std::setw(16) << fmt(c.value, 8)
            << std::setw(12) << fmt(c.threshold, 3) << (c.passed ? "ok" : "FAIL");
        if (!c.detail.empty()) {
            out << "  (" << c.detail << ")";
        }
        out << "\n";
    }
}

// Loads config + certificate, checks the model hash and re-verifies.
struct Loaded {
    io::Scenario scenario;
    design::DesignCertificate cert;
};

int load_verified(const std::string& config_path, const std::string& cert_path, Loaded& l,
                  std::ostream& out, std::ostream& err, bool print_table) {
    try {
        l.scenario = io::build_scenario(io::load_config(config_path));
        l.cert = io::load_certificate(cert_path);
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return kParse;
    } catch (const Error& e) {
        err << "invalid input: " << e.what() << "\n";
        return kParse;
    }
    const auto hash = io::model_hash(l.scenario.aug);
    if (hash != l.cert.model_hash) {
        err << "certificate does not belong to this model (hash mismatch)\n";
        return kMismatch;
    }
    const auto rep = design::verify_certificate(l.cert, l.scenario.aug);
    if (print_table) {
        print_report(out, rep);
    }
    if (!rep.ok()) {
        const auto* f = rep.first_failure();
        err << "verification failed: " << f->name << "\n";
        return exit_code_for(rep);
    }
    return kOk;
}

}  // namespace

int exit_code_for(const design::VerificationReport& rep) {
    const auto* f = rep.first_failure();
    if (f == nullptr) {
        return kOk;
    }
    if (f->name == "gamma_bound" || f->name == "rho_positive" || f->name == "assumption1" ||
        f->name == "sbar" || f->name == "params" || f->name == "theta_channels") {
        return kAssumption;
    }
    if (f->name == "enclosure") {
        return kEnclosure;
    }
    return kInfeasible;
}

int cmd_design(const std::string& config_path, const std::string& cert_path, std::ostream& out,
               std::ostream& err) {
    io::Scenario sc;
    try {
        sc = io::build_scenario(io::load_config(config_path));
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return kParse;
    } catch (const Error& e) {
        err << "invalid config: " << e.what() << "\n";
        return kParse;
    }

    design::DesignOutcome res;
    try {
        res = design::synthesize(sc.aug, sc.design_request());
    } catch (const GainBoundError& e) {
        err << "gain bound violated: " << e.what() << "\n";
        return kAssumption;
    } catch (const AssumptionError& e) {
        err << "assumption on F11 failed: " << e.what() << "\n";
        return kAssumption;
    } catch (const NotPsdError& e) {
        err << "Sbar factor does not exist: " << e.what() << "\n";
        return kAssumption;
    } catch (const InfeasibleError& e) {
        err << "LMI infeasible: " << e.what() << "\n";
        return kInfeasible;
    } catch (const EnclosureError& e) {
        err << "enclosure failed: " << e.what() << "\n";
        return kEnclosure;
    } catch (const Error& e) {
        err << "design failed: " << e.what() << "\n";
        return kFailure;
    }
    res.cert.model_hash = io::model_hash(sc.aug);

    const auto rep = design::verify_certificate(res.cert, sc.aug);
    if (!rep.ok()) {
        print_report(err, rep);
        err << "solver output did not verify: " << rep.first_failure()->name << "\n";
        return exit_code_for(rep);
    }
    try {
        io::save_certificate(res.cert, cert_path);
    } catch (const Error& e) {
        err << e.what() << "\n";
        return kFailure;
    }

    const auto& c = res.cert;
    out << "line search: " << res.search.diagnostics.size() << " grid points solved\n";
    for (const auto& d : res.search.diagnostics) {
        out << "  varrho " << fmt(d.varrho, 8) << (d.feasible ? "  feasible" : "  not found")
            << "\n";
    }
    out << "varrho      " << fmt(c.params.varrho, 8) << "\n"
        << "eps         " << fmt(c.eps, 8) << "\n"
        << "lambda_bar  " << fmt(c.lambda_max, 8) << "\n"
        << "lambda_low  " << fmt(c.lambda_min, 8) << "\n"
        << "varrho_bar  " << fmt(c.varrho_bar, 8) << "\n"
        << "eta_min     " << fmt(c.params.eta_min, 8) << "\n"
        << "inner level "
        << fmt(design::inner_level(c.lambda_max, c.varrho_bar, c.params.eta_min), 8)
        << " (A_level " << fmt(c.params.a_level, 8) << ")\n"
        << "m_x         " << fmt(c.m_x, 4) << " (" << sim::bits_for_bound(c.m_x) << " bits)\n"
        << "m_mu        " << c.m_mu << "\n"
        << "certificate written to " << cert_path << "\n";
    return kOk;
}

int cmd_verify(const std::string& cert_path, const std::string& config_path, std::ostream& out,
               std::ostream& err) {
    Loaded l;
    return load_verified(config_path, cert_path, l, out, err, true);
}

namespace {

int run_simulation(const SimulateArgs& args, std::ostream& out, std::ostream& err, bool files) {
    Loaded l;
    const int rc = load_verified(args.config_path, args.cert_path, l, out, err, false);
    if (rc != kOk) {
        return rc;
    }
    const auto& sc = l.scenario;
    const auto& cert = l.cert;
    try {
        const auto ham = riccati::build_hamiltonian(sc.aug, cert.params.rho, cert.params.gamma);
        const auto ric = riccati::solve_p(ham, cert.p_h, cert.params.h, cert.riccati_grid);
        const double duration = args.duration ? *args.duration : sc.config.duration;
        sim::SimOptions opts;
        opts.substeps = sc.config.substeps;
        opts.record_flow = sc.config.record_flow;
        const auto trace =
            sim::simulate(sc.aug, cert.params, sc.disturbance, duration, sc.initial, opts);
        const auto base = sim::time_triggered_baseline(sc.aug, cert.params.h, sc.disturbance,
                                                       duration, sc.initial, opts);
        const auto perf = analysis::certify_trace(trace, cert, sc.aug, ric, sc.disturbance);
        const auto stats = analysis::transmission_stats(trace, base);

        if (files && args.trace_path) {
            std::ofstream os(*args.trace_path);
            if (!os) {
                throw Error("cannot write '" + *args.trace_path + "'");
            }
            io::write_trace_csv(os, trace, sc.aug, cert, ric);
        }
        if (files && args.report_path) {
            io::write_file(*args.report_path, io::report_to_json(perf, stats, cert));
        }
        if (files && (args.histogram_path || args.report_path)) {
            const std::string path =
                args.histogram_path ? *args.histogram_path : *args.report_path + ".bits.csv";
            std::ofstream os(path);
            if (!os) {
                throw Error("cannot write '" + path + "'");
            }
            io::write_bits_histogram(os, stats);
        }

        out << "samples                 " << stats.samples << " (h = " << fmt(cert.params.h)
            << ", duration " << fmt(duration) << ")\n";
        out << "transmissions/channel  ";
        for (auto n : stats.per_channel) {
            out << ' ' << n;
        }
        out << "\n"
            << "sensor reduction        " << fmt(stats.reduction_sensor, 4) << " %\n"
            << "total reduction         " << fmt(stats.reduction_total, 4) << " %\n"
            << "max inter-event         " << fmt(stats.max_interval_all, 4) << " s\n"
            << "max m                   " << stats.max_m << " ("
            << (stats.max_m > 0 ? sim::bits_for(stats.max_m) : 0) << " bits)\n"
            << "share m <= 8            " << fmt(100.0 * stats.share_m_le_8, 4) << " %\n"
            << "share m <= 128          " << fmt(100.0 * stats.share_m_le_128, 4) << " %\n"
            << "m_x bound               " << fmt(perf.mx_bound, 4) << " ("
            << sim::bits_for_bound(perf.mx_bound) << " bits), exceedances "
            << perf.mx_exceedances << "\n"
            << "m_mu bound              " << perf.mmu_bound << " (max n_mu " << perf.max_n_mu
            << "), exceedances " << perf.mmu_exceedances << "\n"
            << "jump / flow / landing / ledger violations  " << perf.jump_monotonic.count
            << " / " << perf.flow.count << " / " << perf.landing.count << " / "
            << perf.ledger.count << "\n"
            << "int z_A^2 dt            " << fmt(perf.z_integral) << " <= budget "
            << fmt(perf.budget) << "\n";
        return kOk;
    } catch (const Error& e) {
        err << "simulation failed: " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
    return run_simulation(args, out, err, true);
}

int cmd_report(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
    return run_simulation(args, out, err, true);
}

int cmd_bounds(const std::string& cert_path, double w_inf, double w0, std::ostream& out,
               std::ostream& err) {
    design::DesignCertificate cert;
    try {
        cert = io::load_certificate(cert_path);
    } catch (const Error& e) {
        err << "parse error: " << e.what() << "\n";
        return kParse;
    }
    try {
        const double mx = design::bound_mx(cert, w0, w_inf);
        const auto mmu = design::bound_mmu(cert, w0, w_inf);
        out << "m_x   " << fmt(mx, 4) << "\n"
            << "bits  " << sim::bits_for_bound(mx) << "\n"
            << "m_mu  " << mmu << "\n";
    } catch (const Error& e) {
        err << "bounds failed: " << e.what() << "\n";
        return kFailure;
    }
    return kOk;
}

}  // namespace adpetc::cli
