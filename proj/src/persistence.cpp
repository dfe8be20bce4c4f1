#include "adpetc/persistence.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"

#include "adpetc/errors.hpp"

namespace adpetc::io {

using json = nlohmann::json;

namespace {

const json& need(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) {
        throw ParseError(where + ": missing field '" + key + "'");
    }
    return j.at(key);
}

double as_double(const json& j, const std::string& where) {
    if (!j.is_number()) {
        throw ParseError(where + ": expected a number");
    }
    return j.get<double>();
}

std::size_t as_count(const json& j, const std::string& where) {
    if (!j.is_number_integer() || j.get<long long>() < 0) {
        throw ParseError(where + ": expected a non-negative integer");
    }
    return j.get<std::size_t>();
}

bool as_bool(const json& j, const std::string& where) {
    if (!j.is_boolean()) {
        throw ParseError(where + ": expected true or false");
    }
    return j.get<bool>();
}

Vector as_vector(const json& j, const std::string& where) {
    if (!j.is_array()) {
        throw ParseError(where + ": expected an array of numbers");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = as_double(j[i], where + "[" + std::to_string(i) + "]");
    }
    return v;
}

Matrix as_matrix(const json& j, const std::string& where) {
    if (!j.is_array()) {
        throw ParseError(where + ": expected an array of rows");
    }
    const std::size_t rows = j.size();
    const std::size_t cols = rows == 0 ? 0 : (j[0].is_array() ? j[0].size() : 0);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        const auto& row = j[r];
        if (!row.is_array() || row.size() != cols) {
            throw ParseError(where + ": row " + std::to_string(r) + " is not an array of length " +
                             std::to_string(cols));
        }
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                as_double(row[c], where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
        }
    }
    return m;
}

json from_matrix(const Matrix& m) {
    json a = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        a.push_back(std::move(row));
    }
    return a;
}

json from_vector(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        a.push_back(v(i));
    }
    return a;
}

json parse_json(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string(what) + ": " + e.what());
    }
}

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
}

void fnv_matrix(std::uint64_t& h, const Matrix& m) {
    const std::int64_t dims[2] = {static_cast<std::int64_t>(m.rows()),
                                  static_cast<std::int64_t>(m.cols())};
    fnv(h, dims, sizeof(dims));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            double v = m(r, c);
            if (v == 0.0) {
                v = 0.0;  // fold -0.0
            }
            fnv(h, &v, sizeof(v));
        }
    }
}

}  // namespace

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + path + "'");
    }
    out << content;
    if (!out) {
        throw Error("write to '" + path + "' failed");
    }
}

WorkbenchConfig parse_config(const std::string& text) {
    const json root = parse_json(text, "config");
    if (!root.is_object()) {
        throw ParseError("config: top level must be an object");
    }
    const auto& ver = need(root, "schema_version", "config");
    if (!ver.is_number_integer() || ver.get<int>() != kConfigSchemaVersion) {
        throw ParseError("config: unsupported schema_version (expected " +
                         std::to_string(kConfigSchemaVersion) + ")");
    }

    WorkbenchConfig cfg;
    const auto& plant = need(root, "plant", "config");
    cfg.plant.a = as_matrix(need(plant, "A", "plant"), "plant.A");
    cfg.plant.b = as_matrix(need(plant, "B", "plant"), "plant.B");
    cfg.plant.e = as_matrix(need(plant, "E", "plant"), "plant.E");
    cfg.plant.c = as_matrix(need(plant, "C", "plant"), "plant.C");
    const auto& ctrl = need(root, "controller", "config");
    cfg.controller.a = as_matrix(need(ctrl, "A", "controller"), "controller.A");
    cfg.controller.b = as_matrix(need(ctrl, "B", "controller"), "controller.B");
    cfg.controller.c = as_matrix(need(ctrl, "C", "controller"), "controller.C");
    cfg.controller.d = as_matrix(need(ctrl, "D", "controller"), "controller.D");
    const auto& perf = need(root, "performance", "config");
    cfg.c_bar = as_matrix(need(perf, "C_bar", "performance"), "performance.C_bar");
    cfg.d_bar = as_matrix(need(perf, "D_bar", "performance"), "performance.D_bar");

    const auto& des = need(root, "design", "config");
    cfg.h = as_double(need(des, "h", "design"), "design.h");
    cfg.rho = as_double(need(des, "rho", "design"), "design.rho");
    cfg.gamma = as_double(need(des, "gamma", "design"), "design.gamma");
    cfg.mu = as_double(need(des, "mu", "design"), "design.mu");
    cfg.theta = as_vector(need(des, "theta", "design"), "design.theta");
    cfg.a_level = as_double(need(des, "A_level", "design"), "design.A_level");
    const Vector range = as_vector(need(des, "varrho_range", "design"), "design.varrho_range");
    if (range.size() != 2) {
        throw ParseError("design.varrho_range: expected [lo, hi]");
    }
    cfg.varrho_lo = range(0);
    cfg.varrho_hi = range(1);
    if (des.contains("steps")) {
        cfg.steps = as_count(des["steps"], "design.steps");
    }
    if (des.contains("eta_min") && !des["eta_min"].is_null()) {
        cfg.eta_min = as_double(des["eta_min"], "design.eta_min");
    }
    if (des.contains("round_eta_min")) {
        cfg.round_eta_min = as_bool(des["round_eta_min"], "design.round_eta_min");
    }
    if (des.contains("riccati_grid")) {
        cfg.riccati_grid = as_count(des["riccati_grid"], "design.riccati_grid");
    }
    if (des.contains("search_mode")) {
        if (!des["search_mode"].is_string()) {
            throw ParseError("design.search_mode: expected a string");
        }
        cfg.search_mode = des["search_mode"].get<std::string>();
        if (cfg.search_mode != "bisection" && cfg.search_mode != "exhaustive") {
            throw ParseError("design.search_mode: expected 'bisection' or 'exhaustive'");
        }
    }

    const auto& simj = need(root, "simulation", "config");
    cfg.duration = as_double(need(simj, "duration", "simulation"), "simulation.duration");
    if (simj.contains("substeps")) {
        cfg.substeps = as_count(simj["substeps"], "simulation.substeps");
    }
    if (simj.contains("record_flow")) {
        cfg.record_flow = as_bool(simj["record_flow"], "simulation.record_flow");
    }
    cfg.xp0 = as_vector(need(simj, "xp0", "simulation"), "simulation.xp0");
    cfg.xc0 = as_vector(need(simj, "xc0", "simulation"), "simulation.xc0");
    if (simj.contains("y_hat0")) {
        cfg.y_hat0 = as_vector(simj["y_hat0"], "simulation.y_hat0");
    }
    if (simj.contains("v_hat0")) {
        cfg.v_hat0 = as_vector(simj["v_hat0"], "simulation.v_hat0");
    }

    if (root.contains("disturbance")) {
        const auto& d = root["disturbance"];
        const auto& kind = need(d, "kind", "disturbance");
        if (!kind.is_string()) {
            throw ParseError("disturbance.kind: expected a string");
        }
        cfg.disturbance.kind = kind.get<std::string>();
        if (cfg.disturbance.kind == "windowed_sine") {
            cfg.disturbance.amplitude =
                as_double(need(d, "amplitude", "disturbance"), "disturbance.amplitude");
            cfg.disturbance.frequency =
                as_double(need(d, "frequency", "disturbance"), "disturbance.frequency");
            const Vector win = as_vector(need(d, "window", "disturbance"), "disturbance.window");
            if (win.size() != 2) {
                throw ParseError("disturbance.window: expected [t_a, t_b]");
            }
            cfg.disturbance.t_a = win(0);
            cfg.disturbance.t_b = win(1);
        } else if (cfg.disturbance.kind == "piecewise") {
            cfg.disturbance.samples =
                as_matrix(need(d, "samples", "disturbance"), "disturbance.samples");
            cfg.disturbance.dt = as_double(need(d, "dt", "disturbance"), "disturbance.dt");
        } else if (cfg.disturbance.kind != "zero") {
            throw ParseError("disturbance.kind: expected zero, windowed_sine or piecewise");
        }
    }
    if (root.contains("bounds")) {
        const auto& b = root["bounds"];
        if (b.contains("w_inf") && !b["w_inf"].is_null()) {
            cfg.bound_w_inf = as_double(b["w_inf"], "bounds.w_inf");
        }
    }
    return cfg;
}

WorkbenchConfig load_config(const std::string& path) {
    return parse_config(read_file(path));
}

design::DesignRequest Scenario::design_request() const {
    design::DesignRequest r;
    r.h = config.h;
    r.rho = config.rho;
    r.gamma = config.gamma;
    r.mu = config.mu;
    r.theta = theta;
    r.a_level = config.a_level;
    r.varrho_lo = config.varrho_lo;
    r.varrho_hi = config.varrho_hi;
    r.steps = config.steps;
    r.eta_min = config.eta_min;
    r.round_eta_min = config.round_eta_min;
    r.riccati_grid = config.riccati_grid;
    r.xi0 = initial.xi();
    r.w_inf = config.bound_w_inf ? *config.bound_w_inf : disturbance.sup_norm();
    r.mode = config.search_mode == "exhaustive" ? design::LineSearchMode::exhaustive
                                                : design::LineSearchMode::bisection;
    return r;
}

Scenario build_scenario(const WorkbenchConfig& cfg) {
    Scenario sc;
    sc.config = cfg;
    sc.aug = model::build_augmented(cfg.plant, cfg.controller, cfg.c_bar, cfg.d_bar);
    if (static_cast<std::size_t>(cfg.theta.size()) != sc.aug.dims.nu) {
        throw DimensionError("design.theta has " + std::to_string(cfg.theta.size()) +
                             " entries, the model has " + std::to_string(sc.aug.dims.nu) +
                             " channels");
    }
    sc.theta = model::ThetaAllocation(cfg.theta);

    const auto nw = sc.aug.dims.nw;
    const auto& d = cfg.disturbance;
    if (d.kind == "windowed_sine") {
        sc.disturbance = sim::Disturbance::windowed_sine(nw, d.amplitude, d.frequency, d.t_a, d.t_b);
    } else if (d.kind == "piecewise") {
        if (static_cast<std::size_t>(d.samples.cols()) != nw) {
            throw DimensionError("disturbance.samples must have one column per disturbance input");
        }
        sc.disturbance = sim::Disturbance::piecewise(d.samples, d.dt);
    } else {
        sc.disturbance = sim::Disturbance::zero(nw);
    }

    if (static_cast<std::size_t>(cfg.xp0.size()) != sc.aug.dims.np ||
        static_cast<std::size_t>(cfg.xc0.size()) != sc.aug.dims.nc) {
        throw DimensionError("simulation.xp0 / xc0 do not match the plant and controller orders");
    }
    sc.initial.xp = cfg.xp0;
    sc.initial.xc = cfg.xc0;
    sc.initial.y_hat = cfg.y_hat0 ? *cfg.y_hat0 : Vector(cfg.plant.c * cfg.xp0);
    sc.initial.v_hat =
        cfg.v_hat0 ? *cfg.v_hat0 : Vector(cfg.controller.d * cfg.plant.c * cfg.xp0);
    if (static_cast<std::size_t>(sc.initial.y_hat.size()) != sc.aug.dims.ny ||
        static_cast<std::size_t>(sc.initial.v_hat.size()) != sc.aug.dims.nv) {
        throw DimensionError("simulation.y_hat0 / v_hat0 have the wrong length");
    }
    return sc;
}

std::uint64_t model_hash(const model::AugmentedSystem& aug) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const Matrix* m : {&aug.plant.a, &aug.plant.b, &aug.plant.e, &aug.plant.c, &aug.ctrl.a,
                            &aug.ctrl.b, &aug.ctrl.c, &aug.ctrl.d, &aug.c_bar, &aug.d_bar}) {
        fnv_matrix(h, *m);
    }
    return h;
}

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
    return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
    if (s.size() != 16 || s.find_first_not_of("0123456789abcdef") != std::string::npos) {
        throw ParseError("certificate: model_hash must be 16 lowercase hex digits");
    }
    return std::stoull(s, nullptr, 16);
}

}  // namespace

std::string certificate_to_json(const design::DesignCertificate& cert) {
    const auto& p = cert.params;
    json j;
    j["schema"] = kCertificateSchema;
    j["model_hash"] = hex64(cert.model_hash);
    j["params"] = {{"h", p.h},
                   {"rho", p.rho},
                   {"gamma", p.gamma},
                   {"mu", p.mu},
                   {"theta", from_vector(p.theta.raw())},
                   {"varrho", p.varrho},
                   {"eta_min", p.eta_min},
                   {"A_level", p.a_level}};
    j["P_h"] = from_matrix(cert.p_h);
    j["eps"] = cert.eps;
    j["riccati"] = {{"grid", cert.riccati_grid},
                    {"lambda_max", cert.lambda_max},
                    {"lambda_min", cert.lambda_min},
                    {"P0", from_matrix(cert.p0)}};
    j["varrho_bar"] = cert.varrho_bar;
    j["cd_norm"] = cert.cd_norm;
    j["margins"] = {{"lmi", cert.margins.lmi},
                    {"P_h", cert.margins.p},
                    {"F3", cert.margins.f3},
                    {"eps", cert.margins.eps}};
    j["bounds"] = {{"W0", cert.bound_w0},
                   {"w_inf", cert.bound_w_inf},
                   {"m_x", cert.m_x},
                   {"m_x_bits", sim::bits_for_bound(cert.m_x)},
                   {"m_mu", cert.m_mu}};
    return j.dump(2) + "\n";
}

design::DesignCertificate certificate_from_json(const std::string& text) {
    const json j = parse_json(text, "certificate");
    const auto& schema = need(j, "schema", "certificate");
    if (!schema.is_string() || schema.get<std::string>() != kCertificateSchema) {
        throw ParseError(std::string("certificate: schema must be '") + kCertificateSchema + "'");
    }
    design::DesignCertificate c;
    const auto& hash = need(j, "model_hash", "certificate");
    if (!hash.is_string()) {
        throw ParseError("certificate: model_hash must be a string");
    }
    c.model_hash = parse_hex64(hash.get<std::string>());

    const auto& p = need(j, "params", "certificate");
    c.params.h = as_double(need(p, "h", "params"), "params.h");
    c.params.rho = as_double(need(p, "rho", "params"), "params.rho");
    c.params.gamma = as_double(need(p, "gamma", "params"), "params.gamma");
    c.params.mu = as_double(need(p, "mu", "params"), "params.mu");
    try {
        c.params.theta = model::ThetaAllocation(as_vector(need(p, "theta", "params"), "params.theta"));
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(std::string("params.theta: ") + e.what());
    }
    c.params.varrho = as_double(need(p, "varrho", "params"), "params.varrho");
    c.params.eta_min = as_double(need(p, "eta_min", "params"), "params.eta_min");
    c.params.a_level = as_double(need(p, "A_level", "params"), "params.A_level");

    c.p_h = as_matrix(need(j, "P_h", "certificate"), "P_h");
    c.eps = as_double(need(j, "eps", "certificate"), "eps");
    const auto& r = need(j, "riccati", "certificate");
    c.riccati_grid = as_count(need(r, "grid", "riccati"), "riccati.grid");
    c.lambda_max = as_double(need(r, "lambda_max", "riccati"), "riccati.lambda_max");
    c.lambda_min = as_double(need(r, "lambda_min", "riccati"), "riccati.lambda_min");
    c.p0 = as_matrix(need(r, "P0", "riccati"), "riccati.P0");
    c.varrho_bar = as_double(need(j, "varrho_bar", "certificate"), "varrho_bar");
    c.cd_norm = as_double(need(j, "cd_norm", "certificate"), "cd_norm");
    const auto& m = need(j, "margins", "certificate");
    c.margins.lmi = as_double(need(m, "lmi", "margins"), "margins.lmi");
    c.margins.p = as_double(need(m, "P_h", "margins"), "margins.P_h");
    c.margins.f3 = as_double(need(m, "F3", "margins"), "margins.F3");
    c.margins.eps = as_double(need(m, "eps", "margins"), "margins.eps");
    const auto& b = need(j, "bounds", "certificate");
    c.bound_w0 = as_double(need(b, "W0", "bounds"), "bounds.W0");
    c.bound_w_inf = as_double(need(b, "w_inf", "bounds"), "bounds.w_inf");
    c.m_x = as_double(need(b, "m_x", "bounds"), "bounds.m_x");
    const auto& mmu = need(b, "m_mu", "bounds");
    if (!mmu.is_number_integer()) {
        throw ParseError("bounds.m_mu: expected an integer");
    }
    c.m_mu = mmu.get<std::int64_t>();
    return c;
}

void save_certificate(const design::DesignCertificate& cert, const std::string& path) {
    write_file(path, certificate_to_json(cert));
}

design::DesignCertificate load_certificate(const std::string& path) {
    return certificate_from_json(read_file(path));
}

namespace {

const char* phase_name(sim::Phase p) {
    switch (p) {
    case sim::Phase::flow:
        return "flow";
    case sim::Phase::pre:
        return "pre";
    case sim::Phase::post:
        return "post";
    }
    return "?";
}

}  // namespace

void write_trace_csv(std::ostream& os, const sim::Trace& trace, const model::AugmentedSystem& aug,
                     const design::DesignCertificate& cert, const riccati::RiccatiSolution& ric) {
    const auto sets = analysis::SetSpec::from_certificate(cert);
    const std::size_t nxi = aug.dims.nxi;
    const std::size_t nu = aug.dims.nu;
    const std::size_t nz = aug.dims.nz;
    const std::size_t nw = aug.dims.nw;

    std::map<std::size_t, std::vector<const sim::EventRecord*>> by_k;
    for (const auto& ev : trace.events) {
        by_k[ev.k].push_back(&ev);
    }

    os << kTraceHeader << "\n";
    os << "t,phase,k,tau";
    for (std::size_t i = 0; i < nxi; ++i) {
        os << ",xi_" << i;
    }
    os << ",eta";
    for (std::size_t i = 0; i < nu; ++i) {
        os << ",event_" << i;
    }
    for (std::size_t i = 0; i < nu; ++i) {
        os << ",m_" << i;
    }
    for (std::size_t i = 0; i < nu; ++i) {
        os << ",bits_" << i;
    }
    os << ",n_mu,V,W";
    for (std::size_t i = 0; i < nz; ++i) {
        os << ",z_" << i;
    }
    for (std::size_t i = 0; i < nw; ++i) {
        os << ",w_" << i;
    }
    os << "\n";

    os << std::setprecision(17);
    for (const auto& row : trace.rows) {
        const double r = row.phase == sim::Phase::pre ? cert.params.h : row.tau;
        os << row.t << ',' << phase_name(row.phase) << ',' << row.k << ',' << row.tau;
        for (Eigen::Index i = 0; i < row.xi.size(); ++i) {
            os << ',' << row.xi(i);
        }
        os << ',' << row.eta;
        std::vector<std::int64_t> m(nu, 0);
        std::vector<int> bits(nu, 0);
        if (row.phase == sim::Phase::post) {
            const auto it = by_k.find(row.k);
            if (it != by_k.end() && row.k > 0) {
                for (const auto* ev : it->second) {
                    m[ev->channel] = ev->m;
                    bits[ev->channel] = ev->bits;
                }
            }
        }
        for (std::size_t i = 0; i < nu; ++i) {
            os << ',' << (((row.events >> i) & 1U) != 0U ? 1 : 0);
        }
        for (std::size_t i = 0; i < nu; ++i) {
            os << ',' << m[i];
        }
        for (std::size_t i = 0; i < nu; ++i) {
            os << ',' << bits[i];
        }
        const double v = analysis::lyapunov_V(row.xi, std::clamp(r, 0.0, cert.params.h), ric);
        os << ',' << row.n_mu << ',' << v << ',' << std::max(0.0, v - sets.inner);
        const Vector z = aug.c_bar * row.xi + aug.d_bar * row.w;
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            os << ',' << z(i);
        }
        for (Eigen::Index i = 0; i < row.w.size(); ++i) {
            os << ',' << row.w(i);
        }
        os << "\n";
    }
}

std::string report_to_json(const analysis::PerformanceReport& perf,
                           const analysis::TransmissionStats& stats,
                           const design::DesignCertificate& cert) {
    auto viol = [](const analysis::Violations& v) {
        return json{{"checked", v.checked}, {"count", v.count}, {"worst", v.worst}};
    };
    json j;
    j["schema"] = kReportSchema;
    j["certificate"] = {{"varrho", cert.params.varrho},
                        {"eta_min", cert.params.eta_min},
                        {"lambda_max", cert.lambda_max},
                        {"lambda_min", cert.lambda_min},
                        {"varrho_bar", cert.varrho_bar}};
    j["performance"] = {{"z_integral", perf.z_integral},
                        {"w_integral", perf.w_integral},
                        {"W0", perf.w0},
                        {"budget", perf.budget},
                        {"jump_monotonic", viol(perf.jump_monotonic)},
                        {"flow_inequality", viol(perf.flow)},
                        {"inner_set_landing", viol(perf.landing)},
                        {"l2_ledger", viol(perf.ledger)},
                        {"W_bound", viol(perf.w_bound)},
                        {"state_bound", viol(perf.state_bound)},
                        {"m_x_bound", perf.mx_bound},
                        {"m_x_bits", sim::bits_for_bound(perf.mx_bound)},
                        {"m_mu_bound", perf.mmu_bound},
                        {"max_n_mu", perf.max_n_mu},
                        {"m_x_exceedances", perf.mx_exceedances},
                        {"m_mu_exceedances", perf.mmu_exceedances},
                        {"clean", perf.clean()}};
    json hist = json::object();
    for (const auto& [bits, count] : stats.bits_histogram) {
        hist[std::to_string(bits)] = count;
    }
    j["transmissions"] = {{"samples", stats.samples},
                          {"per_channel", stats.per_channel},
                          {"sensor", stats.sensor_transmissions},
                          {"total", stats.total_transmissions},
                          {"baseline_sensor", stats.baseline_sensor},
                          {"baseline_total", stats.baseline_total},
                          {"reduction_sensor_percent", stats.reduction_sensor},
                          {"reduction_total_percent", stats.reduction_total},
                          {"max_inter_event_interval", stats.max_interval},
                          {"max_inter_event_interval_all", stats.max_interval_all},
                          {"max_m", stats.max_m},
                          {"share_m_le_8", stats.share_m_le_8},
                          {"share_m_le_128", stats.share_m_le_128},
                          {"bits_histogram", hist}};
    return j.dump(2) + "\n";
}

void write_bits_histogram(std::ostream& os, const analysis::TransmissionStats& stats) {
    os << "bits,count\n";
    for (const auto& [bits, count] : stats.bits_histogram) {
        os << bits << ',' << count << "\n";
    }
}

}  // namespace adpetc::io
