#include "adpetc/lmidesign.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <thread>

#include "adpetc/errors.hpp"
#include "adpetc/lmi_solver.hpp"

namespace adpetc::design {

namespace {

std::size_t sym_vars(Eigen::Index n) {
    return static_cast<std::size_t>(n * (n + 1) / 2);
}

// Unit symmetric matrix for the k-th upper-triangular entry (row-major).
Matrix sym_unit(Eigen::Index n, std::size_t k) {
    std::size_t idx = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j, ++idx) {
            if (idx == k) {
                Matrix e = Matrix::Zero(n, n);
                e(i, j) = 1.0;
                e(j, i) = 1.0;
                return e;
            }
        }
    }
    throw DomainError("sym_unit: index out of range");
}

Matrix sym_from_vars(const Vector& x, Eigen::Index n) {
    Matrix p(n, n);
    Eigen::Index idx = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j, ++idx) {
            p(i, j) = x(idx);
            p(j, i) = x(idx);
        }
    }
    return p;
}

Vector vars_from_sym(const Matrix& p) {
    const auto n = p.rows();
    Vector x(static_cast<Eigen::Index>(sym_vars(n)));
    Eigen::Index idx = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j, ++idx) {
            x(idx) = 0.5 * (p(i, j) + p(j, i));
        }
    }
    return x;
}

Matrix f3_of(const FlowData& fd, const Matrix& p_h) {
    const auto n = fd.sbar.cols();
    return num::symmetrize(Matrix::Identity(n, n) - fd.sbar.transpose() * p_h * fd.sbar);
}

Matrix assemble_raw(const FlowData& fd, double varrho, const Matrix& p_h, double eps) {
    const auto n = fd.f11_inv.rows();
    const Matrix& fi = fd.f11_inv;
    const Matrix& jm = fd.j_full;
    const Matrix f1 = fi.transpose() * p_h * fd.sbar;
    const Matrix f2 = num::symmetrize(fi.transpose() * p_h * fi + fd.fh.f21 * fi);
    const Matrix f3 = f3_of(fd, p_h);
    const double d2 = fd.delta_full_norm * fd.delta_full_norm / (varrho * varrho);
    const Matrix i = Matrix::Identity(n, n);

    Matrix l = Matrix::Zero(4 * n, 4 * n);
    l.block(0, 0, n, n) = eps * i;
    l.block(0, n, n, n) = f1;
    l.block(0, 2 * n, n, n) = f2;
    l.block(0, 3 * n, n, n) = -eps * jm;
    l.block(n, 0, n, n) = f1.transpose();
    l.block(n, n, n, n) = f3;
    l.block(2 * n, 0, n, n) = f2.transpose();
    l.block(2 * n, 2 * n, n, n) = f2;
    l.block(3 * n, 0, n, n) = -eps * jm.transpose();
    l.block(3 * n, 3 * n, n, n) = p_h + eps * jm.transpose() * jm - eps * d2 * i;
    return num::symmetrize(l);
}

// Affine map (P, eps) -> M as constant plus one basis matrix per variable,
// read off by evaluating at unit inputs.
template <typename F>
lmi::AffineMatrixFunction affine_in_p_eps(Eigen::Index n, F&& f) {
    lmi::AffineMatrixFunction a;
    const Matrix zero = Matrix::Zero(n, n);
    a.constant = f(zero, 0.0);
    const std::size_t np = sym_vars(n);
    a.basis.reserve(np + 1);
    for (std::size_t k = 0; k < np; ++k) {
        a.basis.push_back(f(sym_unit(n, k), 0.0) - a.constant);
    }
    a.basis.push_back(f(zero, 1.0) - a.constant);
    return a;
}

// Appends trailing variables (t or s) with zero basis.
void pad(lmi::AffineMatrixFunction& a, std::size_t total) {
    while (a.basis.size() < total) {
        a.basis.push_back(Matrix::Zero(a.size(), a.size()));
    }
}

void shift(lmi::AffineMatrixFunction& a, double amount) {
    a.constant.diagonal().array() -= amount;
}

std::size_t thread_count() {
    if (const char* env = std::getenv("ADPETC_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) {
            return static_cast<std::size_t>(v);
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

}  // namespace

void DesignParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw DomainError(std::string(name) + " must be finite and > 0");
        }
    };
    positive(h, "h");
    positive(rho, "rho");
    positive(varrho, "varrho");
    positive(eta_min, "eta_min");
    positive(a_level, "A_level");
    if (!(mu > 0.0 && mu < 1.0)) {
        throw DomainError("mu must lie in (0, 1)");
    }
    if (theta.size() == 0) {
        throw DomainError("theta allocation is empty");
    }
}

FlowData prepare_flow(const model::AugmentedSystem& aug, const riccati::HamiltonianSystem& ham,
                      const model::ThetaAllocation& theta, double h, std::size_t grid) {
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw DomainError("h must be finite and > 0");
    }
    FlowData fd;
    fd.h = h;
    fd.assumption1 = riccati::check_assumption1(ham, h, grid);
    if (!fd.assumption1.ok) {
        throw AssumptionError("F11(r) is singular or ill-conditioned on [0, h] (worst rcond " +
                              std::to_string(fd.assumption1.worst_rcond) + " at r = " +
                              std::to_string(fd.assumption1.worst_r) + ")");
    }
    fd.fh = riccati::flow(ham, h, h);
    fd.f11_inv = num::inverse(fd.fh.f11);
    fd.sbar = riccati::compute_sbar(fd.fh);
    const auto all = model::EventIndexSet::all(aug.dims.nu);
    fd.j_full = model::jump_matrix(all, aug);
    fd.delta_full_norm = num::spectral_norm(model::delta_bar(all, theta, aug));
    return fd;
}

Matrix assemble_lmi(const FlowData& fd, double varrho, const Matrix& p_h, double eps) {
    if (!(varrho > 0.0) || !std::isfinite(varrho)) {
        throw DomainError("assemble_lmi: varrho must be finite and > 0");
    }
    if (!(eps > 0.0) || !std::isfinite(eps)) {
        throw DomainError("assemble_lmi: eps must be finite and > 0");
    }
    const auto n = fd.f11_inv.rows();
    if (p_h.rows() != n || p_h.cols() != n) {
        throw DimensionError("assemble_lmi: P(h) is " + std::to_string(p_h.rows()) + "x" +
                             std::to_string(p_h.cols()) + ", expected " + std::to_string(n) +
                             "x" + std::to_string(n));
    }
    num::require_finite(p_h, "P(h)");
    return assemble_raw(fd, varrho, p_h, eps);
}

Margins compute_margins(const FlowData& fd, double varrho, const Matrix& p_h, double eps) {
    Margins m;
    m.lmi = num::lambda_min(assemble_lmi(fd, varrho, p_h, eps));
    m.p = num::lambda_min(p_h);
    m.f3 = num::lambda_min(f3_of(fd, p_h));
    m.eps = eps;
    return m;
}

bool margins_ok(const Margins& m) {
    return m.lmi >= kMarginLmi && m.p >= kMarginP && m.f3 >= kMarginP && m.eps >= kMarginEps;
}

std::optional<FeasiblePoint> solve_feasibility(const FlowData& fd, double varrho,
                                               const FeasibilityOptions& opts) {
    if (!(varrho > 0.0) || !std::isfinite(varrho)) {
        throw DomainError("solve_feasibility: varrho must be finite and > 0");
    }
    const auto n = fd.f11_inv.rows();
    const std::size_t np = sym_vars(n);
    const std::size_t nvar = np + 2;  // P entries, eps, then t or s
    const auto ie = static_cast<Eigen::Index>(np);
    const auto it = static_cast<Eigen::Index>(np + 1);

    auto lmi_fn = affine_in_p_eps(n, [&](const Matrix& p, double e) {
        return assemble_raw(fd, varrho, p, e);
    });
    auto p_fn = affine_in_p_eps(n, [](const Matrix& p, double) { return p; });
    auto f3_fn = affine_in_p_eps(n, [&](const Matrix& p, double) { return f3_of(fd, p); });
    lmi::AffineMatrixFunction eps_fn;
    eps_fn.constant = Matrix::Zero(1, 1);
    eps_fn.basis.assign(np + 1, Matrix::Zero(1, 1));
    eps_fn.basis[np] = Matrix::Constant(1, 1, 1.0);

    // Scale-aware start inside the F3 constraint.
    const double s2 = fd.sbar.size() > 0 ? num::lambda_max(fd.sbar.transpose() * fd.sbar) : 0.0;
    const double c0 = std::clamp(s2 > 1e-12 ? 0.5 / s2 : 1.0, 1e-6, 1e6);
    const double p_max = std::max(opts.p_max, 10.0 * c0);
    const double eps_max = std::max(opts.eps_max, 10.0);

    Vector x0 = Vector::Zero(static_cast<Eigen::Index>(nvar));
    x0.head(ie) = vars_from_sym(c0 * Matrix::Identity(n, n));
    x0(ie) = 1.0;

    std::vector<lmi::AffineMatrixFunction> core{lmi_fn, p_fn, f3_fn, eps_fn};
    const double floor_margin[4] = {kMarginLmi, kMarginP, kMarginP, kMarginEps};
    std::vector<double> slack(core.size());
    for (std::size_t k = 0; k < core.size(); ++k) {
        pad(core[k], nvar);
        slack[k] = std::max(opts.relative_slack * std::max(1.0, core[k].evaluate(x0).norm()),
                            2.0 * floor_margin[k]);
        shift(core[k], slack[k]);
    }

    // Phase I: maximize t with every core block shifted by t.
    lmi::BarrierProblem ph1;
    ph1.num_vars = nvar;
    ph1.objective = Vector::Zero(static_cast<Eigen::Index>(nvar));
    ph1.objective(it) = -1.0;
    double t0 = std::numeric_limits<double>::infinity();
    for (auto con : core) {
        t0 = std::min(t0, num::lambda_min(con.evaluate(x0)));
        for (Eigen::Index d = 0; d < con.size(); ++d) {
            con.basis.back()(d, d) = -1.0;
        }
        ph1.constraints.push_back(std::move(con));
    }
    {
        lmi::AffineMatrixFunction box = affine_in_p_eps(n, [&](const Matrix& p, double) {
            return Matrix(p_max * Matrix::Identity(n, n) - p);
        });
        pad(box, nvar);
        ph1.constraints.push_back(std::move(box));
        lmi::AffineMatrixFunction ebox;
        ebox.constant = Matrix::Constant(1, 1, eps_max);
        ebox.basis.assign(nvar, Matrix::Zero(1, 1));
        ebox.basis[np] = Matrix::Constant(1, 1, -1.0);
        ph1.constraints.push_back(std::move(ebox));
    }
    x0(it) = t0 - 1.0;

    lmi::BarrierOptions o1;
    o1.target = 0.0;
    o1.gap_tolerance = 1e-12;
    o1.max_newton = opts.max_newton;
    const auto r1 = lmi::minimize(ph1, x0, o1);
    if (r1.status != lmi::BarrierStatus::reached_target) {
        return std::nullopt;
    }

    FeasiblePoint best;
    best.p_h = sym_from_vars(r1.x.head(ie), n);
    best.eps = r1.x(ie);
    best.margins = compute_margins(fd, varrho, best.p_h, best.eps);
    const bool phase1_ok = margins_ok(best.margins);

    if (opts.minimize_scale) {
        // Phase II: minimize s with P(h) <= s I and eps <= s.
        lmi::BarrierProblem ph2;
        ph2.num_vars = nvar;
        ph2.objective = Vector::Zero(static_cast<Eigen::Index>(nvar));
        ph2.objective(it) = 1.0;
        for (const auto& con : core) {
            ph2.constraints.push_back(con);
        }
        lmi::AffineMatrixFunction cap = affine_in_p_eps(n, [&](const Matrix& p, double) {
            return Matrix(-p);
        });
        pad(cap, nvar);
        cap.basis.back() = Matrix::Identity(n, n);
        ph2.constraints.push_back(std::move(cap));
        lmi::AffineMatrixFunction ecap;
        ecap.constant = Matrix::Zero(1, 1);
        ecap.basis.assign(nvar, Matrix::Zero(1, 1));
        ecap.basis[np] = Matrix::Constant(1, 1, -1.0);
        ecap.basis[np + 1] = Matrix::Constant(1, 1, 1.0);
        ph2.constraints.push_back(std::move(ecap));

        Vector x1 = r1.x;
        const double s0 = 1.1 * std::max(num::lambda_max(best.p_h), best.eps) + 1e-9;
        x1(it) = s0;
        if (lmi::strictly_feasible(ph2, x1)) {
            lmi::BarrierOptions o2;
            o2.gap_tolerance = 1e-9 * s0;
            o2.max_newton = opts.max_newton;
            const auto r2 = lmi::minimize(ph2, x1, o2);
            FeasiblePoint cand;
            cand.p_h = sym_from_vars(r2.x.head(ie), n);
            cand.eps = r2.x(ie);
            cand.margins = compute_margins(fd, varrho, cand.p_h, cand.eps);
            if (margins_ok(cand.margins)) {
                return cand;
            }
        }
    }
    if (phase1_ok) {
        return best;
    }
    return std::nullopt;
}

std::vector<double> varrho_grid(double lo, double hi, std::size_t steps) {
    if (!(lo > 0.0) || !std::isfinite(lo) || !std::isfinite(hi) || !(hi >= lo)) {
        throw DomainError("varrho range must satisfy 0 < lo <= hi (got [" + std::to_string(lo) +
                          ", " + std::to_string(hi) + "])");
    }
    if (steps < 1) {
        throw DomainError("varrho line search needs at least one grid point");
    }
    std::vector<double> g(steps);
    if (steps == 1) {
        g[0] = lo;
        return g;
    }
    const double ratio = std::log(hi / lo);
    for (std::size_t j = 0; j < steps; ++j) {
        g[j] = lo * std::exp(ratio * static_cast<double>(j) / static_cast<double>(steps - 1));
    }
    g.front() = lo;
    g.back() = hi;
    return g;
}

LineSearchResult line_search_varrho(const FlowData& fd, double lo, double hi, std::size_t steps,
                                    const FeasibilityOptions& opts, LineSearchMode mode) {
    const auto grid = varrho_grid(lo, hi, steps);
    std::map<std::size_t, std::optional<FeasiblePoint>> solved;
    auto run = [&](std::size_t j) -> const std::optional<FeasiblePoint>& {
        auto found = solved.find(j);
        if (found == solved.end()) {
            found = solved.emplace(j, solve_feasibility(fd, grid[j], opts)).first;
        }
        return found->second;
    };

    if (mode == LineSearchMode::exhaustive) {
        std::vector<std::optional<FeasiblePoint>> out(grid.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t j = next++; j < grid.size(); j = next++) {
                out[j] = solve_feasibility(fd, grid[j], opts);
            }
        };
        const std::size_t nt = std::min(thread_count(), grid.size());
        std::vector<std::thread> pool;
        for (std::size_t k = 1; k < nt; ++k) {
            pool.emplace_back(worker);
        }
        worker();
        for (auto& th : pool) {
            th.join();
        }
        for (std::size_t j = 0; j < grid.size(); ++j) {
            solved.emplace(j, std::move(out[j]));
        }
    } else {
        const std::size_t last = grid.size() - 1;
        if (run(last) && !run(0)) {
            std::size_t bad = 0;
            std::size_t good = last;
            while (good - bad > 1) {
                const std::size_t mid = bad + (good - bad) / 2;
                if (run(mid)) {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
        }
    }

    LineSearchResult res;
    for (const auto& [j, pt] : solved) {
        res.diagnostics.push_back({grid[j], pt.has_value(), pt ? pt->margins.lmi : 0.0});
        if (pt && !res.varrho) {
            res.varrho = grid[j];
            res.point = pt;
        }
    }
    return res;
}

double varrho_bar(const model::AugmentedSystem& aug, const model::ThetaAllocation& theta,
                  double varrho) {
    if (!(varrho > 0.0) || !std::isfinite(varrho)) {
        throw DomainError("varrho_bar: varrho must be finite and > 0");
    }
    const std::size_t nu = aug.dims.nu;
    if (nu > kMaxEnumeratedChannels) {
        throw DomainError("varrho_bar: " + std::to_string(nu) +
                          " channels exceeds the enumeration limit of 16");
    }
    double best = 0.0;
    const std::uint32_t count = std::uint32_t{1} << nu;
    for (std::uint32_t mask = 0; mask < count; ++mask) {
        const model::EventIndexSet j(nu, mask);
        const double v = num::spectral_norm(model::jump_matrix(j, aug)) * varrho +
                         num::spectral_norm(model::delta_bar(j, theta, aug));
        best = std::max(best, v);
    }
    return best;
}

double inner_level(double lambda_bar, double varrho_bar, double eta_min) {
    return lambda_bar * varrho_bar * varrho_bar * eta_min * eta_min;
}

double select_eta_min(double lambda_bar, double varrho_bar, double a_level, bool round) {
    if (!(a_level > 0.0)) {
        throw DomainError("select_eta_min: A_level must be > 0");
    }
    if (!(lambda_bar > 0.0) || !(varrho_bar > 0.0)) {
        throw DomainError("select_eta_min: lambda_bar and varrho_bar must be > 0");
    }
    double eta = std::sqrt(a_level / (lambda_bar * varrho_bar * varrho_bar));
    while (eta > 0.0 && inner_level(lambda_bar, varrho_bar, eta) > a_level) {
        eta = std::nextafter(eta, 0.0);
    }
    if (!round) {
        return eta;
    }
    // Values a hair below a round number (e.g. 0.99999999e-4) keep that number
    // when it still satisfies the enclosure.
    const double lifted = eta * (1.0 + 1e-12);
    const double scale = std::pow(10.0, std::floor(std::log10(lifted)));
    double digit = std::floor(lifted / scale);
    double out = digit * scale;
    while (digit > 0.0 && inner_level(lambda_bar, varrho_bar, out) > a_level) {
        digit -= 1.0;
        out = digit > 0.0 ? digit * scale : 0.0;
    }
    if (!(out > 0.0)) {
        // Only reachable if the lift crossed a decade; fall back to the next decade down.
        out = 9.0 * scale / 10.0;
    }
    return out;
}

double cd_norm(const model::AugmentedSystem& aug) {
    Matrix cd(aug.c.rows(), aug.c.cols() + aug.d.cols());
    cd << aug.c, aug.d;
    return num::spectral_norm(cd);
}

namespace {

double bound_root(const DesignCertificate& cert, double w0, double w_inf) {
    if (!(w0 >= 0.0) || !(w_inf >= 0.0)) {
        throw DomainError("bounds: W0 and w_inf must be >= 0");
    }
    const auto& p = cert.params;
    const double eta2 = p.eta_min * p.eta_min;
    const double lam = cert.lambda_min;
    if (!(lam > 0.0)) {
        throw DomainError("bounds: lambda_min must be > 0");
    }
    return std::sqrt(w0 / (eta2 * lam) + w_inf * w_inf / (2.0 * p.rho * eta2 * lam) +
                     cert.lambda_max * cert.varrho_bar * cert.varrho_bar / lam);
}

}  // namespace

Vector bound_mx_channels(const DesignCertificate& cert, double w0, double w_inf) {
    const double root = bound_root(cert, w0, w_inf);
    const Vector& th = cert.params.theta.values();
    Vector m(th.size());
    for (Eigen::Index i = 0; i < th.size(); ++i) {
        m(i) = (1.0 + cert.cd_norm) / th(i) * root;
    }
    return m;
}

double bound_mx(const DesignCertificate& cert, double w0, double w_inf) {
    return bound_mx_channels(cert, w0, w_inf).maxCoeff();
}

std::int64_t bound_mmu(const DesignCertificate& cert, double w0, double w_inf) {
    const double x = (1.0 + cert.cd_norm) / cert.params.varrho * bound_root(cert, w0, w_inf);
    const double v = -std::log(x) / std::log(cert.params.mu);
    return static_cast<std::int64_t>(std::ceil(std::max(0.0, v)));
}

bool VerificationReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

const Check* VerificationReport::first_failure() const {
    for (const auto& c : checks) {
        if (!c.passed) {
            return &c;
        }
    }
    return nullptr;
}

const Check* VerificationReport::find(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) {
            return &c;
        }
    }
    return nullptr;
}

namespace {

double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max(std::abs(b), std::numeric_limits<double>::min());
}

}  // namespace

VerificationReport verify_certificate(const DesignCertificate& cert,
                                      const model::AugmentedSystem& aug) {
    VerificationReport rep;
    auto add = [&](std::string name, double value, double threshold, bool passed,
                   std::string detail = {}) {
        rep.checks.push_back({std::move(name), value, threshold, passed, std::move(detail)});
    };
    const auto& p = cert.params;

    try {
        p.validate();
        add("params", 0.0, 0.0, true);
    } catch (const Error& e) {
        add("params", -1.0, 0.0, false, e.what());
        return rep;
    }
    if (p.theta.size() != aug.dims.nu) {
        add("theta_channels", -1.0, 0.0, false, "theta size does not match the channel count");
        return rep;
    }

    const double dtd = aug.d_bar.cols() > 0
                           ? num::lambda_max(aug.d_bar.transpose() * aug.d_bar)
                           : 0.0;
    const double gap = p.gamma * p.gamma - dtd;
    add("gamma_bound", gap, 0.0, p.gamma > 0.0 && gap > 0.0,
        "gamma^2 - lambda_max(Dbar^T Dbar)");
    add("rho_positive", p.rho, 0.0, p.rho > 0.0);
    if (!(p.gamma > 0.0 && gap > 0.0)) {
        return rep;
    }

    riccati::HamiltonianSystem ham;
    FlowData fd;
    try {
        ham = riccati::build_hamiltonian(aug, p.rho, p.gamma);
        fd = prepare_flow(aug, ham, p.theta, p.h, cert.riccati_grid);
        add("assumption1", fd.assumption1.worst_rcond, riccati::kRcondMin, true,
            "worst rcond of F11(r)");
        add("sbar", 0.0, 0.0, true);
    } catch (const AssumptionError& e) {
        add("assumption1", 0.0, riccati::kRcondMin, false, e.what());
        return rep;
    } catch (const Error& e) {
        add("sbar", -1.0, 0.0, false, e.what());
        return rep;
    }

    const auto n = static_cast<Eigen::Index>(aug.dims.nxi);
    if (cert.p_h.rows() != n || cert.p_h.cols() != n || !cert.p_h.allFinite() ||
        !std::isfinite(cert.eps)) {
        add("p_h_shape", -1.0, 0.0, false, "P(h) has the wrong shape or non-finite entries");
        return rep;
    }
    const Matrix ph = num::symmetrize(cert.p_h);
    Margins m;
    m.p = num::lambda_min(ph);
    m.f3 = num::lambda_min(f3_of(fd, ph));
    m.eps = cert.eps;
    m.lmi = cert.eps > 0.0 ? num::lambda_min(assemble_raw(fd, p.varrho, ph, cert.eps))
                           : -std::numeric_limits<double>::infinity();
    add("p_h_positive", m.p, kMarginP, m.p >= kMarginP, "lambda_min(P(h))");
    add("f3_positive", m.f3, kMarginP, m.f3 >= kMarginP, "lambda_min(I - Sbar^T P(h) Sbar)");
    add("eps_positive", m.eps, kMarginEps, m.eps >= kMarginEps, "eps");
    add("lmi", m.lmi, kMarginLmi, m.lmi >= kMarginLmi, "lambda_min of the jump LMI");
    if (!(m.p >= kMarginP && m.f3 >= kMarginP)) {
        return rep;
    }

    riccati::RiccatiSolution ric;
    try {
        ric = riccati::solve_p(ham, ph, p.h, cert.riccati_grid);
        const double mis =
            (ric.p.front() - ric.p0_closed_form).norm() / ric.p0_closed_form.norm();
        add("riccati_p0", riccati::kTolP0 - mis, 0.0, true,
            "relative P(0) mismatch " + std::to_string(mis));
    } catch (const Error& e) {
        add("riccati_p0", -1.0, 0.0, false, e.what());
        return rep;
    }

    constexpr double kTolRecord = 1e-9;
    const double d_max = rel_diff(ric.lambda_max, cert.lambda_max);
    const double d_min = rel_diff(ric.lambda_min, cert.lambda_min);
    add("lambda_bar", kTolRecord - d_max, 0.0, d_max <= kTolRecord, "recomputed vs recorded");
    add("lambda_low", kTolRecord - d_min, 0.0, d_min <= kTolRecord, "recomputed vs recorded");
    const double vb = varrho_bar(aug, p.theta, p.varrho);
    const double d_vb = rel_diff(vb, cert.varrho_bar);
    add("varrho_bar", kTolRecord - d_vb, 0.0, d_vb <= kTolRecord, "recomputed vs recorded");
    const double cdn = cd_norm(aug);
    const double d_cd = rel_diff(cdn, cert.cd_norm);
    add("cd_norm", kTolRecord - d_cd, 0.0, d_cd <= kTolRecord, "recomputed vs recorded");

    const double level = inner_level(ric.lambda_max, vb, p.eta_min);
    add("enclosure", p.a_level - level, 0.0, level <= p.a_level,
        "A_level - lambda_bar varrho_bar^2 eta_min^2");

    DesignCertificate re = cert;
    re.lambda_max = ric.lambda_max;
    re.lambda_min = ric.lambda_min;
    re.varrho_bar = vb;
    re.cd_norm = cdn;
    const double mx = bound_mx(re, cert.bound_w0, cert.bound_w_inf);
    const auto mmu = bound_mmu(re, cert.bound_w0, cert.bound_w_inf);
    const double d_mx = rel_diff(mx, cert.m_x);
    add("bounds", kTolRecord - d_mx, 0.0, d_mx <= kTolRecord && mmu == cert.m_mu,
        "recorded m_x / m_mu match the recomputed values");
    return rep;
}

double initial_w(const DesignCertificate& cert, const riccati::RiccatiSolution& ric,
                 const Vector& xi0) {
    const double v = xi0.dot(ric.p.front() * xi0);
    return std::max(0.0, v - inner_level(cert.lambda_max, cert.varrho_bar, cert.params.eta_min));
}

DesignOutcome synthesize(const model::AugmentedSystem& aug, const DesignRequest& req) {
    if (req.theta.size() != aug.dims.nu) {
        throw DimensionError("theta has " + std::to_string(req.theta.size()) +
                             " entries, the model has " + std::to_string(aug.dims.nu) +
                             " channels");
    }
    if (!(req.mu > 0.0 && req.mu < 1.0)) {
        throw DomainError("mu must lie in (0, 1)");
    }
    if (!(req.a_level > 0.0)) {
        throw DomainError("A_level must be > 0");
    }
    const auto ham = riccati::build_hamiltonian(aug, req.rho, req.gamma);
    const FlowData fd = prepare_flow(aug, ham, req.theta, req.h, req.riccati_grid);

    DesignOutcome out;
    out.search = line_search_varrho(fd, req.varrho_lo, req.varrho_hi, req.steps, req.feasibility,
                                    req.mode);
    if (!out.search.varrho) {
        throw InfeasibleError("no feasible varrho found on [" + std::to_string(req.varrho_lo) +
                              ", " + std::to_string(req.varrho_hi) + "] (" +
                              std::to_string(out.search.diagnostics.size()) +
                              " grid points solved)");
    }
    const FeasiblePoint& pt = *out.search.point;
    out.riccati = riccati::solve_p(ham, pt.p_h, req.h, req.riccati_grid);

    auto& cert = out.cert;
    cert.params.h = req.h;
    cert.params.rho = req.rho;
    cert.params.gamma = req.gamma;
    cert.params.mu = req.mu;
    cert.params.theta = req.theta;
    cert.params.varrho = *out.search.varrho;
    cert.params.a_level = req.a_level;
    cert.p_h = pt.p_h;
    cert.eps = pt.eps;
    cert.margins = pt.margins;
    cert.lambda_max = out.riccati.lambda_max;
    cert.lambda_min = out.riccati.lambda_min;
    cert.p0 = out.riccati.p.front();
    cert.varrho_bar = varrho_bar(aug, req.theta, cert.params.varrho);
    cert.cd_norm = cd_norm(aug);
    cert.riccati_grid = req.riccati_grid;

    if (req.eta_min) {
        cert.params.eta_min = *req.eta_min;
    } else {
        cert.params.eta_min =
            select_eta_min(cert.lambda_max, cert.varrho_bar, req.a_level, req.round_eta_min);
    }
    const double level = inner_level(cert.lambda_max, cert.varrho_bar, cert.params.eta_min);
    if (!(cert.params.eta_min > 0.0) || level > req.a_level) {
        throw EnclosureError("inner level " + std::to_string(level) + " exceeds A_level " +
                             std::to_string(req.a_level) + " for eta_min " +
                             std::to_string(cert.params.eta_min));
    }

    cert.bound_w_inf = req.w_inf;
    if (req.xi0.size() > 0) {
        if (req.xi0.size() != static_cast<Eigen::Index>(aug.dims.nxi)) {
            throw DimensionError("initial state has the wrong length");
        }
        cert.bound_w0 = initial_w(cert, out.riccati, req.xi0);
    }
    cert.m_x = bound_mx(cert, cert.bound_w0, cert.bound_w_inf);
    cert.m_mu = bound_mmu(cert, cert.bound_w0, cert.bound_w_inf);
    return out;
}

}  // namespace adpetc::design
