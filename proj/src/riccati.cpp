#include "adpetc/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "adpetc/errors.hpp"

namespace adpetc::riccati {

HamiltonianSystem build_hamiltonian(const model::AugmentedSystem& aug, double rho, double gamma) {
    if (!(rho > 0.0) || !std::isfinite(rho)) {
        throw DomainError("build_hamiltonian: rho must be finite and > 0");
    }
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw GainBoundError("build_hamiltonian: gamma must be finite and > 0");
    }
    const auto& d_bar = aug.d_bar;
    const auto nw = d_bar.cols();
    const auto nz = d_bar.rows();
    const double dtd_max = nw > 0 ? num::lambda_max(d_bar.transpose() * d_bar) : 0.0;
    if (!(gamma * gamma > dtd_max)) {
        throw GainBoundError("gamma^2 = " + std::to_string(gamma * gamma) +
                             " does not exceed lambda_max(Dbar^T Dbar) = " +
                             std::to_string(dtd_max));
    }
    const double g2 = 1.0 / (gamma * gamma);
    const auto n = aug.a_bar.rows();

    HamiltonianSystem ham;
    ham.n = n;
    ham.rho = rho;
    ham.gamma = gamma;
    ham.a_bar = aug.a_bar;
    ham.b_bar = aug.b_bar;
    ham.c_bar = aug.c_bar;
    ham.d_bar = aug.d_bar;
    ham.m = num::inverse(Matrix::Identity(nw, nw) - g2 * d_bar.transpose() * d_bar);

    const Matrix h11 = aug.a_bar + rho * Matrix::Identity(n, n) +
                       g2 * aug.b_bar * ham.m * d_bar.transpose() * aug.c_bar;
    const Matrix h12 = num::symmetrize(aug.b_bar * ham.m * aug.b_bar.transpose());
    const Matrix h21 = num::symmetrize(
        -aug.c_bar.transpose() *
        num::solve(gamma * gamma * Matrix::Identity(nz, nz) - d_bar * d_bar.transpose(),
                   aug.c_bar));
    ham.h.resize(2 * n, 2 * n);
    ham.h << h11, h12, h21, -h11.transpose();
    return ham;
}

Matrix flow_matrix(const HamiltonianSystem& ham, double r) {
    return num::expm(ham.h, -r);
}

FlowBlocks flow(const HamiltonianSystem& ham, double r, double horizon) {
    if (!(r >= 0.0 && r <= horizon)) {
        throw DomainError("flow: r = " + std::to_string(r) + " outside [0, h]");
    }
    const Matrix f = flow_matrix(ham, r);
    const auto n = ham.n;
    return FlowBlocks{f.topLeftCorner(n, n), f.topRightCorner(n, n), f.bottomLeftCorner(n, n),
                      f.bottomRightCorner(n, n)};
}

Assumption1Report check_assumption1(const HamiltonianSystem& ham, double h, std::size_t grid,
                                    double rcond_min) {
    if (grid < 2) {
        throw DomainError("check_assumption1: grid must have at least 2 intervals");
    }
    Assumption1Report rep;
    rep.worst_rcond = std::numeric_limits<double>::infinity();
    rep.min_det = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j <= grid; ++j) {
        const double r = h * static_cast<double>(j) / static_cast<double>(grid);
        const Matrix f11 = flow(ham, std::min(r, h), h).f11;
        const double rc = num::rcond(f11);
        const double det = f11.determinant();
        if (rc < rep.worst_rcond) {
            rep.worst_rcond = rc;
            rep.worst_r = r;
        }
        rep.min_det = std::min(rep.min_det, det);
        // det F11(0) = 1; by continuity a sign change means a singular point.
        if (rc < rcond_min || !(det > 0.0)) {
            rep.ok = false;
        }
    }
    return rep;
}

Matrix compute_sbar(const FlowBlocks& fh) {
    const Matrix ss = num::symmetrize(-num::solve(fh.f11, fh.f12));
    return num::psd_factor(ss);
}

Matrix p_from_flow(const HamiltonianSystem& ham, const Matrix& p_h, double h, double r) {
    const FlowBlocks f = flow(ham, h - r, h);
    const Matrix x = f.f11 + f.f12 * p_h;
    const Matrix y = f.f21 + f.f22 * p_h;
    // P = Y X^-1  <=>  X^T P^T = Y^T
    const Matrix pt = num::solve(x.transpose(), y.transpose());
    return num::symmetrize(pt.transpose());
}

Matrix p0_closed_form(const FlowBlocks& fh, const Matrix& sbar, const Matrix& p_h) {
    const auto n = p_h.rows();
    const Matrix f11_inv = num::inverse(fh.f11);
    const Matrix f3 = Matrix::Identity(n, n) - sbar.transpose() * p_h * sbar;
    const Matrix inner = p_h + p_h * sbar * num::solve(f3, sbar.transpose() * p_h);
    return num::symmetrize(fh.f21 * f11_inv + f11_inv.transpose() * inner * f11_inv);
}

Matrix riccati_rhs(const HamiltonianSystem& ham, const Matrix& p) {
    const double g2 = 1.0 / (ham.gamma * ham.gamma);
    const Matrix g = ham.b_bar.transpose() * p + g2 * ham.d_bar.transpose() * ham.c_bar;
    return -ham.a_bar.transpose() * p - p * ham.a_bar - 2.0 * ham.rho * p -
           g2 * ham.c_bar.transpose() * ham.c_bar - g.transpose() * ham.m * g;
}

Matrix RiccatiSolution::p_at(double r) const {
    if (!(r >= 0.0 && r <= h) || grid.size() < 2) {
        throw DomainError("P(r): r = " + std::to_string(r) + " outside [0, h]");
    }
    const double step = h / static_cast<double>(grid.size() - 1);
    const double pos = r / step;
    auto j = static_cast<std::size_t>(std::floor(pos));
    if (j >= grid.size() - 1) {
        return p.back();
    }
    const double frac = pos - static_cast<double>(j);
    if (frac == 0.0) {
        return p[j];
    }
    return (1.0 - frac) * p[j] + frac * p[j + 1];
}

RiccatiSolution solve_p(const HamiltonianSystem& ham, const Matrix& p_h, double h,
                        std::size_t intervals) {
    if (intervals < 1) {
        throw DomainError("solve_p: need at least one grid interval");
    }
    if (p_h.rows() != ham.n || p_h.cols() != ham.n) {
        throw DimensionError("solve_p: P(h) has the wrong shape");
    }
    num::require_finite(p_h, "P(h)");
    const Matrix ph = num::symmetrize(p_h);
    if (!(num::lambda_min(ph) > 0.0)) {
        throw DomainError("solve_p: P(h) is not positive definite");
    }
    const FlowBlocks fh = flow(ham, h, h);
    RiccatiSolution sol;
    sol.h = h;
    sol.p_h = ph;
    sol.sbar = compute_sbar(fh);
    const auto n = ham.n;
    const Matrix f3 = Matrix::Identity(n, n) - sol.sbar.transpose() * ph * sol.sbar;
    if (!(num::lambda_min(f3) > 0.0)) {
        throw DomainError("solve_p: I - Sbar^T P(h) Sbar is not positive definite");
    }

    sol.grid.resize(intervals + 1);
    sol.p.resize(intervals + 1);
    for (std::size_t j = 0; j <= intervals; ++j) {
        const double r = j == intervals
                             ? h
                             : h * static_cast<double>(j) / static_cast<double>(intervals);
        sol.grid[j] = r;
        sol.p[j] = j == intervals ? ph : p_from_flow(ham, ph, h, r);
        if (!(num::lambda_min(sol.p[j]) > 0.0)) {
            throw ConsistencyError("solve_p: P(r) lost positive definiteness at r = " +
                                   std::to_string(r));
        }
    }

    sol.p0_closed_form = p0_closed_form(fh, sol.sbar, ph);
    const double mismatch =
        (sol.p.front() - sol.p0_closed_form).norm() / sol.p0_closed_form.norm();
    if (mismatch > kTolP0) {
        throw ConsistencyError("solve_p: P(0) from the flow and the closed form differ by " +
                               std::to_string(mismatch) + " (relative)");
    }
    const auto bounds = lambda_bounds(sol);
    sol.lambda_max = bounds.lambda_max;
    sol.lambda_min = bounds.lambda_min;
    return sol;
}

LambdaBounds lambda_bounds(const RiccatiSolution& sol) {
    LambdaBounds b{-std::numeric_limits<double>::infinity(),
                   std::numeric_limits<double>::infinity()};
    for (const auto& p : sol.p) {
        const auto eig = num::sym_eig(p);
        b.lambda_max = std::max(b.lambda_max, eig.values(0));
        b.lambda_min = std::min(b.lambda_min, eig.values(eig.values.size() - 1));
    }
    return b;
}

}  // namespace adpetc::riccati
