#pragma once

// Hamiltonian flow of the sampled-data Riccati equation
//
//   dP/dr = -Abar^T P - P Abar - 2 rho P - gamma^-2 Cbar^T Cbar - G^T M G,
//   G = Bbar^T P + gamma^-2 Dbar^T Cbar,  M = (I - gamma^-2 Dbar^T Dbar)^-1,
//
// evaluated through F(r) = exp(-H r) rather than by time stepping.

#include <cstddef>
#include <vector>

#include "adpetc/numkernel.hpp"
#include "adpetc/sysmodel.hpp"

namespace adpetc::riccati {

using num::Matrix;

inline constexpr std::size_t kDefaultGrid = 64;
inline constexpr double kRcondMin = 1e-10;
inline constexpr double kTolP0 = 1e-8;

struct HamiltonianSystem {
    Matrix h;       // 2n x 2n
    Matrix m;       // nw x nw
    Matrix a_bar;   // kept for the Riccati right-hand side
    Matrix b_bar;
    Matrix c_bar;
    Matrix d_bar;
    double rho = 0.0;
    double gamma = 0.0;
    Eigen::Index n = 0;

    [[nodiscard]] Matrix h11() const { return h.topLeftCorner(n, n); }
    [[nodiscard]] Matrix h12() const { return h.topRightCorner(n, n); }
    [[nodiscard]] Matrix h21() const { return h.bottomLeftCorner(n, n); }
    [[nodiscard]] Matrix h22() const { return h.bottomRightCorner(n, n); }
};

struct FlowBlocks {
    Matrix f11;
    Matrix f12;
    Matrix f21;
    Matrix f22;
};

struct Assumption1Report {
    bool ok = true;
    double worst_rcond = 1.0;
    double worst_r = 0.0;
    double min_det = 1.0;  // det F11(r) starts at 1 and must not cross zero
};

struct RiccatiSolution {
    double h = 0.0;
    std::vector<double> grid;  // uniform, grid.front() == 0, grid.back() == h
    std::vector<Matrix> p;     // P(grid[j])
    Matrix p_h;
    Matrix sbar;
    Matrix p0_closed_form;
    double lambda_max = 0.0;
    double lambda_min = 0.0;

    /// Entrywise linear interpolation of P on the grid; r must lie in [0, h].
    [[nodiscard]] Matrix p_at(double r) const;
};

/// Throws GainBoundError unless gamma > 0 and gamma^2 > lambda_max(Dbar^T Dbar);
/// DomainError unless rho > 0.
HamiltonianSystem build_hamiltonian(const model::AugmentedSystem& aug, double rho, double gamma);

/// Blocks of exp(-H r); r must lie in [0, horizon].
FlowBlocks flow(const HamiltonianSystem& ham, double r, double horizon);

/// Full 2n x 2n flow matrix exp(-H r) with no range check.
Matrix flow_matrix(const HamiltonianSystem& ham, double r);

Assumption1Report check_assumption1(const HamiltonianSystem& ham, double h,
                                    std::size_t grid = kDefaultGrid,
                                    double rcond_min = kRcondMin);

/// Sbar with Sbar Sbar^T = -F11(h)^-1 F12(h). Throws NotPsdError if that
/// product is not PSD within tolerance.
Matrix compute_sbar(const FlowBlocks& fh);

/// P(r) = (F21(h-r) + F22(h-r) P_h)(F11(h-r) + F12(h-r) P_h)^-1, symmetrized.
Matrix p_from_flow(const HamiltonianSystem& ham, const Matrix& p_h, double h, double r);

/// Closed form of P(0) from the flow at h, Sbar and P(h).
Matrix p0_closed_form(const FlowBlocks& fh, const Matrix& sbar, const Matrix& p_h);

/// Right-hand side of the Riccati differential equation at P.
Matrix riccati_rhs(const HamiltonianSystem& ham, const Matrix& p);

/// Evaluates P on a uniform grid of `intervals` + 1 points. Checks the
/// hypotheses on P(h), that every P(r_j) is positive definite, and that the
/// flow and closed-form values of P(0) agree.
RiccatiSolution solve_p(const HamiltonianSystem& ham, const Matrix& p_h, double h,
                        std::size_t intervals = kDefaultGrid);

struct LambdaBounds {
    double lambda_max;
    double lambda_min;
};

/// Extremal eigenvalues of P over the stored grid.
LambdaBounds lambda_bounds(const RiccatiSolution& sol);

}  // namespace adpetc::riccati
