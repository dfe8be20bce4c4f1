#pragma once

// Jump LMI in (P(h), eps), the line search over varrho, eta_min sizing and
// the bit / zoom-level bounds. A DesignCertificate bundles everything the
// simulator and the verifier need.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adpetc/numkernel.hpp"
#include "adpetc/riccati.hpp"
#include "adpetc/sysmodel.hpp"

namespace adpetc::design {

using num::Matrix;
using num::Vector;

inline constexpr double kMarginLmi = 0.0;
inline constexpr double kMarginP = 1e-9;
inline constexpr double kMarginEps = 1e-9;
inline constexpr std::size_t kDefaultSteps = 64;
inline constexpr std::size_t kMaxEnumeratedChannels = 16;

struct DesignParams {
    double h = 0.0;
    double rho = 0.0;
    double gamma = 0.0;
    double mu = 0.0;
    model::ThetaAllocation theta;
    double varrho = 0.0;
    double eta_min = 0.0;
    double a_level = 0.0;

    /// Throws DomainError on mu outside (0, 1) or non-positive h, varrho, eta_min, a_level.
    void validate() const;
};

/// Everything about the flow at h that the LMI needs, computed once per (h, rho, gamma).
struct FlowData {
    double h = 0.0;
    riccati::FlowBlocks fh;
    Matrix f11_inv;
    Matrix sbar;
    Matrix j_full;               // jump_matrix(all channels)
    double delta_full_norm = 0;  // |delta_bar(all channels)|
    riccati::Assumption1Report assumption1;
};

/// Throws AssumptionError if F11 is singular on [0, h], NotPsdError if the
/// Sbar factor does not exist.
FlowData prepare_flow(const model::AugmentedSystem& aug, const riccati::HamiltonianSystem& ham,
                      const model::ThetaAllocation& theta, double h,
                      std::size_t grid = riccati::kDefaultGrid);

/// The 4n x 4n block matrix; affine in (P(h), eps).
Matrix assemble_lmi(const FlowData& fd, double varrho, const Matrix& p_h, double eps);

/// Smallest eigenvalue of each constraint of the feasibility problem.
struct Margins {
    double lmi = 0.0;
    double p = 0.0;
    double f3 = 0.0;
    double eps = 0.0;
};

Margins compute_margins(const FlowData& fd, double varrho, const Matrix& p_h, double eps);

/// True when the margins clear kMarginLmi, kMarginP and kMarginEps.
bool margins_ok(const Margins& m);

struct FeasibilityOptions {
    /// Interior slack per block, relative to the block's Frobenius norm at the start point.
    double relative_slack = 1e-10;
    /// Box that keeps the feasibility phase bounded.
    double p_max = 1e8;
    double eps_max = 1e8;
    /// After feasibility, push lambda_max(P(h)) and eps down (smaller inner set).
    bool minimize_scale = true;
    std::size_t max_newton = 2000;
};

struct FeasiblePoint {
    Matrix p_h;
    double eps = 0.0;
    Margins margins;
};

/// Heuristic search; an empty result does not prove infeasibility.
std::optional<FeasiblePoint> solve_feasibility(const FlowData& fd, double varrho,
                                               const FeasibilityOptions& opts = {});

enum class LineSearchMode { bisection, exhaustive };

struct GridDiagnostic {
    double varrho = 0.0;
    bool feasible = false;
    double lmi_margin = 0.0;  // meaningful only when feasible
};

struct LineSearchResult {
    std::optional<double> varrho;
    std::optional<FeasiblePoint> point;
    std::vector<GridDiagnostic> diagnostics;  // only the grid points actually solved
};

/// Geometric grid lo * (hi/lo)^(j/(steps-1)).
std::vector<double> varrho_grid(double lo, double hi, std::size_t steps);

/// Smallest feasible varrho on the grid. Feasibility is monotone in varrho
/// (the only varrho-dependent term shrinks as varrho grows), so the default
/// bisection returns the same grid point as an exhaustive scan.
LineSearchResult line_search_varrho(const FlowData& fd, double lo, double hi,
                                    std::size_t steps = kDefaultSteps,
                                    const FeasibilityOptions& opts = {},
                                    LineSearchMode mode = LineSearchMode::bisection);

/// max over all subsets J of |J_J| varrho + |delta_bar_J|.
double varrho_bar(const model::AugmentedSystem& aug, const model::ThetaAllocation& theta,
                  double varrho);

/// sqrt(c / (lambda_bar varrho_bar^2)), optionally rounded down to one significant digit.
double select_eta_min(double lambda_bar, double varrho_bar, double a_level, bool round = true);

/// Level of the inner set, lambda_bar varrho_bar^2 eta_min^2.
double inner_level(double lambda_bar, double varrho_bar, double eta_min);

struct DesignCertificate {
    DesignParams params;
    Matrix p_h;
    double eps = 0.0;
    double lambda_max = 0.0;
    double lambda_min = 0.0;
    Matrix p0;
    double varrho_bar = 0.0;
    double cd_norm = 0.0;  // |[C D]|
    std::size_t riccati_grid = riccati::kDefaultGrid;
    Margins margins;
    // Inputs and results of the bit / zoom bounds.
    double bound_w0 = 0.0;
    double bound_w_inf = 0.0;
    double m_x = 0.0;
    std::int64_t m_mu = 0;
    std::uint64_t model_hash = 0;
};

/// Per-channel bound on m^i.
Vector bound_mx_channels(const DesignCertificate& cert, double w0, double w_inf);
double bound_mx(const DesignCertificate& cert, double w0, double w_inf);
std::int64_t bound_mmu(const DesignCertificate& cert, double w0, double w_inf);

/// Spectral norm of [C D].
double cd_norm(const model::AugmentedSystem& aug);

struct Check {
    std::string name;
    double value = 0.0;      // margin; >= threshold passes
    double threshold = 0.0;
    bool passed = false;
    std::string detail;
};

struct VerificationReport {
    std::vector<Check> checks;

    [[nodiscard]] bool ok() const;
    /// First failed check, or nullptr.
    [[nodiscard]] const Check* first_failure() const;
    [[nodiscard]] const Check* find(const std::string& name) const;
};

/// Recomputes every hypothesis from scratch and reports each margin.
VerificationReport verify_certificate(const DesignCertificate& cert,
                                      const model::AugmentedSystem& aug);

struct DesignRequest {
    double h = 0.0;
    double rho = 0.0;
    double gamma = 0.0;
    double mu = 0.0;
    model::ThetaAllocation theta;
    double a_level = 0.0;
    double varrho_lo = 0.0;
    double varrho_hi = 0.0;
    std::size_t steps = kDefaultSteps;
    /// Fixed eta_min; when absent it is selected from the enclosure.
    std::optional<double> eta_min;
    bool round_eta_min = true;
    std::size_t riccati_grid = riccati::kDefaultGrid;
    /// Initial state and disturbance bound for the bit / zoom bounds.
    Vector xi0;
    double w_inf = 0.0;
    FeasibilityOptions feasibility;
    LineSearchMode mode = LineSearchMode::bisection;
};

struct DesignOutcome {
    DesignCertificate cert;
    LineSearchResult search;
    riccati::RiccatiSolution riccati;
};

/// Full pipeline. Throws GainBoundError, AssumptionError, InfeasibleError or
/// EnclosureError for the corresponding failures.
DesignOutcome synthesize(const model::AugmentedSystem& aug, const DesignRequest& req);

/// W(x, 0) for the certificate's inner level.
double initial_w(const DesignCertificate& cert, const riccati::RiccatiSolution& ric,
                 const Vector& xi0);

}  // namespace adpetc::design
