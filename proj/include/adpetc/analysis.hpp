#pragma once

// Lyapunov functions, performance signals and trace-level certificate checks.

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "adpetc/etcsim.hpp"
#include "adpetc/lmidesign.hpp"
#include "adpetc/riccati.hpp"
#include "adpetc/sysmodel.hpp"

namespace adpetc::analysis {

using num::Matrix;
using num::Vector;

/// Levels of the performance set A (user level c) and the inner set.
struct SetSpec {
    double level = 0.0;
    double inner = 0.0;

    static SetSpec from_certificate(const design::DesignCertificate& cert);
};

/// x^T P(r) x with P linearly interpolated on the Riccati grid.
double lyapunov_V(const Vector& x, double r, const riccati::RiccatiSolution& ric);

/// max(V(x, r) - inner, 0).
double lyapunov_W(const Vector& x, double r, const riccati::RiccatiSolution& ric, double inner);

struct ZSignals {
    Vector z_tilde;  // Cbar x + Dbar w
    Vector z_a;      // zero inside A
    Vector z_inner;  // zero inside the inner set
};

ZSignals z_signals(const model::AugmentedSystem& aug, const riccati::RiccatiSolution& ric,
                   const SetSpec& sets, const Vector& x, double r, const Vector& w);

struct Violations {
    std::size_t checked = 0;
    std::size_t count = 0;
    double worst = 0.0;  // largest amount by which the inequality failed

    void record(double excess);
};

struct CertifyOptions {
    /// Relative slack on V for jump comparisons.
    double jump_tol = 1e-9;
    /// Relative slack on V for the trapezoidal flow inequality.
    double flow_tol = 1e-6;
};

struct PerformanceReport {
    Violations jump_monotonic;  // (a)
    Violations flow;            // (b)
    Violations landing;         // (c)
    Violations ledger;          // (d)
    Violations w_bound;         // W(t) <= W(0) + |w|_inf^2 / (2 rho)
    Violations state_bound;     // |xi|^2 <= (W(0) + |w|_inf^2/(2 rho) + inner) / lambda_low
    std::size_t mx_exceedances = 0;
    std::size_t mmu_exceedances = 0;
    double z_integral = 0.0;  // int z_A^T z_A dt
    double w_integral = 0.0;  // int w^T w dt
    double w0 = 0.0;          // W(xi(0), 0)
    double budget = 0.0;      // gamma^2 (W(0) + int w^T w)
    double w_inf = 0.0;
    double mx_bound = 0.0;
    std::int64_t mmu_bound = 0;
    std::int64_t max_n_mu = 0;

    [[nodiscard]] bool clean() const;
};

/// Trace-level evidence for the certificate. `w` must be the disturbance
/// the trace was simulated with (its midpoint values drive the integrals).
PerformanceReport certify_trace(const sim::Trace& trace, const design::DesignCertificate& cert,
                                const model::AugmentedSystem& aug,
                                const riccati::RiccatiSolution& ric, const sim::Disturbance& w,
                                const CertifyOptions& opts = {});

struct TransmissionStats {
    std::size_t samples = 0;
    std::vector<std::size_t> per_channel;
    std::size_t sensor_transmissions = 0;
    std::size_t total_transmissions = 0;
    std::size_t baseline_sensor = 0;
    std::size_t baseline_total = 0;
    double reduction_sensor = 0.0;  // percent
    double reduction_total = 0.0;   // percent
    std::vector<double> max_interval;  // seconds, per channel; t = 0 counts as a transmission
    double max_interval_all = 0.0;
    std::map<int, std::size_t> bits_histogram;
    std::int64_t max_m = 0;
    double share_m_le_8 = 0.0;
    double share_m_le_128 = 0.0;
};

/// Throws DomainError when the two traces do not cover the same samples.
TransmissionStats transmission_stats(const sim::Trace& trace, const sim::Trace& baseline);

}  // namespace adpetc::analysis
