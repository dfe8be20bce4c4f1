#pragma once

// Sampled-data closed loop with per-channel event tests, the zoom quantizer
// and the global threshold update. Time advances in whole samples of length h;
// between samples the plant flows with the held actuator value.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "adpetc/lmidesign.hpp"
#include "adpetc/numkernel.hpp"
#include "adpetc/sysmodel.hpp"

namespace adpetc::sim {

using num::Matrix;
using num::Vector;

inline constexpr std::size_t kDefaultSubsteps = 16;

/// Bits needed to send m >= 1: ceil(log2 m) + 1, the extra bit being the sign.
int bits_for(std::int64_t m);
/// Same mapping for a real-valued bound (e.g. 2.4e8 -> 29); values below 1 map to 1.
int bits_for_bound(double m);

struct SimState {
    Vector xp;
    Vector xc;
    Vector y_hat;
    Vector v_hat;
    double eta = 0.0;
    double tau = 0.0;
    double t = 0.0;

    [[nodiscard]] Vector xi() const { return model::stack_state(xp, xc, y_hat, v_hat); }
    /// Controller-side part [xc; y_hat; v_hat].
    [[nodiscard]] Vector xi_controller() const;
};

/// Builds the state from a stacked xi.
SimState state_from_xi(const Vector& xi, const model::Dims& dims);

class Disturbance {
public:
    enum class Kind { zero, windowed_sine, piecewise };

    static Disturbance zero(std::size_t nw);
    /// amplitude * sin(2 pi f t) on every component for t in [t_a, t_b], zero elsewhere.
    static Disturbance windowed_sine(std::size_t nw, double amplitude, double frequency,
                                     double t_a, double t_b);
    /// Row j of `samples` holds w on [j dt, (j+1) dt); zero after the last row.
    static Disturbance piecewise(Matrix samples, double dt);

    [[nodiscard]] Vector operator()(double t) const;
    /// Upper bound on sup_t |w(t)|.
    [[nodiscard]] double sup_norm() const;
    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] std::size_t dim() const { return nw_; }
    [[nodiscard]] double amplitude() const { return amplitude_; }
    [[nodiscard]] double frequency() const { return frequency_; }
    [[nodiscard]] double t_a() const { return t_a_; }
    [[nodiscard]] double t_b() const { return t_b_; }
    [[nodiscard]] const Matrix& samples() const { return samples_; }
    [[nodiscard]] double dt() const { return dt_; }

private:
    Kind kind_ = Kind::zero;
    std::size_t nw_ = 0;
    double amplitude_ = 0.0;
    double frequency_ = 0.0;
    double t_a_ = 0.0;
    double t_b_ = 0.0;
    Matrix samples_;
    double dt_ = 0.0;
};

struct EventRecord {
    double t = 0.0;
    std::size_t k = 0;        // sample index, t = k h
    std::size_t channel = 0;  // 0-based, sensors first
    std::int64_t m = 0;
    int sign = 0;
    int bits = 0;
    bool sensor = true;
    double u_prev = 0.0;  // held value before the update
    double u_new = 0.0;
    double q = 0.0;       // quantum theta_i eta
};

/// Local thresholds eta_i = theta_i^2 eta^2.
Vector local_thresholds(double eta, const model::ThetaAllocation& theta);

/// u = [y; v] from the pre-jump state.
Vector plant_controller_outputs(const SimState& s, const model::AugmentedSystem& aug);

/// Triggered channels: |u_hat^i - u^i| >= theta_i eta.
model::EventIndexSet evaluate_events(const SimState& s, const model::AugmentedSystem& aug,
                                     const model::ThetaAllocation& theta);

struct QuantizeResult {
    double u_new = 0.0;
    std::int64_t m = 0;
    int sign = 0;
};

/// Zoom quantizer for one triggered channel; throws DomainError unless |u_prev - u| >= q > 0.
QuantizeResult quantize_update(double u_prev, double u, double q);

/// Receiver-side reconstruction of the update from (m, sign).
double decode_update(double u_prev, std::int64_t m, int sign, double q);

struct ThresholdResult {
    double eta = 0.0;
    std::int64_t n_mu = 0;
};

ThresholdResult threshold_update(const Vector& xi_controller, double mu, double eta_min,
                                 double varrho);

/// Exact zero-order-hold propagator for [xp; v_hat; w] over one substep.
class FlowPropagator {
public:
    FlowPropagator(const model::AugmentedSystem& aug, double dt);

    /// xp after dt with v_hat held and w frozen.
    [[nodiscard]] Vector step(const Vector& xp, const Vector& v_hat, const Vector& w) const;
    [[nodiscard]] double dt() const { return dt_; }

private:
    double dt_;
    Matrix phi_x_;
    Matrix phi_v_;
    Matrix phi_w_;
};

/// One sampling interval of flow with `substeps` midpoint-frozen disturbance
/// substeps. Intermediate states (excluding the end point) go to `samples`
/// when it is non-null.
SimState flow_step(const SimState& s, const model::AugmentedSystem& aug, const Disturbance& w,
                   double h, std::size_t substeps, std::vector<SimState>* samples = nullptr);

/// Same as flow_step with a prebuilt propagator of step h / substeps.
SimState flow_step(const SimState& s, const FlowPropagator& prop, const Disturbance& w,
                   double h, std::size_t substeps, std::vector<SimState>* samples = nullptr);

struct JumpResult {
    SimState state;
    model::EventIndexSet events;
    std::vector<EventRecord> records;
    std::int64_t n_mu = 0;
    Vector eps_y;  // realized normalized quantization errors (0 on held channels)
    Vector eps_v;
};

/// Atomic jump at tau = h: events on the pre-jump state, quantization,
/// controller update with the new y_hat, then the threshold update.
JumpResult jump(const SimState& s, const model::AugmentedSystem& aug,
                const design::DesignParams& params, std::size_t k = 0);

enum class Phase { flow, pre, post };

struct TraceRow {
    double t = 0.0;
    std::size_t k = 0;  // index of the most recent sample instant
    Phase phase = Phase::post;
    double tau = 0.0;
    Vector xi;
    double eta = 0.0;
    Vector w;
    std::uint32_t events = 0;  // triggered mask, post rows only
    std::int64_t n_mu = 0;     // post rows only
};

struct Trace {
    double h = 0.0;
    double duration = 0.0;
    std::size_t samples = 0;  // number of sample instants after t = 0
    std::size_t nu = 0;
    std::size_t ny = 0;
    bool baseline = false;
    std::vector<TraceRow> rows;
    std::vector<EventRecord> events;
};

struct SimOptions {
    std::size_t substeps = kDefaultSubsteps;
    bool record_flow = true;
};

/// Deterministic closed-loop run; the initial threshold comes from the
/// threshold update on the controller part of `initial`.
Trace simulate(const model::AugmentedSystem& aug, const design::DesignParams& params,
               const Disturbance& w, double duration, const SimState& initial,
               const SimOptions& opts = {});

/// Every channel transmits its exact value at every sample.
Trace time_triggered_baseline(const model::AugmentedSystem& aug, double h, const Disturbance& w,
                              double duration, const SimState& initial,
                              const SimOptions& opts = {});

/// Number of whole samples in `duration`; throws DomainError unless duration
/// is a positive multiple of h (to 1e-9 relative).
std::size_t sample_count(double duration, double h);

}  // namespace adpetc::sim
