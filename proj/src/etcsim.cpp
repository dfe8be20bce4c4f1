#include "adpetc/etcsim.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "adpetc/errors.hpp"

namespace adpetc::sim {

int bits_for(std::int64_t m) {
    if (m < 1) {
        throw DomainError("bits_for: m must be >= 1");
    }
    return static_cast<int>(std::bit_width(static_cast<std::uint64_t>(m - 1))) + 1;
}

int bits_for_bound(double m) {
    if (!std::isfinite(m)) {
        throw DomainError("bits_for_bound: bound is not finite");
    }
    if (m <= 1.0) {
        return 1;
    }
    return static_cast<int>(std::ceil(std::log2(m))) + 1;
}

Vector SimState::xi_controller() const {
    Vector x(xc.size() + y_hat.size() + v_hat.size());
    x << xc, y_hat, v_hat;
    return x;
}

SimState state_from_xi(const Vector& xi, const model::Dims& dims) {
    if (static_cast<std::size_t>(xi.size()) != dims.nxi) {
        throw DimensionError("state_from_xi: xi has length " + std::to_string(xi.size()) +
                             ", expected " + std::to_string(dims.nxi));
    }
    SimState s;
    s.xp = xi.segment(0, static_cast<Eigen::Index>(dims.np));
    s.xc = xi.segment(dims.off_c(), static_cast<Eigen::Index>(dims.nc));
    s.y_hat = xi.segment(dims.off_y(), static_cast<Eigen::Index>(dims.ny));
    s.v_hat = xi.segment(dims.off_v(), static_cast<Eigen::Index>(dims.nv));
    return s;
}

Disturbance Disturbance::zero(std::size_t nw) {
    Disturbance d;
    d.nw_ = nw;
    return d;
}

Disturbance Disturbance::windowed_sine(std::size_t nw, double amplitude, double frequency,
                                       double t_a, double t_b) {
    if (!std::isfinite(amplitude) || !std::isfinite(frequency) || !std::isfinite(t_a) ||
        !std::isfinite(t_b) || t_b < t_a) {
        throw DomainError("windowed sine: parameters must be finite with t_a <= t_b");
    }
    Disturbance d;
    d.kind_ = Kind::windowed_sine;
    d.nw_ = nw;
    d.amplitude_ = amplitude;
    d.frequency_ = frequency;
    d.t_a_ = t_a;
    d.t_b_ = t_b;
    return d;
}

Disturbance Disturbance::piecewise(Matrix samples, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw DomainError("piecewise disturbance: dt must be finite and > 0");
    }
    num::require_finite(samples, "disturbance samples");
    Disturbance d;
    d.kind_ = Kind::piecewise;
    d.nw_ = static_cast<std::size_t>(samples.cols());
    d.samples_ = std::move(samples);
    d.dt_ = dt;
    return d;
}

Vector Disturbance::operator()(double t) const {
    const auto nw = static_cast<Eigen::Index>(nw_);
    switch (kind_) {
    case Kind::zero:
        return Vector::Zero(nw);
    case Kind::windowed_sine:
        if (t >= t_a_ && t <= t_b_) {
            return Vector::Constant(nw, amplitude_ * std::sin(2.0 * M_PI * frequency_ * t));
        }
        return Vector::Zero(nw);
    case Kind::piecewise: {
        if (t < 0.0) {
            return Vector::Zero(nw);
        }
        const auto j = static_cast<Eigen::Index>(std::floor(t / dt_));
        if (j >= samples_.rows()) {
            return Vector::Zero(nw);
        }
        return samples_.row(j).transpose();
    }
    }
    return Vector::Zero(nw);
}

double Disturbance::sup_norm() const {
    switch (kind_) {
    case Kind::zero:
        return 0.0;
    case Kind::windowed_sine:
        return std::abs(amplitude_) * std::sqrt(static_cast<double>(nw_));
    case Kind::piecewise:
        return samples_.rows() == 0 ? 0.0 : samples_.rowwise().norm().maxCoeff();
    }
    return 0.0;
}

Vector local_thresholds(double eta, const model::ThetaAllocation& theta) {
    if (!(eta > 0.0)) {
        throw DomainError("local_thresholds: eta must be > 0");
    }
    const Vector& th = theta.values();
    return (th.array() * eta).square().matrix();
}

Vector plant_controller_outputs(const SimState& s, const model::AugmentedSystem& aug) {
    Vector u(static_cast<Eigen::Index>(aug.dims.nu));
    const auto ny = static_cast<Eigen::Index>(aug.dims.ny);
    u.head(ny) = aug.plant.c * s.xp;
    u.tail(static_cast<Eigen::Index>(aug.dims.nv)) = aug.ctrl.c * s.xc + aug.ctrl.d * s.y_hat;
    return u;
}

namespace {

Vector held_values(const SimState& s) {
    Vector uh(s.y_hat.size() + s.v_hat.size());
    uh << s.y_hat, s.v_hat;
    return uh;
}

}  // namespace

model::EventIndexSet evaluate_events(const SimState& s, const model::AugmentedSystem& aug,
                                     const model::ThetaAllocation& theta) {
    const Vector u = plant_controller_outputs(s, aug);
    const Vector uh = held_values(s);
    model::EventIndexSet j(aug.dims.nu);
    for (std::size_t i = 0; i < aug.dims.nu; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        if (std::abs(uh(ii) - u(ii)) >= theta[i] * s.eta) {
            j.insert(i);
        }
    }
    return j;
}

double decode_update(double u_prev, std::int64_t m, int sign, double q) {
    return u_prev - static_cast<double>(sign) * (static_cast<double>(m) * q);
}

QuantizeResult quantize_update(double u_prev, double u, double q) {
    if (!(q > 0.0) || !std::isfinite(q)) {
        throw DomainError("quantize_update: quantum must be finite and > 0");
    }
    const double d = u_prev - u;
    const double ad = std::abs(d);
    if (!(ad >= q)) {
        throw DomainError("quantize_update: channel did not trigger (|u_prev - u| < q)");
    }
    const double ratio = std::floor(ad / q);
    if (!(ratio < 4.0e18)) {
        throw DomainError("quantize_update: step count overflows");
    }
    QuantizeResult r;
    r.sign = d > 0.0 ? 1 : -1;
    r.m = std::max<std::int64_t>(1, static_cast<std::int64_t>(ratio));
    r.u_new = decode_update(u_prev, r.m, r.sign, q);
    // floor(ad / q) can land one short after rounding.
    while (std::abs(r.u_new - u) >= q) {
        ++r.m;
        r.u_new = decode_update(u_prev, r.m, r.sign, q);
    }
    return r;
}

ThresholdResult threshold_update(const Vector& xi_controller, double mu, double eta_min,
                                 double varrho) {
    if (!(mu > 0.0 && mu < 1.0)) {
        throw DomainError("threshold_update: mu must lie in (0, 1)");
    }
    if (!(eta_min > 0.0) || !(varrho > 0.0)) {
        throw DomainError("threshold_update: eta_min and varrho must be > 0");
    }
    const double norm = xi_controller.norm();
    ThresholdResult r;
    r.n_mu = 0;
    if (norm > 0.0) {
        const double v = std::ceil(-std::log(norm / (varrho * eta_min)) / std::log(mu) - 1.0);
        r.n_mu = v > 0.0 ? static_cast<std::int64_t>(v) : 0;
    }
    auto eta_of = [&](std::int64_t n) { return eta_min * std::pow(mu, -static_cast<double>(n)); };
    // Repair rounding in the logarithm against the exact sandwich.
    for (int guard = 0; guard < 64; ++guard) {
        if (r.n_mu > 0 && varrho * eta_of(r.n_mu) >= norm) {
            --r.n_mu;
        } else if (norm > varrho * eta_of(r.n_mu) / mu) {
            ++r.n_mu;
        } else {
            break;
        }
    }
    r.eta = eta_of(r.n_mu);
    return r;
}

FlowPropagator::FlowPropagator(const model::AugmentedSystem& aug, double dt) : dt_(dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw DomainError("FlowPropagator: dt must be finite and > 0");
    }
    const auto np = static_cast<Eigen::Index>(aug.dims.np);
    const auto nv = static_cast<Eigen::Index>(aug.dims.nv);
    const auto nw = static_cast<Eigen::Index>(aug.dims.nw);
    Matrix m = Matrix::Zero(np + nv + nw, np + nv + nw);
    m.block(0, 0, np, np) = aug.plant.a;
    m.block(0, np, np, nv) = aug.plant.b;
    m.block(0, np + nv, np, nw) = aug.plant.e;
    const Matrix phi = num::expm(m, dt);
    phi_x_ = phi.block(0, 0, np, np);
    phi_v_ = phi.block(0, np, np, nv);
    phi_w_ = phi.block(0, np + nv, np, nw);
}

Vector FlowPropagator::step(const Vector& xp, const Vector& v_hat, const Vector& w) const {
    return phi_x_ * xp + phi_v_ * v_hat + phi_w_ * w;
}

SimState flow_step(const SimState& s, const FlowPropagator& prop, const Disturbance& w, double h,
                   std::size_t substeps, std::vector<SimState>* samples) {
    if (substeps < 1) {
        throw DomainError("flow_step: need at least one substep");
    }
    const double dt = h / static_cast<double>(substeps);
    if (std::abs(dt - prop.dt()) > 1e-15 * h) {
        throw DomainError("flow_step: propagator step does not match h / substeps");
    }
    SimState out = s;
    const double t0 = s.t;
    for (std::size_t j = 0; j < substeps; ++j) {
        const double mid = t0 + (static_cast<double>(j) + 0.5) * dt;
        out.xp = prop.step(out.xp, out.v_hat, w(mid));
        out.tau = static_cast<double>(j + 1) * dt;
        out.t = t0 + out.tau;
        if (samples != nullptr && j + 1 < substeps) {
            samples->push_back(out);
        }
    }
    out.tau = h;
    out.t = t0 + h;
    return out;
}

SimState flow_step(const SimState& s, const model::AugmentedSystem& aug, const Disturbance& w,
                   double h, std::size_t substeps, std::vector<SimState>* samples) {
    if (substeps < 1) {
        throw DomainError("flow_step: need at least one substep");
    }
    const FlowPropagator prop(aug, h / static_cast<double>(substeps));
    return flow_step(s, prop, w, h, substeps, samples);
}

JumpResult jump(const SimState& s, const model::AugmentedSystem& aug,
                const design::DesignParams& params, std::size_t k) {
    const auto& d = aug.dims;
    const auto ny = static_cast<Eigen::Index>(d.ny);
    const auto nv = static_cast<Eigen::Index>(d.nv);
    if (params.theta.size() != d.nu) {
        throw DimensionError("jump: theta does not match the channel count");
    }

    // Everything below reads the pre-jump state; v uses the old xc and y_hat.
    const Vector u = plant_controller_outputs(s, aug);
    const Vector uh = held_values(s);
    JumpResult r;
    r.events = model::EventIndexSet(d.nu);
    r.eps_y = Vector::Zero(ny);
    r.eps_v = Vector::Zero(nv);
    Vector uh_new = uh;
    for (std::size_t i = 0; i < d.nu; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double q = params.theta[i] * s.eta;
        if (!(std::abs(uh(ii) - u(ii)) >= q)) {
            continue;
        }
        r.events.insert(i);
        const auto qr = quantize_update(uh(ii), u(ii), q);
        uh_new(ii) = qr.u_new;
        const double eps = (qr.u_new - u(ii)) / q;
        if (ii < ny) {
            r.eps_y(ii) = eps;
        } else {
            r.eps_v(ii - ny) = eps;
        }
        EventRecord rec;
        rec.t = s.t;
        rec.k = k;
        rec.channel = i;
        rec.m = qr.m;
        rec.sign = qr.sign;
        rec.bits = bits_for(qr.m);
        rec.sensor = ii < ny;
        rec.u_prev = uh(ii);
        rec.u_new = qr.u_new;
        rec.q = q;
        r.records.push_back(rec);
    }

    SimState n = s;
    n.y_hat = uh_new.head(ny);
    n.v_hat = uh_new.tail(nv);
    n.xc = aug.ctrl.a * s.xc + aug.ctrl.b * n.y_hat;
    const auto thr =
        threshold_update(n.xi_controller(), params.mu, params.eta_min, params.varrho);
    n.eta = thr.eta;
    n.tau = 0.0;
    r.n_mu = thr.n_mu;
    r.state = std::move(n);
    return r;
}

std::size_t sample_count(double duration, double h) {
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw DomainError("sample_count: h must be finite and > 0");
    }
    if (!(duration > 0.0) || !std::isfinite(duration)) {
        throw DomainError("sample_count: duration must be finite and > 0");
    }
    const double r = duration / h;
    const double k = std::round(r);
    if (k < 1.0 || std::abs(k - r) > 1e-9 * std::max(1.0, r)) {
        throw DomainError("duration " + std::to_string(duration) +
                          " is not a whole number of samples of h = " + std::to_string(h));
    }
    return static_cast<std::size_t>(k);
}

namespace {

void check_initial(const SimState& s, const model::Dims& d) {
    if (static_cast<std::size_t>(s.xp.size()) != d.np ||
        static_cast<std::size_t>(s.xc.size()) != d.nc ||
        static_cast<std::size_t>(s.y_hat.size()) != d.ny ||
        static_cast<std::size_t>(s.v_hat.size()) != d.nv) {
        throw DimensionError("initial state blocks do not match the model dimensions");
    }
    num::require_finite(s.xi(), "initial state");
}

TraceRow make_row(const SimState& s, std::size_t k, Phase phase, const Disturbance& w) {
    TraceRow row;
    row.t = s.t;
    row.k = k;
    row.phase = phase;
    row.tau = s.tau;
    row.xi = s.xi();
    row.eta = s.eta;
    row.w = w(s.t);
    return row;
}

template <typename JumpFn>
Trace run(const model::AugmentedSystem& aug, double h, const Disturbance& w, double duration,
          SimState state, const SimOptions& opts, JumpFn&& jump_fn) {
    if (w.dim() != aug.dims.nw) {
        throw DimensionError("disturbance dimension does not match the plant E");
    }
    if (opts.substeps < 1) {
        throw DomainError("simulate: need at least one substep");
    }
    const std::size_t samples = sample_count(duration, h);
    const FlowPropagator prop(aug, h / static_cast<double>(opts.substeps));

    Trace tr;
    tr.h = h;
    tr.duration = duration;
    tr.samples = samples;
    tr.nu = aug.dims.nu;
    tr.ny = aug.dims.ny;
    std::vector<SimState> sub;
    for (std::size_t k = 1; k <= samples; ++k) {
        sub.clear();
        state = flow_step(state, prop, w, h, opts.substeps, opts.record_flow ? &sub : nullptr);
        for (const auto& fs : sub) {
            tr.rows.push_back(make_row(fs, k - 1, Phase::flow, w));
        }
        state.t = static_cast<double>(k) * h;
        tr.rows.push_back(make_row(state, k, Phase::pre, w));
        state = jump_fn(state, k, tr);
        state.t = static_cast<double>(k) * h;
    }
    return tr;
}

}  // namespace

Trace simulate(const model::AugmentedSystem& aug, const design::DesignParams& params,
               const Disturbance& w, double duration, const SimState& initial,
               const SimOptions& opts) {
    params.validate();
    check_initial(initial, aug.dims);
    SimState s0 = initial;
    s0.t = 0.0;
    s0.tau = 0.0;
    const auto thr = threshold_update(s0.xi_controller(), params.mu, params.eta_min,
                                      params.varrho);
    s0.eta = thr.eta;

    auto jump_fn = [&](const SimState& s, std::size_t k, Trace& tr) {
        auto jr = jump(s, aug, params, k);
        for (auto& rec : jr.records) {
            rec.t = s.t;
            tr.events.push_back(rec);
        }
        TraceRow row = make_row(jr.state, k, Phase::post, w);
        row.t = s.t;
        row.events = jr.events.mask();
        row.n_mu = jr.n_mu;
        tr.rows.push_back(std::move(row));
        return jr.state;
    };

    TraceRow first = make_row(s0, 0, Phase::post, w);
    first.n_mu = thr.n_mu;
    Trace tr = run(aug, params.h, w, duration, s0, opts, jump_fn);
    tr.rows.insert(tr.rows.begin(), std::move(first));
    return tr;
}

Trace time_triggered_baseline(const model::AugmentedSystem& aug, double h, const Disturbance& w,
                              double duration, const SimState& initial, const SimOptions& opts) {
    check_initial(initial, aug.dims);
    SimState s0 = initial;
    s0.t = 0.0;
    s0.tau = 0.0;
    s0.eta = 0.0;
    const auto all = model::EventIndexSet::all(aug.dims.nu).mask();
    const auto ny = static_cast<Eigen::Index>(aug.dims.ny);
    const auto nv = static_cast<Eigen::Index>(aug.dims.nv);

    auto jump_fn = [&](const SimState& s, std::size_t k, Trace& tr) {
        const Vector u = plant_controller_outputs(s, aug);
        SimState n = s;
        n.y_hat = u.head(ny);
        n.v_hat = u.tail(nv);
        n.xc = aug.ctrl.a * s.xc + aug.ctrl.b * n.y_hat;
        n.tau = 0.0;
        TraceRow row = make_row(n, k, Phase::post, w);
        row.events = all;
        tr.rows.push_back(std::move(row));
        return n;
    };
    Trace tr = run(aug, h, w, duration, s0, opts, jump_fn);
    tr.rows.insert(tr.rows.begin(), make_row(s0, 0, Phase::post, w));
    tr.baseline = true;
    return tr;
}

}  // namespace adpetc::sim
