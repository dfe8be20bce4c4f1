#include "adpetc/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "adpetc/errors.hpp"

namespace adpetc::analysis {

SetSpec SetSpec::from_certificate(const design::DesignCertificate& cert) {
    SetSpec s;
    s.level = cert.params.a_level;
    s.inner = design::inner_level(cert.lambda_max, cert.varrho_bar, cert.params.eta_min);
    return s;
}

double lyapunov_V(const Vector& x, double r, const riccati::RiccatiSolution& ric) {
    const Matrix p = ric.p_at(r);
    if (x.size() != p.rows()) {
        throw DimensionError("lyapunov_V: state has the wrong length");
    }
    return std::max(0.0, x.dot(p * x));
}

double lyapunov_W(const Vector& x, double r, const riccati::RiccatiSolution& ric, double inner) {
    return std::max(0.0, lyapunov_V(x, r, ric) - inner);
}

ZSignals z_signals(const model::AugmentedSystem& aug, const riccati::RiccatiSolution& ric,
                   const SetSpec& sets, const Vector& x, double r, const Vector& w) {
    ZSignals z;
    z.z_tilde = aug.c_bar * x + aug.d_bar * w;
    const double v = lyapunov_V(x, r, ric);
    z.z_a = v <= sets.level ? Vector::Zero(z.z_tilde.size()) : z.z_tilde;
    z.z_inner = v <= sets.inner ? Vector::Zero(z.z_tilde.size()) : z.z_tilde;
    return z;
}

void Violations::record(double excess) {
    ++count;
    worst = std::max(worst, excess);
}

bool PerformanceReport::clean() const {
    return jump_monotonic.count == 0 && flow.count == 0 && landing.count == 0 &&
           ledger.count == 0 && w_bound.count == 0 && state_bound.count == 0 &&
           mx_exceedances == 0 && mmu_exceedances == 0;
}

PerformanceReport certify_trace(const sim::Trace& trace, const design::DesignCertificate& cert,
                                const model::AugmentedSystem& aug,
                                const riccati::RiccatiSolution& ric, const sim::Disturbance& w,
                                const CertifyOptions& opts) {
    if (trace.rows.empty()) {
        throw DomainError("certify_trace: empty trace");
    }
    if (trace.baseline) {
        throw DomainError("certify_trace: baseline traces carry no certificate");
    }
    const auto& p = cert.params;
    const SetSpec sets = SetSpec::from_certificate(cert);
    const double g2 = p.gamma * p.gamma;
    const double h = p.h;

    PerformanceReport rep;
    const auto& rows = trace.rows;
    rep.w0 = lyapunov_W(rows.front().xi, 0.0, ric, sets.inner);
    rep.w_inf = w.sup_norm();
    const double w_cap = rep.w0 + rep.w_inf * rep.w_inf / (2.0 * p.rho);
    const double x_cap = (w_cap + sets.inner) / cert.lambda_min;
    rep.mx_bound = design::bound_mx(cert, rep.w0, rep.w_inf);
    rep.mmu_bound = design::bound_mmu(cert, rep.w0, rep.w_inf);
    const Vector mx_channels = design::bound_mx_channels(cert, rep.w0, rep.w_inf);

    auto r_of = [&](const sim::TraceRow& row) { return std::clamp(row.tau, 0.0, h); };
    auto bound_checks = [&](const sim::TraceRow& row) {
        const double wv = lyapunov_W(row.xi, r_of(row), ric, sets.inner);
        ++rep.w_bound.checked;
        if (wv > w_cap * (1.0 + 1e-9) + 1e-12) {
            rep.w_bound.record(wv - w_cap);
        }
        const double x2 = row.xi.squaredNorm();
        ++rep.state_bound.checked;
        if (x2 > x_cap * (1.0 + 1e-9) + 1e-12) {
            rep.state_bound.record(x2 - x_cap);
        }
    };
    bound_checks(rows.front());
    rep.max_n_mu = rows.front().n_mu;
    if (rows.front().n_mu > rep.mmu_bound) {
        ++rep.mmu_exceedances;
    }

    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& a = rows[i - 1];
        const auto& b = rows[i];
        bound_checks(b);
        if (b.phase == sim::Phase::post) {
            if (a.phase != sim::Phase::pre) {
                throw DomainError("certify_trace: post-jump row without a pre-jump row");
            }
            const double v_pre = lyapunov_V(a.xi, h, ric);
            const double v_post = lyapunov_V(b.xi, 0.0, ric);
            if (a.xi.norm() > p.varrho * a.eta) {
                ++rep.jump_monotonic.checked;
                const double excess = v_post - v_pre;
                if (excess > opts.jump_tol * std::max(1.0, v_pre)) {
                    rep.jump_monotonic.record(excess);
                }
            }
            if (v_pre <= sets.inner) {
                ++rep.landing.checked;
                const double excess = v_post - sets.inner;
                if (excess > opts.jump_tol * std::max(1.0, sets.inner)) {
                    rep.landing.record(excess);
                }
            }
            rep.max_n_mu = std::max(rep.max_n_mu, b.n_mu);
            if (b.n_mu > rep.mmu_bound) {
                ++rep.mmu_exceedances;
            }
            continue;
        }

        // Flow segment between consecutive sub-samples.
        const double dt = b.t - a.t;
        if (!(dt > 0.0)) {
            throw DomainError("certify_trace: trace times are not increasing");
        }
        const Vector wm = w(0.5 * (a.t + b.t));
        const double ra = r_of(a);
        const double rb = r_of(b);
        const double va = lyapunov_V(a.xi, ra, ric);
        const double vb = lyapunov_V(b.xi, rb, ric);
        const Vector za = aug.c_bar * a.xi + aug.d_bar * wm;
        const Vector zb = aug.c_bar * b.xi + aug.d_bar * wm;
        const double ww = wm.squaredNorm();

        if (va > sets.inner && vb > sets.inner) {
            ++rep.flow.checked;
            const double wa = va - sets.inner;
            const double wb = vb - sets.inner;
            const double fa = -2.0 * p.rho * wa - za.squaredNorm() / g2;
            const double fb = -2.0 * p.rho * wb - zb.squaredNorm() / g2;
            const double rhs = 0.5 * dt * (fa + fb) + dt * ww;
            const double excess = (wb - wa) - rhs;
            if (excess > opts.flow_tol * (va + vb)) {
                rep.flow.record(excess);
            }
        }

        const double qa = va > sets.level ? za.squaredNorm() : 0.0;
        const double qb = vb > sets.level ? zb.squaredNorm() : 0.0;
        rep.z_integral += 0.5 * dt * (qa + qb);
        rep.w_integral += dt * ww;
        ++rep.ledger.checked;
        const double budget = g2 * (rep.w0 + rep.w_integral);
        const double excess = rep.z_integral - budget;
        if (excess > 1e-9 * std::max(1.0, budget)) {
            rep.ledger.record(excess);
        }
    }
    rep.budget = g2 * (rep.w0 + rep.w_integral);

    for (const auto& ev : trace.events) {
        if (static_cast<double>(ev.m) > mx_channels(static_cast<Eigen::Index>(ev.channel))) {
            ++rep.mx_exceedances;
        }
    }
    return rep;
}

TransmissionStats transmission_stats(const sim::Trace& trace, const sim::Trace& baseline) {
    if (trace.samples != baseline.samples || std::abs(trace.h - baseline.h) > 1e-12 ||
        trace.nu != baseline.nu) {
        throw DomainError("transmission_stats: trace and baseline cover different horizons");
    }
    TransmissionStats st;
    st.samples = trace.samples;
    st.per_channel.assign(trace.nu, 0);
    st.max_interval.assign(trace.nu, 0.0);
    const std::uint32_t sensor_mask =
        trace.ny >= 32 ? ~std::uint32_t{0} : ((std::uint32_t{1} << trace.ny) - 1U);

    for (const auto& row : baseline.rows) {
        if (row.phase == sim::Phase::post && row.k >= 1) {
            st.baseline_total += static_cast<std::size_t>(std::popcount(row.events));
            st.baseline_sensor += static_cast<std::size_t>(std::popcount(row.events & sensor_mask));
        }
    }

    std::vector<std::size_t> last(trace.nu, 0);
    std::vector<std::size_t> gap(trace.nu, 0);
    std::size_t le8 = 0;
    std::size_t le128 = 0;
    for (const auto& ev : trace.events) {
        ++st.per_channel[ev.channel];
        ++st.total_transmissions;
        if (ev.sensor) {
            ++st.sensor_transmissions;
        }
        gap[ev.channel] = std::max(gap[ev.channel], ev.k - last[ev.channel]);
        last[ev.channel] = ev.k;
        ++st.bits_histogram[ev.bits];
        st.max_m = std::max(st.max_m, ev.m);
        le8 += ev.m <= 8 ? 1U : 0U;
        le128 += ev.m <= 128 ? 1U : 0U;
    }
    for (std::size_t i = 0; i < trace.nu; ++i) {
        st.max_interval[i] = static_cast<double>(gap[i]) * trace.h;
        st.max_interval_all = std::max(st.max_interval_all, st.max_interval[i]);
    }
    auto pct = [](std::size_t used, std::size_t base) {
        return base == 0 ? 0.0
                         : 100.0 * (1.0 - static_cast<double>(used) / static_cast<double>(base));
    };
    st.reduction_sensor = pct(st.sensor_transmissions, st.baseline_sensor);
    st.reduction_total = pct(st.total_transmissions, st.baseline_total);
    if (!trace.events.empty()) {
        const auto n = static_cast<double>(trace.events.size());
        st.share_m_le_8 = static_cast<double>(le8) / n;
        st.share_m_le_128 = static_cast<double>(le128) / n;
    }
    return st;
}

}  // namespace adpetc::analysis
