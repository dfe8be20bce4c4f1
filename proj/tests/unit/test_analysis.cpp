#include "doctest.h"

#include <cmath>

#include "adpetc/analysis.hpp"
#include "adpetc/errors.hpp"
#include "support/fixtures.hpp"

using namespace adpetc;
using adpetc::num::Matrix;
using adpetc::num::Vector;
using adpetc::testing::Rng;

namespace {

struct Run {
    io::Scenario sc;
    design::DesignCertificate cert;
    riccati::RiccatiSolution ric;
    sim::Trace trace;
};

Run make_run(const io::Scenario& sc, const design::DesignOutcome& out) {
    Run r{sc, out.cert, {}, {}};
    const auto ham = riccati::build_hamiltonian(sc.aug, r.cert.params.rho, r.cert.params.gamma);
    r.ric = riccati::solve_p(ham, r.cert.p_h, r.cert.params.h, r.cert.riccati_grid);
    sim::SimOptions opts;
    opts.substeps = sc.config.substeps;
    r.trace = sim::simulate(sc.aug, r.cert.params, sc.disturbance, sc.config.duration, sc.initial,
                            opts);
    return r;
}

const Run& batch_run() {
    static const Run r = make_run(testing::batch_reactor(), testing::batch_reactor_design());
    return r;
}

const Run& toy_run() {
    static const Run r = make_run(testing::toy_scalar(), testing::toy_design());
    return r;
}

}  // namespace

TEST_CASE("Lyapunov function on and between grid points") {
    const auto& r = batch_run();
    CHECK(analysis::lyapunov_V(Vector::Zero(10), 0.02, r.ric) == 0.0);
    CHECK(analysis::lyapunov_W(Vector::Zero(10), 0.02, r.ric, 1.0) == 0.0);
    CHECK_THROWS_AS(analysis::lyapunov_V(Vector::Zero(3), 0.0, r.ric), DimensionError);

    Rng rng(71);
    const auto lb = riccati::lambda_bounds(r.ric);
    for (int trial = 0; trial < 500; ++trial) {
        const Vector x = rng.vector(10, 5.0);
        const std::size_t j = rng.index(0, r.ric.grid.size() - 1);
        const double vj = analysis::lyapunov_V(x, r.ric.grid[j], r.ric);
        CHECK(std::abs(vj - x.dot(r.ric.p[j] * x)) <= 1e-12 * std::max(1.0, vj));

        const double t = rng.uniform(0.0, r.cert.params.h);
        const double v = analysis::lyapunov_V(x, t, r.ric);
        CHECK(v >= lb.lambda_min * x.squaredNorm() * (1.0 - 1e-12));
        CHECK(v <= lb.lambda_max * x.squaredNorm() * (1.0 + 1e-12));
        const double inner = rng.uniform(0.0, 2.0 * v);
        CHECK(analysis::lyapunov_W(x, t, r.ric, inner) == doctest::Approx(std::max(0.0, v - inner)));
    }
}

TEST_CASE("performance signals respect the set nesting") {
    const auto& r = batch_run();
    const auto sets = analysis::SetSpec::from_certificate(r.cert);
    CHECK(sets.level == r.cert.params.a_level);
    CHECK(sets.inner > 0.0);
    CHECK(sets.inner <= sets.level);

    Rng rng(72);
    const Vector w = Vector::Constant(1, 0.3);
    for (int trial = 0; trial < 500; ++trial) {
        const Vector x = rng.vector(10, rng.log_uniform(1e-4, 10.0));
        const double t = rng.uniform(0.0, r.cert.params.h);
        const auto z = analysis::z_signals(r.sc.aug, r.ric, sets, x, t, w);
        const Vector zt = r.sc.aug.c_bar * x + r.sc.aug.d_bar * w;
        CHECK((z.z_tilde - zt).norm() == 0.0);
        const double v = analysis::lyapunov_V(x, t, r.ric);
        CHECK((z.z_a.norm() == 0.0) == (v <= sets.level || zt.norm() == 0.0));
        if (z.z_inner.norm() == 0.0) {
            CHECK(z.z_a.norm() == 0.0);
        }
        CHECK(z.z_a.norm() <= z.z_inner.norm());
    }
}

TEST_CASE("certified traces have no violations") {
    for (const Run* r : {&batch_run(), &toy_run()}) {
        const auto rep = analysis::certify_trace(r->trace, r->cert, r->sc.aug, r->ric,
                                                 r->sc.disturbance);
        CHECK(rep.clean());
        CHECK(rep.flow.checked > 0);
        CHECK(rep.ledger.checked > 0);
        CHECK(rep.w_bound.checked == r->trace.rows.size());
        CHECK(rep.z_integral <= rep.budget);
        CHECK(rep.w0 == analysis::lyapunov_W(r->trace.rows.front().xi, 0.0, r->ric,
                                             analysis::SetSpec::from_certificate(r->cert).inner));
        CHECK(rep.max_n_mu <= rep.mmu_bound);
        CHECK(rep.w_inf == r->sc.disturbance.sup_norm());
    }
    const auto rep = analysis::certify_trace(batch_run().trace, batch_run().cert,
                                             batch_run().sc.aug, batch_run().ric,
                                             batch_run().sc.disturbance);
    CHECK(rep.jump_monotonic.checked > 0);
}

TEST_CASE("injected violations are detected") {
    const auto& r = batch_run();

    SUBCASE("jump that increases V") {
        auto tr = r.trace;
        bool injected = false;
        for (std::size_t i = 1; i < tr.rows.size() && !injected; ++i) {
            if (tr.rows[i].phase == sim::Phase::post && tr.rows[i - 1].phase == sim::Phase::pre &&
                tr.rows[i - 1].xi.norm() > r.cert.params.varrho * tr.rows[i - 1].eta) {
                tr.rows[i].xi *= 10.0;
                injected = true;
            }
        }
        REQUIRE(injected);
        const auto rep = analysis::certify_trace(tr, r.cert, r.sc.aug, r.ric, r.sc.disturbance);
        CHECK(!rep.clean());
        CHECK(rep.jump_monotonic.count >= 1);
    }

    SUBCASE("flow segment that gains energy") {
        auto tr = r.trace;
        const std::size_t i = tr.rows.size() / 3;
        std::size_t hit = i;
        while (tr.rows[hit].phase != sim::Phase::flow) {
            ++hit;
        }
        tr.rows[hit].xi *= 50.0;
        const auto rep = analysis::certify_trace(tr, r.cert, r.sc.aug, r.ric, r.sc.disturbance);
        CHECK(rep.flow.count + rep.w_bound.count >= 1);
        CHECK(!rep.clean());
    }

    SUBCASE("quantizer message above the bit bound") {
        auto tr = r.trace;
        REQUIRE(!tr.events.empty());
        tr.events.front().m = static_cast<std::int64_t>(1e15);
        const auto rep = analysis::certify_trace(tr, r.cert, r.sc.aug, r.ric, r.sc.disturbance);
        CHECK(rep.mx_exceedances == 1);
        CHECK(!rep.clean());
    }

    SUBCASE("structurally broken traces") {
        auto tr = r.trace;
        // Drop the first pre-jump row so a post row follows a flow row.
        std::size_t pre = 0;
        while (tr.rows[pre].phase != sim::Phase::pre) {
            ++pre;
        }
        tr.rows.erase(tr.rows.begin() + static_cast<std::ptrdiff_t>(pre));
        CHECK_THROWS_AS(analysis::certify_trace(tr, r.cert, r.sc.aug, r.ric, r.sc.disturbance),
                        DomainError);
        sim::Trace empty;
        CHECK_THROWS_AS(analysis::certify_trace(empty, r.cert, r.sc.aug, r.ric, r.sc.disturbance),
                        DomainError);
        const auto base = sim::time_triggered_baseline(r.sc.aug, 0.05, r.sc.disturbance, 1.0,
                                                       r.sc.initial);
        CHECK_THROWS_AS(analysis::certify_trace(base, r.cert, r.sc.aug, r.ric, r.sc.disturbance),
                        DomainError);
    }
}

TEST_CASE("transmission statistics") {
    const auto sc = testing::batch_reactor();
    const auto& cert = testing::batch_reactor_design().cert;
    const auto base = sim::time_triggered_baseline(sc.aug, 0.05, sc.disturbance, 10.0, sc.initial);

    SUBCASE("silent loop") {
        sim::SimState zero = sc.initial;
        zero.xp.setZero();
        zero.xc.setZero();
        zero.y_hat.setZero();
        zero.v_hat.setZero();
        const auto quiet = sim::simulate(sc.aug, cert.params, sim::Disturbance::zero(1), 10.0, zero);
        const auto st = analysis::transmission_stats(quiet, base);
        CHECK(st.total_transmissions == 0);
        CHECK(st.baseline_total == 800);
        CHECK(st.baseline_sensor == 400);
        CHECK(st.reduction_total == 100.0);
        CHECK(st.reduction_sensor == 100.0);
        CHECK(st.share_m_le_8 == 0.0);
    }

    SUBCASE("near-lossless loop transmits at almost every sample") {
        auto params = cert.params;
        params.varrho = 1e9;
        params.eta_min = 1e-12;
        const auto busy = sim::simulate(sc.aug, params, sc.disturbance, 10.0, sc.initial);
        const auto st = analysis::transmission_stats(busy, base);
        // The controller output at the first sample only depends on held
        // values, which are exact at t = 0, so those channels stay silent once.
        CHECK(st.per_channel == std::vector<std::size_t>{200, 200, 199, 199});
        CHECK(st.sensor_transmissions == 400);
        CHECK(st.reduction_sensor == 0.0);
        CHECK(st.reduction_total == doctest::Approx(0.25));
        CHECK(st.max_interval[0] == doctest::Approx(0.05));
        CHECK(st.max_interval[2] == doctest::Approx(0.1));
    }

    SUBCASE("designed loop") {
        const auto tr = sim::simulate(sc.aug, cert.params, sc.disturbance, 10.0, sc.initial);
        const auto st = analysis::transmission_stats(tr, base);
        std::size_t sum = 0;
        for (auto c : st.per_channel) {
            sum += c;
        }
        CHECK(sum == st.total_transmissions);
        CHECK(st.total_transmissions == tr.events.size());
        std::size_t hist = 0;
        for (const auto& [bits, n] : st.bits_histogram) {
            CHECK(bits >= 1);
            hist += n;
        }
        CHECK(hist == tr.events.size());
        CHECK(st.share_m_le_8 <= st.share_m_le_128);
        const double want = 100.0 * (1.0 - static_cast<double>(st.sensor_transmissions) / 400.0);
        CHECK(st.reduction_sensor == doctest::Approx(want));
        CHECK(st.max_interval_all >= 0.05);
    }

    SUBCASE("mismatched horizons") {
        const auto shorter =
            sim::time_triggered_baseline(sc.aug, 0.05, sc.disturbance, 5.0, sc.initial);
        const auto tr = sim::simulate(sc.aug, cert.params, sc.disturbance, 10.0, sc.initial);
        CHECK_THROWS_AS(analysis::transmission_stats(tr, shorter), DomainError);
    }
}
