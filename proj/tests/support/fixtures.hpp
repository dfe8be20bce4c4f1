#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.
// The oracles deliberately avoid the library code paths they check.

#include <cmath>
#include <cstddef>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "adpetc/lmidesign.hpp"
#include "adpetc/persistence.hpp"
#include "adpetc/riccati.hpp"
#include "adpetc/sysmodel.hpp"

#ifndef ADPETC_SOURCE_DIR
#error "ADPETC_SOURCE_DIR must point at the repository root"
#endif

namespace adpetc::testing {

using num::Matrix;
using num::Vector;

inline std::string source_path(const std::string& rel) {
    return std::string(ADPETC_SOURCE_DIR) + "/" + rel;
}

inline io::Scenario load_scenario(const std::string& name) {
    return io::build_scenario(io::load_config(source_path("configs/" + name)));
}

inline io::Scenario batch_reactor() { return load_scenario("batch_reactor.json"); }
inline io::Scenario toy_scalar() { return load_scenario("toy_scalar.json"); }

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform(double lo = -1.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }
    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }
    std::size_t index(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(gen_);
    }
    Matrix matrix(Eigen::Index r, Eigen::Index c, double scale = 1.0) {
        Matrix m(r, c);
        for (Eigen::Index i = 0; i < r; ++i) {
            for (Eigen::Index j = 0; j < c; ++j) {
                m(i, j) = scale * uniform();
            }
        }
        return m;
    }
    Vector vector(Eigen::Index n, double scale = 1.0) { return matrix(n, 1, scale); }
    Matrix symmetric(Eigen::Index n, double scale = 1.0) {
        const Matrix a = matrix(n, n, scale);
        return 0.5 * (a + a.transpose());
    }
    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

struct RandomModel {
    model::AugmentedSystem aug;
    model::ThetaAllocation theta;
};

inline RandomModel random_model(Rng& rng, std::size_t np, std::size_t nc, std::size_t ny,
                                std::size_t nv, std::size_t nw = 1, std::size_t nz = 1) {
    const auto i = [](std::size_t v) { return static_cast<Eigen::Index>(v); };
    model::PlantModel p{rng.matrix(i(np), i(np)), rng.matrix(i(np), i(nv)),
                        rng.matrix(i(np), i(nw)), rng.matrix(i(ny), i(np))};
    model::ControllerModel c{rng.matrix(i(nc), i(nc), 0.5), rng.matrix(i(nc), i(ny)),
                             rng.matrix(i(nv), i(nc)), rng.matrix(i(nv), i(ny))};
    const std::size_t nxi = np + nc + ny + nv;
    RandomModel out;
    out.aug = model::build_augmented(p, c, rng.matrix(i(nz), i(nxi)), Matrix::Zero(i(nz), i(nw)));
    Vector th(i(ny + nv));
    for (Eigen::Index k = 0; k < th.size(); ++k) {
        th(k) = rng.uniform(0.1, 1.0);
    }
    out.theta = model::ThetaAllocation(th);
    return out;
}

// Straight-line jump: every channel decides on the pre-jump values, triggered
// channels move by whole quanta toward their target, the controller then steps
// with the refreshed sensor values. Returns xi+ before the threshold update
// together with the normalized quantization errors.
struct ComponentwiseJump {
    Vector xi_next;
    Vector eps_y;
    Vector eps_v;
    std::vector<bool> triggered;
};

inline ComponentwiseJump componentwise_jump(const model::AugmentedSystem& aug,
                                            const model::ThetaAllocation& theta, const Vector& xi,
                                            double eta) {
    const auto& d = aug.dims;
    const auto& pl = aug.plant;
    const auto& ct = aug.ctrl;
    const int np = static_cast<int>(d.np), nc = static_cast<int>(d.nc);
    const int ny = static_cast<int>(d.ny), nv = static_cast<int>(d.nv);
    const int oc = np, oy = np + nc, ov = np + nc + ny;

    std::vector<double> y(ny, 0.0), v(nv, 0.0);
    for (int r = 0; r < ny; ++r) {
        for (int k = 0; k < np; ++k) {
            y[r] += pl.c(r, k) * xi(k);
        }
    }
    for (int r = 0; r < nv; ++r) {
        for (int k = 0; k < nc; ++k) {
            v[r] += ct.c(r, k) * xi(oc + k);
        }
        for (int k = 0; k < ny; ++k) {
            v[r] += ct.d(r, k) * xi(oy + k);
        }
    }

    ComponentwiseJump out;
    out.xi_next = xi;
    out.eps_y = Vector::Zero(ny);
    out.eps_v = Vector::Zero(nv);
    out.triggered.assign(static_cast<std::size_t>(ny + nv), false);
    auto update = [&](double held, double target, double q, double& eps, bool& fired) {
        const double diff = held - target;
        if (std::fabs(diff) < q) {
            return held;
        }
        fired = true;
        const double steps = std::floor(std::fabs(diff) / q);
        const double moved = diff > 0 ? held - steps * q : held + steps * q;
        eps = (moved - target) / q;
        return moved;
    };
    for (int r = 0; r < ny; ++r) {
        const double q = theta[static_cast<std::size_t>(r)] * eta;
        bool fired = false;
        out.xi_next(oy + r) = update(xi(oy + r), y[r], q, out.eps_y(r), fired);
        out.triggered[static_cast<std::size_t>(r)] = fired;
    }
    for (int r = 0; r < nv; ++r) {
        const double q = theta[static_cast<std::size_t>(ny + r)] * eta;
        bool fired = false;
        out.xi_next(ov + r) = update(xi(ov + r), v[r], q, out.eps_v(r), fired);
        out.triggered[static_cast<std::size_t>(ny + r)] = fired;
    }
    for (int r = 0; r < nc; ++r) {
        double acc = 0.0;
        for (int k = 0; k < nc; ++k) {
            acc += ct.a(r, k) * xi(oc + k);
        }
        for (int k = 0; k < ny; ++k) {
            acc += ct.b(r, k) * out.xi_next(oy + k);
        }
        out.xi_next(oc + r) = acc;
    }
    return out;
}

// Riccati right-hand side written out from the model matrices.
inline Matrix riccati_rhs_oracle(const model::AugmentedSystem& aug, double rho, double gamma,
                                 const Matrix& p) {
    const Matrix& a = aug.a_bar;
    const Matrix& b = aug.b_bar;
    const Matrix& c = aug.c_bar;
    const Matrix& dd = aug.d_bar;
    const double g2 = 1.0 / (gamma * gamma);
    const auto nw = dd.cols();
    const Matrix m = (Matrix::Identity(nw, nw) - g2 * dd.transpose() * dd).inverse();
    const Matrix g = b.transpose() * p + g2 * dd.transpose() * c;
    const Matrix r = -a.transpose() * p - p * a - 2.0 * rho * p - g2 * c.transpose() * c -
                     g.transpose() * m * g;
    return 0.5 * (r + r.transpose());
}

// Classical RK4 on the Riccati equation from r = h down to r = 0.
inline Matrix rk4_riccati_p0(const model::AugmentedSystem& aug, double rho, double gamma,
                             const Matrix& p_h, double h, int steps) {
    Matrix p = p_h;
    const double dr = -h / steps;
    for (int s = 0; s < steps; ++s) {
        const Matrix k1 = riccati_rhs_oracle(aug, rho, gamma, p);
        const Matrix k2 = riccati_rhs_oracle(aug, rho, gamma, p + 0.5 * dr * k1);
        const Matrix k3 = riccati_rhs_oracle(aug, rho, gamma, p + 0.5 * dr * k2);
        const Matrix k4 = riccati_rhs_oracle(aug, rho, gamma, p + dr * k3);
        p += dr / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return p;
}

// Eigen's own solver as the reference for the Jacobi kernels.
inline Vector reference_eigenvalues(const Matrix& s) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()));
    return es.eigenvalues();
}

inline Matrix reference_psd_project(const Matrix& s, double margin) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()));
    const Vector clipped = es.eigenvalues().cwiseMax(margin);
    return es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
}

inline Matrix symplectic_form(Eigen::Index n) {
    Matrix js = Matrix::Zero(2 * n, 2 * n);
    js.topRightCorner(n, n) = Matrix::Identity(n, n);
    js.bottomLeftCorner(n, n) = -Matrix::Identity(n, n);
    return js;
}

inline double rel_diff(const Matrix& a, const Matrix& b) {
    return (a - b).norm() / std::max(1.0, b.norm());
}

// Designs the batch reactor once per process; the certificate is reused by
// several test cases.
inline const design::DesignOutcome& batch_reactor_design() {
    static const design::DesignOutcome out = [] {
        const auto sc = batch_reactor();
        auto res = design::synthesize(sc.aug, sc.design_request());
        res.cert.model_hash = io::model_hash(sc.aug);
        return res;
    }();
    return out;
}

inline const design::DesignOutcome& toy_design() {
    static const design::DesignOutcome out = [] {
        const auto sc = toy_scalar();
        auto res = design::synthesize(sc.aug, sc.design_request());
        res.cert.model_hash = io::model_hash(sc.aug);
        return res;
    }();
    return out;
}

}  // namespace adpetc::testing
