#include "adpetc/sysmodel.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "adpetc/errors.hpp"

namespace adpetc::model {

namespace {

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void expect_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols) {
        throw DimensionError(std::string(name) + " has shape " + shape(m) + ", expected " +
                             std::to_string(rows) + "x" + std::to_string(cols));
    }
    num::require_finite(m, name);
}

}  // namespace

void PlantModel::validate() const {
    if (a.rows() == 0) {
        throw DimensionError("plant A is empty");
    }
    const Eigen::Index np = a.rows();
    expect_shape(a, np, np, "plant A");
    if (b.cols() == 0 || e.cols() == 0 || c.rows() == 0) {
        throw DimensionError("plant B, E and C must be non-empty");
    }
    expect_shape(b, np, b.cols(), "plant B");
    expect_shape(e, np, e.cols(), "plant E");
    expect_shape(c, c.rows(), np, "plant C");
}

void ControllerModel::validate() const {
    if (a.rows() == 0) {
        throw DimensionError("controller A is empty");
    }
    const Eigen::Index nc = a.rows();
    expect_shape(a, nc, nc, "controller A");
    if (b.cols() == 0 || c.rows() == 0) {
        throw DimensionError("controller B and C must be non-empty");
    }
    expect_shape(b, nc, b.cols(), "controller B");
    expect_shape(c, c.rows(), nc, "controller C");
    expect_shape(d, c.rows(), b.cols(), "controller D");
}

ThetaAllocation::ThetaAllocation(Vector raw) : raw_(std::move(raw)) {
    if (raw_.size() == 0) {
        throw DimensionError("theta: empty allocation");
    }
    num::require_finite(raw_, "theta");
    for (Eigen::Index i = 0; i < raw_.size(); ++i) {
        if (!(raw_(i) > 0.0)) {
            throw DomainError("theta: every entry must be strictly positive");
        }
    }
    normalized_ = raw_ / raw_.norm();
}

EventIndexSet::EventIndexSet(std::size_t channels, std::uint32_t mask)
    : channels_(channels), mask_(mask) {
    if (channels > kMaxChannels) {
        throw DomainError("EventIndexSet: at most 32 channels supported");
    }
    if (channels < kMaxChannels && (mask >> channels) != 0U) {
        throw DomainError("EventIndexSet: mask has bits beyond the channel count");
    }
}

EventIndexSet::EventIndexSet(std::size_t channels, std::initializer_list<std::size_t> members)
    : EventIndexSet(channels) {
    for (const auto i : members) {
        insert(i);
    }
}

EventIndexSet EventIndexSet::all(std::size_t channels) {
    const std::uint32_t mask =
        channels == kMaxChannels ? ~std::uint32_t{0} : ((std::uint32_t{1} << channels) - 1U);
    return EventIndexSet(channels, mask);
}

bool EventIndexSet::contains(std::size_t i) const {
    if (i >= channels_) {
        throw DomainError("EventIndexSet: channel index " + std::to_string(i) + " out of range");
    }
    return ((mask_ >> i) & 1U) != 0U;
}

void EventIndexSet::insert(std::size_t i) {
    if (i >= channels_) {
        throw DomainError("EventIndexSet: channel index " + std::to_string(i) + " out of range");
    }
    mask_ |= (std::uint32_t{1} << i);
}

EventIndexSet EventIndexSet::complement() const {
    return EventIndexSet(channels_, all(channels_).mask_ & ~mask_);
}

std::size_t EventIndexSet::count() const {
    return static_cast<std::size_t>(std::popcount(mask_));
}

AugmentedSystem build_augmented(const PlantModel& plant, const ControllerModel& ctrl,
                                const Matrix& c_bar, const Matrix& d_bar) {
    plant.validate();
    ctrl.validate();

    Dims d;
    d.np = static_cast<std::size_t>(plant.a.rows());
    d.nv = static_cast<std::size_t>(plant.b.cols());
    d.nw = static_cast<std::size_t>(plant.e.cols());
    d.ny = static_cast<std::size_t>(plant.c.rows());
    d.nc = static_cast<std::size_t>(ctrl.a.rows());
    d.nu = d.ny + d.nv;
    d.nxi = d.np + d.nc + d.ny + d.nv;

    if (static_cast<std::size_t>(ctrl.b.cols()) != d.ny) {
        throw DimensionError("controller B has " + std::to_string(ctrl.b.cols()) +
                             " columns but the plant has " + std::to_string(d.ny) + " outputs");
    }
    if (static_cast<std::size_t>(ctrl.c.rows()) != d.nv) {
        throw DimensionError("controller C has " + std::to_string(ctrl.c.rows()) +
                             " rows but the plant has " + std::to_string(d.nv) + " inputs");
    }
    if (d.nu > EventIndexSet::kMaxChannels) {
        throw DimensionError("more than 32 channels");
    }
    const auto nxi = static_cast<Eigen::Index>(d.nxi);
    const auto nw = static_cast<Eigen::Index>(d.nw);
    if (c_bar.rows() == 0) {
        throw DimensionError("performance Cbar is empty");
    }
    expect_shape(c_bar, c_bar.rows(), nxi, "performance Cbar");
    expect_shape(d_bar, c_bar.rows(), nw, "performance Dbar");
    d.nz = static_cast<std::size_t>(c_bar.rows());

    const auto np = static_cast<Eigen::Index>(d.np);
    const auto nc = static_cast<Eigen::Index>(d.nc);
    const auto ny = static_cast<Eigen::Index>(d.ny);
    const auto nv = static_cast<Eigen::Index>(d.nv);

    AugmentedSystem aug;
    aug.dims = d;
    aug.plant = plant;
    aug.ctrl = ctrl;

    aug.a_bar = Matrix::Zero(nxi, nxi);
    aug.a_bar.block(0, 0, np, np) = plant.a;
    aug.a_bar.block(0, d.off_v(), np, nv) = plant.b;

    aug.b_bar = Matrix::Zero(nxi, nw);
    aug.b_bar.topRows(np) = plant.e;

    aug.c_bar = c_bar;
    aug.d_bar = d_bar;

    aug.c = Matrix::Zero(ny + nv, np + nc);
    aug.c.block(0, 0, ny, np) = plant.c;
    aug.c.block(ny, np, nv, nc) = ctrl.c;

    aug.d = Matrix::Zero(ny + nv, ny + nv);
    aug.d.block(ny, 0, nv, ny) = ctrl.d;
    return aug;
}

Matrix gamma_matrix(const EventIndexSet& j, const Dims& dims) {
    if (j.channels() != dims.nu) {
        throw DimensionError("event set has " + std::to_string(j.channels()) +
                             " channels, model has " + std::to_string(dims.nu));
    }
    const auto nu = static_cast<Eigen::Index>(dims.nu);
    Matrix g = Matrix::Zero(nu, nu);
    for (std::size_t l = 0; l < dims.nu; ++l) {
        if (j.contains(l)) {
            g(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(l)) = 1.0;
        }
    }
    return g;
}

Matrix jump_matrix(const EventIndexSet& j, const AugmentedSystem& aug) {
    const auto& d = aug.dims;
    const Matrix g = gamma_matrix(j, d);
    const auto np = static_cast<Eigen::Index>(d.np);
    const auto nc = static_cast<Eigen::Index>(d.nc);
    const auto ny = static_cast<Eigen::Index>(d.ny);
    const auto nv = static_cast<Eigen::Index>(d.nv);
    const Matrix gy = g.topLeftCorner(ny, ny);
    const Matrix gv = g.bottomRightCorner(nv, nv);
    const Matrix iy = Matrix::Identity(ny, ny);
    const Matrix iv = Matrix::Identity(nv, nv);
    const auto& cp = aug.plant.c;
    const auto& ct = aug.ctrl;

    const auto nxi = static_cast<Eigen::Index>(d.nxi);
    Matrix jm = Matrix::Zero(nxi, nxi);
    // xi_p+ = xi_p
    jm.block(0, 0, np, np) = Matrix::Identity(np, np);
    // xi_c+ = A_c xi_c + B_c y_hat+
    jm.block(d.off_c(), 0, nc, np) = ct.b * gy * cp;
    jm.block(d.off_c(), d.off_c(), nc, nc) = ct.a;
    jm.block(d.off_c(), d.off_y(), nc, ny) = ct.b * (iy - gy);
    // y_hat+
    jm.block(d.off_y(), 0, ny, np) = gy * cp;
    jm.block(d.off_y(), d.off_y(), ny, ny) = iy - gy;
    // v_hat+ from pre-jump xi_c and y_hat
    jm.block(d.off_v(), d.off_c(), nv, nc) = gv * ct.c;
    jm.block(d.off_v(), d.off_y(), nv, ny) = gv * ct.d;
    jm.block(d.off_v(), d.off_v(), nv, nv) = iv - gv;
    return jm;
}

Matrix delta_matrix(const EventIndexSet& j, const Vector& eps_y, const Vector& eps_v,
                    const ThetaAllocation& theta, const AugmentedSystem& aug) {
    const auto& d = aug.dims;
    const auto ny = static_cast<Eigen::Index>(d.ny);
    const auto nv = static_cast<Eigen::Index>(d.nv);
    const auto nc = static_cast<Eigen::Index>(d.nc);
    if (eps_y.size() != ny || eps_v.size() != nv) {
        throw DimensionError("delta_matrix: eps diagonals do not match n_y / n_v");
    }
    if (theta.size() != d.nu) {
        throw DimensionError("delta_matrix: theta has the wrong number of channels");
    }
    for (Eigen::Index i = 0; i < ny; ++i) {
        if (!(std::abs(eps_y(i)) < 1.0)) {
            throw DomainError("delta_matrix: eps_y entry outside (-1, 1)");
        }
    }
    for (Eigen::Index i = 0; i < nv; ++i) {
        if (!(std::abs(eps_v(i)) < 1.0)) {
            throw DomainError("delta_matrix: eps_v entry outside (-1, 1)");
        }
    }
    const Matrix g = gamma_matrix(j, d);
    const Vector theta_y = theta.values().head(ny);
    const Vector theta_v = theta.values().tail(nv);
    const Vector ey = g.topLeftCorner(ny, ny) * eps_y.asDiagonal() * theta_y;
    const Vector ev = g.bottomRightCorner(nv, nv) * eps_v.asDiagonal() * theta_v;

    Matrix col = Matrix::Zero(static_cast<Eigen::Index>(d.nxi), 1);
    col.block(d.off_c(), 0, nc, 1) = aug.ctrl.b * ey;
    col.block(d.off_y(), 0, ny, 1) = ey;
    col.block(d.off_v(), 0, nv, 1) = ev;
    return col;
}

Matrix delta_bar(const EventIndexSet& j, const ThetaAllocation& theta, const AugmentedSystem& aug) {
    const auto& d = aug.dims;
    if (theta.size() != d.nu) {
        throw DimensionError("delta_bar: theta has the wrong number of channels");
    }
    const auto ny = static_cast<Eigen::Index>(d.ny);
    const auto nv = static_cast<Eigen::Index>(d.nv);
    const auto nc = static_cast<Eigen::Index>(d.nc);
    const Matrix g = gamma_matrix(j, d);
    const Vector ey = g.topLeftCorner(ny, ny) * theta.values().head(ny);
    const Vector ev = g.bottomRightCorner(nv, nv) * theta.values().tail(nv);

    Matrix col = Matrix::Zero(static_cast<Eigen::Index>(d.nxi), 1);
    col.block(d.off_c(), 0, nc, 1) = aug.ctrl.b * ey;
    col.block(d.off_y(), 0, ny, 1) = ey;
    col.block(d.off_v(), 0, nv, 1) = ev;
    return col;
}

Matrix q_matrix(std::size_t channel, const AugmentedSystem& aug) {
    const auto& d = aug.dims;
    if (channel >= d.nu) {
        throw DomainError("q_matrix: channel " + std::to_string(channel) + " out of range");
    }
    const Matrix g = gamma_matrix(EventIndexSet(d.nu, {channel}), d);
    const auto nx = static_cast<Eigen::Index>(d.np + d.nc);
    const auto nu = static_cast<Eigen::Index>(d.nu);
    const Matrix dm = aug.d - Matrix::Identity(nu, nu);

    Matrix q(nx + nu, nx + nu);
    q.topLeftCorner(nx, nx) = aug.c.transpose() * g * aug.c;
    q.topRightCorner(nx, nu) = aug.c.transpose() * g * aug.d - aug.c.transpose() * g;
    q.bottomLeftCorner(nu, nx) = aug.d.transpose() * g * aug.c - g * aug.c;
    q.bottomRightCorner(nu, nu) = dm.transpose() * g * dm;
    return q;
}

Vector stack_state(const Vector& xp, const Vector& xc, const Vector& y_hat, const Vector& v_hat) {
    Vector xi(xp.size() + xc.size() + y_hat.size() + v_hat.size());
    xi << xp, xc, y_hat, v_hat;
    return xi;
}

}  // namespace adpetc::model
