#pragma once

// Plant, controller and augmented impulsive-system models, plus every
// structured matrix of the jump map.
//
// Channel ordering is fixed: u = [y; v], sensor channels first. Channel
// indices are 0-based throughout the library.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "adpetc/numkernel.hpp"

namespace adpetc::model {

using num::Matrix;
using num::Vector;

/// xi_p' = A xi_p + B v_hat + E w,  y = C xi_p.
struct PlantModel {
    Matrix a;
    Matrix b;
    Matrix e;
    Matrix c;

    void validate() const;
};

/// xi_c(t_{k+1}) = A xi_c + B y_hat,  v = C xi_c + D y_hat.
struct ControllerModel {
    Matrix a;
    Matrix b;
    Matrix c;
    Matrix d;

    void validate() const;
};

/// Per-channel threshold weights, normalized to unit Euclidean norm on
/// construction; the raw input is kept for reporting.
class ThetaAllocation {
public:
    static constexpr double kTolTheta = 1e-9;

    ThetaAllocation() = default;
    explicit ThetaAllocation(Vector raw);

    [[nodiscard]] const Vector& values() const { return normalized_; }
    [[nodiscard]] const Vector& raw() const { return raw_; }
    [[nodiscard]] double operator[](std::size_t i) const {
        return normalized_(static_cast<Eigen::Index>(i));
    }
    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(normalized_.size()); }

private:
    Vector raw_;
    Vector normalized_;
};

struct Dims {
    std::size_t np = 0;
    std::size_t nc = 0;
    std::size_t ny = 0;
    std::size_t nv = 0;
    std::size_t nw = 0;
    std::size_t nz = 0;
    std::size_t nu = 0;
    std::size_t nxi = 0;

    // Offsets of the blocks of xi = [xi_p; xi_c; y_hat; v_hat].
    [[nodiscard]] Eigen::Index off_c() const { return static_cast<Eigen::Index>(np); }
    [[nodiscard]] Eigen::Index off_y() const { return static_cast<Eigen::Index>(np + nc); }
    [[nodiscard]] Eigen::Index off_v() const { return static_cast<Eigen::Index>(np + nc + ny); }
};

struct AugmentedSystem {
    Matrix a_bar;  // nxi x nxi
    Matrix b_bar;  // nxi x nw
    Matrix c_bar;  // nz x nxi
    Matrix d_bar;  // nz x nw
    Matrix c;      // nu x (np + nc), blkdiag(Cp, Cc)
    Matrix d;      // nu x nu, [[0, 0], [Dc, 0]]
    Dims dims;
    PlantModel plant;
    ControllerModel ctrl;
};

/// Subset of {0, ..., n_u - 1}; n_u is limited to 32 channels.
class EventIndexSet {
public:
    static constexpr std::size_t kMaxChannels = 32;

    EventIndexSet() = default;
    explicit EventIndexSet(std::size_t channels, std::uint32_t mask = 0);
    EventIndexSet(std::size_t channels, std::initializer_list<std::size_t> members);

    static EventIndexSet none(std::size_t channels) { return EventIndexSet(channels); }
    static EventIndexSet all(std::size_t channels);

    [[nodiscard]] bool contains(std::size_t i) const;
    void insert(std::size_t i);
    [[nodiscard]] EventIndexSet complement() const;
    [[nodiscard]] std::size_t count() const;
    [[nodiscard]] bool empty() const { return mask_ == 0; }
    [[nodiscard]] std::size_t channels() const { return channels_; }
    [[nodiscard]] std::uint32_t mask() const { return mask_; }

    friend bool operator==(const EventIndexSet&, const EventIndexSet&) = default;

private:
    std::size_t channels_ = 0;
    std::uint32_t mask_ = 0;
};

/// Assembles the impulsive-system matrices; `c_bar`, `d_bar` define the
/// performance output z = Cbar xi + Dbar w.
AugmentedSystem build_augmented(const PlantModel& plant, const ControllerModel& ctrl,
                                const Matrix& c_bar, const Matrix& d_bar);

/// diag(gamma^1, ..., gamma^{n_u}) with gamma^l = 1 iff l is in J.
Matrix gamma_matrix(const EventIndexSet& j, const Dims& dims);

/// Linear part of the jump map for triggered set J.
Matrix jump_matrix(const EventIndexSet& j, const AugmentedSystem& aug);

/// Quantization-error injection column; eps_y, eps_v are the diagonals of
/// the normalized error matrices, each entry in (-1, 1).
Matrix delta_matrix(const EventIndexSet& j, const Vector& eps_y, const Vector& eps_v,
                    const ThetaAllocation& theta, const AugmentedSystem& aug);

/// delta_matrix with eps_y = eps_v = I.
Matrix delta_bar(const EventIndexSet& j, const ThetaAllocation& theta, const AugmentedSystem& aug);

/// Q_i with xi^T Q_i xi = (u_hat^i - u^i)^2.
Matrix q_matrix(std::size_t channel, const AugmentedSystem& aug);

/// Stacks the four state blocks into xi.
Vector stack_state(const Vector& xp, const Vector& xc, const Vector& y_hat, const Vector& v_hat);

}  // namespace adpetc::model
