#pragma once

// Log-barrier Newton method for problems of the form
//
//   minimize  c^T x   subject to  F_k(x) = F_k0 + sum_j x_j F_kj  > 0,  k = 1..K,
//
// with symmetric F_kj. Used by the design module for the jump LMI, but it
// knows nothing about control.

#include <cstddef>
#include <optional>
#include <vector>

#include "adpetc/numkernel.hpp"

namespace adpetc::lmi {

using num::Matrix;
using num::Vector;

struct AffineMatrixFunction {
    Matrix constant;
    std::vector<Matrix> basis;  // one symmetric matrix per decision variable

    [[nodiscard]] Matrix evaluate(const Vector& x) const;
    [[nodiscard]] Eigen::Index size() const { return constant.rows(); }
};

struct BarrierProblem {
    std::size_t num_vars = 0;
    std::vector<AffineMatrixFunction> constraints;
    Vector objective;
};

struct BarrierOptions {
    double initial_weight = 1.0;   // tau at the first centering
    double weight_growth = 16.0;
    double gap_tolerance = 1e-9;   // stop once (total barrier order) / tau falls below this
    std::size_t max_newton = 2000;
    /// Stop as soon as the objective drops strictly below this value.
    std::optional<double> target;
    /// Stop early when the optimum provably cannot reach `target`.
    bool abandon_if_unreachable = true;
};

enum class BarrierStatus { converged, reached_target, target_unreachable, iteration_limit, stalled };

struct BarrierResult {
    Vector x;
    double objective = 0.0;
    double lower_bound = 0.0;  // valid at the last centered iterate
    BarrierStatus status = BarrierStatus::iteration_limit;
    std::size_t newton_steps = 0;
};

/// True if every F_k(x) is positive definite (Cholesky succeeds).
bool strictly_feasible(const BarrierProblem& problem, const Vector& x);

/// `x0` must be strictly feasible; throws DomainError otherwise.
BarrierResult minimize(const BarrierProblem& problem, const Vector& x0,
                       const BarrierOptions& options = {});

}  // namespace adpetc::lmi
