#include "adpetc/lmi_solver.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "adpetc/errors.hpp"

namespace adpetc::lmi {

namespace {

// Variables that actually enter a constraint, so the bound constraints in
// larger problems stay cheap.
std::vector<std::vector<Eigen::Index>> active_variables(const BarrierProblem& problem) {
    std::vector<std::vector<Eigen::Index>> active(problem.constraints.size());
    for (std::size_t k = 0; k < problem.constraints.size(); ++k) {
        const auto& con = problem.constraints[k];
        for (std::size_t j = 0; j < con.basis.size(); ++j) {
            if (con.basis[j].cwiseAbs().maxCoeff() > 0.0) {
                active[k].push_back(static_cast<Eigen::Index>(j));
            }
        }
    }
    return active;
}

void validate(const BarrierProblem& problem) {
    if (problem.num_vars == 0) {
        throw DimensionError("barrier: problem has no variables");
    }
    if (static_cast<std::size_t>(problem.objective.size()) != problem.num_vars) {
        throw DimensionError("barrier: objective length does not match the variable count");
    }
    for (const auto& con : problem.constraints) {
        if (con.constant.rows() != con.constant.cols() || con.constant.rows() == 0) {
            throw DimensionError("barrier: constraint constant must be square and non-empty");
        }
        if (con.basis.size() != problem.num_vars) {
            throw DimensionError("barrier: constraint basis size does not match the variable count");
        }
        for (const auto& b : con.basis) {
            if (b.rows() != con.constant.rows() || b.cols() != con.constant.cols()) {
                throw DimensionError("barrier: basis matrix shape mismatch");
            }
        }
    }
}

// Barrier value  -sum_k log det F_k(x), or +inf outside the domain.
double barrier(const BarrierProblem& problem, const Vector& x) {
    double value = 0.0;
    for (const auto& con : problem.constraints) {
        const Eigen::LLT<Matrix> llt(con.evaluate(x));
        if (llt.info() != Eigen::Success) {
            return std::numeric_limits<double>::infinity();
        }
        const Matrix& l = llt.matrixLLT();
        for (Eigen::Index i = 0; i < l.rows(); ++i) {
            const double d = l(i, i);
            if (!(d > 0.0)) {
                return std::numeric_limits<double>::infinity();
            }
            value -= 2.0 * std::log(d);
        }
    }
    return value;
}

}  // namespace

Matrix AffineMatrixFunction::evaluate(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != basis.size()) {
        throw DimensionError("AffineMatrixFunction: argument has the wrong length");
    }
    Matrix f = constant;
    for (std::size_t j = 0; j < basis.size(); ++j) {
        const double xj = x(static_cast<Eigen::Index>(j));
        if (xj != 0.0) {
            f.noalias() += xj * basis[j];
        }
    }
    return f;
}

bool strictly_feasible(const BarrierProblem& problem, const Vector& x) {
    return std::isfinite(barrier(problem, x));
}

BarrierResult minimize(const BarrierProblem& problem, const Vector& x0,
                       const BarrierOptions& options) {
    validate(problem);
    if (static_cast<std::size_t>(x0.size()) != problem.num_vars) {
        throw DimensionError("barrier: starting point has the wrong length");
    }
    if (!strictly_feasible(problem, x0)) {
        throw DomainError("barrier: starting point is not strictly feasible");
    }
    if (!(options.initial_weight > 0.0) || !(options.weight_growth > 1.0)) {
        throw DomainError("barrier: weight schedule must be positive and increasing");
    }

    const auto nv = static_cast<Eigen::Index>(problem.num_vars);
    const auto active = active_variables(problem);
    double order = 0.0;
    for (const auto& con : problem.constraints) {
        order += static_cast<double>(con.size());
    }
    const Vector& c = problem.objective;

    BarrierResult res;
    res.x = x0;
    double tau = options.initial_weight;
    auto merit = [&](const Vector& x) { return tau * c.dot(x) + barrier(problem, x); };

    while (true) {
        // Centering by damped Newton.
        double phi = merit(res.x);
        while (true) {
            if (res.newton_steps >= options.max_newton) {
                res.objective = c.dot(res.x);
                res.lower_bound = res.objective - order / tau;
                res.status = BarrierStatus::iteration_limit;
                return res;
            }
            Vector grad = tau * c;
            Matrix hess = Matrix::Zero(nv, nv);
            for (std::size_t k = 0; k < problem.constraints.size(); ++k) {
                const auto& con = problem.constraints[k];
                const auto& act = active[k];
                if (act.empty()) {
                    continue;
                }
                const Eigen::LLT<Matrix> llt(con.evaluate(res.x));
                const auto n = con.size();
                const auto l = llt.matrixL();
                Matrix stacked(n * n, static_cast<Eigen::Index>(act.size()));
                for (std::size_t a = 0; a < act.size(); ++a) {
                    const Eigen::Index j = act[a];
                    Matrix t = l.solve(con.basis[static_cast<std::size_t>(j)]);
                    Matrix w = l.solve(t.transpose());
                    grad(j) -= w.trace();
                    stacked.col(static_cast<Eigen::Index>(a)) =
                        Eigen::Map<const Vector>(w.data(), n * n);
                }
                const Matrix g = stacked.transpose() * stacked;
                for (std::size_t a = 0; a < act.size(); ++a) {
                    for (std::size_t b = 0; b < act.size(); ++b) {
                        hess(act[a], act[b]) += g(static_cast<Eigen::Index>(a),
                                                  static_cast<Eigen::Index>(b));
                    }
                }
            }
            Eigen::LDLT<Matrix> ldlt(hess);
            Vector dx = ldlt.solve(-grad);
            if (ldlt.info() != Eigen::Success || !dx.allFinite()) {
                const double reg = 1e-12 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
                hess.diagonal().array() += reg;
                dx = hess.ldlt().solve(-grad);
            }
            ++res.newton_steps;
            const double slope = grad.dot(dx);
            // Below this the merit decrease is lost in roundoff of phi itself.
            const double decrement = -slope / 2.0;
            if (!(slope < 0.0) || decrement <= 1e-10 + 1e-12 * std::abs(phi)) {
                break;
            }
            double alpha = 1.0;
            Vector trial;
            double phi_trial = std::numeric_limits<double>::infinity();
            while (alpha > 1e-14) {
                trial = res.x + alpha * dx;
                phi_trial = merit(trial);
                if (std::isfinite(phi_trial) && phi_trial <= phi + 0.25 * alpha * slope) {
                    break;
                }
                alpha *= 0.5;
            }
            if (!(alpha > 1e-14)) {
                if (decrement <= 1e-6) {
                    break;
                }
                res.objective = c.dot(res.x);
                res.lower_bound = res.objective - order / tau;
                res.status = BarrierStatus::stalled;
                return res;
            }
            res.x = trial;
            phi = phi_trial;
            if (options.target && c.dot(res.x) < *options.target) {
                res.objective = c.dot(res.x);
                res.lower_bound = -std::numeric_limits<double>::infinity();
                res.status = BarrierStatus::reached_target;
                return res;
            }
        }

        res.objective = c.dot(res.x);
        res.lower_bound = res.objective - order / tau;
        if (options.target && options.abandon_if_unreachable &&
            res.lower_bound >= *options.target) {
            res.status = BarrierStatus::target_unreachable;
            return res;
        }
        if (order / tau <= options.gap_tolerance) {
            res.status = BarrierStatus::converged;
            return res;
        }
        tau *= options.weight_growth;
    }
}

}  // namespace adpetc::lmi
