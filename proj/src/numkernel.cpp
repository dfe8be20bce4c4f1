#include "adpetc/numkernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "adpetc/errors.hpp"

namespace adpetc::num {

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) {
        throw DomainError(std::string(what) + ": non-finite entry");
    }
}

void require_square(const Matrix& m, const char* what) {
    if (m.rows() != m.cols()) {
        throw DimensionError(std::string(what) + ": expected a square matrix, got " +
                             std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

Matrix symmetrize(const Matrix& s) {
    return 0.5 * (s + s.transpose());
}

namespace {

// Higham (2005) coefficients for the [13/13] approximant.
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};
constexpr double kTheta13 = 5.371920351148152;

}  // namespace

Matrix expm(const Matrix& m, double t) {
    require_square(m, "expm");
    require_finite(m, "expm");
    if (!std::isfinite(t)) {
        throw DomainError("expm: non-finite time argument");
    }
    const Eigen::Index n = m.rows();
    if (n == 0) {
        return Matrix(0, 0);
    }
    Matrix a = m * t;
    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    if (norm1 == 0.0) {
        return Matrix::Identity(n, n);
    }
    int squarings = 0;
    if (norm1 > kTheta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
        a /= std::ldexp(1.0, squarings);
    }

    const Matrix id = Matrix::Identity(n, n);
    const Matrix a2 = a * a;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    const auto& b = kPade13;
    const Matrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                           b[3] * a2 + b[1] * id;
    const Matrix u = a * u_inner;
    const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 +
                     b[2] * a2 + b[0] * id;

    Matrix r = (v - u).partialPivLu().solve(v + u);
    for (int k = 0; k < squarings; ++k) {
        r = r * r;
    }
    return r;
}

SymEig sym_eig(const Matrix& s) {
    require_square(s, "sym_eig");
    require_finite(s, "sym_eig");
    const Eigen::Index n = s.rows();
    Matrix a = symmetrize(s);
    Matrix v = Matrix::Identity(n, n);

    const double stop = 1e-13 * a.norm();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                off += a(p, q) * a(p, q);
            }
        }
        if (std::sqrt(2.0 * off) <= stop) {
            break;
        }
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) {
                    continue;
                }
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });
    SymEig out{Vector(n), Matrix(n, n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        out.values(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
        out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
    }
    return out;
}

double lambda_min(const Matrix& s) {
    const auto eig = sym_eig(s);
    return eig.values(eig.values.size() - 1);
}

double lambda_max(const Matrix& s) {
    return sym_eig(s).values(0);
}

Matrix psd_project(const Matrix& s, double margin) {
    if (margin < 0.0 || !std::isfinite(margin)) {
        throw DomainError("psd_project: margin must be finite and non-negative");
    }
    const auto eig = sym_eig(s);
    const Vector clipped = eig.values.cwiseMax(margin);
    return symmetrize(eig.vectors * clipped.asDiagonal() * eig.vectors.transpose());
}

double spectral_norm(const Matrix& m) {
    require_finite(m, "spectral_norm");
    if (m.size() == 0) {
        return 0.0;
    }
    const Matrix gram = m.rows() < m.cols() ? Matrix(m * m.transpose())
                                            : Matrix(m.transpose() * m);
    return std::sqrt(std::max(0.0, lambda_max(gram)));
}

Matrix psd_factor(const Matrix& s, double tol_psd) {
    const auto eig = sym_eig(s);
    const double scale = std::max(1.0, eig.values.cwiseAbs().maxCoeff());
    Vector root(eig.values.size());
    for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
        const double lam = eig.values(k);
        if (lam < -tol_psd * scale) {
            throw NotPsdError("psd_factor: eigenvalue " + std::to_string(lam) +
                              " below -tol_psd * |S|");
        }
        root(k) = std::sqrt(std::max(0.0, lam));
    }
    return eig.vectors * root.asDiagonal();
}

double rcond(const Matrix& m) {
    require_square(m, "rcond");
    if (m.size() == 0) {
        return 1.0;
    }
    const Eigen::FullPivLU<Matrix> lu(m);
    if (!lu.isInvertible()) {
        return 0.0;
    }
    const Matrix inv = lu.inverse();
    const double norm_a = m.cwiseAbs().colwise().sum().maxCoeff();
    const double norm_inv = inv.cwiseAbs().colwise().sum().maxCoeff();
    if (!std::isfinite(norm_inv) || norm_a == 0.0) {
        return 0.0;
    }
    return 1.0 / (norm_a * norm_inv);
}

Matrix solve(const Matrix& a, const Matrix& b) {
    require_square(a, "solve");
    if (a.rows() != b.rows()) {
        throw DimensionError("solve: row count of right-hand side does not match");
    }
    const Eigen::PartialPivLU<Matrix> lu(a);
    if (!(lu.rcond() > 0.0)) {
        throw DomainError("solve: singular coefficient matrix");
    }
    Matrix x = lu.solve(b);
    require_finite(x, "solve");
    return x;
}

Matrix inverse(const Matrix& a) {
    return solve(a, Matrix::Identity(a.rows(), a.cols()));
}

}  // namespace adpetc::num
