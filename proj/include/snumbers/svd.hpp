#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "snumbers/matrix.hpp"

namespace snumbers {

/// Thin SVD A = U diag(s) Vᵀ with s sorted non-increasingly and U, V orthogonal.
struct Svd {
    Matrix u;
    Vector s;
    Matrix v;

    /// Number of singular values above 1e-12·σ₁.
    int rank() const {
        if (s.size() == 0 || s(0) == 0.0) return 0;
        const double cut = kRankCutoff * s(0);
        int r = 0;
        while (r < s.size() && s(r) > cut) ++r;
        return r;
    }

    static constexpr double kRankCutoff = 1e-12;
};

namespace detail {

// Completes the columns of `u` flagged in `missing` to an orthonormal basis
// by Gram-Schmidt against coordinate vectors.
inline void complete_orthonormal(Matrix& u, const std::vector<bool>& missing) {
    const int n = static_cast<int>(u.rows());
    int cand = 0;
    for (int j = 0; j < u.cols(); ++j) {
        if (!missing[j]) continue;
        while (cand < n) {
            Vector e = Vector::Zero(n);
            e(cand++) = 1.0;
            for (int k = 0; k < u.cols(); ++k) {
                if (k == j || (missing[k] && k > j)) continue;
                e -= u.col(k).dot(e) * u.col(k);
            }
            // second pass keeps the basis orthogonal to working precision
            for (int k = 0; k < u.cols(); ++k) {
                if (k == j || (missing[k] && k > j)) continue;
                e -= u.col(k).dot(e) * u.col(k);
            }
            double ne = e.norm();
            if (ne > 1e-8) {
                u.col(j) = e / ne;
                break;
            }
        }
    }
}

}  // namespace detail

/// One-sided (Hestenes) Jacobi SVD of a square matrix.
///
/// Column pairs are rotated until every pair satisfies
/// |⟨w_i, w_j⟩| <= 1e-13 · ‖w_i‖‖w_j‖. The sweep order is fixed, so the result
/// is a deterministic function of the input.
inline Svd jacobi_svd(const Matrix& a) {
    require_valid(a);
    const int n = static_cast<int>(a.rows());
    Matrix w = a;
    Matrix v = Matrix::Identity(n, n);
    constexpr double kOffTol = 1e-13;
    constexpr int kMaxSweeps = 80;

    std::vector<double> sq(n);
    for (int j = 0; j < n; ++j) sq[j] = w.col(j).squaredNorm();

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (int i = 0; i < n - 1; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const double alpha = sq[i];
                const double beta = sq[j];
                if (alpha == 0.0 || beta == 0.0) continue;
                const double gamma = w.col(i).dot(w.col(j));
                if (std::abs(gamma) <= kOffTol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int k = 0; k < n; ++k) {
                    const double wi = w(k, i), wj = w(k, j);
                    w(k, i) = c * wi - s * wj;
                    w(k, j) = s * wi + c * wj;
                    const double vi = v(k, i), vj = v(k, j);
                    v(k, i) = c * vi - s * vj;
                    v(k, j) = s * vi + c * vj;
                }
                sq[i] = w.col(i).squaredNorm();
                sq[j] = w.col(j).squaredNorm();
            }
        }
        if (!rotated) break;
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Vector norms(n);
    for (int j = 0; j < n; ++j) norms(j) = w.col(j).norm();
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return norms(x) > norms(y); });

    Svd out;
    out.u = Matrix::Zero(n, n);
    out.v = Matrix(n, n);
    out.s = Vector(n);
    const double top = norms(order[0]);
    std::vector<bool> missing(n, false);
    for (int k = 0; k < n; ++k) {
        const int j = order[k];
        out.s(k) = norms(j);
        out.v.col(k) = v.col(j);
        if (norms(j) > Svd::kRankCutoff * top && norms(j) > 0.0) {
            out.u.col(k) = w.col(j) / norms(j);
        } else {
            missing[k] = true;
        }
    }
    if (std::any_of(missing.begin(), missing.end(), [](bool b) { return b; }))
        detail::complete_orthonormal(out.u, missing);
    return out;
}

}  // namespace snumbers
