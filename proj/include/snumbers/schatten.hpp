#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "snumbers/exponent.hpp"
#include "snumbers/matrix.hpp"
#include "snumbers/svd.hpp"

namespace snumbers {

/// Singular values of a square matrix, sorted non-increasingly.
struct SingularSpectrum {
    Vector values;

    int size() const { return static_cast<int>(values.size()); }
    double operator[](int i) const { return values(i); }
    double largest() const { return values.size() ? values(0) : 0.0; }
};

inline SingularSpectrum singular_values(const Matrix& a) { return {jacobi_svd(a).s}; }

/// (Σ σ_i^p)^{1/p} for a non-negative, non-increasing vector.
///
/// For p < 1 and a spectrum spanning more than twelve orders of magnitude
/// the sum is formed in log space; otherwise the vector is scaled by σ₁
/// before raising to the power p, which already avoids overflow.
inline double lp_norm_sorted(const Vector& s, const Exponent& p) {
    if (s.size() == 0) return 0.0;
    const double top = s(0);
    if (top == 0.0) return 0.0;
    if (p.is_infinite()) return top;
    const double r = p.reciprocal();
    if (r == 1.0) return s.sum();
    if (r == 0.5) return s.norm();
    const double pv = 1.0 / r;

    double smallest_positive = top;
    for (int i = 0; i < s.size(); ++i)
        if (s(i) > 0.0) smallest_positive = std::min(smallest_positive, s(i));

    if (pv < 1.0 && top / smallest_positive > 1e12) {
        const double log_top = std::log(top);
        double acc = 0.0;
        for (int i = 0; i < s.size(); ++i)
            if (s(i) > 0.0) acc += std::exp(pv * (std::log(s(i)) - log_top));
        return std::exp(log_top + r * std::log(acc));
    }
    double acc = 0.0;
    for (int i = 0; i < s.size(); ++i)
        if (s(i) > 0.0) acc += std::pow(s(i) / top, pv);
    return top * std::pow(acc, r);
}

/// ℓ_p (quasi-)norm of an arbitrary real vector.
inline double lp_norm(const Vector& x, const Exponent& p) {
    Vector a = x.cwiseAbs();
    std::sort(a.data(), a.data() + a.size(), std::greater<double>());
    return lp_norm_sorted(a, p);
}

inline double schatten_norm(const SingularSpectrum& s, const Exponent& p) { return lp_norm_sorted(s.values, p); }

/// Norm from a computed SVD. For p < 1 singular values below the rank cutoff
/// are dropped: they carry no information but a quasi-norm amplifies them
/// (1e-16 contributes 1e-8 at p = 1/2).
inline double schatten_norm(const Svd& svd, const Exponent& p) {
    if (p.is_banach()) return lp_norm_sorted(svd.s, p);
    Vector s = svd.s;
    const double cutoff = Svd::kRankCutoff * (s.size() ? s(0) : 0.0);
    for (int i = 0; i < s.size(); ++i)
        if (s(i) < cutoff) s(i) = 0.0;
    return lp_norm_sorted(s, p);
}

inline double schatten_norm(const Matrix& a, const Exponent& p) {
    if (p.reciprocal() == 0.5) {
        require_valid(a);
        return a.norm();  // Frobenius, no SVD needed
    }
    return schatten_norm(jacobi_svd(a), p);
}

/// ‖S_p^N → S_q^N‖ = max{1, N^{1/q − 1/p}}.
inline double embedding_norm(const Exponent& p, const Exponent& q, int n) {
    if (n < 1) throw DomainError("embedding_norm: N must be >= 1");
    return std::max(1.0, std::pow(static_cast<double>(n), q.reciprocal() - p.reciprocal()));
}

/// 2-summing norm of the identity S_p^N → S_q^N:
/// N · max{1, N^{1/q−1/2}} / max{1, N^{1/p−1/2}}.
inline double pi2_embedding(const Exponent& p, const Exponent& q, int n) {
    if (!p.is_banach() || !q.is_banach())
        throw DomainError("pi2_embedding: the 2-summing norm needs p, q >= 1");
    if (n < 1) throw DomainError("pi2_embedding: N must be >= 1");
    const double nn = static_cast<double>(n);
    return nn * std::max(1.0, std::pow(nn, q.reciprocal() - 0.5)) / std::max(1.0, std::pow(nn, p.reciprocal() - 0.5));
}

// ---------------------------------------------------------------------------
// Derivative information used by the ascent routines in the estimators.

/// A subgradient of X ↦ ‖X‖_q at X (q ≥ 1), or the gradient of the quasi-norm
/// restricted to the non-zero singular values when q < 1. Returns zero at X = 0.
inline Matrix schatten_norm_gradient(const Svd& svd, const Exponent& q) {
    const int n = static_cast<int>(svd.s.size());
    const double nrm = lp_norm_sorted(svd.s, q);
    if (nrm == 0.0) return Matrix::Zero(n, n);
    Vector g = Vector::Zero(n);
    const int rank = svd.rank();
    if (q.is_infinite()) {
        g(0) = 1.0;
    } else if (q.reciprocal() == 1.0) {
        for (int i = 0; i < rank; ++i) g(i) = 1.0;
    } else {
        const double qv = 1.0 / q.reciprocal();
        for (int i = 0; i < rank; ++i) g(i) = std::pow(svd.s(i) / nrm, qv - 1.0);
    }
    return svd.u * g.asDiagonal() * svd.v.transpose();
}

inline Matrix schatten_norm_gradient(const Matrix& x, const Exponent& q) {
    return schatten_norm_gradient(jacobi_svd(x), q);
}

/// Maximizer of ⟨G, A⟩ over the unit ball of S_p (p ≥ 1; smaller p is treated
/// as p = 1, whose ball is the convex hull of the quasi-ball).
inline Matrix schatten_ball_maximizer(const Svd& g, const Exponent& p) {
    const int n = static_cast<int>(g.s.size());
    Vector s = Vector::Zero(n);
    if (p.reciprocal() >= 1.0) {
        s(0) = 1.0;
    } else if (p.is_infinite()) {
        s.setOnes();
    } else {
        const Exponent pd = p.dual();
        const double pdv = pd.is_infinite() ? std::numeric_limits<double>::infinity() : 1.0 / pd.reciprocal();
        const double nrm = lp_norm_sorted(g.s, pd);
        if (nrm == 0.0) {
            s(0) = 1.0;
        } else {
            for (int i = 0; i < n; ++i) s(i) = std::pow(g.s(i) / nrm, pdv - 1.0);
        }
    }
    return g.u * s.asDiagonal() * g.v.transpose();
}

// ---------------------------------------------------------------------------
// Convex hull decomposition A = Σ σ_i U E_ii Vᵀ.

struct HullTerm {
    double lambda;
    Matrix atom;  // rank-one, every Schatten norm equals 1
    int index;
};

struct HullDecomposition {
    std::vector<HullTerm> terms;
    Matrix source;

    Matrix reconstruct() const {
        Matrix r = Matrix::Zero(source.rows(), source.cols());
        for (const auto& t : terms) r += t.lambda * t.atom;
        return r;
    }
    double weight_sum() const {
        double s = 0.0;
        for (const auto& t : terms) s += t.lambda;
        return s;
    }
};

/// Writes A as a non-negative combination of rank-one partial isometries; the
/// weights sum to ‖A‖_{S_1}. The zero matrix yields an empty decomposition.
inline HullDecomposition hull_decompose(const Matrix& a) {
    Svd svd = jacobi_svd(a);
    HullDecomposition h;
    h.source = a;
    const int n = static_cast<int>(a.rows());
    for (int i = 0; i < n; ++i) {
        if (svd.s(i) == 0.0) continue;
        h.terms.push_back({svd.s(i), svd.u.col(i) * svd.v.col(i).transpose(), i});
    }
    return h;
}

// ---------------------------------------------------------------------------
// Interpolation utilities.

namespace detail {

inline double k_split_value(const Vector& x, const Vector& sigma, const Exponent& p, const Exponent& q, double t) {
    return lp_norm(x, p) + t * lp_norm(sigma - x, q);
}

// Golden-section minimization of a unimodal-ish function on [lo, hi],
// preceded by a grid scan so that non-convex quasi-norm slices are handled.
template <class F>
double scalar_minimize(F&& f, double lo, double hi, double* arg) {
    constexpr int kGrid = 24;
    double best_x = lo, best_f = f(lo);
    for (int k = 1; k <= kGrid; ++k) {
        const double x = lo + (hi - lo) * k / kGrid;
        const double fx = f(x);
        if (fx < best_f) best_f = fx, best_x = x;
    }
    const double step = (hi - lo) / kGrid;
    double a = std::max(lo, best_x - step), b = std::min(hi, best_x + step);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 80 && (b - a) > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
        if (fc < fd) {
            b = d, d = c, fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c, c = d, fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    const double xm = fc < fd ? c : d;
    const double fm = std::min(fc, fd);
    if (fm < best_f) best_f = fm, best_x = xm;
    *arg = best_x;
    return best_f;
}

}  // namespace detail

/// Upper bound for Peetre's K-functional K(t, A; S_p, S_q) over splits that
/// share A's singular bases.
///
/// The split of the singular values σ = x + (σ − x) is searched over three
/// one-parameter families (hard split, soft threshold, clipping), then refined
/// by cyclic per-coordinate scalar minimization. Both trivial splits are
/// included, so the result never exceeds min(‖A‖_p, t‖A‖_q).
inline double k_functional_upper(const Matrix& a, const Exponent& p, const Exponent& q, double t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("k_functional_upper: t must be positive");
    const Vector sigma = jacobi_svd(a).s;
    const int n = static_cast<int>(sigma.size());
    if (sigma(0) == 0.0) return 0.0;

    auto value = [&](const Vector& x) { return detail::k_split_value(x, sigma, p, q, t); };

    Vector best = sigma;
    double best_f = lp_norm_sorted(sigma, p);
    auto consider = [&](const Vector& x) {
        const double f = value(x);
        if (f < best_f) best_f = f, best = x;
    };
    consider(Vector::Zero(n));
    for (int k = 1; k < n; ++k) {
        Vector x = Vector::Zero(n);
        x.head(k) = sigma.head(k);
        consider(x);
    }
    // soft threshold: X keeps (σ − μ)_+, Y keeps min(σ, μ)
    {
        auto f = [&](double mu) { return value((sigma.array() - mu).max(0.0).matrix()); };
        double mu = 0;
        detail::scalar_minimize(f, 0.0, sigma(0), &mu);
        consider((sigma.array() - mu).max(0.0).matrix());
    }
    // clipping: X keeps min(σ, μ)
    {
        auto f = [&](double mu) { return value(sigma.array().min(mu).matrix()); };
        double mu = 0;
        detail::scalar_minimize(f, 0.0, sigma(0), &mu);
        consider(sigma.array().min(mu).matrix());
    }
    // cyclic coordinate refinement
    for (int sweep = 0; sweep < 40; ++sweep) {
        const double before = best_f;
        for (int i = 0; i < n; ++i) {
            if (sigma(i) == 0.0) continue;
            Vector x = best;
            auto f = [&](double xi) {
                x(i) = xi;
                return value(x);
            };
            double xi = best(i);
            const double fi = detail::scalar_minimize(f, 0.0, sigma(i), &xi);
            if (fi < best_f) {
                best_f = fi;
                best(i) = xi;
            }
        }
        if (before - best_f <= 1e-15 * before) break;
    }
    return best_f;
}

struct LittlewoodResult {
    bool holds;
    double norm_interpolated;  // ‖A‖_{p_θ}
    double norm_q;
    double norm_p;
    Exponent p_theta;
};

/// Checks ‖A‖_{p_θ} ≤ ‖A‖_q^{1−θ} ‖A‖_p^θ with 1/p_θ = (1−θ)/q + θ/p.
inline LittlewoodResult littlewood_check(const Matrix& a, const Exponent& p, const Exponent& q, double theta) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw DomainError("littlewood_check: theta must lie in [0,1]");
    const Exponent pt = Exponent::from_reciprocal((1.0 - theta) * q.reciprocal() + theta * p.reciprocal());
    const Vector s = jacobi_svd(a).s;
    const double nt = lp_norm_sorted(s, pt);
    const double nq = lp_norm_sorted(s, q);
    const double np = lp_norm_sorted(s, p);
    const double rhs = std::pow(nq, 1.0 - theta) * std::pow(np, theta);
    return {nt <= rhs * (1.0 + 1e-12), nt, nq, np, pt};
}

}  // namespace snumbers
