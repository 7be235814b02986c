#pragma once

// Brute-force s-numbers of the identity on 2 x 2 matrices by exhaustive nets.
//
// Gelfand numbers are computed directly: an outer net over the subspaces F of
// codimension n - 1 in R^4 (spheres for n = 2 and n = 4, the Grassmannian of
// 2-planes for n = 3) and an inner net over the unit sphere of each F, both
// followed by local pattern search. Kolmogorov and approximation numbers are
// obtained through exact identities, and anything not reducible is refused.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "snumbers/estimators.hpp"

namespace snumbers::oracle {

using Vec4 = std::array<double, 4>;
using Vec3 = std::array<double, 3>;

/// Singular values of [[x0, x2], [x1, x3]] (column-major vec), largest first.
inline std::array<double, 2> singular_values_2x2(const Vec4& x) {
    const double a = x[0], c = x[1], b = x[2], d = x[3];
    const double r1 = std::hypot(a + d, b - c), r2 = std::hypot(a - d, b + c);
    return {(r1 + r2) / 2.0, std::abs(r1 - r2) / 2.0};
}

inline double norm2(const std::array<double, 2>& s, double recip) {
    if (recip == 0.0) return s[0];
    if (recip == 1.0) return s[0] + s[1];
    if (recip == 0.5) return std::sqrt(s[0] * s[0] + s[1] * s[1]);
    if (s[0] == 0.0) return 0.0;
    const double t = s[1] / s[0];
    return s[0] * std::pow(1.0 + std::pow(t, 1.0 / recip), recip);
}

/// ||X||_q / ||X||_p of a nonzero 2 x 2 matrix.
struct Ratio {
    double rp, rq;
    double operator()(const Vec4& x) const {
        auto s = singular_values_2x2(x);
        const double np = norm2(s, rp);
        return np > 0.0 ? norm2(s, rq) / np : 0.0;
    }
};

template <std::size_t K>
inline std::array<double, K> normalized(std::array<double, K> v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    for (double& x : v) x /= n;
    return v;
}

/// Cubed-sphere net of S^{K-1}: cell centres on the faces of [-1, 1]^K,
/// projected radially. `half` keeps one point of each antipodal pair.
template <std::size_t K>
inline std::vector<std::array<double, K>> sphere_net(double h, bool half) {
    const int m = std::max(1, static_cast<int>(std::ceil(2.0 / h)));
    std::vector<std::array<double, K>> out;
    std::array<int, K - 1> idx{};
    for (std::size_t axis = 0; axis < K; ++axis)
        for (int sign : {1, -1}) {
            if (half && sign < 0) continue;
            idx.fill(0);
            while (true) {
                std::array<double, K> v{};
                v[axis] = sign;
                for (std::size_t j = 0, k = 0; j < K; ++j) {
                    if (j == axis) continue;
                    v[j] = -1.0 + (idx[k++] + 0.5) * 2.0 / m;
                }
                out.push_back(normalized(v));
                std::size_t k = 0;
                while (k < K - 1 && ++idx[k] == m) idx[k++] = 0;
                if (k == K - 1) break;
            }
        }
    return out;
}

// A move must gain this much (relative) to count. Inner sups are resolved to
// about 1e-9, so the outer searches over subspaces use the looser threshold.
inline constexpr double kInnerGain = 1e-14;
inline constexpr double kOuterGain = 1e-9;
inline constexpr int kMaxPatternEvals = 4000;

/// Compass search minimizing f over a sphere (the point is renormalized).
template <std::size_t K>
inline double pattern_search(const std::function<double(const std::array<double, K>&)>& f,
                             std::array<double, K>& x, double step, double min_step, double gain = kInnerGain) {
    double fx = f(x);
    int evals = 0;
    while (step > min_step && evals < kMaxPatternEvals) {
        bool improved = false;
        for (std::size_t i = 0; i < K; ++i)
            for (double dir : {1.0, -1.0}) {
                auto y = x;
                y[i] += dir * step;
                y = normalized(y);
                const double fy = f(y);
                ++evals;
                if (fy < fx - gain * std::abs(fx)) {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        if (!improved) step *= 0.5;
    }
    return fx;
}

// 3 x 4 and 2 x 4 orthonormal frames of subspaces of R^4.
using Frame3 = std::array<Vec4, 3>;
using Frame2 = std::array<Vec4, 2>;

inline Frame3 hyperplane_frame(const Vec4& normal) {
    // Gram-Schmidt on the coordinate vectors, dropping the one most aligned with the normal.
    std::size_t skip = 0;
    for (std::size_t i = 1; i < 4; ++i)
        if (std::abs(normal[i]) > std::abs(normal[skip])) skip = i;
    std::vector<Vec4> basis = {normal};
    Frame3 out{};
    std::size_t k = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        if (i == skip) continue;
        Vec4 v{};
        v[i] = 1.0;
        for (const auto& b : basis) {
            double d = 0.0;
            for (int j = 0; j < 4; ++j) d += v[j] * b[j];
            for (int j = 0; j < 4; ++j) v[j] -= d * b[j];
        }
        v = normalized(v);
        basis.push_back(v);
        out[k++] = v;
    }
    return out;
}

// Quaternion helpers; (w, x, y, z) stored in a Vec4.
inline Vec4 qmul(const Vec4& a, const Vec4& b) {
    return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3], a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
            a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1], a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

// Unit quaternion r with r i r̄ = u.
inline Vec4 rotation_from_i(const Vec3& u) {
    const double dot = u[0];
    if (dot < -1.0 + 1e-12) return {0.0, 0.0, 1.0, 0.0};  // half turn about j
    // axis i x u = (0, -u_z, u_y)
    return normalized(Vec4{1.0 + dot, 0.0, -u[2], u[1]});
}

/// The 2-plane q1 · span{1, i} · q2 with q1 i q̄1 = u and q̄2 i q2 = v. Every
/// plane of R^4 arises from some (u, v) in S^2 x S^2.
inline Frame2 plane_frame(const Vec3& u, const Vec3& v) {
    const Vec4 q1 = rotation_from_i(u);
    Vec4 r = rotation_from_i(v);
    const Vec4 q2 = {r[0], -r[1], -r[2], -r[3]};
    return {qmul(q1, q2), qmul(qmul(q1, Vec4{0, 1, 0, 0}), q2)};
}

template <std::size_t K>
inline Vec4 combine(const std::array<Vec4, K>& frame, const std::array<double, K>& c) {
    Vec4 x{};
    for (std::size_t k = 0; k < K; ++k)
        for (int j = 0; j < 4; ++j) x[j] += c[k] * frame[k][j];
    return x;
}

struct OracleResult {
    double value;
    double resolution;
    long long evaluations;
};

class GelfandNet {
public:
    GelfandNet(const Exponent& p, const Exponent& q, double h)
        : ratio_{p.reciprocal(), q.reciprocal()}, h_(h), s2_(sphere_net<3>(h, true)) {
        const int m = std::max(4, static_cast<int>(std::ceil(M_PI / h)));
        for (int k = 0; k < m; ++k) circle_.push_back({std::cos(M_PI * k / m), std::sin(M_PI * k / m)});
    }

    /// sup of the ratio over the unit sphere of a 3-dimensional subspace.
    double sup3(const Frame3& f) {
        double best = -1.0;
        Vec3 arg{};
        for (const auto& c : s2_) {
            const double v = ratio_(combine(f, c));
            ++evals_;
            if (v > best) best = v, arg = c;
        }
        auto neg = [&](const Vec3& c) {
            ++evals_;
            return -ratio_(combine(f, c));
        };
        return -pattern_search<3>(neg, arg, h_, 1e-9);
    }

    /// sup of the ratio over the unit circle of a 2-plane.
    double sup2(const Frame2& f) {
        double best = -1.0;
        std::array<double, 2> arg{};
        for (const auto& c : circle_) {
            const double v = ratio_(combine(f, c));
            ++evals_;
            if (v > best) best = v, arg = c;
        }
        auto neg = [&](const std::array<double, 2>& c) {
            ++evals_;
            return -ratio_(combine(f, c));
        };
        return -pattern_search<2>(neg, arg, h_, 1e-9);
    }

    double coarse_sup3(const Frame3& f) {
        double best = 0.0;
        for (const auto& c : s2_) best = std::max(best, ratio_(combine(f, c)));
        evals_ += static_cast<long long>(s2_.size());
        return best;
    }
    double coarse_sup2(const Frame2& f) {
        double best = 0.0;
        for (const auto& c : circle_) best = std::max(best, ratio_(combine(f, c)));
        evals_ += static_cast<long long>(circle_.size());
        return best;
    }

    const Ratio& ratio() const { return ratio_; }
    long long evaluations() const { return evals_; }
    void count(long long k) { evals_ += k; }

private:
    Ratio ratio_;
    double h_;
    std::vector<Vec3> s2_;
    std::vector<std::array<double, 2>> circle_;
    long long evals_ = 0;
};

/// Best `keep` indices of `scores` (smallest first).
inline std::vector<std::size_t> smallest(const std::vector<double>& scores, std::size_t keep) {
    std::vector<std::size_t> idx(scores.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    keep = std::min(keep, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + keep, idx.end(),
                      [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    idx.resize(keep);
    return idx;
}

inline constexpr std::size_t kRefineCandidates = 24;

/// c_n(S_p^2 -> S_q^2) with inner net spacing h and outer net spacing 2h.
inline OracleResult gelfand_number(const Exponent& p, const Exponent& q, int n, double h) {
    if (n < 1 || n > 4) throw DomainError("net oracle: n must be in 1..4 for N = 2");
    if (!(h > 0.0 && h <= 0.5)) throw UsageError("net oracle: resolution h must lie in (0, 0.5]");
    GelfandNet net(p, q, h);
    const Ratio& ratio = net.ratio();
    double value = 0.0;
    if (n == 1 || n == 4) {
        // n = 1: sup over the whole sphere; n = 4: inf over lines, i.e. min of the ratio.
        const double sign = n == 1 ? -1.0 : 1.0;
        auto pts = sphere_net<4>(h, true);
        std::vector<double> score(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) score[i] = sign * ratio(pts[i]);
        net.count(static_cast<long long>(pts.size()));
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i : smallest(score, kRefineCandidates)) {
            auto x = pts[i];
            auto f = [&](const Vec4& y) {
                net.count(1);
                return sign * ratio(y);
            };
            best = std::min(best, pattern_search<4>(f, x, h, 1e-8));
        }
        value = sign * best;
    } else if (n == 2) {
        auto normals = sphere_net<4>(2.0 * h, true);
        std::vector<double> score(normals.size());
        for (std::size_t i = 0; i < normals.size(); ++i) score[i] = net.coarse_sup3(hyperplane_frame(normals[i]));
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i : smallest(score, kRefineCandidates)) {
            auto x = normals[i];
            auto f = [&](const Vec4& y) { return net.sup3(hyperplane_frame(y)); };
            best = std::min(best, pattern_search<4>(f, x, 2.0 * h, 1e-5, kOuterGain));
        }
        value = best;
    } else {
        auto s2 = sphere_net<3>(2.0 * h, false);
        auto s2half = sphere_net<3>(2.0 * h, true);  // (u, v) and (-u, -v) give the same plane
        std::vector<std::pair<std::size_t, std::size_t>> planes;
        std::vector<double> score;
        for (std::size_t i = 0; i < s2half.size(); ++i)
            for (std::size_t j = 0; j < s2.size(); ++j) {
                planes.emplace_back(i, j);
                score.push_back(net.coarse_sup2(plane_frame(s2half[i], s2[j])));
            }
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k : smallest(score, kRefineCandidates)) {
            // refine (u, v) jointly as a point of R^6 split into two unit vectors
            Vec3 u = s2half[planes[k].first], v = s2[planes[k].second];
            auto f6 = [&](const std::array<double, 6>& w) {
                Vec3 a = normalized(Vec3{w[0], w[1], w[2]}), b = normalized(Vec3{w[3], w[4], w[5]});
                return net.sup2(plane_frame(a, b));
            };
            std::array<double, 6> w = {u[0], u[1], u[2], v[0], v[1], v[2]};
            double fw = f6(w);
            double step = 2.0 * h;
            int evals = 0;
            while (step > 1e-5 && evals < kMaxPatternEvals) {
                bool improved = false;
                for (int i = 0; i < 6; ++i)
                    for (double dir : {1.0, -1.0}) {
                        auto y = w;
                        y[i] += dir * step;
                        const Vec3 a = normalized(Vec3{y[0], y[1], y[2]}), b = normalized(Vec3{y[3], y[4], y[5]});
                        y = {a[0], a[1], a[2], b[0], b[1], b[2]};
                        const double fy = f6(y);
                        ++evals;
                        if (fy < fw - kOuterGain * std::abs(fw)) w = y, fw = fy, improved = true;
                    }
                if (!improved) step *= 0.5;
            }
            best = std::min(best, fw);
        }
        value = best;
    }
    return {value, h, net.evaluations()};
}

/// Which Gelfand number an s-number of S_p^2 -> S_q^2 reduces to, if any.
struct Reduction {
    Exponent p, q;
    bool trivial_one = false;  // value is exactly 1 (identity with p = q or p <= q <= 1)
    std::string route;
};

inline Reduction reduce(SnumberKind kind, Exponent p, Exponent q) {
    const Exponent one = Exponent::rational(1, 1), two = Exponent::rational(2, 1);
    auto describe = [](const Exponent& a, const Exponent& b) {
        return "c(" + a.to_string() + "," + b.to_string() + ")";
    };
    switch (kind) {
        case SnumberKind::gelfand:
            return {p, q, false, describe(p, q)};
        case SnumberKind::kolmogorov:
            if (!q.is_banach()) break;
            if (!p.is_banach()) p = one;
            return {q.dual(), p.dual(), false, "dual " + describe(q.dual(), p.dual())};
        case SnumberKind::approximation:
            if (p == q) return {p, q, true, "identity"};
            if (p == two) return {p, q, false, "hilbert domain " + describe(p, q)};
            if (q == two) {
                if (!p.is_banach()) p = one;
                return {q.dual(), p.dual(), false, "hilbert codomain dual " + describe(q.dual(), p.dual())};
            }
            break;
        case SnumberKind::recovery:
            break;
    }
    throw DomainError("net oracle: " + to_string(kind) + "_n(S_" + p.to_string() + " -> S_" + q.to_string() +
                      ") does not reduce to a Gelfand number");
}

/// Brute-force value of a_n, c_n or d_n of the identity S_p^2 -> S_q^2.
inline Estimate net_oracle(SnumberKind kind, const EmbeddingSpec& s, double h) {
    s.validate();
    if (s.N != 2) throw DomainError("net oracle is only available for N = 2");
    const auto n = s.index();
    Reduction r = reduce(kind, s.p, s.q);
    Estimate e;
    e.kind = kind;
    e.method = "net-oracle";
    e.spec = s;
    e.resolution = h;
    e.error_bar = 2.0 * h;
    e.converged = true;
    e.notes.push_back(r.route);
    if (r.trivial_one) {
        e.value = 1.0;
        e.error_bar = 0.0;
        return e;
    }
    auto res = gelfand_number(r.p, r.q, static_cast<int>(n), h);
    e.value = res.value;
    e.inner_budget = static_cast<int>(std::min<long long>(res.evaluations, std::numeric_limits<int>::max()));
    return e;
}

struct BatteryPoint {
    SnumberKind kind;
    Exponent p, q;
    std::int64_t n;
};

/// Twelve N = 2 points where every kind reduces to a Gelfand number, spread
/// over the regimes and all values of n.
inline std::vector<BatteryPoint> calibration_battery() {
    using SK = SnumberKind;
    return {{SK::approximation, exponent(2), kInf, 4},         {SK::kolmogorov, exponent(1), exponent(2), 4},
            {SK::kolmogorov, exponent(1), kInf, 2},            {SK::approximation, exponent(1), exponent(2), 2},
            {SK::kolmogorov, exponent(2), kInf, 2},            {SK::approximation, exponent(2), exponent(1), 2},
            {SK::kolmogorov, kInf, exponent(1), 3},            {SK::approximation, exponent(4, 3), exponent(2), 3},
            {SK::kolmogorov, exponent(4), exponent(2), 2},     {SK::approximation, exponent(2), exponent(4), 3},
            {SK::kolmogorov, exponent(1, 2), kInf, 3},         {SK::approximation, exponent(1, 2), exponent(2), 2}};
}

inline constexpr double kFixtureResolution = 0.05;

}  // namespace snumbers::oracle
