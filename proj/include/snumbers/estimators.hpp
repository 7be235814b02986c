#pragma once

// Heuristic numerical s-numbers of maps on N x N matrices, from the definitions.
//
// Every estimator is a min over a finite-dimensional family (rank-constrained
// maps, subspaces) of a sup over a Schatten ball. The sup is found by ascent
// from many starts and is therefore biased low; the min is found by local
// search and is biased high. Neither side is certified.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "snumbers/schatten.hpp"
#include "snumbers/spec.hpp"

namespace snumbers {

/// A linear map on N x N matrices stored as its N^2 x N^2 matrix acting on vec(A).
struct OperatorOnMatrices {
    Matrix rep;
    int N = 1;

    OperatorOnMatrices() = default;
    OperatorOnMatrices(Matrix r, int n) : rep(std::move(r)), N(n) { validate(); }

    static OperatorOnMatrices identity(int n) { return {Matrix::Identity(n * n, n * n), n}; }

    void validate() const {
        if (N < 1) throw InputError("operator dimension N must be >= 1");
        if (rep.rows() != N * N || rep.cols() != N * N) throw InputError("operator representation must be N^2 x N^2");
        if (!rep.allFinite()) throw InputError("operator representation has non-finite entries");
    }

    Matrix apply(const Matrix& a) const { return unvec(rep * vec(a), N); }
};

struct EstimatorBudget {
    int restarts = 12;          // random inner starts; canonical starts are always added
    int inner_iterations = 200;  // ascent steps per start
    int outer_rounds = 25;       // exchange rounds of the outer search
    int outer_restarts = 4;      // initializations of the outer variable

    void validate() const {
        if (restarts < 0 || inner_iterations <= 0 || outer_rounds <= 0 || outer_restarts <= 0)
            throw UsageError("estimator budget entries must be positive");
    }
};

struct Estimate {
    double value = 0.0;
    SnumberKind kind = SnumberKind::approximation;
    std::string method = "pg-search";  // pg-search | net-oracle | hilbert-exact | dual-reduction
    int restarts = 0;
    std::uint64_t seed = 0;
    bool converged = false;
    int inner_budget = 0;
    std::optional<double> resolution;  // net oracle only
    std::optional<double> error_bar;   // net oracle only
    std::vector<std::string> notes;
    std::optional<EmbeddingSpec> spec;
};

inline nlohmann::json to_json(const Estimate& e) {
    nlohmann::json j = {{"schema_version", 1},
                        {"value", e.value},
                        {"kind", to_string(e.kind)},
                        {"method", e.method},
                        {"restarts", e.restarts},
                        {"seed", e.seed},
                        {"converged", e.converged},
                        {"inner_budget", e.inner_budget},
                        {"notes", e.notes}};
    if (e.resolution) j["resolution"] = *e.resolution;
    if (e.error_bar) j["error_bar"] = *e.error_bar;
    if (e.spec) j["spec"] = to_json(*e.spec);
    return j;
}

// ---------------------------------------------------------------------------
// Inner problem: sup of a homogeneous function over the unit ball of S_p.

namespace inner {

/// f(A) with a (sub)gradient; `convex` marks seminorms, for which the
/// linear-maximization step never decreases f.
struct Objective {
    std::function<double(const Matrix&, Matrix* grad)> eval;
    bool convex = true;
};

struct Result {
    double value = 0.0;  // sup of f(A) / ||A||_p found
    Matrix argmax;
    int iterations = 0;
    bool converged = false;
};

inline constexpr double kStopTol = 1e-8;

/// Canonical starts (E_11 and the identity) followed by `count` random ones
/// cycling through Gaussian, rank-one, orthogonal and rank-two draws.
inline std::vector<Matrix> starts(int N, int count, Rng& rng, const std::vector<Matrix>& extra = {}) {
    std::vector<Matrix> out = {matrix_unit(N, 0, 0), Matrix::Identity(N, N)};
    for (const auto& e : extra) out.push_back(e);
    for (int i = 0; i < count; ++i) {
        switch (i % 4) {
            case 0: out.push_back(gaussian_matrix(N, rng)); break;
            case 1: out.push_back(gaussian_vector(N, rng) * gaussian_vector(N, rng).transpose()); break;
            case 2: out.push_back(haar_orthogonal(N, rng)); break;
            default: {
                const int r = std::min(N, 2);
                out.push_back(gaussian_matrix(N, r, rng) * gaussian_matrix(r, N, rng));
            }
        }
    }
    return out;
}

// Linear-maximization ascent on the unit ball of S_max(p,1). For p < 1 the ball
// of S_1 is the convex hull of the quasi-ball, so a convex f has the same sup.
inline Result lmo_ascent(const Objective& f, const Exponent& p, Matrix a, int iters) {
    const Exponent ball = p.is_banach() ? p : Exponent::rational(1, 1);
    Result r;
    const double na = schatten_norm(a, ball);
    if (na == 0.0) return r;
    a /= na;
    Matrix g;
    double v = f.eval(a, &g);
    for (int it = 0; it < iters; ++it) {
        r.iterations = it + 1;
        if (g.norm() == 0.0) break;
        Matrix next = schatten_ball_maximizer(jacobi_svd(g), ball);
        Matrix gn;
        const double vn = f.eval(next, &gn);
        if (vn <= v * (1.0 + kStopTol)) {
            if (vn > v) a = next, v = vn;
            r.converged = true;
            break;
        }
        a = std::move(next);
        v = vn;
        g = std::move(gn);
    }
    r.value = v;
    r.argmax = a;
    return r;
}

// Backtracking ascent on log f(A) - log ||A||_p; accepts improving steps only.
inline Result ratio_ascent(const Objective& f, const Exponent& p, Matrix a, int iters,
                           const std::function<Matrix(const Matrix&)>& restrict = nullptr) {
    Result r;
    if (restrict) a = restrict(a);
    auto ratio = [&](const Matrix& x, Matrix* grad) {
        const double np = schatten_norm(x, p);
        if (np == 0.0) return 0.0;
        Matrix gf;
        const double fv = f.eval(x, grad ? &gf : nullptr);
        if (grad) {
            if (fv == 0.0) {
                *grad = Matrix::Zero(x.rows(), x.cols());
            } else {
                Matrix gp = schatten_norm_gradient(x, p);
                *grad = gf / fv - gp / np;
                if (restrict) *grad = restrict(*grad);
            }
        }
        return fv / np;
    };
    Matrix g;
    double v = ratio(a, &g);
    double step = 0.25;
    for (int it = 0; it < iters; ++it) {
        r.iterations = it + 1;
        const double gn = g.norm();
        if (gn == 0.0 || step < 1e-9) {
            r.converged = true;
            break;
        }
        const double scale = a.norm() / gn;
        bool moved = false;
        while (step >= 1e-9) {
            Matrix trial = a + step * scale * g;
            trial /= trial.norm();
            Matrix gt;
            const double vt = ratio(trial, &gt);
            if (vt > v) {
                const double gain = (vt - v) / std::max(v, 1e-300);
                a = std::move(trial);
                v = vt;
                g = std::move(gt);
                step = std::min(1.0, step * 2.0);
                moved = true;
                if (gain < kStopTol) r.converged = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved || r.converged) {
            r.converged = true;
            break;
        }
    }
    r.value = v;
    r.argmax = a / std::max(schatten_norm(a, p), 1e-300);
    return r;
}

/// Best value of f(A)/||A||_p over the given starts.
inline Result maximize(const Objective& f, const Exponent& p, const std::vector<Matrix>& from, int iters) {
    Result best;
    best.value = -1.0;
    int converged = 0;
    for (const auto& s : from) {
        if (s.norm() == 0.0) continue;
        Result r = f.convex ? lmo_ascent(f, p, s, iters) : ratio_ascent(f, p, s, iters);
        if (f.convex && p.reciprocal() > 0.0 && p.reciprocal() < 1.0) {
            // smooth interior of the ball: polish with the ratio ascent
            Result polish = ratio_ascent(f, p, r.argmax, iters);
            if (polish.value > r.value) r = polish;
        }
        converged += r.converged;
        if (r.value > best.value) best = r;
    }
    best.value = std::max(best.value, 0.0);
    best.converged = converged > 0;
    return best;
}

}  // namespace inner

/// ||T A||_q as an inner objective.
inline inner::Objective operator_objective(const OperatorOnMatrices& t, const Exponent& q) {
    inner::Objective f;
    f.convex = q.is_banach();
    f.eval = [t, q](const Matrix& a, Matrix* grad) {
        Matrix ta = t.apply(a);
        Svd svd = jacobi_svd(ta);
        const double v = schatten_norm(svd, q);
        if (grad) *grad = unvec(t.rep.transpose() * vec(schatten_norm_gradient(svd, q)), t.N);
        return v;
    };
    return f;
}

/// Lower-biased estimate of sup{||T A||_q : ||A||_p <= 1}. The canonical
/// starts E_11 and I are always tried, then `budget.restarts` seeded ones.
inline Estimate operator_norm_estimate(const OperatorOnMatrices& t, const Exponent& p, const Exponent& q,
                                       const EstimatorBudget& budget, std::uint64_t seed) {
    budget.validate();
    t.validate();
    Rng rng(derive_seed(seed, 0x0E));
    auto f = operator_objective(t, q);
    auto r = inner::maximize(f, p, inner::starts(t.N, budget.restarts, rng), budget.inner_iterations);
    Estimate e;
    e.value = r.value;
    e.kind = SnumberKind::approximation;
    e.method = "pg-search";
    e.restarts = budget.restarts;
    e.seed = seed;
    e.converged = r.converged;
    e.inner_budget = budget.inner_iterations;
    e.notes.push_back("operator norm (s_1)");
    return e;
}

/// Singular values of the N^2 x N^2 representation: all s-numbers of T: S_2 -> S_2.
inline std::vector<double> hilbert_exact(const OperatorOnMatrices& t) {
    t.validate();
    Svd svd = jacobi_svd(t.rep);
    return {svd.s.data(), svd.s.data() + svd.s.size()};
}

// ---------------------------------------------------------------------------
// Best approximation in S_q from a subspace, by iteratively reweighted least squares.

namespace detail {

struct Distance {
    double value;
    Vector y;     // coefficients of the best approximation
    Matrix grad;  // gradient of ||.||_q at the residual
};

inline double schatten_of(const Matrix& r, const Exponent& q) { return schatten_norm(r, q); }

// W = (R Rᵀ / s1² + eps I)^((qv-2)/2), a left weight with tr(Rᵀ W R) ∝ ||R||_q^q at eps = 0.
inline Matrix irls_weight(const Matrix& r, double qv, double eps) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(r * r.transpose());
    Vector lam = es.eigenvalues().cwiseMax(0.0);
    const double top = std::max(lam.maxCoeff(), 1e-300);
    Vector w(lam.size());
    for (int i = 0; i < lam.size(); ++i) w(i) = std::pow(lam(i) / top + eps, (qv - 2.0) / 2.0);
    return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
}

inline Vector weighted_ls(const std::vector<Matrix>& basis, const Matrix& x, const Matrix& w) {
    const int r = static_cast<int>(basis.size());
    Matrix m(r, r);
    Vector b(r);
    std::vector<Matrix> wb(r);
    for (int i = 0; i < r; ++i) wb[i] = w * basis[i];
    for (int i = 0; i < r; ++i) {
        b(i) = (basis[i].array() * (w * x).array()).sum();
        for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = (basis[i].array() * wb[j].array()).sum();
    }
    const double ridge = 1e-10 * std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
    m.diagonal().array() += ridge;
    return m.ldlt().solve(b);
}

inline Matrix combine(const std::vector<Matrix>& basis, const Vector& y, int N) {
    Matrix s = Matrix::Zero(N, N);
    for (std::size_t i = 0; i < basis.size(); ++i) s += y(static_cast<int>(i)) * basis[i];
    return s;
}

/// min_y ||X - Σ y_i B_i||_q with the basis orthonormal in the Frobenius inner product.
inline Distance distance_to_span(const Matrix& x, const std::vector<Matrix>& basis, const Exponent& q,
                                 const Vector* warm = nullptr) {
    const int N = static_cast<int>(x.rows());
    const int r = static_cast<int>(basis.size());
    Distance d;
    auto finish = [&](Vector y) {
        Matrix res = x - combine(basis, y, N);
        Svd svd = jacobi_svd(res);
        d.value = schatten_norm(svd, q);
        d.grad = schatten_norm_gradient(svd, q);
        d.y = std::move(y);
        return d;
    };
    if (r == 0) return finish(Vector::Zero(0));
    Vector ls(r);
    for (int i = 0; i < r; ++i) ls(i) = (basis[i].array() * x.array()).sum();
    if (q.reciprocal() == 0.5) return finish(ls);

    auto value_at = [&](const Vector& y) { return schatten_of(x - combine(basis, y, N), q); };
    Vector best = Vector::Zero(r);
    double best_v = value_at(best);
    auto consider = [&](const Vector& y) {
        const double v = value_at(y);
        if (v < best_v) best_v = v, best = y;
    };
    consider(ls);
    if (warm && warm->size() == r) consider(*warm);

    std::vector<double> schedule;
    if (q.is_infinite()) {
        schedule = {4, 8, 16, 32, 64, 128};
    } else {
        schedule = {q.value()};
    }
    Vector y = best;
    int total = 0;
    for (double qv : schedule) {
        double eps = 1e-2;
        double prev = std::numeric_limits<double>::infinity();
        for (int it = 0; it < 500 && total < 2000; ++it, ++total) {
            Matrix res = x - combine(basis, y, N);
            if (res.norm() == 0.0) break;
            y = weighted_ls(basis, x, irls_weight(res, qv, eps));
            consider(y);
            const double cur = value_at(y);
            if (eps <= 1e-10 && std::abs(prev - cur) <= 1e-8 * std::max(cur, 1e-300)) break;
            prev = cur;
            eps = std::max(eps * 0.3, 1e-10);
        }
    }
    return finish(best);
}

inline std::vector<Matrix> orthonormal_basis(const Matrix& cols, int N) {
    // Frobenius-orthonormal basis of the column span (columns are vec'd matrices).
    std::vector<Matrix> out;
    if (cols.cols() == 0) return out;
    Eigen::HouseholderQR<Matrix> qr(cols);
    Matrix q = qr.householderQ() * Matrix::Identity(cols.rows(), cols.cols());
    for (int i = 0; i < q.cols(); ++i) out.push_back(unvec(q.col(i), N));
    return out;
}

inline Matrix orthonormalize(const Matrix& cols) {
    if (cols.cols() == 0) return cols;
    Eigen::HouseholderQR<Matrix> qr(cols);
    return qr.householderQ() * Matrix::Identity(cols.rows(), cols.cols());
}

/// Rank-r truncation of a square matrix.
inline Matrix truncate_rank(const Matrix& m, int r) {
    if (r <= 0) return Matrix::Zero(m.rows(), m.cols());
    Svd svd = jacobi_svd(m);
    const int k = std::min<int>(r, static_cast<int>(svd.s.size()));
    return svd.u.leftCols(k) * svd.s.head(k).asDiagonal() * svd.v.leftCols(k).transpose();
}

/// Frobenius-orthonormal vec-basis of the span of the first r matrix units in
/// column-major order: the first floor(r/N) columns and part of the next.
inline Matrix column_units(int N, int r) { return Matrix::Identity(N * N, N * N).leftCols(r); }

}  // namespace detail

/// dist_q(T A, span E) as an inner objective.
inline inner::Objective quotient_objective(const OperatorOnMatrices& t, const std::vector<Matrix>& basis,
                                           const Exponent& q) {
    inner::Objective f;
    f.convex = q.is_banach();
    auto warm = std::make_shared<Vector>();
    f.eval = [t, basis, q, warm](const Matrix& a, Matrix* grad) {
        auto d = detail::distance_to_span(t.apply(a), basis, q, warm.get());
        *warm = d.y;
        if (grad) *grad = unvec(t.rep.transpose() * vec(d.grad), t.N);
        return d.value;
    };
    return f;
}

// ---------------------------------------------------------------------------
// Shared pieces of the outer searches.

namespace detail {

struct ActiveSet {
    std::vector<Matrix> members;  // unit-p-norm matrices
    void add(const Matrix& a, std::size_t cap = 120) {
        members.push_back(a);
        if (members.size() > cap) members.erase(members.begin() + 2);  // keep the two earliest
    }
};

// Log-sum-exp smoothed max of ||(T - L) A_j||_q over the active set, with gradient in L.
inline double smoothed_max(const OperatorOnMatrices& t, const Matrix& l, const ActiveSet& s, const Exponent& q,
                           double tau, Matrix* grad, double* hard_max) {
    const int N = t.N;
    std::vector<double> vals(s.members.size());
    std::vector<Matrix> gs(s.members.size());
    double vmax = 0.0;
    const Matrix diff = t.rep - l;
    for (std::size_t j = 0; j < s.members.size(); ++j) {
        Svd svd = jacobi_svd(unvec(diff * vec(s.members[j]), N));
        vals[j] = schatten_norm(svd, q);
        if (grad) gs[j] = schatten_norm_gradient(svd, q);
        vmax = std::max(vmax, vals[j]);
    }
    if (hard_max) *hard_max = vmax;
    double z = 0.0;
    for (double v : vals) z += std::exp((v - vmax) / tau);
    if (grad) {
        grad->setZero(l.rows(), l.cols());
        for (std::size_t j = 0; j < vals.size(); ++j) {
            const double w = std::exp((vals[j] - vmax) / tau) / z;
            if (w < 1e-12) continue;
            *grad -= w * vec(gs[j]) * vec(s.members[j]).transpose();
        }
    }
    return vmax + tau * std::log(z);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Gelfand and Kolmogorov numbers: searches over subspaces.

struct SubspaceSearchResult {
    double value;
    Matrix basis;  // D x r, orthonormal columns
    bool converged;
};

namespace detail {

inline double active_max(const std::function<double(const Matrix& basis_cols, const Matrix& a, std::size_t j)>& h,
                         const Matrix& b, const ActiveSet& s) {
    double m = 0.0;
    for (std::size_t j = 0; j < s.members.size(); ++j) m = std::max(m, h(b, s.members[j], j));
    return m;
}

// (1+1)-evolution strategy with the one-fifth success rule on an orthonormal D x r basis,
// alternating with full inner solves that extend the active set.
inline SubspaceSearchResult subspace_search(
    int D, int r, const std::vector<Matrix>& inits, const EstimatorBudget& budget, Rng& rng,
    const std::function<double(const Matrix& b, const Matrix& a, std::size_t j)>& h,
    const std::function<double(const Matrix& b, int restarts, const std::vector<Matrix>& warm, Matrix* argmax)>& full) {
    double best = std::numeric_limits<double>::infinity();
    Matrix best_b = inits.front();
    bool converged = false;
    for (const auto& init : inits) {
        Matrix b = orthonormalize(init);
        ActiveSet s;
        Matrix worst;
        double cur = full(b, budget.restarts, {}, &worst);
        s.add(worst);
        if (cur < best) best = cur, best_b = b;
        double sigma = 0.3;
        double last = cur;
        for (int round = 0; round < budget.outer_rounds; ++round) {
            double fb = active_max(h, b, s);
            for (int step = 0; step < 20; ++step) {
                Matrix trial = orthonormalize(b + sigma * gaussian_matrix(D, r, rng));
                const double ft = active_max(h, trial, s);
                if (ft < fb) {
                    b = std::move(trial);
                    fb = ft;
                    sigma = std::min(sigma * 1.5, 1.0);
                } else {
                    sigma = std::max(sigma * 0.9, 1e-4);
                }
            }
            cur = full(b, budget.restarts, {s.members.back()}, &worst);
            s.add(worst);
            if (cur < best) best = cur, best_b = b;
            if (std::abs(cur - last) <= 1e-6 * std::max(cur, 1e-12) && sigma <= 1e-3) {
                converged = true;
                break;
            }
            last = cur;
        }
    }
    const double final_v = full(best_b, 4 * budget.restarts + 8, {}, nullptr);
    return {std::max(final_v, 0.0), best_b, converged};
}

}  // namespace detail

namespace inner {

/// sup over A in the span of the columns of `complement` of ||M A||_a / ||A||_b.
struct SubspaceProblem {
    Matrix m;           // D x D, acts on vec(A)
    Matrix complement;  // D x k, orthonormal columns
    Exponent a, b;
    int N = 1;
};

// Exponents 1 and inf are kinks of the norm; the ascent runs through smooth
// surrogates first and finishes on the true exponents.
inline constexpr int kSmoothingLevels = 4;

inline Exponent smoothed(const Exponent& e, int level) {
    static constexpr double delta[kSmoothingLevels] = {0.5, 0.2, 0.05, 0.01};
    static constexpr double big[kSmoothingLevels] = {4, 8, 32, 128};
    if (level >= kSmoothingLevels) return e;
    if (e.reciprocal() == 1.0) return Exponent::from_value(1.0 + delta[level]);
    if (e.is_infinite()) return Exponent::from_value(big[level]);
    return e;
}

inline double subspace_ratio(const SubspaceProblem& pr, const Exponent& a, const Exponent& b, const Vector& z,
                             Vector* grad) {
    const Vector x = pr.complement * z;
    const Vector mx = pr.m * x;
    Svd sb = jacobi_svd(unvec(x, pr.N));
    const double nb = schatten_norm(sb, b);
    if (nb == 0.0) {
        if (grad) grad->setZero(z.size());
        return 0.0;
    }
    Svd sa = jacobi_svd(unvec(mx, pr.N));
    const double na = schatten_norm(sa, a);
    if (grad) {
        if (na == 0.0) {
            grad->setZero(z.size());
        } else {
            *grad = pr.complement.transpose() * (pr.m.transpose() * vec(schatten_norm_gradient(sa, a)) / na -
                                                 vec(schatten_norm_gradient(sb, b)) / nb);
        }
    }
    return na / nb;
}

// Backtracking ascent of a degree-zero homogeneous function of z.
inline double ascend(const std::function<double(const Vector&, Vector*)>& f, Vector& z, int iters, int* used) {
    Vector g;
    double v = f(z, &g);
    double step = 0.25;
    for (int it = 0; it < iters; ++it) {
        ++*used;
        const double gn = g.norm();
        if (gn == 0.0) break;
        const double scale = z.norm() / gn;
        bool moved = false;
        while (step >= 1e-9) {
            Vector trial = z + step * scale * g;
            trial /= trial.norm();
            Vector gt;
            const double vt = f(trial, &gt);
            if (vt > v) {
                const double gain = (vt - v) / std::max(v, 1e-300);
                z = std::move(trial);
                v = vt;
                g = std::move(gt);
                step = std::min(1.0, step * 2.0);
                moved = gain >= kStopTol;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    return v;
}

inline Result subspace_sup(const SubspaceProblem& pr, const std::vector<Matrix>& from, int iters, Rng& rng,
                           int random_extra) {
    const int k = static_cast<int>(pr.complement.cols());
    Result best;
    best.value = -1.0;
    if (k == 0) {
        best.value = 0.0;
        best.argmax = Matrix::Zero(pr.N, pr.N);
        best.converged = true;
        return best;
    }
    std::vector<Vector> zs;
    for (const auto& s : from) {
        Vector z = pr.complement.transpose() * vec(s);
        if (z.norm() > 1e-9 * std::max(1.0, s.norm())) zs.push_back(z / z.norm());
    }
    for (int i = 0; i < random_extra; ++i) zs.push_back(random_unit_vector(k, rng));
    const bool kinked = pr.a.reciprocal() == 1.0 || pr.a.is_infinite() || pr.b.reciprocal() == 1.0 ||
                        pr.b.is_infinite();
    const int first_level = kinked ? 0 : kSmoothingLevels;
    const int per_level = std::max(10, iters / (kinked ? kSmoothingLevels + 1 : 1));
    for (Vector z : zs) {
        int used = 0;
        for (int level = first_level; level <= kSmoothingLevels; ++level) {
            const Exponent a = smoothed(pr.a, level), b = smoothed(pr.b, level);
            ascend([&](const Vector& y, Vector* g) { return subspace_ratio(pr, a, b, y, g); }, z, per_level, &used);
        }
        const double v = subspace_ratio(pr, pr.a, pr.b, z, nullptr);
        if (v > best.value) {
            best.value = v;
            best.argmax = unvec(pr.complement * z, pr.N);
            best.iterations = used;
        }
    }
    best.value = std::max(best.value, 0.0);
    best.converged = true;
    return best;
}

}  // namespace inner

namespace detail {

inline Matrix complement_of(const Matrix& w) {
    const int D = static_cast<int>(w.rows());
    if (w.cols() == 0) return Matrix::Identity(D, D);
    Eigen::HouseholderQR<Matrix> qr(w);
    Matrix q = qr.householderQ();
    return q.rightCols(D - w.cols());
}

}  // namespace detail

/// inf over subspaces W of dimension r of sup_{A ⟂ W} ||M A||_a / ||A||_b.
/// With M = T, (a, b) = (q, p) this is the Gelfand number c_{r+1}(T). With
/// M = Tᵀ and (a, b) = (p*, q*) it is the Kolmogorov number d_{r+1}(T), because
/// the sup of dist_q(TA, E) over the p-ball equals the sup of ||TᵀG||_{p*}
/// over G ⟂ E with ||G||_{q*} <= 1.
inline SubspaceSearchResult codimension_search(const Matrix& m, int N, const Exponent& a, const Exponent& b, int r,
                                               const EstimatorBudget& budget, std::uint64_t seed) {
    budget.validate();
    const int D = N * N;
    Rng rng(derive_seed(seed, 0xC1));
    auto full = [&](const Matrix& w, int restarts, const std::vector<Matrix>& warm, Matrix* argmax) {
        inner::SubspaceProblem pr{m, detail::complement_of(w), a, b, N};
        auto res = inner::subspace_sup(pr, inner::starts(N, restarts, rng, warm), budget.inner_iterations, rng,
                                       restarts / 2);
        if (argmax) *argmax = res.argmax;
        return res.value;
    };
    if (r == 0) return {full(Matrix::Zero(D, 0), 4 * budget.restarts, {}, nullptr), Matrix::Zero(D, 0), true};
    auto h = [&](const Matrix& w, const Matrix& x, std::size_t) {
        Vector v = vec(x);
        v -= w * (w.transpose() * v);
        const Matrix y = unvec(v, N);
        const double nb = schatten_norm(y, b);
        return nb > 1e-12 * std::max(1.0, x.norm()) ? schatten_norm(unvec(m * v, N), a) / nb : 0.0;
    };
    std::vector<Matrix> inits;
    inits.push_back(detail::column_units(N, r));
    {
        Svd svd = jacobi_svd(m);  // remove the most amplified input directions
        inits.push_back(svd.v.leftCols(r));
    }
    while (static_cast<int>(inits.size()) < budget.outer_restarts + 1) inits.push_back(gaussian_matrix(D, r, rng));
    return detail::subspace_search(D, r, inits, budget, rng, h, full);
}

/// Kolmogorov search with an explicit best approximation in S_q (IRLS); used
/// for q < 1, where the dual description of the quotient is not available.
inline SubspaceSearchResult kolmogorov_primal_search(const OperatorOnMatrices& t, const Exponent& p,
                                                     const Exponent& q, std::int64_t n,
                                                     const EstimatorBudget& budget, std::uint64_t seed) {
    budget.validate();
    const int N = t.N, D = N * N;
    const int r = static_cast<int>(n - 1);
    Rng rng(derive_seed(seed, 0xD1));
    auto full = [&](const Matrix& b, int restarts, const std::vector<Matrix>& warm, Matrix* argmax) {
        auto basis = detail::orthonormal_basis(b, N);
        auto f = quotient_objective(t, basis, q);
        auto res = inner::maximize(f, p, inner::starts(N, restarts, rng, warm), budget.inner_iterations);
        if (argmax) *argmax = res.argmax;
        return res.value;
    };
    if (r == 0) return {full(Matrix::Zero(D, 0), 4 * budget.restarts, {}, nullptr), Matrix::Zero(D, 0), true};

    std::vector<Vector> warm_y;  // per active member, reused across basis perturbations
    auto h = [&](const Matrix& b, const Matrix& a, std::size_t j) {
        if (warm_y.size() <= j) warm_y.resize(j + 1);
        auto basis = detail::orthonormal_basis(b, N);
        auto d = detail::distance_to_span(t.apply(a), basis, q, &warm_y[j]);
        warm_y[j] = d.y;
        const double np = schatten_norm(a, p);
        return np > 0.0 ? d.value / np : 0.0;
    };
    std::vector<Matrix> inits;
    inits.push_back(jacobi_svd(t.rep).u.leftCols(r));
    inits.push_back(detail::column_units(N, r));
    while (static_cast<int>(inits.size()) < budget.outer_restarts + 1) inits.push_back(gaussian_matrix(D, r, rng));
    return detail::subspace_search(D, r, inits, budget, rng, h, full);
}

inline SubspaceSearchResult kolmogorov_search(const OperatorOnMatrices& t, const Exponent& p, const Exponent& q,
                                              std::int64_t n, const EstimatorBudget& budget, std::uint64_t seed) {
    t.validate();
    if (!q.is_banach()) return kolmogorov_primal_search(t, p, q, n, budget, seed);
    const Exponent pb = p.is_banach() ? p : Exponent::rational(1, 1);
    return codimension_search(t.rep.transpose(), t.N, pb.dual(), q.dual(), static_cast<int>(n - 1), budget, seed);
}

inline SubspaceSearchResult gelfand_search(const OperatorOnMatrices& t, const Exponent& p, const Exponent& q,
                                           std::int64_t n, const EstimatorBudget& budget, std::uint64_t seed) {
    t.validate();
    return codimension_search(t.rep, t.N, q, p, static_cast<int>(n - 1), budget, seed);
}

inline Estimate estimate_kolmogorov(const EmbeddingSpec& s, const EstimatorBudget& budget, std::uint64_t seed) {
    s.validate();
    const auto n = s.index();
    Estimate e;
    e.kind = SnumberKind::kolmogorov;
    e.spec = s;
    e.seed = seed;
    e.restarts = budget.restarts;
    e.inner_budget = budget.inner_iterations;
    if (!s.p.is_banach() && s.q.is_banach())
        e.notes.push_back("p<1 reduced to p=1 (d_n does not depend on p <= 1 when q >= 1)");
    if (!s.q.is_banach()) e.notes.push_back("experimental: q<1 codomain, IRLS best approximation");
    auto r = kolmogorov_search(OperatorOnMatrices::identity(s.N), s.p, s.q, n, budget, seed);
    e.value = r.value;
    e.converged = r.converged;
    return e;
}

inline Estimate estimate_gelfand(const EmbeddingSpec& s, const EstimatorBudget& budget, std::uint64_t seed) {
    s.validate();
    const auto n = s.index();
    if (s.p.is_banach() && s.q.is_banach()) {
        // c_n(S_p -> S_q) = d_n(S_{q*} -> S_{p*})
        Estimate e = estimate_kolmogorov(s.dual(), budget, seed);
        e.kind = SnumberKind::gelfand;
        e.method = "dual-reduction";
        e.spec = s;
        e.notes.insert(e.notes.begin(),
                       "computed as d_n(S_" + s.q.dual().to_string() + " -> S_" + s.p.dual().to_string() + ")");
        return e;
    }
    Estimate e;
    e.kind = SnumberKind::gelfand;
    e.method = "pg-search";
    e.spec = s;
    e.seed = seed;
    e.restarts = budget.restarts;
    e.inner_budget = budget.inner_iterations;
    e.notes.push_back("experimental: direct codimension search (no duality below p=1 or q=1)");
    auto r = gelfand_search(OperatorOnMatrices::identity(s.N), s.p, s.q, n, budget, seed);
    e.value = r.value;
    e.converged = r.converged;
    return e;
}

// ---------------------------------------------------------------------------
// Approximation numbers: inf over rank(L) < n of ||T - L||_{p -> q}.

struct ApproxSearchResult {
    double value;
    Matrix best_map;  // the rank-(n-1) L
    bool converged;
};

/// Minimax search for a_n(T: S_p -> S_q). Exposed for general T (the Hilbert
/// cross-check uses random T); `estimate_approx` wraps it for the identity.
inline ApproxSearchResult approx_search(const OperatorOnMatrices& t, const Exponent& p, const Exponent& q,
                                        std::int64_t n, const EstimatorBudget& budget, std::uint64_t seed) {
    budget.validate();
    const int N = t.N, D = N * N;
    const int r = static_cast<int>(n - 1);
    Rng rng(derive_seed(seed, 0xA1));
    auto full_value = [&](const Matrix& l, int restarts, const std::vector<Matrix>& extra, Matrix* argmax) {
        OperatorOnMatrices diff(t.rep - l, N);
        auto starts = inner::starts(N, restarts, rng, extra);
        auto res = inner::maximize(operator_objective(diff, q), p, starts, budget.inner_iterations);
        if (argmax) *argmax = res.argmax;
        return res.value;
    };
    if (r == 0) return {full_value(Matrix::Zero(D, D), 4 * budget.restarts, {}, nullptr), Matrix::Zero(D, D), true};

    std::vector<Matrix> inits;
    inits.push_back(Matrix::Zero(D, D));
    inits.push_back(detail::truncate_rank(t.rep, r));
    {
        Matrix c = detail::column_units(N, r);
        inits.push_back(c * c.transpose() * t.rep);
    }
    if (q.is_banach()) {
        // Projections found by the subspace searches: T P_F is optimal when the
        // domain is Hilbert (a_n = c_n), P_E T when the codomain is (a_n = d_n).
        const Exponent pb = p.is_banach() ? p : Exponent::rational(1, 1);
        Matrix w = gelfand_search(t, pb, q, n, budget, derive_seed(seed, 1)).basis;
        inits.push_back(t.rep * w * w.transpose());
        Matrix e = kolmogorov_search(t, pb, q, n, budget, derive_seed(seed, 2)).basis;
        inits.push_back(e * e.transpose() * t.rep);
    }
    const std::size_t structured = inits.size();
    for (int i = 0; inits.size() < structured + budget.outer_restarts && i < 4 * budget.outer_restarts; ++i) {
        Matrix c = detail::orthonormalize(gaussian_matrix(D, r, rng));
        inits.push_back(c * c.transpose() * t.rep);
    }

    double best = std::numeric_limits<double>::infinity();
    Matrix best_l = inits.front();
    bool converged = false;
    for (const auto& init : inits) {
        Matrix l = init;
        detail::ActiveSet s;
        Matrix worst;
        double cur = full_value(l, budget.restarts, {}, &worst);
        s.add(worst);
        if (cur < best) best = cur, best_l = l;
        double eta = 0.2;
        double tau = 0.02 * std::max(cur, 1e-12);
        double last_round = cur;
        for (int round = 0; round < budget.outer_rounds; ++round) {
            for (int step = 0; step < 10; ++step) {
                Matrix g;
                double hard;
                const double phi = detail::smoothed_max(t, l, s, q, tau, &g, &hard);
                const double gn = g.norm();
                if (gn == 0.0) break;
                bool ok = false;
                for (int bt = 0; bt < 25; ++bt) {
                    Matrix trial = detail::truncate_rank(l - (eta / gn) * g, r);
                    const double pt = detail::smoothed_max(t, trial, s, q, tau, nullptr, nullptr);
                    if (pt < phi) {
                        l = std::move(trial);
                        eta = std::min(eta * 1.5, 2.0);
                        ok = true;
                        break;
                    }
                    eta *= 0.5;
                }
                if (!ok) break;
            }
            std::vector<Matrix> warm = {s.members.back()};
            cur = full_value(l, budget.restarts, warm, &worst);
            s.add(worst);
            if (cur < best) best = cur, best_l = l;
            tau = std::max(tau * 0.7, 1e-5 * std::max(cur, 1e-12));
            if (std::abs(last_round - cur) <= 1e-6 * std::max(cur, 1e-12) && tau <= 1e-4 * cur) {
                converged = true;
                break;
            }
            last_round = cur;
        }
    }
    // a stronger evaluation of the final candidate removes most of the inner bias
    const double final_v = full_value(best_l, 4 * budget.restarts + 8, {}, nullptr);
    return {std::max(final_v, 0.0), best_l, converged};
}

inline Estimate estimate_approx(const EmbeddingSpec& s, const EstimatorBudget& budget, std::uint64_t seed) {
    s.validate();
    const auto n = s.index();
    Estimate e;
    e.kind = SnumberKind::approximation;
    e.spec = s;
    e.seed = seed;
    e.restarts = budget.restarts;
    e.inner_budget = budget.inner_iterations;
    Exponent p = s.p;
    if (!p.is_banach() && s.q.is_banach()) {
        p = Exponent::rational(1, 1);
        e.notes.push_back("p<1 reduced to p=1 (a_n does not depend on p <= 1 when q >= 1)");
    }
    if (!s.q.is_banach()) e.notes.push_back("experimental: q<1 codomain, non-convex inner problem");
    auto r = approx_search(OperatorOnMatrices::identity(s.N), p, s.q, n, budget, seed);
    e.value = r.value;
    e.converged = r.converged;
    return e;
}

inline Estimate estimate(SnumberKind kind, const EmbeddingSpec& s, const EstimatorBudget& budget, std::uint64_t seed) {
    switch (kind) {
        case SnumberKind::approximation: return estimate_approx(s, budget, seed);
        case SnumberKind::gelfand: return estimate_gelfand(s, budget, seed);
        case SnumberKind::kolmogorov: return estimate_kolmogorov(s, budget, seed);
        case SnumberKind::recovery: break;
    }
    throw UsageError("recovery errors are estimated by the recovery module");
}

}  // namespace snumbers
