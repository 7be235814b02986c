#pragma once

// Low-rank recovery from Gaussian measurements with a nuclear-norm decoder.
//
// worst_case_error samples the unit ball of S_p and reports the largest S_q
// error of the decoder. This is a lower estimate of the worst case for this
// decoder, and the decoder is only one of all possible ones.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <json.hpp>

#include "snumbers/envelope.hpp"
#include "snumbers/schatten.hpp"

namespace snumbers {

/// The map X -> (<A_1, X>, ..., <A_m, X>), stored as an m x N^2 matrix whose
/// rows are vec(A_i).
struct InfoMap {
    Matrix rows;
    int N = 1;
    std::uint64_t seed = 0;

    int m() const { return static_cast<int>(rows.rows()); }
    Matrix measurement(int i) const { return unvec(rows.row(i).transpose(), N); }

    void validate() const {
        if (N < 1) throw InputError("information map: N must be >= 1");
        if (rows.cols() != N * N) throw InputError("information map: rows must have N^2 entries");
        if (m() < 1) throw InputError("information map: m must be >= 1");
    }
};

/// Build a map from explicit measurement matrices.
inline InfoMap make_info_map(const std::vector<Matrix>& ms) {
    if (ms.empty()) throw InputError("information map: need at least one measurement");
    InfoMap map;
    map.N = static_cast<int>(ms.front().rows());
    map.rows.resize(static_cast<int>(ms.size()), map.N * map.N);
    for (std::size_t i = 0; i < ms.size(); ++i) {
        if (ms[i].rows() != map.N || ms[i].cols() != map.N)
            throw InputError("information map: all measurements must be N x N");
        map.rows.row(static_cast<int>(i)) = vec(ms[i]).transpose();
    }
    return map;
}

/// i.i.d. N(0, 1/m) entries.
inline InfoMap gaussian_info_map(int N, int m, std::uint64_t seed) {
    if (m < 1) throw InputError("information map: m must be >= 1");
    Rng rng(derive_seed(seed, 0x1F0));
    InfoMap map;
    map.N = N;
    map.seed = seed;
    map.rows = gaussian_matrix(m, N * N, rng, 1.0 / std::sqrt(static_cast<double>(m)));
    map.validate();
    return map;
}

inline Vector apply_info_map(const InfoMap& map, const Matrix& x) {
    map.validate();
    if (x.rows() != map.N || x.cols() != map.N) throw InputError("apply_info_map: X must be N x N");
    return map.rows * vec(x);
}

// ---------------------------------------------------------------------------
// Decoder

struct DecoderOptions {
    double tol = 1e-6;            // on ||A(Z) - y||_2
    int max_iterations = 40000;   // total proximal-gradient steps over all stages
    int stage_iterations = 3000;  // per penalty value
    double step_tol = 1e-7;       // relative change that ends a stage
};

struct DecoderResult {
    Matrix z;
    double residual = 0.0;
    double multiplier = 0.0;  // weight of the nuclear norm in the solved penalty problem
    int iterations = 0;
    bool converged = false;
};

namespace detail {

inline Matrix singular_value_threshold(const Matrix& x, double t) {
    // Shrinkage acts only on singular values above t, so the eigenvectors of
    // XᵀX suffice: SVT(X) = X V diag(1 - t/s) Vᵀ over s > t. Squaring loses
    // accuracy for values far below the top one, hence the Jacobi fallback.
    Eigen::SelfAdjointEigenSolver<Matrix> es(x.transpose() * x);
    const Vector ev = es.eigenvalues().cwiseMax(0.0);
    const double top = std::sqrt(ev(ev.size() - 1));
    if (top <= t) return Matrix::Zero(x.rows(), x.cols());
    if (t < 1e-6 * top) {
        Svd svd = jacobi_svd(x);
        Vector s = (svd.s.array() - t).cwiseMax(0.0);
        int r = 0;
        while (r < s.size() && s(r) > 0.0) ++r;
        return svd.u.leftCols(r) * s.head(r).asDiagonal() * svd.v.leftCols(r).transpose();
    }
    const int n = static_cast<int>(ev.size());
    int r = 0;
    while (r < n && std::sqrt(ev(n - 1 - r)) > t) ++r;
    Matrix v = es.eigenvectors().rightCols(r);
    Vector shrink(r);
    for (int i = 0; i < r; ++i) shrink(i) = 1.0 - t / std::sqrt(ev(n - r + i));
    return (x * v) * shrink.asDiagonal() * v.transpose();
}

// FISTA on tau ||Z||_1 + 1/2 ||B(Z) - w||^2 from a warm start, where B has
// orthonormal rows, so the gradient step has unit length.
inline Matrix penalized_solve(const Matrix& b, const Vector& w_data, double tau, Matrix z, int N,
                              const DecoderOptions& opt, int& budget_left, int& used) {
    Matrix w = z;
    double t = 1.0;
    for (int it = 0; it < opt.stage_iterations && budget_left > 0; ++it, --budget_left, ++used) {
        const Vector g = b.transpose() * (b * vec(w) - w_data);
        Matrix next = singular_value_threshold(w - unvec(g, N), tau);
        const double change = (next - z).norm();
        // momentum restart when the step points back against the last move
        if (((w - next).array() * (next - z).array()).sum() > 0.0) t = 1.0;
        const double tn = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
        w = next + ((t - 1.0) / tn) * (next - z);
        z = std::move(next);
        t = tn;
        if (change <= opt.step_tol * std::max(1.0, z.norm())) break;
    }
    return z;
}

}  // namespace detail

/// The same constraint set {Z : A(Z) = y} written with orthonormal rows:
/// B = S A and w = S y with S = (A Aᵀ)^(-1/2) on the range of A Aᵀ.
struct WhitenedMap {
    Matrix rows;       // r x N^2, orthonormal rows
    Matrix transform;  // r x m
};

inline WhitenedMap whiten(const InfoMap& map) {
    map.validate();
    Eigen::SelfAdjointEigenSolver<Matrix> es(map.rows * map.rows.transpose());
    const Vector ev = es.eigenvalues();
    const double top = ev.maxCoeff();
    std::vector<int> keep;
    for (int i = 0; i < ev.size(); ++i)
        if (ev(i) > 1e-12 * top) keep.push_back(i);
    WhitenedMap w;
    w.transform.resize(static_cast<int>(keep.size()), map.m());
    for (std::size_t k = 0; k < keep.size(); ++k)
        w.transform.row(static_cast<int>(k)) = es.eigenvectors().col(keep[k]).transpose() / std::sqrt(ev(keep[k]));
    w.rows = w.transform * map.rows;
    return w;
}

/// Approximately solves min ||Z||_1 subject to A(Z) = y. The penalty weight of
/// the nuclear norm is lowered geometrically (warm starts) until the residual
/// ||A(Z) - y||_2 meets `tol`, then bisected to the largest weight that still
/// meets it. Pass a precomputed `whiten(map)` when decoding many vectors.
inline DecoderResult nuclear_decoder(const InfoMap& map, const Vector& y, const DecoderOptions& opt,
                                     const WhitenedMap& white) {
    map.validate();
    if (y.size() != map.m()) throw InputError("nuclear_decoder: y must have m entries");
    const int N = map.N;
    DecoderResult res;
    res.z = Matrix::Zero(N, N);
    res.residual = y.norm();
    if (res.residual <= opt.tol) {
        res.converged = true;
        return res;
    }
    const Vector w = white.transform * y;
    auto residual = [&](const Matrix& z) { return (map.rows * vec(z) - y).norm(); };
    // Z = 0 solves the penalized problem for every weight >= ||Bᵀ w||_op
    double tau = jacobi_svd(unvec(white.rows.transpose() * w, N)).s(0);
    int budget = opt.max_iterations;
    Matrix z = res.z;
    double tau_bad = tau, tau_good = -1.0;
    Matrix z_good;
    double r_good = 0.0;
    for (int stage = 0; stage < 60 && budget > 0; ++stage) {
        tau *= 0.3;
        z = detail::penalized_solve(white.rows, w, tau, z, N, opt, budget, res.iterations);
        const double r = residual(z);
        if (r <= opt.tol) {
            tau_good = tau;
            z_good = z;
            r_good = r;
            break;
        }
        tau_bad = tau;
    }
    if (tau_good < 0.0) {
        res.z = z;
        res.residual = residual(z);
        res.multiplier = tau;
        return res;  // not converged: flagged, not thrown
    }
    for (int step = 0; step < 8 && budget > 0; ++step) {
        const double mid = std::sqrt(tau_good * tau_bad);
        Matrix zm = detail::penalized_solve(white.rows, w, mid, z_good, N, opt, budget, res.iterations);
        const double r = residual(zm);
        if (r <= opt.tol) {
            tau_good = mid;
            z_good = std::move(zm);
            r_good = r;
        } else {
            tau_bad = mid;
        }
    }
    res.z = std::move(z_good);
    res.residual = r_good;
    res.multiplier = tau_good;
    res.converged = true;
    return res;
}

inline DecoderResult nuclear_decoder(const InfoMap& map, const Vector& y, const DecoderOptions& opt = {}) {
    return nuclear_decoder(map, y, opt, whiten(map));
}

// ---------------------------------------------------------------------------
// Worst-case error over a structured test set

struct RecoveryResult {
    int m = 0;
    int N = 1;
    Exponent p, q;
    std::uint64_t seed = 0;
    double worst_error = 0.0;         // nuclear-norm decoder
    // Returning 0 whatever the data costs max ||X||_q over the same test set.
    // A scheme allowed to pick the better of the two decoders in advance
    // achieves min(worst_error, zero_decoder_error).
    double zero_decoder_error = 0.0;
    double scheme_error = 0.0;
    std::vector<double> errors;       // per test matrix
    std::vector<std::string> labels;  // family of each test matrix
    int total_iterations = 0;
    double max_residual = 0.0;
    bool all_converged = true;
    std::string note = "lower estimate of the worst case for the nuclear-norm decoder";
};

inline nlohmann::json to_json(const RecoveryResult& r) {
    return {{"schema_version", 1},
            {"m", r.m},
            {"N", r.N},
            {"p", r.p.to_string()},
            {"q", r.q.to_string()},
            {"seed", r.seed},
            {"worst_error", r.worst_error},
            {"zero_decoder_error", r.zero_decoder_error},
            {"scheme_error", r.scheme_error},
            {"errors", r.errors},
            {"labels", r.labels},
            {"decoder", {{"iterations", r.total_iterations}, {"max_residual", r.max_residual},
                         {"all_converged", r.all_converged}}},
            {"note", r.note}};
}

namespace detail {

inline Matrix unit_in(const Matrix& x, const Exponent& p) {
    const double n = schatten_norm(x, p);
    return n > 0.0 ? Matrix(x / n) : x;
}

// Ascent of ||X||_q / ||X||_p over the kernel of the map. For such X every
// decoder sees y = 0, so the error is the ratio itself.
inline Matrix kernel_probe(const InfoMap& map, const Eigen::LLT<Matrix>& gram, const Exponent& p, const Exponent& q,
                           Matrix x, int iters) {
    const int N = map.N;
    auto project = [&](const Matrix& a) {
        Vector v = vec(a);
        v -= map.rows.transpose() * gram.solve(map.rows * v);
        return unvec(v, N);
    };
    x = project(x);
    // p = 1 is a kink of the denominator; ascend through slightly larger exponents first
    std::vector<Exponent> stages;
    if (p.reciprocal() == 1.0) stages = {Exponent::from_value(1.2), Exponent::from_value(1.05)};
    stages.push_back(p);
    for (const auto& ps : stages) {
        auto ratio = [&](const Matrix& a) {
            const double np = schatten_norm(a, ps);
            return np > 0.0 ? schatten_norm(a, q) / np : 0.0;
        };
        double v = ratio(x);
        double step = 0.25;
        for (int it = 0; it < iters && step > 1e-8; ++it) {
            Svd sx = jacobi_svd(x);
            const double np = schatten_norm(sx, ps), nq = schatten_norm(sx, q);
            if (np == 0.0 || nq == 0.0) break;
            Matrix g = project(schatten_norm_gradient(sx, q) / nq - schatten_norm_gradient(sx, ps) / np);
            const double gn = g.norm();
            if (gn == 0.0) break;
            bool moved = false;
            while (step > 1e-8) {
                Matrix trial = x + step * (x.norm() / gn) * g;
                const double vt = ratio(trial);
                if (vt > v) {
                    moved = (vt - v) > 1e-10 * v;
                    x = trial / trial.norm();
                    v = vt;
                    step = std::min(1.0, step * 2.0);
                    break;
                }
                step *= 0.5;
            }
            if (!moved) break;
        }
    }
    return x;
}

}  // namespace detail

/// Largest S_q error of the nuclear-norm decoder over test matrices of unit
/// S_p norm: rank-one extreme points, flat spectra, random mixtures and
/// kernel probes, in roughly equal shares of `test_budget`.
inline RecoveryResult worst_case_error(int N, const Exponent& p, const Exponent& q, int m, int test_budget,
                                       std::uint64_t seed, const DecoderOptions& opt = {}) {
    if (!(p.reciprocal() >= 1.0 && q.reciprocal() < p.reciprocal() && q.reciprocal() >= 0.5))
        throw DomainError("worst_case_error needs 0 < p <= 1 and p < q <= 2");
    if (N < 1) throw DomainError("worst_case_error needs N >= 1");
    if (m < 0 || m > N * N) throw DomainError("worst_case_error needs 0 <= m <= N^2");
    if (test_budget < 4) throw UsageError("worst_case_error needs a test budget of at least 4 matrices");
    RecoveryResult res;
    res.m = m;
    res.N = N;
    res.p = p;
    res.q = q;
    res.seed = seed;
    Rng rng(derive_seed(seed, 0x7E5));

    std::vector<std::pair<std::string, Matrix>> tests;
    const int share = test_budget / 4;
    const int rank_one = test_budget - 3 * share;
    tests.emplace_back("rank-one", matrix_unit(N, 0, 0));
    for (int i = 1; i < rank_one; ++i)
        tests.emplace_back("rank-one", random_unit_vector(N, rng) * random_unit_vector(N, rng).transpose());
    std::vector<int> ranks;  // 2, 4, 8, ... and N
    for (int r = 2; r < N; r *= 2) ranks.push_back(r);
    ranks.push_back(N);
    for (int i = 0; i < share; ++i) {
        const int r = ranks[static_cast<std::size_t>(i) % ranks.size()];
        Matrix u = haar_orthogonal(N, rng).leftCols(r), v = haar_orthogonal(N, rng).leftCols(r);
        tests.emplace_back("flat-spectrum", u * v.transpose());
    }
    for (int i = 0; i < share; ++i) {
        const int terms = 2 + i % std::max(1, N);
        Matrix x = Matrix::Zero(N, N);
        for (int k = 0; k < terms; ++k) {
            const double w = -std::log(std::uniform_real_distribution<double>(1e-12, 1.0)(rng));
            x += w * random_unit_vector(N, rng) * random_unit_vector(N, rng).transpose();
        }
        tests.emplace_back("mixture", x);
    }

    std::optional<InfoMap> map;
    std::optional<Eigen::LLT<Matrix>> gram;
    std::optional<WhitenedMap> white;
    if (m > 0) {
        map = gaussian_info_map(N, m, seed);
        gram.emplace(map->rows * map->rows.transpose());
        white = whiten(*map);
    }
    for (int i = 0; i < share; ++i) {
        Matrix start = i % 2 ? gaussian_matrix(N, rng)
                             : Matrix(gaussian_matrix(N, 2, rng) * gaussian_matrix(2, N, rng));
        if (m > 0 && m < N * N) start = detail::kernel_probe(*map, *gram, p, q, start, 300);
        if (m == N * N) continue;  // trivial kernel
        tests.emplace_back("kernel-probe", start);
    }

    for (auto& [label, x] : tests) {
        x = detail::unit_in(x, p);
        Matrix z = Matrix::Zero(N, N);
        if (m > 0) {
            auto dec = nuclear_decoder(*map, apply_info_map(*map, x), opt, *white);
            z = dec.z;
            res.total_iterations += dec.iterations;
            res.max_residual = std::max(res.max_residual, dec.residual);
            res.all_converged = res.all_converged && dec.converged;
        }
        const double err = schatten_norm(x - z, q);
        res.errors.push_back(err);
        res.labels.push_back(label);
        res.worst_error = std::max(res.worst_error, err);
        res.zero_decoder_error = std::max(res.zero_decoder_error, schatten_norm(x, q));
    }
    res.scheme_error = std::min(res.worst_error, res.zero_decoder_error);
    return res;
}

struct EnvelopeComparison {
    double worst_error;
    double envelope;
    double ratio;
    double log_ratio;     // natural log; -inf when the error is 0
    double scheme_ratio;  // same with the better of the nuclear and zero decoders
};

inline EnvelopeComparison compare_to_envelope(const RecoveryResult& r) {
    // the envelope is min{1, N/m}^(1/p-1/q); m = 0 falls in the min = 1 branch
    const double env =
        r.m == 0 ? 1.0 : recovery_envelope(r.p, r.q, r.N, r.m).value_upper;
    const double ratio = r.worst_error / env;
    return {r.worst_error, env, ratio, std::log(ratio), r.scheme_error / env};
}

}  // namespace snumbers
