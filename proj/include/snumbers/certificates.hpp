#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "snumbers/schatten.hpp"
#include "snumbers/spec.hpp"

namespace snumbers {

enum class Direction { upper, lower };

inline std::string to_string(Direction d) { return d == Direction::upper ? "upper" : "lower"; }

/// A one-sided bound on an s-number of S_p^N -> S_q^N with what is needed to re-check it.
///
/// `kind` is the s-number the method bounds directly; `applies_to` adds the
/// kinds that inherit the bound (an upper bound on a_n bounds c_n and d_n, a
/// lower bound on c_n or d_n bounds a_n). Only certificates with
/// `exact_constant` set are rigorous numbers; the others hide a constant.
struct Certificate {
    SnumberKind kind = SnumberKind::approximation;
    Direction direction = Direction::upper;
    double value = 0.0;
    std::string method;
    nlohmann::json witness = nlohmann::json::object();
    EmbeddingSpec spec;
    bool exact_constant = true;
    bool constructive = false;  // carries a projection that can be tested on samples
    std::vector<SnumberKind> applies_to;
    std::string justification;

    bool bounds(SnumberKind k) const { return std::find(applies_to.begin(), applies_to.end(), k) != applies_to.end(); }
};

inline nlohmann::json to_json(const Certificate& c) {
    nlohmann::json kinds = nlohmann::json::array();
    for (auto k : c.applies_to) kinds.push_back(to_string(k));
    return {{"schema_version", 1},
            {"kind", to_string(c.kind)},
            {"direction", to_string(c.direction)},
            {"value", c.value},
            {"method", c.method},
            {"witness", c.witness},
            {"spec", to_json(c.spec)},
            {"constant", c.exact_constant ? "exact-constant" : "asymptotic-constant"},
            {"applies_to", kinds},
            {"justification", c.justification}};
}

namespace detail {

inline double pw(double base, double e) { return std::pow(base, e); }

inline std::vector<SnumberKind> upper_kinds() {
    return {SnumberKind::approximation, SnumberKind::gelfand, SnumberKind::kolmogorov};
}

}  // namespace detail

/// a_n <= ceil((N^2-n+1)/N)^(1/q-1/p) for q <= p: zero the first k = floor((n-1)/N)
/// columns (a projection of rank kN < n) and apply Hölder on the remaining N-k.
inline Certificate upper_column_zero(const EmbeddingSpec& s) {
    s.validate();
    const auto n = s.index();
    if (s.p < s.q) throw DomainError("upper_column_zero needs q <= p");
    const std::int64_t N = s.N;
    const std::int64_t k = (n - 1) / N;
    const std::int64_t width = (N * N - n + 1 + N - 1) / N;  // ceil((N^2-n+1)/N) = N - k
    Certificate c;
    c.kind = SnumberKind::approximation;
    c.direction = Direction::upper;
    c.value = detail::pw(static_cast<double>(width), s.q.reciprocal() - s.p.reciprocal());
    c.method = "column-zero";
    c.witness = {{"k", k}, {"projection_rank", k * N}, {"kept_columns", width}};
    c.spec = s;
    c.constructive = true;
    c.applies_to = detail::upper_kinds();
    c.justification = "||A with k columns zeroed||_q <= (N-k)^(1/q-1/p) ||A||_p for q <= p";
    return c;
}

/// a_n(S_p -> S_q) <= ||S_p -> S_2|| * a_n(S_2 -> S_q) with the asymptotic value
/// of the second factor; p, q >= 2.
inline Certificate upper_factor_through_S2(const EmbeddingSpec& s) {
    s.validate();
    const auto n = s.index();
    if (s.p.reciprocal() > 0.5 || s.q.reciprocal() > 0.5) throw DomainError("upper_factor_through_S2 needs p, q >= 2");
    const double N = s.N, M = N * N;
    const double norm_factor = detail::pw(N, 0.5 - s.p.reciprocal());
    const double hilbert = std::max(detail::pw(N, s.q.reciprocal() - 0.5), std::sqrt((M - n + 1.0) / M));
    Certificate c;
    c.kind = SnumberKind::approximation;
    c.direction = Direction::upper;
    c.value = norm_factor * hilbert;
    c.method = "factor-through-S2";
    c.witness = {{"norm_factor", norm_factor}, {"a_n_S2_to_Sq", hilbert}};
    c.spec = s;
    c.exact_constant = false;
    c.applies_to = detail::upper_kinds();
    c.justification = "factorization through S_2; the S_2 -> S_q factor holds up to an unstated constant";
    return c;
}

/// s_n <= s_1 = ||S_p -> S_q||, valid for every kind and every n.
inline Certificate upper_trivial(const EmbeddingSpec& s) {
    s.validate();
    Certificate c;
    c.kind = SnumberKind::approximation;
    c.direction = Direction::upper;
    c.value = embedding_norm(s.p, s.q, s.N);
    c.method = "trivial";
    c.witness = {{"embedding_norm", c.value}};
    c.spec = s;
    c.constructive = true;
    c.applies_to = detail::upper_kinds();
    c.justification = "s-numbers are bounded by the operator norm";
    return c;
}

/// c_n(T) >= sqrt(N^2-n+1) / pi_2(T^{-1}) with T^{-1}: S_q -> S_p.
inline Certificate lower_two_summing(const EmbeddingSpec& s) {
    s.validate();
    const auto n = s.index();
    if (!s.p.is_banach() || !s.q.is_banach()) throw DomainError("lower_two_summing needs p, q >= 1");
    const double M = static_cast<double>(s.N) * s.N;
    const double pi2 = pi2_embedding(s.q, s.p, s.N);
    Certificate c;
    c.kind = SnumberKind::gelfand;
    c.direction = Direction::lower;
    c.value = std::sqrt(M - static_cast<double>(n) + 1.0) / pi2;
    c.method = "two-summing";
    c.witness = {{"pi2_inverse", pi2}, {"codim_budget", M - n + 1.0}};
    c.spec = s;
    c.applies_to = {SnumberKind::gelfand, SnumberKind::approximation};
    c.justification = "restriction of T to a subspace of dimension N^2-n+1 has 2-summing lower bound";
    return c;
}

/// Gordon-König-Schütt type lower bound for c_n(S_p -> S_q), 1 <= p <= 2 <= q.
inline Certificate lower_gks_kolmogorov(const EmbeddingSpec& s) {
    s.validate();
    const auto n = s.index();
    const double a = s.p.reciprocal(), b = s.q.reciprocal();
    if (!(a <= 1.0 && a >= 0.5 && b <= 0.5)) throw DomainError("lower_gks_kolmogorov needs 1 <= p <= 2 <= q");
    const double M = static_cast<double>(s.N) * s.N;
    const double root = std::sqrt((static_cast<double>(n) - 1.0) * M);
    const double to_l2 = detail::pw(s.N, a - 0.5);  // N^(-1/2+1/p)
    Certificate c;
    c.kind = SnumberKind::gelfand;
    c.direction = Direction::lower;
    c.value = (M - root) / (root * to_l2 + M);
    c.method = "gks";
    c.witness = {{"m", M}, {"sqrt_n_minus_1_m", root}, {"norm_factor", to_l2}};
    c.spec = s;
    c.applies_to = {SnumberKind::gelfand, SnumberKind::approximation};
    c.justification = "dual of the Kolmogorov lower bound for the identity S_{q*} -> S_{p*}";
    return c;
}

/// c_n(S_p -> S_q) >= 1 / ceil(n/N)^(1/p-1/q) for p <= q, from
/// 1 = c_{N^2}(id_p) <= c_n(S_p -> S_q) * c_{N^2-n+1}(S_q -> S_p) and the column-zero bound.
inline Certificate lower_multiplicativity(const EmbeddingSpec& s) {
    s.validate();
    const auto n = s.index();
    if (s.q < s.p) throw DomainError("lower_multiplicativity needs p <= q");
    const std::int64_t N = s.N;
    const auto partner = upper_column_zero(EmbeddingSpec{s.q, s.p, s.N, N * N - n + 1});
    Certificate c;
    c.kind = SnumberKind::gelfand;
    c.direction = Direction::lower;
    c.value = 1.0 / partner.value;
    c.method = "multiplicativity";
    c.witness = {{"partner_index", N * N - n + 1}, {"partner_upper", partner.value}, {"partner_k", partner.witness["k"]}};
    c.spec = s;
    c.applies_to = {SnumberKind::gelfand, SnumberKind::approximation};
    c.justification = "multiplicativity of Gelfand numbers with the column-zero upper bound for the inverse";
    return c;
}

/// Turns a lower bound on c_n(S_{q*} -> S_{p*}) into one on d_n(S_p -> S_q).
inline Certificate kolmogorov_by_duality(const Certificate& gelfand_cert, const EmbeddingSpec& target) {
    if (gelfand_cert.kind != SnumberKind::gelfand || gelfand_cert.direction != Direction::lower)
        throw UsageError("duality transfer needs a Gelfand lower certificate");
    Certificate c = gelfand_cert;
    c.kind = SnumberKind::kolmogorov;
    c.method = gelfand_cert.method + "-dual";
    c.witness = {{"from", to_json(gelfand_cert)}};
    c.spec = target;
    c.applies_to = {SnumberKind::kolmogorov, SnumberKind::approximation};
    c.justification = "c_n(T) = d_n(T*) applied to " + gelfand_cert.method;
    return c;
}

/// Every certificate whose preconditions hold at `s`, including the duals of
/// the Gelfand lower bounds when p, q >= 1.
inline std::vector<Certificate> applicable_certificates(const EmbeddingSpec& s) {
    std::vector<Certificate> out;
    using Maker = std::function<Certificate(const EmbeddingSpec&)>;
    const std::vector<Maker> direct = {upper_column_zero, upper_factor_through_S2, upper_trivial,
                                       lower_two_summing, lower_gks_kolmogorov, lower_multiplicativity};
    for (const auto& make : direct) {
        try {
            out.push_back(make(s));
        } catch (const DomainError&) {
        }
    }
    if (s.p.is_banach() && s.q.is_banach()) {
        const EmbeddingSpec adj = s.dual();
        for (const auto& make : {Maker(lower_two_summing), Maker(lower_gks_kolmogorov), Maker(lower_multiplicativity)}) {
            try {
                out.push_back(kolmogorov_by_duality(make(adj), s));
            } catch (const DomainError&) {
            }
        }
    }
    return out;
}

inline constexpr double kSandwichRounding = 8 * std::numeric_limits<double>::epsilon();

struct SandwichResult {
    SnumberKind kind;
    double best_lower = 0.0;
    double best_upper = std::numeric_limits<double>::infinity();
    std::string lower_method, upper_method;
    bool holds = true;
};

/// Best exact-constant lower and upper certificates for one kind.
inline SandwichResult sandwich(const std::vector<Certificate>& certs, SnumberKind kind) {
    SandwichResult r;
    r.kind = kind;
    for (const auto& c : certs) {
        if (!c.exact_constant || !c.bounds(kind)) continue;
        if (c.direction == Direction::lower && c.value > r.best_lower) {
            r.best_lower = c.value;
            r.lower_method = c.method;
        }
        if (c.direction == Direction::upper && c.value < r.best_upper) {
            r.best_upper = c.value;
            r.upper_method = c.method;
        }
    }
    // Several bounds coincide exactly (e.g. two-summing and column-zero at q = 1, N = 2);
    // such ties are only allowed to differ by the rounding of the two formulas.
    r.holds = r.best_lower <= r.best_upper * (1.0 + kSandwichRounding);
    return r;
}

// ---------------------------------------------------------------------------
// Verification

struct VerificationReport {
    std::string method;
    int samples = 0;
    double max_ratio = 0.0;  // observed / certified (upper) or recomputed mismatch
    int violations = 0;
    bool passed = true;
    std::string detail;
};

inline nlohmann::json to_json(const VerificationReport& r) {
    return {{"method", r.method}, {"samples", r.samples}, {"max_ratio", r.max_ratio},
            {"violations", r.violations}, {"passed", r.passed}, {"detail", r.detail}};
}

namespace detail {

// Mixture used to probe a constructive bound: Gaussian, Haar orthogonal, rank-one,
// low-rank, and matrices living on the kept columns with a flat spectrum (the
// extremal case for column deletion).
inline Matrix probe_matrix(int N, int k, int index, Rng& rng) {
    switch (index % 5) {
        case 0: return gaussian_matrix(N, rng);
        case 1: return haar_orthogonal(N, rng);
        case 2: {
            Vector u = gaussian_vector(N, rng), v = gaussian_vector(N, rng);
            return u * v.transpose();
        }
        case 3: {
            const int r = 1 + index / 5 % N;
            return gaussian_matrix(N, r, rng) * gaussian_matrix(r, N, rng);
        }
        default: {
            const int kept = N - k;
            Matrix a = Matrix::Zero(N, N);
            Matrix q = haar_orthogonal(N, rng);
            const int r = 1 + index / 5 % std::max(1, kept);
            Matrix block = q.leftCols(std::min(r, kept)) * haar_orthogonal(kept, rng).topRows(std::min(r, kept));
            a.rightCols(kept) = block;
            return a;
        }
    }
}

inline double relative_mismatch(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace detail

/// Re-checks a certificate. Constructive ones are tested on `samples` random
/// matrices (plus the extremal witnesses); formula ones are recomputed from
/// their inputs and must agree to 1e-12.
inline VerificationReport verify_certificate(const Certificate& cert, int samples, std::uint64_t seed) {
    constexpr double kTol = 1e-12;
    VerificationReport r;
    r.method = cert.method;
    const auto& s = cert.spec;
    const int N = s.N;

    if (cert.method == "column-zero" || cert.method == "trivial") {
        int k = 0;
        if (cert.method == "column-zero") {
            if (!cert.witness.contains("k")) throw UsageError("column-zero certificate without its k witness");
            k = cert.witness["k"].get<int>();
            if (static_cast<std::int64_t>(k) * N >= s.index()) throw UsageError("column-zero witness has rank >= n");
        }
        Rng rng(derive_seed(seed, 0xC011));
        std::vector<Matrix> probes = {matrix_unit(N, 0, N - 1), Matrix::Identity(N, N)};
        for (int i = 0; i < samples; ++i) probes.push_back(detail::probe_matrix(N, k, i, rng));
        for (const auto& a : probes) {
            Matrix b = a;
            b.leftCols(k).setZero();
            const double np = schatten_norm(a, s.p);
            if (np == 0.0) continue;
            const double ratio = schatten_norm(b, s.q) / (cert.value * np);
            r.max_ratio = std::max(r.max_ratio, ratio);
            if (ratio > 1.0 + kTol) ++r.violations;
        }
        r.samples = static_cast<int>(probes.size());
        r.passed = r.violations == 0;
        r.detail = "max ||(id-P)A||_q / (value ||A||_p) over samples";
        return r;
    }

    Certificate fresh;
    const std::string base = cert.method.size() > 5 && cert.method.ends_with("-dual")
                                 ? cert.method.substr(0, cert.method.size() - 5)
                                 : cert.method;
    const EmbeddingSpec at = cert.method.ends_with("-dual") ? s.dual() : s;
    if (base == "two-summing") fresh = lower_two_summing(at);
    else if (base == "gks") fresh = lower_gks_kolmogorov(at);
    else if (base == "multiplicativity") fresh = lower_multiplicativity(at);
    else if (base == "factor-through-S2") fresh = upper_factor_through_S2(at);
    else throw UsageError("unknown certificate method '" + cert.method + "'");
    r.samples = 1;
    r.max_ratio = detail::relative_mismatch(cert.value, fresh.value);
    r.violations = r.max_ratio > kTol ? 1 : 0;
    r.passed = r.violations == 0;
    r.detail = "recomputed formula value " + std::to_string(fresh.value);
    return r;
}

}  // namespace snumbers
