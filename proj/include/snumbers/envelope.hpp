#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "snumbers/constants.hpp"
#include "snumbers/exponent.hpp"
#include "snumbers/schatten.hpp"
#include "snumbers/spec.hpp"

namespace snumbers {

enum class Sharpness { exact_asymptotic, gap, upper_only, existence_only, conjectured };

inline std::string to_string(Sharpness s) {
    switch (s) {
        case Sharpness::exact_asymptotic: return "exact-asymptotic";
        case Sharpness::gap: return "gap";
        case Sharpness::upper_only: return "upper-only";
        case Sharpness::existence_only: return "existence-only";
        case Sharpness::conjectured: return "conjectured";
    }
    return "?";
}

struct CritExponents {
    double alpha;
    double beta;
};

/// α = max{3 − 2/p, 1 + 2/q}, β = min{...}, defined on 1 ≤ p ≤ 2 ≤ q ≤ ∞.
inline CritExponents crit_exponents(const Exponent& p, const Exponent& q) {
    const double a = p.reciprocal(), b = q.reciprocal();
    if (!(a <= 1.0 && a >= 0.5 && b <= 0.5))
        throw DomainError("crit_exponents needs 1 <= p <= 2 <= q <= inf, got p=" + p.to_string() + " q=" + q.to_string());
    const double x = 3.0 - 2.0 * a, y = 1.0 + 2.0 * b;
    return {std::max(x, y), std::min(x, y)};
}

/// One evaluated envelope point.
///
/// `value_lower`/`value_upper` are the reported envelope. `formula_lower` and
/// `formula_upper` are the printed expressions evaluated with every hidden
/// constant equal to 1; the reported values coincide with them except close
/// to a regime boundary, where the constant-free expressions can step the
/// wrong way (see `monotone_profile`).
struct EnvelopeValue {
    SnumberKind kind = SnumberKind::approximation;
    double value_lower = 0.0;
    double value_upper = 0.0;
    double formula_lower = 0.0;
    double formula_upper = 0.0;
    std::string regime;
    Sharpness sharpness = Sharpness::exact_asymptotic;
    ConstantsRegistry constants_used;
    bool log_factor = false;
    std::string lower_expression;
    std::string upper_expression;
    std::vector<std::string> notes;
    std::string metadata;
    std::int64_t n = 0;
};

inline nlohmann::json to_json(const EnvelopeValue& v) {
    nlohmann::json j = {{"schema_version", 1},
                        {"kind", to_string(v.kind)},
                        {"n", v.n},
                        {"value_lower", v.value_lower},
                        {"value_upper", v.value_upper},
                        {"formula_lower", v.formula_lower},
                        {"formula_upper", v.formula_upper},
                        {"lower_expression", v.lower_expression},
                        {"upper_expression", v.upper_expression},
                        {"regime", v.regime},
                        {"sharpness", to_string(v.sharpness)},
                        {"log_factor", v.log_factor},
                        {"constants", to_json(v.constants_used)},
                        {"notes", v.notes}};
    if (!v.metadata.empty()) j["metadata"] = v.metadata;
    return j;
}

// ---------------------------------------------------------------------------
// Piecewise cases

using Formula = std::function<double(double)>;

/// A one-sided piecewise formula: valid for prev.hi < n ≤ hi.
struct Segment {
    std::string name;
    double hi;
    Formula f;
    std::string expr;
    bool log_factor = false;
};

struct EnvelopePiece {
    std::string name;
    std::int64_t first = 1;  // integer range [first, last]; empty when first > last
    std::int64_t last = 0;
    Formula lower, upper;
    std::string lower_expr, upper_expr;
    Sharpness sharpness = Sharpness::exact_asymptotic;
    bool log_factor = false;

    bool empty() const { return first > last; }
};

struct EnvelopeCase {
    SnumberKind kind = SnumberKind::approximation;
    std::string name;
    std::int64_t dim = 1;  // N²
    std::vector<EnvelopePiece> pieces;
    std::vector<std::string> notes;
    std::string metadata;

    const EnvelopePiece& piece_at(std::int64_t n) const {
        for (const auto& p : pieces)
            if (!p.empty() && n >= p.first && n <= p.last) return p;
        throw DomainError("index outside the envelope range");
    }
};

namespace detail {

// Turns real upper ends into integer ranges, clipping out-of-order ends so the
// intervals stay disjoint in the listed order.
struct Clipped {
    std::vector<std::int64_t> first, last;
};

inline Clipped clip_segments(const std::vector<Segment>& segs, std::int64_t dim, std::vector<std::string>& notes,
                             const std::string& side) {
    Clipped c;
    double prev = 0.0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        double hi = i + 1 == segs.size() ? static_cast<double>(dim) : segs[i].hi;
        if (hi < prev) {
            notes.push_back("degenerate-range: " + side + " range '" + segs[i].name + "' clipped (ends at " +
                            std::to_string(hi) + " before the previous range)");
            hi = prev;
        }
        auto lo_int = static_cast<std::int64_t>(std::floor(prev)) + 1;
        auto hi_int = static_cast<std::int64_t>(std::floor(std::min(hi, static_cast<double>(dim))));
        lo_int = std::max<std::int64_t>(lo_int, 1);
        c.first.push_back(lo_int);
        c.last.push_back(hi_int);
        prev = std::max(prev, hi);
    }
    return c;
}

}  // namespace detail

/// Combines lower and upper piecewise formulas into one case. A merged piece is
/// exact when both sides use the same named range and that name is listed in
/// `exact_names`; otherwise it gets `otherwise`.
inline EnvelopeCase merge_case(SnumberKind kind, std::string name, std::int64_t dim, const std::vector<Segment>& lows,
                               const std::vector<Segment>& ups, const std::set<std::string>& exact_names,
                               Sharpness otherwise = Sharpness::gap) {
    EnvelopeCase out;
    out.kind = kind;
    out.name = std::move(name);
    out.dim = dim;
    auto cl = detail::clip_segments(lows, dim, out.notes, "lower");
    auto cu = detail::clip_segments(ups, dim, out.notes, "upper");

    std::set<std::int64_t> cuts;  // last index of each merged piece
    for (std::size_t i = 0; i < lows.size(); ++i)
        if (cl.first[i] <= cl.last[i]) cuts.insert(cl.last[i]);
    for (std::size_t i = 0; i < ups.size(); ++i)
        if (cu.first[i] <= cu.last[i]) cuts.insert(cu.last[i]);
    cuts.insert(dim);

    auto locate = [](const detail::Clipped& c, std::int64_t n) {
        for (std::size_t i = 0; i < c.first.size(); ++i)
            if (n >= c.first[i] && n <= c.last[i]) return i;
        return c.first.size() - 1;
    };

    std::int64_t start = 1;
    for (std::int64_t cut : cuts) {
        if (cut < start) continue;
        const auto li = locate(cl, start);
        const auto ui = locate(cu, start);
        EnvelopePiece p;
        p.first = start;
        p.last = cut;
        p.lower = lows[li].f;
        p.upper = ups[ui].f;
        p.lower_expr = lows[li].expr;
        p.upper_expr = ups[ui].expr;
        p.log_factor = ups[ui].log_factor;
        if (lows[li].name == ups[ui].name) {
            p.name = lows[li].name;
            p.sharpness = exact_names.count(p.name) ? Sharpness::exact_asymptotic : otherwise;
        } else {
            p.name = lows[li].name + "/" + ups[ui].name;
            p.sharpness = otherwise;
        }
        out.pieces.push_back(std::move(p));
        start = cut + 1;
    }
    return out;
}

inline EnvelopeCase exact_case(SnumberKind kind, std::string name, std::int64_t dim, const std::vector<Segment>& segs) {
    std::set<std::string> names;
    for (const auto& s : segs) names.insert(s.name);
    return merge_case(kind, std::move(name), dim, segs, segs, names);
}

// ---------------------------------------------------------------------------
// The individual regime tables. Conventions: a = 1/p, b = 1/q, M = N²,
// R(n) = N² − n + 1.

namespace cases {

struct Ctx {
    double a, b, N, M;
    std::int64_t dim;
    double R(double n) const { return M - n + 1.0; }
};

inline Ctx ctx(const Exponent& p, const Exponent& q, int N) {
    const double Nd = N;
    return {p.reciprocal(), q.reciprocal(), Nd, Nd * Nd, static_cast<std::int64_t>(N) * N};
}

inline constexpr double kAll = std::numeric_limits<double>::infinity();

inline std::vector<Segment> upper_triangle(const Ctx& x) {
    return {{"all-n", kAll, [x](double n) { return std::pow(std::max(1.0, x.R(n) / x.N), x.b - x.a); },
             "max{1,(N^2-n+1)/N}^(1/q-1/p)"}};
}

inline std::vector<Segment> constant_one() {
    return {{"all-n", kAll, [](double) { return 1.0; }, "1"}};
}

inline Segment large_n(const Ctx& x, double from_hi = kAll) {
    return {"large-n", from_hi, [x](double) { return std::pow(x.N, x.b - x.a); }, "N^(1/q-1/p)"};
}

// Gelfand numbers, 0 < p <= 2 <= q, p < q.
inline EnvelopeCase gelfand_middle_strip(const Ctx& x, const ConstantsRegistry& k, const Exponent& p,
                                         const Exponent& q) {
    const double c = k.universal();
    const double s1 = (1.0 - c) * x.M;
    const double s2 = x.M - c * std::pow(x.N, 1.0 + 2.0 * x.b) + 1.0;
    Segment inter{"intermediate", s2, [x](double n) { return std::pow(x.N, -0.5 - x.a) * std::sqrt(x.R(n)); },
                  "N^(-1/2-1/p)*sqrt(N^2-n+1)"};
    Segment large = large_n(x);
    if (x.a <= 1.0) {
        Segment small{"small-n", s1,
                      [x](double n) { return std::min(1.0, std::pow(x.N, 1.5 - x.a) / std::sqrt(n)); },
                      "min{1,N^(3/2-1/p)/n^(1/2)}"};
        return exact_case(SnumberKind::gelfand, "0<p<=2<=q, p>=1", x.dim, {small, inter, large});
    }
    const double s0 = k.pq(p, q) * x.M;
    Segment small_lo{"small-n", s0, [x](double n) { return std::pow(std::min(1.0, x.N / n), x.a - x.b); },
                     "min{1,N/n}^(1/p-1/q)"};
    Segment small_up{"small-n", s0, [x](double n) { return std::pow(std::min(1.0, x.N / n), x.a - 0.5); },
                     "min{1,N/n}^(1/p-1/2)"};
    Segment trans_lo = small_lo;
    trans_lo.name = "transition";
    trans_lo.hi = s1;
    Segment trans_up = inter;
    trans_up.name = "transition";
    trans_up.hi = s1;
    return merge_case(SnumberKind::gelfand, "0<p<1, q>=2", x.dim, {small_lo, trans_lo, inter, large},
                      {small_up, trans_up, inter, large}, {"intermediate", "large-n"});
}

// Gelfand numbers, 2 <= p < q.
inline EnvelopeCase gelfand_upper_corner(const Ctx& x, const ConstantsRegistry& k, const Exponent& p,
                                         const Exponent& q) {
    const double c = k.universal();
    const double s0 = k.pq(p, q) * x.M;
    const double s2 = x.M - c * std::pow(x.N, 1.0 + 2.0 * x.b) + 1.0;
    const double cq = k.single(q);
    const double t = x.M - std::pow(cq, -2.0) * std::pow(x.N, 1.0 + 2.0 * x.a) + 1.0;
    const double e = (x.a - x.b) / (0.5 - x.b);
    Segment one{"small-n", s0, [](double) { return 1.0; }, "1"};
    Segment lo_mid{"intermediate", s2, [x, e](double n) { return std::pow(std::sqrt(x.R(n) / x.M), e); },
                   "sqrt((N^2-n+1)/N^2)^((1/p-1/q)/(1/2-1/q))"};
    Segment up_one{"intermediate", std::max(s0, t), [](double) { return 1.0; }, "1"};
    Segment up_mid{"intermediate", s2,
                   [x](double n) { return std::pow(x.N, 0.5 - x.a) * std::sqrt(x.R(n) / x.M); },
                   "N^(1/2-1/p)*sqrt((N^2-n+1)/N^2)"};
    Segment large = large_n(x);
    return merge_case(SnumberKind::gelfand, "2<=p<q", x.dim, {one, lo_mid, large}, {one, up_one, up_mid, large},
                      {"small-n", "large-n"});
}

// Approximation numbers on the square 1 <= p <= 2 <= q, p < q.
inline EnvelopeCase approx_square(const Ctx& x, const ConstantsRegistry& k, const Exponent& p, const Exponent& q) {
    const auto ce = crit_exponents(p, q);
    const double c = k.universal();
    const double s1 = (1.0 - c) * x.M;
    const double sa = x.M - c * std::pow(x.N, ce.alpha) + 1.0;
    const double sb = x.M - c * std::pow(x.N, ce.beta) + 1.0;
    const double alpha = ce.alpha;
    auto mid = [x, alpha](double n) { return std::pow(x.N, alpha / 2.0 - 2.0) * std::sqrt(x.R(n)); };
    const bool log_removable = p.reciprocal() == 1.0 || q.is_infinite();
    const double logf = std::sqrt(std::max(1.0, std::log(x.N)));

    Segment small{"small-n", s1,
                  [x, alpha](double n) { return std::min(1.0, std::pow(x.N, alpha / 2.0) / std::sqrt(n)); },
                  "min{1,N^(alpha/2)/n^(1/2)}"};
    Segment inter_lo{"intermediate", sa, mid, "N^(alpha/2-2)*sqrt(N^2-n+1)"};
    Segment inter_up = inter_lo;
    if (!log_removable) {
        inter_up.f = [mid, logf](double n) { return mid(n) * logf; };
        inter_up.expr = "N^(alpha/2-2)*sqrt(N^2-n+1)*sqrt(log N)";
        inter_up.log_factor = true;
    }
    Segment upper_mid{"upper-intermediate", sb, mid, "N^(alpha/2-2)*sqrt(N^2-n+1)"};
    Segment large = large_n(x);
    std::set<std::string> exact{"small-n", "upper-intermediate", "large-n"};
    if (log_removable) exact.insert("intermediate");
    auto out = merge_case(SnumberKind::approximation, "1<=p<=2<=q", x.dim, {small, inter_lo, upper_mid, large},
                          {small, inter_up, upper_mid, large}, exact);
    if (ce.alpha == ce.beta) out.notes.push_back("alpha=beta: the upper-intermediate range is empty");
    return out;
}

// Approximation numbers, 2 <= p < q. `c_thr` is the constant in the upper
// threshold N² − c·N^{1+2/p} + 1.
inline EnvelopeCase approx_upper_corner(const Ctx& x, const ConstantsRegistry& k, double c_thr) {
    const double c = k.universal();
    const double s1 = (1.0 - c) * x.M;
    const double s2 = x.M - c * std::pow(x.N, 1.0 + 2.0 * x.b) + 1.0;
    const double t = x.M - c_thr * std::pow(x.N, 1.0 + 2.0 * x.a) + 1.0;
    const double e = (x.a - x.b) / (0.5 - x.b);
    Segment lo_one{"small-n", s1, [](double) { return 1.0; }, "1"};
    Segment lo_mid{"intermediate", s2, [x, e](double n) { return std::pow(std::sqrt(x.R(n) / x.M), e); },
                   "sqrt((N^2-n+1)/N^2)^((1/p-1/q)/(1/2-1/q))"};
    Segment up_one{"small-n", t, [](double) { return 1.0; }, "1"};
    Segment up_mid{"intermediate", s2, [x](double n) { return std::pow(x.N, -0.5 - x.a) * std::sqrt(x.R(n)); },
                   "N^(-1/2-1/p)*sqrt(N^2-n+1)"};
    Segment large = large_n(x);
    return merge_case(SnumberKind::approximation, "2<=p<q", x.dim, {lo_one, lo_mid, large}, {up_one, up_mid, large},
                      {"small-n", "large-n"});
}

}  // namespace cases

namespace detail {

inline void relabel(EnvelopeCase& c, SnumberKind kind, const std::string& prefix) {
    c.kind = kind;
    c.name = prefix + c.name;
}

}  // namespace detail

/// Regime table for the Gelfand numbers c_n(S_p^N → S_q^N).
inline EnvelopeCase gelfand_case(const Exponent& p, const Exponent& q, int N, const ConstantsRegistry& k) {
    k.validate();
    const auto x = cases::ctx(p, q, N);
    if (x.b >= x.a) return exact_case(SnumberKind::gelfand, "q<=p", x.dim, cases::upper_triangle(x));
    if (x.a >= 1.0 && x.b >= 0.5) {
        return exact_case(SnumberKind::gelfand, "0<p<=1, p<q<=2", x.dim,
                          {{"all-n", cases::kAll, [x](double n) { return std::pow(std::min(1.0, x.N / n), x.a - x.b); },
                            "min{1,N/n}^(1/p-1/q)"}});
    }
    if (x.b >= 0.5) {  // 1 < p < q <= 2
        const double e = (x.a - x.b) / (x.a - 0.5);
        return exact_case(
            SnumberKind::gelfand, "1<=p<q<=2", x.dim,
            {{"all-n", cases::kAll,
              [x, e](double n) { return std::pow(std::min(1.0, std::pow(x.N, 1.5 - x.a) / std::sqrt(n)), e); },
              "min{1,N^(3/2-1/p)/n^(1/2)}^((1/p-1/q)/(1/p-1/2))"}});
    }
    if (x.a >= 0.5) return cases::gelfand_middle_strip(x, k, p, q);
    return cases::gelfand_upper_corner(x, k, p, q);
}

/// Banach part of `kolmogorov_case`: d_n(S_p → S_q) = c_n(S_{q*} → S_{p*}).
inline EnvelopeCase kolmogorov_case_banach_reduced(const Exponent& p, const Exponent& q, int N,
                                                   const ConstantsRegistry& k) {
    auto out = gelfand_case(q.dual(), p.dual(), N, k);
    detail::relabel(out, SnumberKind::kolmogorov, "dual of gelfand(q*,p*) ");
    return out;
}

/// Regime table for the Kolmogorov numbers d_n(S_p^N → S_q^N).
inline EnvelopeCase kolmogorov_case(const Exponent& p, const Exponent& q, int N, const ConstantsRegistry& k) {
    k.validate();
    const auto x = cases::ctx(p, q, N);
    if (x.b > 1.0) {
        if (x.a >= x.b) return exact_case(SnumberKind::kolmogorov, "p<=q<=1", x.dim, cases::constant_one());
        auto segs = cases::upper_triangle(x);
        std::vector<Segment> lows = {{"all-n", cases::kAll, [](double) { return 0.0; }, "unknown"}};
        auto out = merge_case(SnumberKind::kolmogorov, "q<1, q<p", x.dim, lows, segs, {}, Sharpness::existence_only);
        out.metadata =
            "lower bound known at a single index only: d_{floor(c(p,q) M^2)+1}(S_p^{2M} -> S_q^{2M}) >~ "
            "M^(1/q-1/p)";
        return out;
    }
    if (x.a > 1.0) {
        auto out = kolmogorov_case_banach_reduced(Exponent::rational(1, 1), q, N, k);
        detail::relabel(out, SnumberKind::kolmogorov, "p<1 reduced to p=1; ");
        return out;
    }
    return kolmogorov_case_banach_reduced(p, q, N, k);
}

/// Regime table for the approximation numbers a_n(S_p^N → S_q^N).
inline EnvelopeCase approx_case(const Exponent& p, const Exponent& q, int N, const ConstantsRegistry& k) {
    k.validate();
    const auto x = cases::ctx(p, q, N);
    if (x.b >= x.a) return exact_case(SnumberKind::approximation, "q<=p", x.dim, cases::upper_triangle(x));
    if (x.b >= 1.0) return exact_case(SnumberKind::approximation, "p<q<=1", x.dim, cases::constant_one());
    if (x.a > 1.0) {
        auto out = approx_case(Exponent::rational(1, 1), q, N, k);
        detail::relabel(out, SnumberKind::approximation, "p<1 reduced to p=1; ");
        return out;
    }
    if (x.a >= 0.5 && x.b <= 0.5) return cases::approx_square(x, k, p, q);
    if (x.a <= 0.5) return cases::approx_upper_corner(x, k, k.single(q));
    // 1 <= p < q <= 2 reduces to the adjoint pair (q*, p*) with 2 <= q* < p*
    const Exponent pd = q.dual(), qd = p.dual();
    auto out = cases::approx_upper_corner(cases::ctx(pd, qd, N), k, k.single(p));
    detail::relabel(out, SnumberKind::approximation, "1<=p<q<=2 via adjoint; ");
    return out;
}

inline EnvelopeCase envelope_case(SnumberKind kind, const Exponent& p, const Exponent& q, int N,
                                  const ConstantsRegistry& k) {
    switch (kind) {
        case SnumberKind::approximation: return approx_case(p, q, N, k);
        case SnumberKind::gelfand: return gelfand_case(p, q, N, k);
        case SnumberKind::kolmogorov: return kolmogorov_case(p, q, N, k);
        case SnumberKind::recovery: break;
    }
    throw UsageError("recovery envelopes are indexed by m; use recovery_envelope");
}

// ---------------------------------------------------------------------------
// Profiles over n = 1..N²

struct EnvelopeProfile {
    EnvelopeCase table;
    ConstantsRegistry constants;
    std::vector<double> lower, upper;                  // reported, index n-1
    std::vector<double> formula_lower, formula_upper;  // constant-free expressions
    std::vector<int> piece;                            // index into table.pieces

    std::int64_t dim() const { return table.dim; }

    EnvelopeValue at(std::int64_t n) const {
        if (n < 1 || n > dim()) throw DomainError("index n outside 1..N^2");
        const auto i = static_cast<std::size_t>(n - 1);
        const auto& pc = table.pieces[piece[i]];
        EnvelopeValue v;
        v.kind = table.kind;
        v.n = n;
        v.value_lower = lower[i];
        v.value_upper = upper[i];
        v.formula_lower = formula_lower[i];
        v.formula_upper = formula_upper[i];
        v.regime = table.name + ": " + pc.name + " n in [" + std::to_string(pc.first) + "," +
                   std::to_string(pc.last) + "]";
        v.sharpness = pc.sharpness;
        v.constants_used = constants;
        v.log_factor = pc.log_factor;
        v.lower_expression = pc.lower_expr;
        v.upper_expression = pc.upper_expr;
        v.notes = table.notes;
        v.metadata = table.metadata;
        if (v.value_lower != v.formula_lower || v.value_upper != v.formula_upper)
            v.notes.push_back("monotone-adjusted: value differs from the constant-free expression");
        return v;
    }
};

/// Evaluates a case on every index and turns it into a consistent envelope.
///
/// The constant-free expressions of adjacent regimes differ by constant
/// factors, so they can step upwards at a boundary or dip below the value the
/// sequence takes at n = N². Since every s-number sequence is non-increasing,
/// a lower bound at index m is also a lower bound at every n ≤ m, and an upper
/// bound at m holds for every n ≥ m. The reported values are therefore: both
/// sides clamped into [formula at N², formula at 1], lower replaced by its
/// running maximum from the right, upper by its running minimum from the
/// left, and finally lower capped by upper. Exact pieces keep lower = upper.
inline EnvelopeProfile monotone_profile(EnvelopeCase table, const ConstantsRegistry& k) {
    EnvelopeProfile pr;
    const std::int64_t dim = table.dim;
    pr.constants = k;
    pr.lower.resize(dim);
    pr.upper.resize(dim);
    pr.formula_lower.resize(dim);
    pr.formula_upper.resize(dim);
    pr.piece.resize(dim);
    for (int pi = 0; pi < static_cast<int>(table.pieces.size()); ++pi) {
        const auto& pc = table.pieces[pi];
        for (std::int64_t n = pc.first; n <= pc.last; ++n) {
            const auto i = static_cast<std::size_t>(n - 1);
            pr.piece[i] = pi;
            pr.formula_lower[i] = pc.lower(static_cast<double>(n));
            pr.formula_upper[i] = pc.upper(static_cast<double>(n));
        }
    }
    const double floor_v = pr.formula_lower[dim - 1];
    const double ceil_v = std::max(pr.formula_upper[0], floor_v);
    auto clamp = [&](double v) { return std::min(std::max(v, floor_v), ceil_v); };

    double run_max = 0.0;
    for (std::int64_t i = dim - 1; i >= 0; --i) {
        run_max = std::max(run_max, clamp(pr.formula_lower[i]));
        pr.lower[i] = run_max;
    }
    double run_min = std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < dim; ++i) {
        run_min = std::min(run_min, clamp(pr.formula_upper[i]));
        pr.upper[i] = run_min;
        pr.lower[i] = std::min(pr.lower[i], pr.upper[i]);
        if (table.pieces[pr.piece[i]].sharpness == Sharpness::exact_asymptotic) pr.lower[i] = pr.upper[i];
    }
    pr.table = std::move(table);
    return pr;
}

inline EnvelopeProfile envelope_profile(SnumberKind kind, const Exponent& p, const Exponent& q, int N,
                                        const ConstantsRegistry& k = {}) {
    return monotone_profile(envelope_case(kind, p, q, N, k), k);
}

inline EnvelopeValue gelfand_envelope(const EmbeddingSpec& s, const ConstantsRegistry& k = {}) {
    if (!s.n) throw UsageError("gelfand_envelope needs the index n");
    return envelope_profile(SnumberKind::gelfand, s.p, s.q, s.N, k).at(*s.n);
}

inline EnvelopeValue approx_envelope(const EmbeddingSpec& s, const ConstantsRegistry& k = {}) {
    if (!s.n) throw UsageError("approx_envelope needs the index n");
    return envelope_profile(SnumberKind::approximation, s.p, s.q, s.N, k).at(*s.n);
}

inline EnvelopeValue kolmogorov_envelope(const EmbeddingSpec& s, const ConstantsRegistry& k = {}) {
    if (!s.n) throw UsageError("kolmogorov_envelope needs the index n");
    return envelope_profile(SnumberKind::kolmogorov, s.p, s.q, s.N, k).at(*s.n);
}

/// min{1, N/m}^{1/p − 1/q} for 0 < p ≤ 1, p < q ≤ 2, 1 ≤ m ≤ N².
inline EnvelopeValue recovery_envelope(const Exponent& p, const Exponent& q, int N, std::int64_t m,
                                       const ConstantsRegistry& k = {}) {
    const double a = p.reciprocal(), b = q.reciprocal();
    if (!(a >= 1.0 && b < a && b >= 0.5))
        throw DomainError("recovery_envelope needs 0 < p <= 1 and p < q <= 2");
    if (N < 1 || m < 1 || m > static_cast<std::int64_t>(N) * N)
        throw DomainError("recovery_envelope needs 1 <= m <= N^2");
    EnvelopeValue v;
    v.kind = SnumberKind::recovery;
    v.n = m;
    v.value_lower = v.value_upper = v.formula_lower = v.formula_upper =
        std::pow(std::min(1.0, static_cast<double>(N) / static_cast<double>(m)), a - b);
    v.regime = std::string("recovery: ") + (m <= N ? "m<=N" : "m>N");
    v.sharpness = Sharpness::exact_asymptotic;
    v.constants_used = k;
    v.lower_expression = v.upper_expression = "min{1,N/m}^(1/p-1/q)";
    return v;
}

/// Conjectured envelopes (ids 1-4). Never consulted by the other operations.
inline EnvelopeValue conjectured_envelope(const EmbeddingSpec& s, int which, const ConstantsRegistry& k = {}) {
    const std::int64_t n = s.index();
    const double a = s.p.reciprocal(), b = s.q.reciprocal();
    const double N = s.N, M = N * N, R = M - static_cast<double>(n) + 1.0;
    const double c = k.universal();
    EnvelopeValue v;
    v.n = n;
    v.sharpness = Sharpness::conjectured;
    v.constants_used = k;
    auto bad = [&](const std::string& why) {
        return DomainError("conjecture " + std::to_string(which) + " outside its range: " + why);
    };
    double val = 0.0;
    switch (which) {
        case 1: {
            if (!(a < 1.0 && a >= 0.5 && b <= 0.5 && b > 0.0)) throw bad("needs 1 < p <= 2 <= q < inf");
            const auto ce = crit_exponents(s.p, s.q);
            if (!(n >= (1.0 - c) * M && n <= M - c * std::pow(N, ce.alpha) + 1.0))
                throw bad("needs (1-c)N^2 <= n <= N^2 - c N^alpha + 1");
            v.kind = SnumberKind::approximation;
            val = std::pow(N, ce.alpha / 2.0 - 2.0) * std::sqrt(R);
            v.upper_expression = "N^(alpha/2-2)*sqrt(N^2-n+1)";
            v.regime = "conjecture 1: approximation, intermediate range without the log factor";
            break;
        }
        case 2: {
            if (!(a <= 0.5 && b <= a)) throw bad("needs 2 <= p <= q");
            if (!(n >= (1.0 - c) * M && n <= M - c * std::pow(N, 1.0 + 2.0 * b) + 1.0))
                throw bad("needs (1-c)N^2 <= n <= N^2 - c N^(1+2/q) + 1");
            v.kind = SnumberKind::gelfand;
            val = a == b ? 1.0 : std::pow(std::sqrt(R / M), (a - b) / (0.5 - b));
            v.upper_expression = "sqrt((N^2-n+1)/N^2)^((1/p-1/q)/(1/2-1/q))";
            v.regime = "conjecture 2: gelfand upper bound, intermediate range";
            break;
        }
        case 3: {
            if (!(a >= 1.0 && b <= 0.5)) throw bad("needs 0 < p <= 1, 2 <= q");
            if (!(n >= 1 && n <= (1.0 - c) * M)) throw bad("needs 1 <= n <= (1-c)N^2");
            v.kind = SnumberKind::gelfand;
            val = std::pow(std::min(1.0, N / static_cast<double>(n)), a - 0.5);
            v.lower_expression = "min{1,N/n}^(1/p-1/2)";
            v.regime = "conjecture 3: gelfand lower bound, small-n range";
            break;
        }
        case 4: {
            if (!(b >= 1.0 && b >= a)) throw bad("needs 0 < q <= 1, q <= p");
            v.kind = SnumberKind::kolmogorov;
            val = std::pow(std::max(1.0, R / N), b - a);
            v.lower_expression = "max{1,(N^2-n+1)/N}^(1/q-1/p)";
            v.regime = "conjecture 4: kolmogorov lower bound, q<=1";
            break;
        }
        default: throw UsageError("conjecture id must be 1, 2, 3 or 4");
    }
    v.value_lower = v.value_upper = v.formula_lower = v.formula_upper = val;
    return v;
}

// ---------------------------------------------------------------------------
// Regime boundaries and sweeps

struct RegimeBoundary {
    std::int64_t n0;  // last index of the left piece
    int left, right;
    double left_lower, left_upper, right_lower, right_upper;  // formulas at n0
};

inline std::vector<RegimeBoundary> regime_boundaries(const EnvelopeCase& c) {
    std::vector<RegimeBoundary> out;
    int prev = -1;
    for (int i = 0; i < static_cast<int>(c.pieces.size()); ++i) {
        if (c.pieces[i].empty()) continue;
        if (prev >= 0) {
            const auto& L = c.pieces[prev];
            const auto& Rp = c.pieces[i];
            const double n0 = static_cast<double>(L.last);
            out.push_back({L.last, prev, i, L.lower(n0), L.upper(n0), Rp.lower(n0), Rp.upper(n0)});
        }
        prev = i;
    }
    return out;
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// CSV rows (n, lower, upper, regime, sharpness) for n = 1, 1+stride, ... and
/// every regime boundary, plus the last index.
inline std::string sweep_csv(const EnvelopeProfile& pr, std::int64_t stride, std::vector<EnvelopeValue>* values = nullptr) {
    if (stride < 1) throw UsageError("stride must be >= 1");
    std::set<std::int64_t> idx;
    for (std::int64_t n = 1; n <= pr.dim(); n += stride) idx.insert(n);
    idx.insert(pr.dim());
    for (const auto& pc : pr.table.pieces)
        if (!pc.empty()) idx.insert(pc.first), idx.insert(pc.last);
    std::string out = "n,lower,upper,regime,sharpness\n";
    for (auto n : idx) {
        auto v = pr.at(n);
        out += std::to_string(n) + "," + format_double(v.value_lower) + "," + format_double(v.value_upper) + ",\"" +
               v.regime + "\"," + to_string(v.sharpness) + "\n";
        if (values) values->push_back(std::move(v));
    }
    return out;
}

}  // namespace snumbers
