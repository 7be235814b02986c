#pragma once

// The acceptance battery: nine end-to-end checks with pinned tolerances and
// runtime limits. Used by the acceptance test binary and the `suite` command.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "snumbers/certificates.hpp"
#include "snumbers/envelope.hpp"
#include "snumbers/estimators.hpp"
#include "snumbers/recovery.hpp"
#include "snumbers/schatten.hpp"

namespace snumbers::acceptance {

struct Options {
    std::uint64_t seed = 7;
    std::string fixture_path;    // frozen N = 2 oracle values
    int recovery_budget = 64;    // test matrices per m in the recovery sweep
    std::set<int> only;          // empty: every criterion
    std::function<void(const std::string&)> progress;  // optional line sink
};

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    double seconds = 0.0;
    double time_limit = 0.0;  // 0: none
    std::string detail;
    nlohmann::json metrics = nlohmann::json::object();
};

inline nlohmann::json to_json(const CriterionResult& r) {
    return {{"id", r.id},           {"name", r.name},         {"passed", r.passed},
            {"seconds", r.seconds}, {"time_limit", r.time_limit}, {"detail", r.detail},
            {"metrics", r.metrics}};
}

inline std::string format_line(const CriterionResult& r) {
    char head[160];
    std::snprintf(head, sizeof head, "criterion %d %-22s %s  (%.1f s", r.id, r.name.c_str(), r.passed ? "PASS" : "FAIL",
                  r.seconds);
    std::string s = head;
    if (r.time_limit > 0.0) {
        char lim[48];
        std::snprintf(lim, sizeof lim, ", limit %.0f s", r.time_limit);
        s += lim;
    }
    return s + ")  " + r.detail;
}

namespace detail {

inline const std::vector<Exponent>& grid7() {
    static const std::vector<Exponent> g = {exponent(1, 2), exponent(1), exponent(4, 3), exponent(2),
                                            exponent(3),    exponent(4), kInf};
    return g;
}

inline const std::vector<Exponent>& banach_grid() {
    static const std::vector<Exponent> g = {exponent(1), exponent(4, 3), exponent(2), exponent(3), exponent(4), kInf};
    return g;
}

constexpr SnumberKind kKinds[] = {SnumberKind::approximation, SnumberKind::gelfand, SnumberKind::kolmogorov};

inline CriterionResult result(int id, std::string name) {
    CriterionResult r;
    r.id = id;
    r.name = std::move(name);
    return r;
}

inline std::string fmt(double v, const char* f = "%.3g") {
    char b[64];
    std::snprintf(b, sizeof b, f, v);
    return b;
}

inline std::string point(SnumberKind k, const Exponent& p, const Exponent& q, int N, std::int64_t n) {
    return to_string(k) + "(p=" + p.to_string() + ",q=" + q.to_string() + ",N=" + std::to_string(N) +
           ",n=" + std::to_string(n) + ")";
}

// Keeps the first few failure descriptions and counts the rest.
struct Failures {
    int count = 0;
    std::vector<std::string> first;
    void add(const std::string& s) {
        if (count++ < 3) first.push_back(s);
    }
    std::string summary() const {
        if (count == 0) return "";
        std::string s = std::to_string(count) + " failing: ";
        for (std::size_t i = 0; i < first.size(); ++i) s += (i ? "; " : "") + first[i];
        return s;
    }
};

}  // namespace detail

// 1. Operator norm of the identity against the closed form.
inline CriterionResult exact_norm(const Options& o) {
    auto r = detail::result(1, "exact-norm");
    r.time_limit = 60;
    constexpr double kTol = 1e-6;
    double worst = 0.0;
    int points = 0;
    detail::Failures f;
    for (int N = 2; N <= 4; ++N)
        for (const auto& p : detail::grid7())
            for (const auto& q : detail::grid7()) {
                const double v = operator_norm_estimate(OperatorOnMatrices::identity(N), p, q, EstimatorBudget{}, o.seed).value;
                const double err = std::abs(v - embedding_norm(p, q, N));
                worst = std::max(worst, err);
                ++points;
                if (err > kTol) f.add("p=" + p.to_string() + " q=" + q.to_string() + " N=" + std::to_string(N));
            }
    r.passed = f.count == 0;
    r.detail = "max |estimate - closed form| = " + detail::fmt(worst) + " over " + std::to_string(points) +
               " points (tol 1e-6)" + (f.count ? ", " + f.summary() : "");
    r.metrics = {{"max_abs_error", worst}, {"points", points}, {"tolerance", kTol}};
    return r;
}

// 2. All three s-numbers of the identity equal 1.
inline CriterionResult identity_values(const Options& o) {
    auto r = detail::result(2, "identity");
    r.time_limit = 120;
    constexpr double kTol = 0.02;
    double worst = 0.0;
    detail::Failures f;
    for (const auto& p : {exponent(1, 2), exponent(1), exponent(2), kInf})
        for (std::int64_t n = 1; n <= 4; ++n)
            for (auto kind : detail::kKinds) {
                const double v = estimate(kind, {p, p, 2, n}, EstimatorBudget{}, o.seed).value;
                worst = std::max(worst, std::abs(v - 1.0));
                if (std::abs(v - 1.0) > kTol) f.add(detail::point(kind, p, p, 2, n) + "=" + detail::fmt(v, "%.4f"));
            }
    r.passed = f.count == 0;
    r.detail = "max |estimate - 1| = " + detail::fmt(worst) + " over 48 estimates (tol 2%)" +
               (f.count ? ", " + f.summary() : "");
    r.metrics = {{"max_abs_deviation", worst}, {"tolerance", kTol}};
    return r;
}

// 3. For p < 1 <= q = 1 the values coincide with those at p = 1 (and equal 1).
inline CriterionResult quasi_range(const Options& o) {
    auto r = detail::result(3, "quasi-range-collapse");
    constexpr double kTol = 0.05;
    double worst_ref = 0.0, worst_one = 0.0;
    detail::Failures f;
    for (auto kind : {SnumberKind::approximation, SnumberKind::kolmogorov})
        for (std::int64_t n = 1; n <= 4; ++n) {
            const double ref = estimate(kind, {exponent(1), exponent(1), 2, n}, EstimatorBudget{}, o.seed).value;
            worst_one = std::max(worst_one, std::abs(ref - 1.0));
            if (std::abs(ref - 1.0) > kTol) f.add(detail::point(kind, exponent(1), exponent(1), 2, n) + " vs 1");
            for (const auto& p : {exponent(1, 2), exponent(3, 4)}) {
                const double v = estimate(kind, {p, exponent(1), 2, n}, EstimatorBudget{}, o.seed).value;
                const double rel = std::abs(v - ref) / ref;
                worst_ref = std::max(worst_ref, rel);
                worst_one = std::max(worst_one, std::abs(v - 1.0));
                if (rel > kTol) f.add(detail::point(kind, p, exponent(1), 2, n) + " vs p=1");
                if (std::abs(v - 1.0) > kTol) f.add(detail::point(kind, p, exponent(1), 2, n) + " vs 1");
            }
        }
    r.passed = f.count == 0;
    r.detail = "max relative gap to p=1 value " + detail::fmt(worst_ref) + ", max |value - 1| " +
               detail::fmt(worst_one) + " (tol 5%)" + (f.count ? ", " + f.summary() : "");
    r.metrics = {{"max_relative_gap", worst_ref}, {"max_deviation_from_one", worst_one}, {"tolerance", kTol}};
    return r;
}

// 4. Exact-constant lower certificates never exceed constructive upper ones.
inline CriterionResult certificate_sandwich(const Options&) {
    auto r = detail::result(4, "certificate-sandwich");
    r.time_limit = 60;
    detail::Failures f;
    int checks = 0, anchored = 0;
    double min_gap = std::numeric_limits<double>::infinity();
    for (int N : {2, 3, 4})
        for (const auto& p : detail::banach_grid())
            for (const auto& q : detail::banach_grid())
                for (std::int64_t n = 1; n <= N * N; ++n) {
                    const EmbeddingSpec s{p, q, N, n};
                    const auto certs = applicable_certificates(s);
                    for (auto kind : detail::kKinds) {
                        const auto sw = sandwich(certs, kind);
                        ++checks;
                        min_gap = std::min(min_gap, sw.best_upper / sw.best_lower);
                        if (!sw.holds || !(sw.best_lower > 0.0) || !std::isfinite(sw.best_upper))
                            f.add(detail::point(kind, p, q, N, n) + ": " + sw.lower_method + "=" +
                                  detail::fmt(sw.best_lower, "%.6g") + " > " + sw.upper_method + "=" +
                                  detail::fmt(sw.best_upper, "%.6g"));
                    }
                    if (n == static_cast<std::int64_t>(N) * N && !(q < p)) {
                        ++anchored;
                        const double target = std::pow(N, q.reciprocal() - p.reciprocal());
                        const double v = lower_multiplicativity(s).value;
                        const auto sw = sandwich(certs, SnumberKind::gelfand);
                        if (std::abs(v - target) > 1e-12 * target || std::abs(sw.best_lower - target) > 1e-12 * target)
                            f.add("multiplicativity at " + detail::point(SnumberKind::gelfand, p, q, N, n) + " = " +
                                  detail::fmt(v, "%.12g") + ", expected " + detail::fmt(target, "%.12g"));
                    }
                }
    r.passed = f.count == 0;
    r.detail = std::to_string(checks) + " sandwiches, smallest upper/lower " + detail::fmt(min_gap, "%.6g") + ", " +
               std::to_string(anchored) + " last-index anchors" + (f.count ? ", " + f.summary() : "");
    r.metrics = {{"sandwiches", checks}, {"min_upper_over_lower", min_gap}, {"anchors", anchored}};
    return r;
}

// 5. The column-zeroing projection satisfies its inequality on samples.
inline CriterionResult column_zero_witness(const Options& o) {
    auto r = detail::result(5, "column-zero-witness");
    constexpr int N = 4, kSamples = 1000;
    int points = 0, violations = 0, matrices = 0;
    double worst = 0.0;
    detail::Failures f;
    for (const auto& p : detail::grid7())
        for (const auto& q : detail::grid7())
            for (std::int64_t n = 1; n <= N * N; ++n) {
                Certificate c;
                try {
                    c = upper_column_zero({p, q, N, n});
                } catch (const DomainError&) {
                    continue;
                }
                const auto rep = verify_certificate(c, kSamples, derive_seed(o.seed, static_cast<std::uint64_t>(points)));
                ++points;
                matrices += rep.samples;
                violations += rep.violations;
                worst = std::max(worst, rep.max_ratio);
                if (!rep.passed) f.add(detail::point(SnumberKind::approximation, p, q, N, n));
            }
    r.passed = f.count == 0 && points > 0;
    r.detail = std::to_string(violations) + " violations in " + std::to_string(matrices) + " matrices over " +
               std::to_string(points) + " points, max ratio " + detail::fmt(worst, "%.15g") +
               (f.count ? ", " + f.summary() : "");
    r.metrics = {{"points", points}, {"matrices", matrices}, {"violations", violations}, {"max_ratio", worst}};
    return r;
}

// 6. Estimators against the frozen brute-force values at N = 2.
inline CriterionResult oracle_calibration(const Options& o) {
    auto r = detail::result(6, "oracle-calibration");
    r.time_limit = 1800;
    std::ifstream in(o.fixture_path);
    if (!in) {
        r.detail = "cannot read fixture file '" + o.fixture_path + "'";
        return r;
    }
    const auto doc = nlohmann::json::parse(in);
    detail::Failures f;
    double worst = 0.0;  // |error| / allowance
    int points = 0;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& pt : doc.at("points")) {
        const auto kind = parse_kind(pt.at("kind").get<std::string>());
        const EmbeddingSpec s(Exponent::parse(pt.at("p").get<std::string>()), Exponent::parse(pt.at("q").get<std::string>()),
                              pt.at("N").get<int>(), pt.at("n").get<std::int64_t>());
        const double ref = pt.at("value").get<double>(), h = pt.at("resolution").get<double>();
        const double v = estimate(kind, s, EstimatorBudget{}, o.seed).value;
        const double allowed = std::max(0.05 * ref, 2.0 * h);
        worst = std::max(worst, std::abs(v - ref) / allowed);
        ++points;
        rows.push_back({{"point", detail::point(kind, s.p, s.q, s.N, s.index())}, {"estimate", v}, {"oracle", ref}});
        if (std::abs(v - ref) > allowed)
            f.add(detail::point(kind, s.p, s.q, s.N, s.index()) + " est " + detail::fmt(v, "%.5f") + " oracle " +
                  detail::fmt(ref, "%.5f"));
    }
    r.passed = f.count == 0 && points == 12;
    r.detail = std::to_string(points) + " points, max |error|/allowance " + detail::fmt(worst) +
               " (allowance max(5%, 2h))" + (f.count ? ", " + f.summary() : "");
    r.metrics = {{"points", points}, {"max_error_over_allowance", worst}, {"rows", rows}};
    return r;
}

// 7. Structural properties of the envelopes.
inline CriterionResult envelope_structure(const Options&) {
    auto r = detail::result(7, "envelope-structure");
    r.time_limit = 60;
    detail::Failures f;
    int profiles = 0, boundaries = 0;
    double worst_ratio = 1.0;
    auto label = [](SnumberKind k, const Exponent& p, const Exponent& q, int N) {
        return to_string(k) + "(p=" + p.to_string() + ",q=" + q.to_string() + ",N=" + std::to_string(N) + ")";
    };
    for (int N : {8, 16, 32}) {
        const auto M = static_cast<std::int64_t>(N) * N;
        for (auto kind : detail::kKinds)
            for (const auto& p : detail::grid7())
                for (const auto& q : detail::grid7()) {
                    const auto pr = envelope_profile(kind, p, q, N);
                    ++profiles;
                    for (std::int64_t i = 0; i < pr.dim(); ++i) {
                        const bool bad = pr.lower[i] > pr.upper[i] || pr.lower[i] < 0.0 ||
                                         (i > 0 && (pr.upper[i] > pr.upper[i - 1] || pr.lower[i] > pr.lower[i - 1]));
                        if (bad) {
                            f.add("monotonicity " + label(kind, p, q, N) + " n=" + std::to_string(i + 1));
                            break;
                        }
                    }
                    for (const auto& b : regime_boundaries(pr.table)) {
                        auto ratio = [](double x, double y) {
                            return x == 0.0 && y == 0.0 ? 1.0 : std::max(x, y) / std::min(x, y);
                        };
                        const double worst = std::max(ratio(b.left_lower, b.right_lower), ratio(b.left_upper, b.right_upper));
                        ++boundaries;
                        worst_ratio = std::max(worst_ratio, worst);
                        if (worst > 4.0) f.add("boundary ratio " + label(kind, p, q, N) + " n0=" + std::to_string(b.n0));
                    }
                    const auto first = pr.at(1);
                    const double norm = embedding_norm(p, q, N);
                    if (first.sharpness == Sharpness::exact_asymptotic && std::abs(first.value_upper - norm) > 1e-12 * norm)
                        f.add("anchor n=1 " + label(kind, p, q, N));
                    if (!(q < p)) {
                        const double target = std::pow(N, q.reciprocal() - p.reciprocal());
                        const auto last = pr.at(M);
                        if (kind == SnumberKind::gelfand) {
                            if (std::abs(last.value_lower - target) > 1e-12 * target ||
                                std::abs(last.value_upper - target) > 1e-12 * target)
                                f.add("anchor n=N^2 " + label(kind, p, q, N));
                        } else if (last.value_lower < target * (1 - 1e-12)) {
                            f.add("anchor n=N^2 " + label(kind, p, q, N));
                        }
                    }
                }
        for (const auto& p : detail::banach_grid())
            for (const auto& q : detail::banach_grid()) {
                const auto a = envelope_profile(SnumberKind::approximation, p, q, N);
                const auto ad = envelope_profile(SnumberKind::approximation, q.dual(), p.dual(), N);
                const auto c = envelope_profile(SnumberKind::gelfand, p, q, N);
                const auto d = envelope_profile(SnumberKind::kolmogorov, q.dual(), p.dual(), N);
                for (std::int64_t i = 0; i < M; ++i) {
                    auto close = [](double x, double y) { return std::abs(x - y) <= 1e-14 * std::max(x, y); };
                    if (!close(a.lower[i], ad.lower[i]) || !close(a.upper[i], ad.upper[i]) ||
                        !close(c.lower[i], d.lower[i]) || !close(c.upper[i], d.upper[i])) {
                        f.add("duality p=" + p.to_string() + " q=" + q.to_string() + " N=" + std::to_string(N) +
                              " n=" + std::to_string(i + 1));
                        break;
                    }
                }
            }
    }
    r.passed = f.count == 0;
    r.detail = std::to_string(profiles) + " profiles, " + std::to_string(boundaries) + " boundaries, max boundary ratio " +
               detail::fmt(worst_ratio, "%.4f") + (f.count ? ", " + f.summary() : "");
    r.metrics = {{"profiles", profiles}, {"boundaries", boundaries}, {"max_boundary_ratio", worst_ratio}};
    return r;
}

// 8. Littlewood interpolation inequality and the convex hull decomposition.
inline CriterionResult littlewood_and_hull(const Options& o) {
    auto r = detail::result(8, "littlewood-hull");
    constexpr int kDraws = 10000;
    constexpr double kHullTol = 1e-10;
    Rng rng(derive_seed(o.seed, 0x8));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::vector<Exponent> grid = {exponent(1, 3), exponent(1, 2), exponent(3, 4), exponent(1), exponent(4, 3),
                                        exponent(2),    exponent(3),    kInf};
    int littlewood_fail = 0, hull_fail = 0;
    double worst_hull = 0.0;
    for (int k = 0; k < kDraws; ++k) {
        const int n = 1 + k % 6;
        Matrix a = k % 4 == 3 ? Matrix(gaussian_matrix(n, 1, rng) * gaussian_matrix(1, n, rng)) : gaussian_matrix(n, rng);
        const auto& p = grid[k % grid.size()];
        const auto& q = grid[(k / grid.size()) % grid.size()];
        if (!littlewood_check(a, p, q, unif(rng)).holds) ++littlewood_fail;

        const auto h = hull_decompose(a);
        const double nuc = schatten_norm(a, exponent(1));
        double err = (h.reconstruct() - a).norm() / a.norm();
        err = std::max(err, std::abs(h.weight_sum() - nuc) / nuc);
        for (const auto& t : h.terms) err = std::max(err, std::abs(t.atom.norm() - 1.0));
        // quasi-balls sit inside the convex hull of the rank-one atoms
        for (const auto& s : {exponent(1, 3), exponent(1, 2), exponent(3, 4)})
            err = std::max(err, (h.weight_sum() - schatten_norm(a, s)) / nuc);
        worst_hull = std::max(worst_hull, err);
        if (err > kHullTol) ++hull_fail;
    }
    r.passed = littlewood_fail == 0 && hull_fail == 0;
    r.detail = std::to_string(kDraws) + " Littlewood draws (" + std::to_string(littlewood_fail) + " failures, tol 1e-12), " +
               std::to_string(kDraws) + " hull draws (" + std::to_string(hull_fail) + " failures, max defect " +
               detail::fmt(worst_hull) + ", tol 1e-10)";
    r.metrics = {{"littlewood_failures", littlewood_fail}, {"hull_failures", hull_fail}, {"max_hull_defect", worst_hull}};
    return r;
}

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Least-squares line through (log x, log y).
inline SlopeFit log_log_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw UsageError("log_log_fit needs at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return {sxy / sxx, my - sxy / sxx * mx};
}

// 9. Recovery error decay against the envelope.
inline CriterionResult recovery_slope(const Options& o) {
    auto r = detail::result(9, "recovery-slope");
    r.time_limit = 1200;
    constexpr int N = 32;
    const std::vector<int> ms = {8, 16, 32, 64, 128, 256};
    std::vector<double> fit_m, fit_e, band;
    nlohmann::json rows = nlohmann::json::array();
    bool converged = true;
    std::string errors;
    for (int m : ms) {
        const auto res = worst_case_error(N, exponent(1), exponent(2), m, o.recovery_budget, o.seed);
        const auto cmp = compare_to_envelope(res);
        converged = converged && res.all_converged;
        rows.push_back({{"m", m}, {"worst_error", res.worst_error}, {"envelope", cmp.envelope}, {"ratio", cmp.ratio}});
        errors += (errors.empty() ? "" : " ") + std::to_string(m) + ":" + detail::fmt(res.worst_error, "%.4f");
        if (m >= N) {
            fit_m.push_back(m);
            fit_e.push_back(res.worst_error);
        }
        if (m >= 2 * N) band.push_back(cmp.ratio);
        if (o.progress) o.progress("  recovery m=" + std::to_string(m) + " worst_error=" + detail::fmt(res.worst_error, "%.4f"));
    }
    const double slope = log_log_fit(fit_m, fit_e).slope;
    const double spread = *std::max_element(band.begin(), band.end()) / *std::min_element(band.begin(), band.end());
    const bool slope_ok = slope >= -0.65 && slope <= -0.35;
    const bool band_ok = spread <= 8.0;
    r.passed = slope_ok && band_ok && converged;
    r.detail = "slope over m>=N " + detail::fmt(slope, "%.3f") + (slope_ok ? " in" : " NOT in") +
               " [-0.65,-0.35]; ratio band over m>=2N " + detail::fmt(spread, "%.3f") + (band_ok ? " <= 8" : " > 8") +
               (converged ? "" : "; decoder did not converge everywhere") + "; worst errors " + errors;
    r.metrics = {{"slope", slope},       {"ratio_band", spread}, {"all_converged", converged},
                 {"test_budget", o.recovery_budget}, {"rows", rows}};
    return r;
}

/// Runs the selected criteria in order.
inline std::vector<CriterionResult> run(const Options& o) {
    using Check = CriterionResult (*)(const Options&);
    const Check checks[] = {exact_norm,          identity_values,    quasi_range,         certificate_sandwich,
                            column_zero_witness, oracle_calibration, envelope_structure, littlewood_and_hull,
                            recovery_slope};
    std::vector<CriterionResult> out;
    for (int id = 1; id <= 9; ++id) {
        if (!o.only.empty() && !o.only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        CriterionResult r;
        try {
            r = checks[id - 1](o);
        } catch (const std::exception& e) {
            r.id = id;
            r.name = "criterion-" + std::to_string(id);
            r.passed = false;
            r.detail = std::string("error: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (r.time_limit > 0.0 && r.seconds > r.time_limit) {
            r.passed = false;
            r.detail += "; runtime over limit";
        }
        if (o.progress) o.progress(format_line(r));
        out.push_back(std::move(r));
    }
    return out;
}

inline bool all_passed(const std::vector<CriterionResult>& rs) {
    return std::all_of(rs.begin(), rs.end(), [](const CriterionResult& r) { return r.passed; });
}

}  // namespace snumbers::acceptance
