#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "snumbers/certificates.hpp"

using namespace snumbers;

namespace {

EmbeddingSpec at(Exponent p, Exponent q, int N, std::int64_t n) { return {p, q, N, n}; }

const std::vector<Exponent>& banach_grid() {
    static const std::vector<Exponent> g = {exponent(1), exponent(4, 3), exponent(2), exponent(3), exponent(4), kInf};
    return g;
}

const std::vector<Exponent>& full_grid() {
    static const std::vector<Exponent> g = {exponent(1, 2), exponent(1), exponent(4, 3), exponent(2),
                                            exponent(3),    exponent(4), kInf};
    return g;
}

}  // namespace

TEST(ColumnZero, FrozenExamples) {
    auto c = upper_column_zero(at(kInf, exponent(1), 4, 9));
    EXPECT_EQ(c.witness["k"], 2);
    EXPECT_EQ(c.witness["projection_rank"], 8);
    EXPECT_NEAR(c.value, 2.0, 1e-15);
    EXPECT_TRUE(c.exact_constant);
    EXPECT_TRUE(c.bounds(SnumberKind::gelfand) && c.bounds(SnumberKind::kolmogorov) && c.bounds(SnumberKind::approximation));
    for (std::int64_t n = 1; n <= 9; ++n) EXPECT_EQ(upper_column_zero(at(exponent(3), exponent(3), 3, n)).value, 1.0);
    c = upper_column_zero(at(kInf, exponent(1, 2), 3, 1));
    EXPECT_EQ(c.witness["k"], 0);
    EXPECT_NEAR(c.value, embedding_norm(kInf, exponent(1, 2), 3), 1e-12);
    EXPECT_THROW(upper_column_zero(at(exponent(1), exponent(2), 3, 2)), DomainError);
    EXPECT_THROW(upper_column_zero(EmbeddingSpec{kInf, exponent(1), 3, std::nullopt}), UsageError);
}

TEST(ColumnZero, WitnessRankBelowIndexAndWidthMatchesCeiling) {
    for (int N = 1; N <= 6; ++N)
        for (std::int64_t n = 1; n <= N * N; ++n) {
            auto c = upper_column_zero(at(kInf, exponent(1), N, n));
            const auto k = c.witness["k"].get<std::int64_t>();
            EXPECT_LT(k * N, n);
            EXPECT_EQ(c.witness["kept_columns"].get<std::int64_t>(), N - k);
            EXPECT_NEAR(c.value, std::ceil((N * N - n + 1.0) / N), 1e-12);
        }
}

TEST(FactorThroughS2, FrozenExamples) {
    auto c = upper_factor_through_S2(at(exponent(2), kInf, 4, 16));
    EXPECT_NEAR(c.value, 0.5, 1e-15);
    EXPECT_FALSE(c.exact_constant);
    EXPECT_NEAR(upper_factor_through_S2(at(exponent(2), exponent(2), 5, 1)).value, 1.0, 1e-15);
    EXPECT_NEAR(upper_factor_through_S2(at(exponent(4), kInf, 16, 1)).value, 2.0, 1e-14);
    EXPECT_THROW(upper_factor_through_S2(at(exponent(3, 2), kInf, 4, 1)), DomainError);
    EXPECT_THROW(upper_factor_through_S2(at(exponent(4), exponent(3, 2), 4, 1)), DomainError);
}

TEST(Trivial, FrozenExamples) {
    EXPECT_EQ(upper_trivial(at(exponent(1), kInf, 5, 3)).value, 1.0);
    EXPECT_NEAR(upper_trivial(at(kInf, exponent(1), 3, 1)).value, 3.0, 1e-14);
    EXPECT_EQ(upper_trivial(at(exponent(2), exponent(2), 7, 49)).value, 1.0);
}

TEST(TwoSumming, FrozenExamples) {
    EXPECT_NEAR(lower_two_summing(at(exponent(2), exponent(2), 3, 1)).value, 1.0, 1e-15);
    EXPECT_NEAR(lower_two_summing(at(exponent(1), kInf, 2, 1)).value, std::pow(2.0, -0.5), 1e-15);
    for (int N = 2; N <= 6; ++N) {
        const double v = lower_two_summing(at(exponent(1), exponent(2), N, N * N)).value;
        EXPECT_NEAR(v, std::pow(N, -1.5), 1e-15);
        EXPECT_LE(v, std::pow(N, -0.5));
    }
    EXPECT_THROW(lower_two_summing(at(exponent(1, 2), exponent(2), 3, 1)), DomainError);
}

TEST(TwoSumming, LastIndexBelowExactGelfandValue) {
    for (int N : {2, 3, 4})
        for (const auto& p : banach_grid())
            for (const auto& q : banach_grid()) {
                auto c = lower_two_summing(at(p, q, N, N * N));
                EXPECT_NEAR(c.value, 1.0 / pi2_embedding(q, p, N), 1e-15);
                if (p <= q) {
                    EXPECT_LE(c.value, std::pow(N, q.reciprocal() - p.reciprocal()) * (1 + 1e-15));
                }
            }
}

TEST(Gks, FrozenExamples) {
    for (int N : {2, 3, 5}) EXPECT_DOUBLE_EQ(lower_gks_kolmogorov(at(exponent(4, 3), exponent(3), N, 1)).value, 1.0);
    EXPECT_NEAR(lower_gks_kolmogorov(at(exponent(2), exponent(2), 2, 2)).value, 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(lower_gks_kolmogorov(at(exponent(1), kInf, 4, 4)).value,
                (16 - std::sqrt(48.0)) / (std::sqrt(48.0) * 2 + 16), 1e-15);
    EXPECT_THROW(lower_gks_kolmogorov(at(exponent(3), kInf, 4, 4)), DomainError);
    EXPECT_THROW(lower_gks_kolmogorov(at(exponent(1), exponent(3, 2), 4, 4)), DomainError);
}

TEST(Multiplicativity, FrozenExamples) {
    EXPECT_NEAR(lower_multiplicativity(at(exponent(1), exponent(2), 10, 100)).value, std::pow(10.0, -0.5), 1e-15);
    for (std::int64_t n = 1; n <= 5; ++n) EXPECT_EQ(lower_multiplicativity(at(exponent(1), kInf, 5, n)).value, 1.0);
    for (std::int64_t n = 1; n <= 16; ++n) EXPECT_EQ(lower_multiplicativity(at(exponent(3), exponent(3), 4, n)).value, 1.0);
    EXPECT_THROW(lower_multiplicativity(at(exponent(2), exponent(1), 4, 3)), DomainError);
}

TEST(Multiplicativity, RecoversExactGelfandValueAtLastIndex) {
    for (int N : {2, 3, 4})
        for (const auto& p : full_grid())
            for (const auto& q : full_grid()) {
                if (q < p) continue;
                EXPECT_DOUBLE_EQ(lower_multiplicativity(at(p, q, N, N * N)).value,
                                 std::pow(N, q.reciprocal() - p.reciprocal()));
            }
}

TEST(Sandwich, ExactConstantCertificatesNeverCross) {
    // No modelling slack, only formula rounding: a crossing would mean one of the proofs is implemented wrongly.
    for (int N : {2, 3, 4})
        for (const auto& p : banach_grid())
            for (const auto& q : banach_grid())
                for (std::int64_t n = 1; n <= N * N; ++n) {
                    auto certs = applicable_certificates(at(p, q, N, n));
                    for (auto kind : {SnumberKind::approximation, SnumberKind::gelfand, SnumberKind::kolmogorov}) {
                        auto r = sandwich(certs, kind);
                        EXPECT_TRUE(r.holds) << to_string(kind) << " p=" << p.to_string() << " q=" << q.to_string()
                                             << " N=" << N << " n=" << n << ": " << r.lower_method << "="
                                             << r.best_lower << " > " << r.upper_method << "=" << r.best_upper;
                        EXPECT_GT(r.best_lower, 0.0);
                        EXPECT_TRUE(std::isfinite(r.best_upper));
                    }
                }
}

TEST(Sandwich, HilbertIdentityIsPinnedToOne) {
    // All s-numbers of the identity on S_2^N equal 1; every lower bound is <= 1 <= every upper bound.
    for (int N : {2, 3, 4})
        for (std::int64_t n = 1; n <= N * N; ++n)
            for (const auto& c : applicable_certificates(at(exponent(2), exponent(2), N, n))) {
                if (c.direction == Direction::lower) {
                    EXPECT_LE(c.value, 1.0 + 1e-15) << c.method;
                } else {
                    EXPECT_GE(c.value, 1.0 - 1e-15) << c.method;
                }
            }
}

TEST(Sandwich, AsymptoticCertificatesAreExcluded) {
    auto certs = applicable_certificates(at(exponent(2), kInf, 4, 16));
    bool saw_factor = false;
    for (const auto& c : certs) saw_factor |= c.method == "factor-through-S2";
    EXPECT_TRUE(saw_factor);
    EXPECT_NE(sandwich(certs, SnumberKind::approximation).upper_method, "factor-through-S2");
}

TEST(Sandwich, DualLowerBoundsTransferToKolmogorov) {
    auto certs = applicable_certificates(at(exponent(4, 3), exponent(4), 3, 2));
    int duals = 0;
    for (const auto& c : certs)
        if (c.method.ends_with("-dual")) {
            ++duals;
            EXPECT_EQ(c.kind, SnumberKind::kolmogorov);
            EXPECT_TRUE(c.bounds(SnumberKind::approximation));
            EXPECT_FALSE(c.bounds(SnumberKind::gelfand));
        }
    EXPECT_GE(duals, 2);
}

TEST(Verification, ColumnZeroHoldsAndIsTight) {
    auto c = upper_column_zero(at(kInf, exponent(1), 4, 9));
    auto r = verify_certificate(c, 1000, 7);
    EXPECT_TRUE(r.passed);
    EXPECT_EQ(r.violations, 0);
    EXPECT_LE(r.max_ratio, 1.0 + 1e-12);
    EXPECT_GE(r.max_ratio, 1.0 - 1e-9);  // the flat kept-column probes attain the bound
}

TEST(Verification, TamperedCertificatesFail) {
    for (auto c : {upper_column_zero(at(kInf, exponent(1), 4, 9)), upper_trivial(at(exponent(1), kInf, 4, 3)),
                   upper_trivial(at(kInf, exponent(1), 3, 1)), lower_two_summing(at(exponent(1), kInf, 3, 4)),
                   lower_gks_kolmogorov(at(exponent(1), kInf, 4, 4)), lower_multiplicativity(at(exponent(1), exponent(2), 4, 7)),
                   upper_factor_through_S2(at(exponent(2), kInf, 4, 16))}) {
        EXPECT_TRUE(verify_certificate(c, 200, 3).passed) << c.method;
        c.value *= 0.5;
        auto r = verify_certificate(c, 200, 3);
        EXPECT_FALSE(r.passed) << c.method;
        EXPECT_GT(r.violations, 0) << c.method;
    }
}

TEST(Verification, DualCertificatesRecompute) {
    for (const auto& c : applicable_certificates(at(exponent(4, 3), exponent(4), 3, 5)))
        EXPECT_TRUE(verify_certificate(c, 100, 1).passed) << c.method;
}

TEST(Verification, WitnessMismatchIsAnError) {
    auto c = upper_column_zero(at(kInf, exponent(1), 4, 9));
    c.witness.erase("k");
    EXPECT_THROW(verify_certificate(c, 10, 1), UsageError);
    c = upper_column_zero(at(kInf, exponent(1), 4, 9));
    c.witness["k"] = 3;  // rank 12 >= n
    EXPECT_THROW(verify_certificate(c, 10, 1), UsageError);
    c.method = "mystery";
    EXPECT_THROW(verify_certificate(c, 10, 1), UsageError);
}

TEST(Verification, ConstructiveCertificatesPassOnTheGrid) {
    for (const auto& p : full_grid())
        for (const auto& q : full_grid())
            for (std::int64_t n = 1; n <= 9; ++n)
                for (const auto& c : applicable_certificates(at(p, q, 3, n))) {
                    if (!c.constructive) continue;
                    auto r = verify_certificate(c, 200, static_cast<std::uint64_t>(n));
                    EXPECT_TRUE(r.passed) << c.method << " p=" << p.to_string() << " q=" << q.to_string() << " n=" << n;
                }
}

TEST(Serialization, CertificateJsonCarriesMethodAndWitness) {
    auto j = to_json(upper_column_zero(at(kInf, exponent(1), 4, 9)));
    EXPECT_EQ(j["method"], "column-zero");
    EXPECT_EQ(j["witness"]["k"], 2);
    EXPECT_EQ(j["constant"], "exact-constant");
    EXPECT_EQ(j["direction"], "upper");
    EXPECT_EQ(j["schema_version"], 1);
}
