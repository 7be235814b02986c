#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "snumbers/schatten.hpp"

using namespace snumbers;

namespace {

// Independent reference: Eigen's divide-and-conquer SVD.
Vector reference_singular_values(const Matrix& a) {
    Eigen::BDCSVD<Matrix> svd(a);
    return svd.singularValues();
}

double reference_norm(const Matrix& a, double p) {
    Vector s = reference_singular_values(a);
    if (std::isinf(p)) return s(0);
    long double acc = 0;
    for (int i = 0; i < s.size(); ++i) acc += std::pow(static_cast<long double>(s(i)), static_cast<long double>(p));
    return static_cast<double>(std::pow(acc, 1.0L / p));
}

const std::vector<Exponent>& norm_grid() {
    static const std::vector<Exponent> g = {exponent(1, 2), exponent(1), exponent(3, 2), exponent(2), exponent(4), kInf};
    return g;
}

}  // namespace

TEST(Exponent, ParsesRationalsAndInfinity) {
    EXPECT_EQ(Exponent::parse("4/3").reciprocal(), 0.75);
    EXPECT_TRUE(Exponent::parse("inf").is_infinite());
    EXPECT_TRUE(Exponent::parse("∞").is_infinite());
    EXPECT_EQ(Exponent::parse("0.5").reciprocal(), 2.0);
    EXPECT_EQ(Exponent::parse("2").reciprocal(), 0.5);
    EXPECT_EQ(Exponent::parse("4/3").to_string(), "4/3");
    EXPECT_THROW(Exponent::parse("-1"), DomainError);
    EXPECT_THROW(Exponent::parse("abc"), DomainError);
    EXPECT_THROW(Exponent::parse("1/0"), DomainError);
    EXPECT_THROW(Exponent::from_value(0.0), DomainError);
    EXPECT_LT(exponent(1), exponent(2));
    EXPECT_LT(exponent(2), kInf);
}

TEST(Exponent, DualExamples) {
    EXPECT_EQ(dual_exponent(exponent(2)), exponent(2));
    EXPECT_TRUE(dual_exponent(exponent(1)).is_infinite());
    EXPECT_EQ(dual_exponent(kInf), exponent(1));
    EXPECT_EQ(dual_exponent(exponent(4, 3)), exponent(4));
    EXPECT_EQ(dual_exponent(exponent(4, 3)).to_string(), "4");
    EXPECT_THROW(dual_exponent(exponent(1, 2)), DomainError);
    for (const auto& p : {exponent(1), exponent(3, 2), exponent(3), kInf})
        EXPECT_DOUBLE_EQ(p.reciprocal() + p.dual().reciprocal(), 1.0);
}

TEST(SingularValues, FrozenExamples) {
    auto s = singular_values(Matrix::Identity(3, 3));
    ASSERT_EQ(s.size(), 3);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(s[i], 1.0, 1e-15);

    Matrix swap(2, 2);
    swap << 0, 1, 1, 0;
    s = singular_values(swap);
    EXPECT_NEAR(s[0], 1.0, 1e-15);
    EXPECT_NEAR(s[1], 1.0, 1e-15);

    Matrix d(2, 2);
    d << 3, 0, 0, -4;
    s = singular_values(d);
    EXPECT_NEAR(s[0], 4.0, 1e-14);
    EXPECT_NEAR(s[1], 3.0, 1e-14);
}

TEST(SingularValues, RejectsInvalidInput) {
    EXPECT_THROW(singular_values(Matrix::Zero(2, 3)), InputError);
    Matrix a = Matrix::Identity(2, 2);
    a(0, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(singular_values(a), InputError);
    a(0, 1) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(singular_values(a), InputError);
}

TEST(SingularValues, MatchesIndependentSvd) {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + trial % 8;
        Matrix a = gaussian_matrix(n, rng);
        if (trial % 5 == 0 && n > 1) a.col(0) = a.col(n - 1) * 0.5;  // rank deficient
        Svd mine = jacobi_svd(a);
        Vector ref = reference_singular_values(a);
        for (int i = 0; i < n; ++i) EXPECT_NEAR(mine.s(i), ref(i), 1e-12 * std::max(1.0, ref(0)));
        for (int i = 0; i + 1 < n; ++i) EXPECT_GE(mine.s(i), mine.s(i + 1));
        EXPECT_LT((mine.u * mine.s.asDiagonal() * mine.v.transpose() - a).norm(), 1e-12 * std::max(1.0, a.norm()));
        EXPECT_LT((mine.u.transpose() * mine.u - Matrix::Identity(n, n)).norm(), 1e-12);
        EXPECT_LT((mine.v.transpose() * mine.v - Matrix::Identity(n, n)).norm(), 1e-12);
    }
}

TEST(SingularValues, OrthogonalInvariance) {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + trial % 5;
        Matrix a = gaussian_matrix(n, rng);
        Matrix u = haar_orthogonal(n, rng), v = haar_orthogonal(n, rng);
        Vector s1 = singular_values(a).values, s2 = singular_values(u * a * v).values;
        EXPECT_LT((s1 - s2).cwiseAbs().maxCoeff(), 1e-12 * s1(0));
        for (const auto& p : norm_grid())
            EXPECT_NEAR(schatten_norm(u * a * v, p), schatten_norm(a, p), 1e-10 * schatten_norm(a, p));
    }
}

TEST(SchattenNorm, FrozenExamples) {
    EXPECT_NEAR(schatten_norm(Matrix::Identity(3, 3), exponent(2)), std::sqrt(3.0), 1e-15);
    Matrix d(2, 2);
    d << 3, 0, 0, 4;
    EXPECT_NEAR(schatten_norm(d, kInf), 4.0, 1e-14);
    Matrix swap(2, 2);
    swap << 0, 1, 1, 0;
    EXPECT_NEAR(schatten_norm(swap, exponent(1)), 2.0, 1e-14);
}

TEST(SchattenNorm, AgreesWithReferenceAndIsHomogeneous) {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + trial % 6;
        Matrix a = gaussian_matrix(n, rng);
        for (const auto& p : norm_grid()) {
            const double ref = reference_norm(a, p.value());
            EXPECT_NEAR(schatten_norm(a, p), ref, 1e-11 * ref);
            EXPECT_NEAR(schatten_norm(-2.5 * a, p), 2.5 * schatten_norm(a, p), 1e-11 * ref);
        }
        EXPECT_EQ(schatten_norm(Matrix::Zero(n, n), exponent(1, 3)), 0.0);
    }
}

TEST(SchattenNorm, WideSpectrumQuasiNormStaysFinite) {
    // Singular values spanning 40 orders of magnitude at p = 1/10.
    Vector s(4);
    s << 1e20, 1.0, 1e-10, 1e-20;
    const Exponent p = exponent(1, 10);
    long double acc = 0;
    for (int i = 0; i < 4; ++i) acc += std::pow(static_cast<long double>(s(i)), 0.1L);
    const double ref = static_cast<double>(std::pow(acc, 10.0L));
    const double got = lp_norm_sorted(s, p);
    EXPECT_TRUE(std::isfinite(got));
    EXPECT_NEAR(got / ref, 1.0, 1e-12);
}

TEST(SchattenNorm, HolderMonotonicity) {
    Rng rng(23);
    const auto& g = norm_grid();
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 1 + trial % 5;
        Matrix a = gaussian_matrix(n, rng);
        for (std::size_t i = 0; i < g.size(); ++i)
            for (std::size_t j = i; j < g.size(); ++j) {
                const double np = schatten_norm(a, g[i]), nq = schatten_norm(a, g[j]);
                EXPECT_LE(nq, np * (1 + 1e-12));
                EXPECT_LE(np, std::pow(n, g[i].reciprocal() - g[j].reciprocal()) * nq * (1 + 1e-12));
            }
    }
}

TEST(SchattenNorm, TriangleAndQuasiTriangle) {
    Rng rng(29);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 1 + trial % 5;
        Matrix a = gaussian_matrix(n, rng), b = gaussian_matrix(n, rng);
        if (trial % 3 == 0) b = b.col(0) * b.row(0);  // rank-one summand
        for (const auto& p : norm_grid()) {
            if (p.is_banach()) {
                EXPECT_LE(schatten_norm(a + b, p), (schatten_norm(a, p) + schatten_norm(b, p)) * (1 + 1e-12));
            } else {
                const double pv = p.value();
                EXPECT_LE(std::pow(schatten_norm(a + b, p), pv),
                          (std::pow(schatten_norm(a, p), pv) + std::pow(schatten_norm(b, p), pv)) * (1 + 1e-12));
            }
        }
    }
}

TEST(EmbeddingNorm, FrozenExamples) {
    EXPECT_DOUBLE_EQ(embedding_norm(kInf, exponent(1), 4), 4.0);
    EXPECT_DOUBLE_EQ(embedding_norm(exponent(2), kInf, 9), 1.0);
    for (const auto& p : norm_grid()) EXPECT_DOUBLE_EQ(embedding_norm(p, p, 7), 1.0);
}

TEST(EmbeddingNorm, AttainedBySamplesAndWitnesses) {
    Rng rng(31);
    const std::vector<Exponent> grid = {exponent(1, 2), exponent(1), exponent(4, 3), exponent(2), exponent(3), exponent(4), kInf};
    for (int n = 1; n <= 4; ++n) {
        std::vector<Matrix> samples;
        samples.push_back(matrix_unit(n, 0, 0));
        samples.push_back(Matrix::Identity(n, n) / std::sqrt(static_cast<double>(n)));
        for (int k = 0; k < 10000; ++k) {
            Matrix a = gaussian_matrix(n, rng);
            if (k % 4 == 1) a = a.col(0) * a.row(0);
            if (k % 4 == 2) a = haar_orthogonal(n, rng);
            samples.push_back(a);
        }
        std::vector<Vector> spectra;
        for (const auto& a : samples) spectra.push_back(singular_values(a).values);
        for (const auto& p : grid)
            for (const auto& q : grid) {
                double best = 0.0;
                for (const auto& s : spectra) {
                    const double r = lp_norm_sorted(s, q) / lp_norm_sorted(s, p);
                    EXPECT_LE(r, embedding_norm(p, q, n) * (1 + 1e-12));
                    best = std::max(best, r);
                }
                EXPECT_NEAR(best, embedding_norm(p, q, n), 1e-9) << p.to_string() << "->" << q.to_string();
            }
    }
}

TEST(Pi2Embedding, FrozenExamples) {
    for (int n = 1; n <= 6; ++n) EXPECT_NEAR(pi2_embedding(exponent(2), exponent(2), n), n, 1e-14);
    EXPECT_NEAR(pi2_embedding(exponent(1), exponent(2), 4), 2.0, 1e-14);
    EXPECT_NEAR(pi2_embedding(kInf, exponent(1), 3), std::pow(3.0, 1.5), 1e-13);
    EXPECT_THROW(pi2_embedding(exponent(1, 2), exponent(2), 3), DomainError);
    EXPECT_THROW(pi2_embedding(exponent(2), exponent(1, 2), 3), DomainError);
}

TEST(HullDecompose, FrozenExamples) {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 0.6;
    d(1, 1) = 0.4;
    auto h = hull_decompose(d);
    ASSERT_EQ(h.terms.size(), 2u);
    EXPECT_NEAR(h.terms[0].lambda, 0.6, 1e-15);
    EXPECT_NEAR(h.terms[1].lambda, 0.4, 1e-15);
    EXPECT_LT((h.terms[0].atom.cwiseAbs() - matrix_unit(2, 0, 0)).norm(), 1e-14);
    EXPECT_LT((h.terms[1].atom.cwiseAbs() - matrix_unit(2, 1, 1)).norm(), 1e-14);

    Vector u(3), v(3);
    u << 1, 2, 2;
    v << 0, 3, 4;
    Matrix r1 = (u / 3.0) * (v / 5.0).transpose();  // rank one, nuclear norm 1
    h = hull_decompose(r1);
    ASSERT_EQ(h.terms.size(), 1u);
    EXPECT_NEAR(h.terms[0].lambda, 1.0, 1e-14);

    EXPECT_TRUE(hull_decompose(Matrix::Zero(3, 3)).terms.empty());
}

TEST(HullDecompose, ReconstructsAndAtomsAreUnit) {
    Rng rng(37);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + trial % 5;
        Matrix a = gaussian_matrix(n, rng);
        auto h = hull_decompose(a);
        EXPECT_LT((h.reconstruct() - a).norm(), 1e-10 * a.norm());
        EXPECT_NEAR(h.weight_sum(), reference_norm(a, 1.0), 1e-10 * h.weight_sum());
        for (const auto& t : h.terms)
            for (const auto& p : {exponent(1, 2), exponent(1), exponent(2), kInf})
                EXPECT_NEAR(schatten_norm(t.atom, p), 1.0, 1e-10);
    }
}

TEST(KFunctional, FrozenExamples) {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = 1.0;
    EXPECT_NEAR(k_functional_upper(a, exponent(1), kInf, 0.5), 0.5, 1e-12);
    Rng rng(41);
    Matrix b = gaussian_matrix(3, rng);
    EXPECT_NEAR(k_functional_upper(b, exponent(3, 2), exponent(4), 1e9), schatten_norm(b, exponent(3, 2)), 1e-9);
    EXPECT_EQ(k_functional_upper(Matrix::Zero(3, 3), exponent(1), kInf, 2.0), 0.0);
    EXPECT_THROW(k_functional_upper(b, exponent(1), kInf, 0.0), DomainError);
    EXPECT_THROW(k_functional_upper(b, exponent(1), kInf, -1.0), DomainError);
}

TEST(KFunctional, MatchesGridSearchOverAlignedSplitsAtN2) {
    // Brute force: minimize over a 401 x 401 grid of splits of (σ1, σ2).
    Rng rng(43);
    const std::vector<std::pair<Exponent, Exponent>> pairs = {
        {exponent(1), kInf}, {exponent(2), exponent(1)}, {exponent(1, 2), exponent(2)}, {exponent(3), exponent(3, 2)}};
    for (int trial = 0; trial < 8; ++trial) {
        Matrix a = gaussian_matrix(2, rng);
        Vector s = singular_values(a).values;
        for (const auto& [p, q] : pairs) {
            for (double t : {0.3, 1.0, 2.5}) {
                double grid = std::numeric_limits<double>::infinity();
                constexpr int G = 400;
                for (int i = 0; i <= G; ++i)
                    for (int j = 0; j <= G; ++j) {
                        Vector x(2);
                        x << s(0) * i / G, s(1) * j / G;
                        grid = std::min(grid, lp_norm(x, p) + t * lp_norm(s - x, q));
                    }
                const double got = k_functional_upper(a, p, q, t);
                EXPECT_LE(got, grid + 1e-12);
                EXPECT_GE(got, grid - 0.02 * grid) << p.to_string() << "," << q.to_string() << " t=" << t;
            }
        }
    }
}

TEST(KFunctional, BoundedMonotoneAndConcaveInT) {
    Rng rng(47);
    const std::vector<std::pair<Exponent, Exponent>> pairs = {
        {exponent(1), kInf}, {exponent(2), exponent(1)}, {exponent(4, 3), exponent(4)}, {kInf, exponent(1)}, {exponent(1, 2), exponent(2)}};
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + trial % 3;
        Matrix a = gaussian_matrix(n, rng);
        for (const auto& [p, q] : pairs) {
            const double np = schatten_norm(a, p), nq = schatten_norm(a, q);
            std::vector<double> ts, ks;
            for (int k = 0; k < 25; ++k) ts.push_back(0.05 * std::pow(1.3, k));
            for (double t : ts) {
                const double kv = k_functional_upper(a, p, q, t);
                EXPECT_LE(kv, std::min(np, t * nq) * (1 + 1e-12));
                ks.push_back(kv);
            }
            const double tol = p.is_banach() && q.is_banach() ? 1e-9 : 1e-6;
            for (std::size_t i = 1; i < ks.size(); ++i) EXPECT_GE(ks[i], ks[i - 1] * (1 - tol));
            // concavity: chords lie below the graph
            for (std::size_t i = 1; i + 1 < ks.size(); ++i) {
                const double w = (ts[i + 1] - ts[i]) / (ts[i + 1] - ts[i - 1]);
                EXPECT_GE(ks[i], (w * ks[i - 1] + (1 - w) * ks[i + 1]) * (1 - tol));
            }
        }
    }
}

TEST(Littlewood, EndpointsAreEqualities) {
    Rng rng(53);
    Matrix a = gaussian_matrix(4, rng);
    auto r0 = littlewood_check(a, exponent(1), kInf, 0.0);
    EXPECT_TRUE(r0.holds);
    EXPECT_NEAR(r0.norm_interpolated, r0.norm_q, 1e-12 * r0.norm_q);
    auto r1 = littlewood_check(a, exponent(1), kInf, 1.0);
    EXPECT_TRUE(r1.holds);
    EXPECT_NEAR(r1.norm_interpolated, r1.norm_p, 1e-12 * r1.norm_p);
    auto rh = littlewood_check(a, exponent(1), kInf, 0.5);
    EXPECT_TRUE(rh.holds);
    EXPECT_EQ(rh.p_theta.reciprocal(), 0.5);
    EXPECT_NEAR(rh.norm_interpolated, a.norm(), 1e-12 * a.norm());
}

TEST(Littlewood, RandomDrawsHold) {
    Rng rng(59);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::vector<Exponent> grid = {exponent(1, 3), exponent(1, 2), exponent(1), exponent(4, 3), exponent(2), exponent(3), kInf};
    for (int k = 0; k < 2000; ++k) {
        const int n = 1 + k % 5;
        Matrix a = gaussian_matrix(n, rng);
        const auto& p = grid[k % grid.size()];
        const auto& q = grid[(k / grid.size()) % grid.size()];
        EXPECT_TRUE(littlewood_check(a, p, q, unif(rng)).holds);
    }
}

TEST(Gradients, DualPairingIdentities) {
    Rng rng(61);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 2 + trial % 3;
        Matrix x = gaussian_matrix(n, rng);
        for (const auto& q : {exponent(1), exponent(3, 2), exponent(2), exponent(4), kInf}) {
            Matrix g = schatten_norm_gradient(x, q);
            EXPECT_NEAR((g.array() * x.array()).sum(), schatten_norm(x, q), 1e-10 * schatten_norm(x, q));
            if (q.is_banach()) { EXPECT_NEAR(schatten_norm(g, q.dual()), 1.0, 1e-9); }
        }
        Svd gs = jacobi_svd(x);
        for (const auto& p : {exponent(1), exponent(3, 2), exponent(2), exponent(4), kInf}) {
            Matrix m = schatten_ball_maximizer(gs, p);
            EXPECT_NEAR(schatten_norm(m, p), 1.0, 1e-9);
            EXPECT_NEAR((m.array() * x.array()).sum(), schatten_norm(x, p.dual()), 1e-9 * schatten_norm(x, p.dual()));
        }
    }
}

TEST(MatrixIo, CsvAndJsonRoundTrip) {
    Matrix a = random_matrix(3, 99);
    EXPECT_EQ(matrix_from_csv(matrix_to_csv(a)), a);
    EXPECT_EQ(matrix_from_json(matrix_to_json(a)), a);
    EXPECT_EQ(matrix_to_json(a)["n"], 3);
    EXPECT_THROW(matrix_from_csv("1,2\n3\n"), InputError);
    EXPECT_THROW(matrix_from_csv("1,x\n3,4\n"), InputError);
    EXPECT_THROW(matrix_from_json(nlohmann::json{{"n", 2}, {"entries", {{1, 2}}}}), InputError);
    EXPECT_THROW(matrix_from_json(nlohmann::json{{"entries", {{1}}}}), InputError);
}

TEST(MatrixIo, SeededGeneratorIsDeterministic) {
    EXPECT_EQ(random_matrix(4, 7), random_matrix(4, 7));
    EXPECT_NE(random_matrix(4, 7), random_matrix(4, 8));
    EXPECT_NE(derive_seed(7, 0), derive_seed(7, 1));
}
