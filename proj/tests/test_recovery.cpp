#include <gtest/gtest.h>

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <vector>

#include "snumbers/recovery.hpp"

using namespace snumbers;

namespace {

Matrix random_rank_one(int N, Rng& rng) {
    return random_unit_vector(N, rng) * random_unit_vector(N, rng).transpose();
}

Matrix unit_nuclear(Matrix x) { return x / schatten_norm(x, exponent(1)); }

// Soft thresholding of singular values through Eigen's divide-and-conquer SVD.
Matrix svt_reference(const Matrix& x, double t) {
    Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vector s = (svd.singularValues().array() - t).cwiseMax(0.0);
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST(InfoMap, ZeroMatrixGivesZeroData) {
    auto map = gaussian_info_map(5, 7, 1);
    EXPECT_EQ(apply_info_map(map, Matrix::Zero(5, 5)), Vector::Zero(7));
}

TEST(InfoMap, MatrixUnitMeasurement) {
    auto map = make_info_map({matrix_unit(3, 0, 0), matrix_unit(3, 1, 2)});
    const Vector y = apply_info_map(map, matrix_unit(3, 0, 0));
    EXPECT_DOUBLE_EQ(y(0), 1.0);
    EXPECT_DOUBLE_EQ(y(1), 0.0);
    EXPECT_EQ(map.measurement(1), matrix_unit(3, 1, 2));
}

TEST(InfoMap, TraceInnerProductAndLinearity) {
    Rng rng(11);
    auto map = gaussian_info_map(4, 6, 3);
    const Matrix x = gaussian_matrix(4, rng), y = gaussian_matrix(4, rng);
    const Vector ax = apply_info_map(map, x);
    for (int i = 0; i < map.m(); ++i) EXPECT_NEAR(ax(i), (map.measurement(i).transpose() * x).trace(), 1e-12);
    const Vector sum = apply_info_map(map, x + 2.5 * y);
    EXPECT_LE((sum - ax - 2.5 * apply_info_map(map, y)).norm(), 1e-12);
}

TEST(InfoMap, GaussianEntriesHaveVarianceOneOverM) {
    const int N = 20, m = 50;
    auto map = gaussian_info_map(N, m, 5);
    const double mean = map.rows.mean();
    const double var = (map.rows.array() - mean).square().mean();
    // 20000 samples: the sample variance has relative standard error about 1%
    EXPECT_NEAR(var * m, 1.0, 0.05);
    EXPECT_NEAR(mean, 0.0, 5.0 / std::sqrt(static_cast<double>(map.rows.size() * m)));
    EXPECT_EQ(gaussian_info_map(N, m, 5).rows, map.rows);
    EXPECT_NE(gaussian_info_map(N, m, 6).rows, map.rows);
}

TEST(InfoMap, Errors) {
    auto map = gaussian_info_map(3, 4, 1);
    EXPECT_THROW(apply_info_map(map, Matrix::Zero(4, 4)), InputError);
    EXPECT_THROW(make_info_map({}), InputError);
    EXPECT_THROW(make_info_map({Matrix::Zero(2, 2), Matrix::Zero(3, 3)}), InputError);
    EXPECT_THROW(gaussian_info_map(3, 0, 1), InputError);
    EXPECT_THROW(nuclear_decoder(map, Vector::Zero(3)), InputError);
}

TEST(Decoder, ThresholdingMatchesReference) {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const int N = 2 + trial % 7;
        const Matrix x = gaussian_matrix(N, rng);
        const double top = jacobi_svd(x).s(0);
        for (double t : {1e-9 * top, 0.05 * top, 0.4 * top, 0.99 * top, 1.5 * top})
            EXPECT_LE((detail::singular_value_threshold(x, t) - svt_reference(x, t)).norm(), 1e-10 * (1.0 + top))
                << "N=" << N << " t=" << t;
    }
}

TEST(Decoder, WhitenedRowsAreOrthonormalWithTheSameKernel) {
    auto map = gaussian_info_map(5, 12, 8);
    auto w = whiten(map);
    ASSERT_EQ(w.rows.rows(), 12);
    EXPECT_LE((w.rows * w.rows.transpose() - Matrix::Identity(12, 12)).norm(), 1e-10);
    const Matrix kernel_projector = Matrix::Identity(25, 25) - w.rows.transpose() * w.rows;
    EXPECT_LE((map.rows * kernel_projector).norm(), 1e-10);

    // a repeated measurement adds no constraint
    Rng rng(2);
    const Matrix a = gaussian_matrix(3, rng);
    auto dup = make_info_map({a, a, Matrix(a + matrix_unit(3, 0, 1))});
    EXPECT_EQ(whiten(dup).rows.rows(), 2);
}

TEST(Decoder, ZeroDataDecodesToZero) {
    auto map = gaussian_info_map(6, 10, 2);
    auto res = nuclear_decoder(map, Vector::Zero(10));
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.z, Matrix::Zero(6, 6));
}

TEST(Decoder, FullMeasurementsRecoverEveryMatrix) {
    Rng rng(31);
    for (int N : {2, 3, 4, 6}) {
        auto map = gaussian_info_map(N, N * N, 40 + N);
        for (int trial = 0; trial < 3; ++trial) {
            const Matrix x = unit_nuclear(gaussian_matrix(N, rng));
            auto res = nuclear_decoder(map, apply_info_map(map, x));
            EXPECT_TRUE(res.converged);
            EXPECT_LE(schatten_norm(Matrix(x - res.z), exponent(2)), 1e-4) << "N=" << N;
        }
    }
}

TEST(Decoder, RankOneFromSixNMeasurements) {
    // measured errors stay near 1e-6 on this setting; the threshold leaves room
    // for seed variation without admitting a failed recovery
    const int N = 16;
    Rng rng(41);
    for (int trial = 0; trial < 5; ++trial) {
        auto map = gaussian_info_map(N, 6 * N, 900 + trial);
        const Matrix x = random_rank_one(N, rng);
        auto res = nuclear_decoder(map, apply_info_map(map, x));
        EXPECT_TRUE(res.converged);
        EXPECT_LE(schatten_norm(Matrix(x - res.z), exponent(2)), 1e-3);
    }
}

TEST(Decoder, FeasibleAndNoLargerNuclearNormThanTheTruth) {
    Rng rng(51);
    for (int trial = 0; trial < 12; ++trial) {
        const int N = 4 + trial % 5;
        const int m = 1 + (trial * 7) % (N * N);
        auto map = gaussian_info_map(N, m, 60 + trial);
        Matrix x = trial % 3 == 0 ? random_rank_one(N, rng) : unit_nuclear(gaussian_matrix(N, rng));
        x *= 0.5 + trial % 4;
        DecoderOptions opt;
        auto res = nuclear_decoder(map, apply_info_map(map, x), opt);
        ASSERT_TRUE(res.converged) << "N=" << N << " m=" << m;
        EXPECT_LE((apply_info_map(map, res.z) - apply_info_map(map, x)).norm(), opt.tol);
        EXPECT_LE(schatten_norm(res.z, exponent(1)), schatten_norm(x, exponent(1)) + 1e-6) << "N=" << N << " m=" << m;
    }
}

TEST(Decoder, IterationCapIsFlaggedNotThrown) {
    Rng rng(61);
    auto map = gaussian_info_map(8, 20, 1);
    DecoderOptions opt;
    opt.max_iterations = 2;
    auto res = nuclear_decoder(map, apply_info_map(map, unit_nuclear(gaussian_matrix(8, rng))), opt);
    EXPECT_FALSE(res.converged);
    EXPECT_LE(res.iterations, 2);
    EXPECT_GT(res.residual, opt.tol);
}

TEST(Decoder, Deterministic) {
    Rng rng(71);
    auto map = gaussian_info_map(7, 20, 4);
    const Vector y = apply_info_map(map, random_rank_one(7, rng));
    EXPECT_EQ(nuclear_decoder(map, y).z, nuclear_decoder(map, y).z);
}

TEST(WorstCase, KernelProbesStayInTheKernelAndImprove) {
    const int N = 6;
    auto map = gaussian_info_map(N, 12, 3);
    Eigen::LLT<Matrix> gram(map.rows * map.rows.transpose());
    Rng rng(81);
    const Vector start = vec(gaussian_matrix(N, rng));
    const Vector projected = start - map.rows.transpose() * gram.solve(map.rows * start);
    const Matrix x0 = unvec(projected, N);
    const Matrix x = detail::kernel_probe(map, gram, exponent(1), exponent(2), unvec(start, N), 200);
    EXPECT_LE(apply_info_map(map, x).norm(), 1e-9 * x.norm());
    auto ratio = [](const Matrix& a) { return schatten_norm(a, exponent(2)) / schatten_norm(a, exponent(1)); };
    EXPECT_GE(ratio(x), ratio(x0));
    EXPECT_LE(ratio(x), 1.0 + 1e-12);
}

TEST(WorstCase, FullMeasurementsAreExact) {
    for (int N : {3, 5}) {
        auto r = worst_case_error(N, exponent(1), exponent(2), N * N, 8, 1);
        EXPECT_LE(r.worst_error, 1e-4);
        EXPECT_TRUE(r.all_converged);
        EXPECT_LE(compare_to_envelope(r).ratio, 1e-3);  // envelope is N^(-1/2) here
    }
}

TEST(WorstCase, NoMeasurementsCostTheRadius) {
    auto r = worst_case_error(6, exponent(1), exponent(2), 0, 8, 3);
    EXPECT_NEAR(r.worst_error, 1.0, 1e-12);  // attained by the matrix unit
    EXPECT_DOUBLE_EQ(r.zero_decoder_error, r.worst_error);
    auto c = compare_to_envelope(r);
    EXPECT_DOUBLE_EQ(c.envelope, 1.0);
    EXPECT_NEAR(c.ratio, 1.0, 1e-12);
}

TEST(WorstCase, ResultStructure) {
    auto r = worst_case_error(6, exponent(1), exponent(2), 10, 12, 9);
    ASSERT_EQ(r.errors.size(), r.labels.size());
    EXPECT_EQ(r.errors.size(), 12u);
    EXPECT_EQ(r.labels.front(), "rank-one");
    for (const char* family : {"rank-one", "flat-spectrum", "mixture", "kernel-probe"})
        EXPECT_NE(std::find(r.labels.begin(), r.labels.end(), family), r.labels.end()) << family;
    for (double e : r.errors) {
        EXPECT_GE(e, 0.0);
        EXPECT_LE(e, r.worst_error);
    }
    EXPECT_NE(std::find(r.errors.begin(), r.errors.end(), r.worst_error), r.errors.end());
    EXPECT_LE(r.scheme_error, r.worst_error);
    EXPECT_LE(r.scheme_error, r.zero_decoder_error);
    EXPECT_LE(r.max_residual, DecoderOptions{}.tol);

    auto j = to_json(r);
    EXPECT_EQ(j["schema_version"], 1);
    EXPECT_EQ(j["m"], 10);
    EXPECT_EQ(j["errors"].size(), 12u);
    EXPECT_EQ(j["decoder"]["all_converged"], true);

    auto again = worst_case_error(6, exponent(1), exponent(2), 10, 12, 9);
    EXPECT_EQ(again.errors, r.errors);
}

TEST(WorstCase, RegimeAndBudgetErrors) {
    EXPECT_THROW(worst_case_error(4, exponent(2), exponent(2), 4, 8, 1), DomainError);
    EXPECT_THROW(worst_case_error(4, exponent(1), exponent(1), 4, 8, 1), DomainError);
    EXPECT_THROW(worst_case_error(4, exponent(1), exponent(4), 4, 8, 1), DomainError);
    EXPECT_THROW(worst_case_error(4, exponent(1), exponent(2), 17, 8, 1), DomainError);
    EXPECT_THROW(worst_case_error(4, exponent(1), exponent(2), -1, 8, 1), DomainError);
    EXPECT_THROW(worst_case_error(4, exponent(1), exponent(2), 4, 3, 1), UsageError);
}

TEST(WorstCase, QuasiNormBall) {
    // p = 1/2 inside the unit S_1 ball, so errors for S_1 -> S_2 bound these
    auto r = worst_case_error(4, exponent(1, 2), exponent(1), 6, 8, 2);
    EXPECT_TRUE(r.all_converged);
    EXPECT_GT(r.worst_error, 0.0);
    EXPECT_LE(r.zero_decoder_error, 1.0 + 1e-12);
}

TEST(WorstCase, MedianErrorDecreasesWithMoreMeasurements) {
    const int N = 8;
    const std::vector<int> ms = {4, 8, 16, 32, 48};
    std::vector<double> medians;
    for (int m : ms) {
        std::vector<double> w;
        for (std::uint64_t seed : {1u, 2u, 3u}) w.push_back(worst_case_error(N, exponent(1), exponent(2), m, 8, seed).worst_error);
        medians.push_back(median(w));
    }
    int inversions = 0;
    for (std::size_t i = 1; i < medians.size(); ++i)
        if (medians[i] > medians[i - 1]) ++inversions;
    EXPECT_LE(inversions, 1);
    EXPECT_LT(medians.back(), medians.front());
}

TEST(Envelope, ComparisonReport) {
    auto r = worst_case_error(8, exponent(1), exponent(2), 6, 8, 4);
    auto c = compare_to_envelope(r);
    EXPECT_DOUBLE_EQ(c.envelope, 1.0);  // m <= N
    EXPECT_LE(c.scheme_ratio, 1.0 + 1e-12);
    EXPECT_DOUBLE_EQ(c.ratio, r.worst_error);
    EXPECT_NEAR(c.log_ratio, std::log(c.ratio), 1e-15);

    auto big = worst_case_error(8, exponent(1), exponent(2), 32, 8, 4);
    EXPECT_NEAR(compare_to_envelope(big).envelope, std::sqrt(8.0 / 32.0), 1e-12);
}
