#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "snumbers/errors.hpp"

namespace snumbers {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline void require_valid(const Matrix& a, const char* what = "matrix") {
    if (a.rows() != a.cols() || a.rows() < 1)
        throw InputError(std::string(what) + " must be square with N >= 1, got " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
    if (!a.allFinite()) throw InputError(std::string(what) + " has non-finite entries");
}

/// Matrix unit E_ij (zero-based indices).
inline Matrix matrix_unit(int n, int i, int j) {
    Matrix e = Matrix::Zero(n, n);
    e(i, j) = 1.0;
    return e;
}

// Vectorization is column-major (Eigen's storage order): vec(A)[i + N*j] = A(i, j).
inline Vector vec(const Matrix& a) { return Eigen::Map<const Vector>(a.data(), a.size()); }

inline Matrix unvec(const Vector& v, int n) { return Eigen::Map<const Matrix>(v.data(), n, n); }

// ---------------------------------------------------------------------------
// Seeded randomness. One 64-bit seed feeds a mt19937_64; independent streams
// for restarts are derived with splitmix64 so that each restart's draws do not
// depend on how many draws earlier restarts consumed.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

using Rng = std::mt19937_64;

inline Matrix gaussian_matrix(int rows, int cols, Rng& rng, double stddev = 1.0) {
    std::normal_distribution<double> dist(0.0, stddev);
    Matrix a(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) a(i, j) = dist(rng);
    return a;
}

inline Matrix gaussian_matrix(int n, Rng& rng) { return gaussian_matrix(n, n, rng); }

/// Gaussian N×N matrix fully determined by a 64-bit seed.
inline Matrix random_matrix(int n, std::uint64_t seed) {
    Rng rng(seed);
    return gaussian_matrix(n, rng);
}

inline Vector gaussian_vector(int n, Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = dist(rng);
    return v;
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with sign fix).
inline Matrix haar_orthogonal(int n, Rng& rng) {
    Matrix g = gaussian_matrix(n, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR();
    for (int j = 0; j < n; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    return q;
}

inline Vector random_unit_vector(int n, Rng& rng) {
    Vector v = gaussian_vector(n, rng);
    double nv = v.norm();
    if (nv == 0) v(0) = 1.0, nv = 1.0;
    return v / nv;
}

// ---------------------------------------------------------------------------
// I/O

inline std::string matrix_to_csv(const Matrix& a) {
    std::ostringstream os;
    os.precision(17);
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) {
            if (j) os << ',';
            os << a(i, j);
        }
        os << '\n';
    }
    return os.str();
}

inline Matrix matrix_from_csv(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw InputError("CSV line " + std::to_string(line_no) + ": cannot parse '" + cell + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    const int n = static_cast<int>(rows.size());
    Matrix a(n, n);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(rows[i].size()) != n)
            throw InputError("CSV matrix must be square: row " + std::to_string(i + 1) + " has " +
                             std::to_string(rows[i].size()) + " entries, expected " + std::to_string(n));
        for (int j = 0; j < n; ++j) a(i, j) = rows[i][j];
    }
    require_valid(a);
    return a;
}

inline nlohmann::json matrix_to_json(const Matrix& a) {
    nlohmann::json entries = nlohmann::json::array();
    for (int i = 0; i < a.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
        entries.push_back(std::move(row));
    }
    return {{"n", a.rows()}, {"entries", std::move(entries)}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("n") || !j.contains("entries"))
        throw InputError("matrix JSON must be an object with keys 'n' and 'entries'");
    const int n = j.at("n").get<int>();
    const auto& rows = j.at("entries");
    if (n < 1 || !rows.is_array() || static_cast<int>(rows.size()) != n)
        throw InputError("matrix JSON: 'entries' must hold n rows");
    Matrix a(n, n);
    for (int i = 0; i < n; ++i) {
        if (!rows[i].is_array() || static_cast<int>(rows[i].size()) != n)
            throw InputError("matrix JSON: row " + std::to_string(i) + " must hold n entries");
        for (int k = 0; k < n; ++k) {
            if (!rows[i][k].is_number()) throw InputError("matrix JSON: non-numeric entry");
            a(i, k) = rows[i][k].get<double>();
        }
    }
    require_valid(a);
    return a;
}

inline Matrix read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') return matrix_from_json(nlohmann::json::parse(text));
    return matrix_from_csv(text);
}

}  // namespace snumbers
