// Regenerates the frozen brute-force reference values for N = 2.
//
//   compute_oracle_fixtures [output.json] [--resolution 0.05]
//
// The result is committed under tests/fixtures and read by the tests; it only
// needs to be recomputed when the oracle itself changes.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "snumbers/net_oracle.hpp"

int main(int argc, char** argv) {
    using namespace snumbers;
    CLI::App app{"Compute N = 2 net-oracle fixtures"};
    std::string out = "tests/fixtures/oracle_n2.json";
    double h = oracle::kFixtureResolution;
    app.add_option("output", out, "output JSON path");
    app.add_option("--resolution", h, "net resolution")->check(CLI::Range(1e-3, 0.5));
    CLI11_PARSE(app, argc, argv);

    nlohmann::json points = nlohmann::json::array();
    for (const auto& b : oracle::calibration_battery()) {
        const auto t0 = std::chrono::steady_clock::now();
        Estimate e = oracle::net_oracle(b.kind, EmbeddingSpec(b.p, b.q, 2, b.n), h);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::fprintf(stderr, "%s p=%s q=%s n=%lld  %.12f  (%s, %.1fs)\n", to_string(b.kind).c_str(),
                     b.p.to_string().c_str(), b.q.to_string().c_str(), static_cast<long long>(b.n), e.value,
                     e.notes.front().c_str(), secs);
        points.push_back({{"kind", to_string(b.kind)},
                          {"p", b.p.to_string()},
                          {"q", b.q.to_string()},
                          {"N", 2},
                          {"n", b.n},
                          {"value", e.value},
                          {"resolution", h},
                          {"error_bar", *e.error_bar},
                          {"route", e.notes.front()},
                          {"evaluations", e.inner_budget}});
    }
    nlohmann::json doc = {{"schema_version", 1}, {"generator", "compute_oracle_fixtures"}, {"points", points}};
    std::ofstream f(out);
    if (!f) {
        std::cerr << "cannot write " << out << "\n";
        return 2;
    }
    f << doc.dump(2) << "\n";
    return 0;
}
