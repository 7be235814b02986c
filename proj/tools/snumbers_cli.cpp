// snumbers: command-line front end.
//
//   snumbers envelope -p 1 -q inf -N 16
//   snumbers bounds   -p inf -q 1 -N 4 -n 9
//   snumbers estimate --kind a -p 2 -q inf -N 2 -n 1:4 --seed 7
//   snumbers recovery -N 32 -p 1 -q 2 --m-list 8,16,32,64,128,256
//   snumbers suite    --seed 7
//
// Files go to --out-dir, which defaults to $SNUMBERS_OUT_DIR and then to the
// current directory. CSV output carries '#' header lines with the command and
// the constants in force, and never anything run-dependent, so identical
// arguments give byte-identical files.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "snumbers/acceptance.hpp"
#include "snumbers/certificates.hpp"
#include "snumbers/envelope.hpp"
#include "snumbers/estimators.hpp"
#include "snumbers/recovery.hpp"

namespace fs = std::filesystem;
using namespace snumbers;

namespace {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string out_dir;
    std::string constants_path;
    std::string format = "csv";
    bool quiet = false;
    ConstantsRegistry constants;
};

// "9", "1:16", "1:16:4", "8,16,32" and mixtures like "1:4,9".
std::vector<std::int64_t> parse_index_list(const std::string& text, const std::string& flag) {
    std::vector<std::int64_t> out;
    std::stringstream ss(text);
    std::string item;
    auto num = [&](const std::string& s) {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(s, &used);
        } catch (const std::exception&) {
            used = std::string::npos;
        }
        if (used != s.size()) throw UsageError(flag + ": cannot read '" + s + "' as an integer in '" + text + "'");
        return static_cast<std::int64_t>(v);
    };
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw UsageError(flag + ": empty entry in '" + text + "'");
        std::vector<std::string> parts;
        std::stringstream is(item);
        std::string part;
        while (std::getline(is, part, ':')) parts.push_back(part);
        if (parts.size() == 1) {
            out.push_back(num(parts[0]));
        } else if (parts.size() == 2 || parts.size() == 3) {
            const auto a = num(parts[0]), b = num(parts[1]);
            const auto step = parts.size() == 3 ? num(parts[2]) : 1;
            if (step < 1) throw UsageError(flag + ": step must be >= 1 in '" + item + "'");
            if (b < a) throw UsageError(flag + ": empty range '" + item + "'");
            for (auto v = a; v <= b; v += step) out.push_back(v);
        } else {
            throw UsageError(flag + ": cannot read range '" + item + "'");
        }
    }
    if (out.empty()) throw UsageError(flag + ": empty list");
    return out;
}

std::string file_token(const Exponent& e) {
    std::string s = e.to_string();
    for (auto& ch : s)
        if (ch == '/') ch = '-';
    return s;
}

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return out + "\"";
}

std::string num(double v) { return format_double(v); }

fs::path output_dir(const Common& c) {
    fs::path dir = c.out_dir.empty() ? fs::path(".") : fs::path(c.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
    return dir;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write '" + path.string() + "'");
    f << content;
    if (!f) throw IoError("write failed for '" + path.string() + "'");
}

void append_ledger(const fs::path& path, const std::vector<std::string>& rows) {
    const bool fresh = !fs::exists(path);
    std::ofstream f(path, std::ios::binary | std::ios::app);
    if (!f) throw IoError("cannot append to ledger '" + path.string() + "'");
    if (fresh) f << "command,kind,p,q,N,index,value,envelope_lower,envelope_upper,ratio_to_upper,method,seed\n";
    for (const auto& r : rows) f << r << "\n";
    if (!f) throw IoError("write failed for ledger '" + path.string() + "'");
}

std::string header(const std::string& command, const Common& c) {
    return "# snumbers " + command + "\n# constants " + to_json(c.constants).dump() + "\n";
}

void report(const Common& c, const fs::path& path) {
    if (!c.quiet) std::cout << "wrote " << path.string() << "\n";
}

std::optional<EnvelopeValue> envelope_at(SnumberKind kind, const EmbeddingSpec& s, const ConstantsRegistry& k) {
    try {
        switch (kind) {
            case SnumberKind::approximation: return approx_envelope(s, k);
            case SnumberKind::gelfand: return gelfand_envelope(s, k);
            case SnumberKind::kolmogorov: return kolmogorov_envelope(s, k);
            default: return std::nullopt;
        }
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

// ---------------------------------------------------------------------------

struct EnvelopeArgs {
    std::string kind = "a", p, q;
    int N = 0;
    std::int64_t stride = 0;
};

int run_envelope(const Common& c, const EnvelopeArgs& a) {
    const Exponent p = Exponent::parse(a.p), q = Exponent::parse(a.q);
    const auto dir = output_dir(c);
    const std::vector<SnumberKind> kinds =
        a.kind == "all" ? std::vector<SnumberKind>{SnumberKind::approximation, SnumberKind::gelfand, SnumberKind::kolmogorov}
                        : std::vector<SnumberKind>{parse_kind(a.kind)};
    for (auto kind : kinds) {
        if (kind == SnumberKind::recovery) throw UsageError("envelope: use the recovery command for recovery envelopes");
        const auto pr = envelope_profile(kind, p, q, a.N, c.constants);
        const std::int64_t stride = a.stride > 0 ? a.stride : std::max<std::int64_t>(1, pr.dim() / 64);
        std::vector<EnvelopeValue> values;
        const std::string csv = sweep_csv(pr, stride, &values);
        const std::string cmd = "envelope kind=" + to_string(kind) + " p=" + p.to_string() + " q=" + q.to_string() +
                                " N=" + std::to_string(a.N) + " stride=" + std::to_string(stride);
        const std::string stem = "envelope_" + to_string(kind) + "_p" + file_token(p) + "_q" + file_token(q) + "_N" +
                                 std::to_string(a.N);
        fs::path path;
        if (c.format == "json") {
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& v : values) rows.push_back(to_json(v));
            nlohmann::json doc = {{"schema_version", 1}, {"command", cmd}, {"constants", to_json(c.constants)},
                                  {"rows", rows}};
            path = dir / (stem + ".json");
            write_file(path, doc.dump(2) + "\n");
        } else {
            path = dir / (stem + ".csv");
            write_file(path, header(cmd, c) + csv);
        }
        report(c, path);
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct BoundsArgs {
    std::string p, q, n;
    int N = 0;
};

int run_bounds(const Common& c, const BoundsArgs& a) {
    const Exponent p = Exponent::parse(a.p), q = Exponent::parse(a.q);
    const auto dir = output_dir(c);
    const auto idx = a.n.empty() ? parse_index_list("1:" + std::to_string(a.N * a.N), "-n") : parse_index_list(a.n, "-n");
    std::string rows = "n,kind,direction,method,value,constant,applies_to,k,witness\n";
    std::string sand = "n,kind,best_lower,lower_method,best_upper,upper_method,holds\n";
    nlohmann::json all = nlohmann::json::array();
    for (auto n : idx) {
        const EmbeddingSpec s(p, q, a.N, n);
        const auto certs = applicable_certificates(s);
        for (const auto& cert : certs) {
            std::string kinds;
            for (auto k : cert.applies_to) kinds += (kinds.empty() ? "" : ";") + to_string(k);
            const std::string k = cert.witness.contains("k") ? cert.witness["k"].dump() : "";
            rows += std::to_string(n) + "," + to_string(cert.kind) + "," + to_string(cert.direction) + "," + cert.method +
                    "," + num(cert.value) + "," + (cert.exact_constant ? "exact-constant" : "asymptotic-constant") +
                    "," + kinds + "," + k + "," + csv_quote(cert.witness.dump()) + "\n";
            all.push_back(to_json(cert));
        }
        for (auto kind : {SnumberKind::approximation, SnumberKind::gelfand, SnumberKind::kolmogorov}) {
            const auto sw = sandwich(certs, kind);
            sand += std::to_string(n) + "," + to_string(kind) + "," + num(sw.best_lower) + "," + sw.lower_method + "," +
                    num(sw.best_upper) + "," + sw.upper_method + "," + (sw.holds ? "true" : "false") + "\n";
        }
    }
    const std::string cmd = "bounds p=" + p.to_string() + " q=" + q.to_string() + " N=" + std::to_string(a.N) +
                            " n=" + (a.n.empty() ? "all" : a.n);
    const std::string stem = "bounds_p" + file_token(p) + "_q" + file_token(q) + "_N" + std::to_string(a.N);
    if (c.format == "json") {
        const auto path = dir / (stem + ".json");
        write_file(path, nlohmann::json{{"schema_version", 1}, {"command", cmd}, {"certificates", all}}.dump(2) + "\n");
        report(c, path);
    } else {
        const auto path = dir / (stem + ".csv"), spath = dir / (stem + "_sandwich.csv");
        write_file(path, header(cmd, c) + rows);
        write_file(spath, header(cmd, c) + sand);
        report(c, path);
        report(c, spath);
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct EstimateArgs {
    std::string kind = "a", p, q, n, ledger;
    int N = 0;
    std::uint64_t seed = 7;
    EstimatorBudget budget;
    bool no_ledger = false;
};

int run_estimate(const Common& c, const EstimateArgs& a) {
    const Exponent p = Exponent::parse(a.p), q = Exponent::parse(a.q);
    const SnumberKind kind = parse_kind(a.kind);
    if (kind == SnumberKind::recovery) throw UsageError("estimate: use the recovery command for recovery errors");
    a.budget.validate();
    const auto dir = output_dir(c);
    const auto idx = a.n.empty() ? parse_index_list("1:" + std::to_string(a.N * a.N), "-n") : parse_index_list(a.n, "-n");
    std::string csv = "kind,p,q,N,n,value,envelope_lower,envelope_upper,method,converged,seed,restarts\n";
    std::vector<std::string> ledger;
    nlohmann::json all = nlohmann::json::array();
    for (auto n : idx) {
        const EmbeddingSpec s(p, q, a.N, n);
        const Estimate e = estimate(kind, s, a.budget, a.seed);
        const auto env = envelope_at(kind, s, c.constants);
        const std::string lo = env ? num(env->value_lower) : "", hi = env ? num(env->value_upper) : "";
        csv += to_string(kind) + "," + p.to_string() + "," + q.to_string() + "," + std::to_string(a.N) + "," +
               std::to_string(n) + "," + num(e.value) + "," + lo + "," + hi + "," + e.method + "," +
               (e.converged ? "true" : "false") + "," + std::to_string(a.seed) + "," + std::to_string(e.restarts) + "\n";
        const std::string ratio = env && env->value_upper > 0.0 ? num(e.value / env->value_upper) : "";
        ledger.push_back("estimate," + to_string(kind) + "," + p.to_string() + "," + q.to_string() + "," +
                         std::to_string(a.N) + "," + std::to_string(n) + "," + num(e.value) + "," + lo + "," + hi + "," +
                         ratio + "," + e.method + "," + std::to_string(a.seed));
        auto j = to_json(e);
        j["spec"] = to_json(s);
        all.push_back(j);
    }
    const std::string cmd = "estimate kind=" + to_string(kind) + " p=" + p.to_string() + " q=" + q.to_string() +
                            " N=" + std::to_string(a.N) + " n=" + (a.n.empty() ? "all" : a.n) +
                            " seed=" + std::to_string(a.seed) + " restarts=" + std::to_string(a.budget.restarts) +
                            " inner_iterations=" + std::to_string(a.budget.inner_iterations) +
                            " outer_rounds=" + std::to_string(a.budget.outer_rounds) +
                            " outer_restarts=" + std::to_string(a.budget.outer_restarts);
    const std::string stem = "estimate_" + to_string(kind) + "_p" + file_token(p) + "_q" + file_token(q) + "_N" +
                             std::to_string(a.N);
    fs::path path;
    if (c.format == "json") {
        path = dir / (stem + ".json");
        write_file(path, nlohmann::json{{"schema_version", 1}, {"command", cmd}, {"estimates", all}}.dump(2) + "\n");
    } else {
        path = dir / (stem + ".csv");
        write_file(path, header(cmd, c) + csv);
    }
    report(c, path);
    if (!a.no_ledger) {
        const fs::path lp = a.ledger.empty() ? dir / "results_ledger.csv" : fs::path(a.ledger);
        append_ledger(lp, ledger);
        report(c, lp);
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct RecoveryArgs {
    std::string p = "1", q = "2", m_list, ledger;
    int N = 0, budget = 64;
    std::uint64_t seed = 7;
    double tol = DecoderOptions{}.tol;
    bool no_ledger = false;
};

int run_recovery(const Common& c, const RecoveryArgs& a) {
    const Exponent p = Exponent::parse(a.p), q = Exponent::parse(a.q);
    if (!(a.tol > 0.0)) throw UsageError("--tol must be positive");
    const auto dir = output_dir(c);
    const auto ms = parse_index_list(a.m_list, "--m-list");
    DecoderOptions opt;
    opt.tol = a.tol;
    std::string csv = "m,worst_error,envelope,ratio\n";
    std::vector<std::string> ledger;
    const std::string stem = "recovery_p" + file_token(p) + "_q" + file_token(q) + "_N" + std::to_string(a.N);
    for (auto m : ms) {
        const auto r = worst_case_error(a.N, p, q, static_cast<int>(m), a.budget, a.seed, opt);
        const auto cmp = compare_to_envelope(r);
        csv += std::to_string(m) + "," + num(r.worst_error) + "," + num(cmp.envelope) + "," + num(cmp.ratio) + "\n";
        ledger.push_back("recovery,recovery," + p.to_string() + "," + q.to_string() + "," + std::to_string(a.N) + "," +
                         std::to_string(m) + "," + num(r.worst_error) + "," + num(cmp.envelope) + "," +
                         num(cmp.envelope) + "," + num(cmp.ratio) + ",nuclear-norm," + std::to_string(a.seed));
        auto j = to_json(r);
        j["envelope"] = cmp.envelope;
        j["ratio"] = cmp.ratio;
        j["log_ratio"] = std::isfinite(cmp.log_ratio) ? nlohmann::json(cmp.log_ratio) : nlohmann::json(nullptr);
        j["scheme_ratio"] = cmp.scheme_ratio;
        j["test_budget"] = a.budget;
        j["tol"] = a.tol;
        j["scheme"] = "better of nuclear-norm and zero decoders";
        const auto jp = dir / (stem + "_m" + std::to_string(m) + ".json");
        write_file(jp, j.dump(2) + "\n");
        report(c, jp);
    }
    const std::string cmd = "recovery p=" + p.to_string() + " q=" + q.to_string() + " N=" + std::to_string(a.N) +
                            " m=" + a.m_list + " budget=" + std::to_string(a.budget) + " seed=" +
                            std::to_string(a.seed) + " tol=" + acceptance::detail::fmt(a.tol, "%.6g");
    const auto path = dir / (stem + ".csv");
    write_file(path, header(cmd, c) + csv);
    report(c, path);
    if (!a.no_ledger) {
        const fs::path lp = a.ledger.empty() ? dir / "results_ledger.csv" : fs::path(a.ledger);
        append_ledger(lp, ledger);
        report(c, lp);
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct SuiteArgs {
    std::uint64_t seed = 7;
    std::string criteria, fixtures;
    int recovery_budget = acceptance::Options{}.recovery_budget;
};

int run_suite(const Common& c, const SuiteArgs& a) {
    acceptance::Options opt;
    opt.seed = a.seed;
    opt.recovery_budget = a.recovery_budget;
#ifdef SNUMBERS_FIXTURE_DIR
    opt.fixture_path = std::string(SNUMBERS_FIXTURE_DIR) + "/oracle_n2.json";
#endif
    if (!a.fixtures.empty()) opt.fixture_path = a.fixtures;
    if (!a.criteria.empty())
        for (auto id : parse_index_list(a.criteria, "--criteria")) {
            if (id < 1 || id > 9) throw UsageError("--criteria: criteria are numbered 1 to 9");
            opt.only.insert(static_cast<int>(id));
        }
    opt.progress = [](const std::string& line) {
        std::cout << line << "\n" << std::flush;
    };
    const auto dir = output_dir(c);
    const auto results = acceptance::run(opt);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : results) rows.push_back(to_json(r));
    const bool ok = acceptance::all_passed(results);
    const auto path = dir / "suite_report.json";
    write_file(path, nlohmann::json{{"schema_version", 1}, {"seed", a.seed}, {"passed", ok}, {"criteria", rows}}.dump(2) + "\n");
    report(c, path);
    std::cout << (ok ? "suite PASSED" : "suite FAILED") << "\n";
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"s-numbers of Schatten class embeddings: envelopes, certificates, estimates, recovery"};
    app.require_subcommand(1);
    Common common;
    if (const char* env = std::getenv("SNUMBERS_OUT_DIR")) common.out_dir = env;
    app.add_option("--out-dir", common.out_dir, "output directory (default $SNUMBERS_OUT_DIR, then .)");
    app.add_option("--constants", common.constants_path, "JSON file with constant overrides")->check(CLI::ExistingFile);
    app.add_option("--format", common.format, "output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_flag("--quiet", common.quiet, "do not list written files");

    EnvelopeArgs env;
    auto* envelope = app.add_subcommand("envelope", "sweep n and emit the regime table of an envelope");
    envelope->add_option("--kind", env.kind, "a, c, d or all")->check(CLI::IsMember({"a", "c", "d", "approximation", "gelfand", "kolmogorov", "all"}));
    envelope->add_option("-p", env.p, "source exponent (rational or inf)")->required();
    envelope->add_option("-q", env.q, "target exponent (rational or inf)")->required();
    envelope->add_option("-N", env.N, "matrix size")->required()->check(CLI::PositiveNumber);
    envelope->add_option("--stride", env.stride, "row stride in n (default N^2/64); boundaries are always included");

    BoundsArgs bnd;
    auto* bounds = app.add_subcommand("bounds", "emit every applicable certificate");
    bounds->add_option("-p", bnd.p, "source exponent")->required();
    bounds->add_option("-q", bnd.q, "target exponent")->required();
    bounds->add_option("-N", bnd.N, "matrix size")->required()->check(CLI::PositiveNumber);
    bounds->add_option("-n", bnd.n, "indices, e.g. 9, 1:16 or 1,4,9 (default all)");

    EstimateArgs est;
    auto* estimate_cmd = app.add_subcommand("estimate", "numerical estimates of a_n, c_n or d_n");
    estimate_cmd->add_option("--kind", est.kind, "a, c or d")->check(CLI::IsMember({"a", "c", "d", "approximation", "gelfand", "kolmogorov"}));
    estimate_cmd->add_option("-p", est.p, "source exponent")->required();
    estimate_cmd->add_option("-q", est.q, "target exponent")->required();
    estimate_cmd->add_option("-N", est.N, "matrix size")->required()->check(CLI::PositiveNumber);
    estimate_cmd->add_option("-n", est.n, "indices (default all)");
    estimate_cmd->add_option("--seed", est.seed, "random seed");
    estimate_cmd->add_option("--restarts", est.budget.restarts, "inner restarts");
    estimate_cmd->add_option("--inner-iterations", est.budget.inner_iterations, "inner iterations per restart");
    estimate_cmd->add_option("--outer-rounds", est.budget.outer_rounds, "outer search rounds");
    estimate_cmd->add_option("--outer-restarts", est.budget.outer_restarts, "outer search restarts");
    estimate_cmd->add_option("--ledger", est.ledger, "results ledger (default <out-dir>/results_ledger.csv)");
    estimate_cmd->add_flag("--no-ledger", est.no_ledger, "do not append to the results ledger");

    RecoveryArgs rec;
    auto* recovery = app.add_subcommand("recovery", "worst-case nuclear-norm recovery error over an m sweep");
    recovery->add_option("-N", rec.N, "matrix size")->required()->check(CLI::PositiveNumber);
    recovery->add_option("-p", rec.p, "ball exponent, 0 < p <= 1");
    recovery->add_option("-q", rec.q, "error exponent, p < q <= 2");
    recovery->add_option("--m-list", rec.m_list, "measurement counts, e.g. 8,16,32 or 8:64:8")->required();
    recovery->add_option("--budget", rec.budget, "test matrices per m");
    recovery->add_option("--seed", rec.seed, "random seed");
    recovery->add_option("--tol", rec.tol, "decoder residual tolerance");
    recovery->add_option("--ledger", rec.ledger, "results ledger (default <out-dir>/results_ledger.csv)");
    recovery->add_flag("--no-ledger", rec.no_ledger, "do not append to the results ledger");

    SuiteArgs st;
    auto* suite = app.add_subcommand("suite", "run the acceptance battery; exit status 1 on any failure");
    suite->add_option("--seed", st.seed, "random seed");
    suite->add_option("--criteria", st.criteria, "subset, e.g. 1,4:8 (default all)");
    suite->add_option("--fixtures", st.fixtures, "oracle fixture JSON");
    suite->add_option("--recovery-budget", st.recovery_budget, "test matrices per m for criterion 9");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!common.constants_path.empty()) {
            std::ifstream f(common.constants_path);
            if (!f) throw IoError("cannot read constants file '" + common.constants_path + "'");
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(f);
            } catch (const nlohmann::json::parse_error& e) {
                throw InputError(common.constants_path + ": " + e.what());
            }
            common.constants = constants_from_json(j);
        }
        if (*envelope) return run_envelope(common, env);
        if (*bounds) return run_bounds(common, bnd);
        if (*estimate_cmd) return run_estimate(common, est);
        if (*recovery) return run_recovery(common, rec);
        if (*suite) return run_suite(common, st);
    } catch (const IoError& e) {
        std::cerr << "snumbers: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "snumbers: error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
