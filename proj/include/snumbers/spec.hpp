#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "snumbers/errors.hpp"
#include "snumbers/exponent.hpp"

namespace snumbers {

enum class SnumberKind { approximation, gelfand, kolmogorov, recovery };

inline std::string to_string(SnumberKind k) {
    switch (k) {
        case SnumberKind::approximation: return "approximation";
        case SnumberKind::gelfand: return "gelfand";
        case SnumberKind::kolmogorov: return "kolmogorov";
        case SnumberKind::recovery: return "recovery";
    }
    return "?";
}

inline SnumberKind parse_kind(const std::string& s) {
    if (s == "a" || s == "approximation" || s == "approx") return SnumberKind::approximation;
    if (s == "c" || s == "gelfand") return SnumberKind::gelfand;
    if (s == "d" || s == "kolmogorov") return SnumberKind::kolmogorov;
    if (s == "recovery") return SnumberKind::recovery;
    throw UsageError("unknown s-number kind '" + s + "' (expected a, c or d)");
}

/// The natural identity S_p^N → S_q^N, optionally with an s-number index n.
struct EmbeddingSpec {
    Exponent p;
    Exponent q;
    int N = 1;
    std::optional<std::int64_t> n;

    EmbeddingSpec() = default;
    EmbeddingSpec(Exponent p_, Exponent q_, int N_, std::optional<std::int64_t> n_ = std::nullopt)
        : p(p_), q(q_), N(N_), n(n_) {
        validate();
    }

    std::int64_t dim() const { return static_cast<std::int64_t>(N) * N; }

    void validate() const {
        if (N < 1) throw DomainError("N must be >= 1");
        if (n && (*n < 1 || *n > dim()))
            throw DomainError("index n must satisfy 1 <= n <= N^2 = " + std::to_string(dim()) + ", got " +
                              std::to_string(*n));
    }

    std::int64_t index() const {
        if (!n) throw UsageError("this operation needs the index n");
        return *n;
    }

    EmbeddingSpec with_index(std::int64_t k) const { return EmbeddingSpec(p, q, N, k); }

    /// The adjoint embedding S_{q*} → S_{p*} (Banach exponents only).
    EmbeddingSpec dual() const { return EmbeddingSpec(q.dual(), p.dual(), N, n); }

    std::string describe() const {
        std::string s = "p=" + p.to_string() + " q=" + q.to_string() + " N=" + std::to_string(N);
        if (n) s += " n=" + std::to_string(*n);
        return s;
    }
};

inline nlohmann::json to_json(const EmbeddingSpec& s) {
    nlohmann::json j = {{"p", s.p.to_string()}, {"q", s.q.to_string()}, {"N", s.N}};
    if (s.n) j["n"] = *s.n;
    return j;
}

}  // namespace snumbers
