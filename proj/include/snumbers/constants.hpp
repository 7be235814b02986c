#pragma once

#include <map>
#include <string>
#include <utility>

#include <json.hpp>

#include "snumbers/errors.hpp"
#include "snumbers/exponent.hpp"

namespace snumbers {

/// The unspecified constants that set regime boundaries.
///
/// `c_universal` is the c appearing in ranges such as (1−c)N² ≤ n ≤ N² − cN^α + 1.
/// `c_pq` holds the two-parameter constants (written c(p,q) or c_{p,q}) and
/// `c_q` the one-parameter ones (c(q), c_q, c(p)). Entries are keyed by
/// exponent reciprocal; missing entries fall back to the defaults.
struct ConstantsRegistry {
    double c_universal = 0.5;
    double default_pq = 0.5;
    double default_single = 0.5;
    std::map<std::pair<double, double>, double> c_pq;
    std::map<double, double> c_q;

    double universal() const { return c_universal; }

    double pq(const Exponent& p, const Exponent& q) const {
        auto it = c_pq.find({p.reciprocal(), q.reciprocal()});
        return it == c_pq.end() ? default_pq : it->second;
    }

    double single(const Exponent& s) const {
        auto it = c_q.find(s.reciprocal());
        return it == c_q.end() ? default_single : it->second;
    }

    void validate() const {
        if (!(c_universal > 0.0 && c_universal < 1.0)) throw DomainError("c_universal must lie in (0,1)");
        if (!(default_pq > 0.0) || !(default_single > 0.0)) throw DomainError("default constants must be positive");
        for (const auto& [k, v] : c_pq)
            if (!(v > 0.0)) throw DomainError("c(p,q) entries must be positive");
        for (const auto& [k, v] : c_q)
            if (!(v > 0.0)) throw DomainError("c(q) entries must be positive");
    }

    friend bool operator==(const ConstantsRegistry&, const ConstantsRegistry&) = default;
};

inline std::string reciprocal_key(double r) {
    return r == 0.0 ? std::string("inf") : Exponent::from_reciprocal(r).to_string();
}

inline nlohmann::json to_json(const ConstantsRegistry& c) {
    nlohmann::json pq = nlohmann::json::object();
    for (const auto& [k, v] : c.c_pq) pq[reciprocal_key(k.first) + "," + reciprocal_key(k.second)] = v;
    nlohmann::json single = nlohmann::json::object();
    for (const auto& [k, v] : c.c_q) single[reciprocal_key(k)] = v;
    return {{"c_universal", c.c_universal},
            {"c_pq_default", c.default_pq},
            {"c_q_default", c.default_single},
            {"c_pq", pq},
            {"c_q", single}};
}

/// Reads overrides. Keys of "c_pq" are "p,q" strings; keys of "c_q" are exponents.
inline ConstantsRegistry constants_from_json(const nlohmann::json& j) {
    ConstantsRegistry c;
    if (!j.is_object()) throw InputError("constants config must be a JSON object");
    for (const auto& [key, val] : j.items()) {
        if (key == "c_universal" || key == "c") {
            c.c_universal = val.get<double>();
        } else if (key == "c_pq_default") {
            c.default_pq = val.get<double>();
        } else if (key == "c_q_default") {
            c.default_single = val.get<double>();
        } else if (key == "c_pq") {
            for (const auto& [pk, pv] : val.items()) {
                auto comma = pk.find(',');
                if (comma == std::string::npos) throw InputError("c_pq key '" + pk + "' must look like \"p,q\"");
                Exponent p = Exponent::parse(pk.substr(0, comma));
                Exponent q = Exponent::parse(pk.substr(comma + 1));
                c.c_pq[{p.reciprocal(), q.reciprocal()}] = pv.get<double>();
            }
        } else if (key == "c_q") {
            for (const auto& [qk, qv] : val.items()) c.c_q[Exponent::parse(qk).reciprocal()] = qv.get<double>();
        } else {
            throw InputError("unknown constants key '" + key + "'");
        }
    }
    c.validate();
    return c;
}

}  // namespace snumbers
