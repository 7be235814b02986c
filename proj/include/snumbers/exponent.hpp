#pragma once

#include <cctype>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>

#include "snumbers/errors.hpp"

namespace snumbers {

/// A Schatten exponent in (0, ∞].
///
/// The exponent is stored through its reciprocal, so that infinity is the
/// exact value 0 and rationals such as 4/3 have exactly representable
/// reciprocals (3/4). Every regime test in the library compares reciprocals.
/// When the exponent was built from a rational, the numerator and denominator
/// are kept for printing.
class Exponent {
public:
    Exponent() = default;

    static Exponent infinity() {
        Exponent e;
        e.recip_ = 0.0;
        e.num_ = 1;
        e.den_ = 0;
        return e;
    }

    /// Builds p = num/den. den == 0 means infinity.
    static Exponent rational(std::int64_t num, std::int64_t den) {
        if (den == 0) {
            if (num <= 0) throw DomainError("exponent: infinity must be written with a positive numerator");
            return infinity();
        }
        if (num <= 0 || den < 0) throw DomainError("exponent must be positive");
        std::int64_t g = std::gcd(num, den);
        Exponent e;
        e.num_ = num / g;
        e.den_ = den / g;
        e.recip_ = static_cast<double>(e.den_) / static_cast<double>(e.num_);
        return e;
    }

    static Exponent from_value(double p) {
        if (std::isinf(p) && p > 0) return infinity();
        if (!(p > 0) || !std::isfinite(p)) throw DomainError("exponent must lie in (0, inf]");
        Exponent e;
        e.recip_ = 1.0 / p;
        e.den_ = -1;
        return e;
    }

    /// Builds the exponent with 1/p = r; r = 0 gives infinity.
    static Exponent from_reciprocal(double r) {
        if (!(r >= 0) || !std::isfinite(r)) throw DomainError("reciprocal exponent must lie in [0, inf)");
        if (r == 0.0) return infinity();
        Exponent e;
        e.recip_ = r;
        e.den_ = -1;
        return e;
    }

    /// Accepts "inf", "∞", integers, decimals and rationals "a/b".
    static Exponent parse(std::string_view text) {
        std::string s(text);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
        std::size_t start = 0;
        while (start < s.size() && std::isspace(static_cast<unsigned char>(s[start]))) ++start;
        s = s.substr(start);
        if (s == "inf" || s == "Inf" || s == "INF" || s == "infinity" || s == "∞") return infinity();
        auto slash = s.find('/');
        try {
            if (slash != std::string::npos) {
                std::size_t used_a = 0, used_b = 0;
                std::string a = s.substr(0, slash), b = s.substr(slash + 1);
                long long num = std::stoll(a, &used_a);
                long long den = std::stoll(b, &used_b);
                if (used_a != a.size() || used_b != b.size() || den == 0)
                    throw DomainError("cannot parse exponent '" + s + "'");
                return rational(num, den);
            }
            if (s.find_first_of(".eE") == std::string::npos) {
                std::size_t used = 0;
                long long v = std::stoll(s, &used);
                if (used != s.size()) throw DomainError("cannot parse exponent '" + s + "'");
                return rational(v, 1);
            }
            std::size_t used = 0;
            double v = std::stod(s, &used);
            if (used != s.size()) throw DomainError("cannot parse exponent '" + s + "'");
            return from_value(v);
        } catch (const std::logic_error& e) {
            if (dynamic_cast<const DomainError*>(&e)) throw;
            throw DomainError("cannot parse exponent '" + s + "'");
        }
    }

    bool is_infinite() const { return recip_ == 0.0; }
    double reciprocal() const { return recip_; }
    double value() const { return is_infinite() ? std::numeric_limits<double>::infinity() : 1.0 / recip_; }
    bool is_banach() const { return recip_ <= 1.0; }

    /// Hölder conjugate; only defined for p >= 1.
    Exponent dual() const {
        if (!is_banach()) throw DomainError("dual exponent needs p >= 1, got p = " + to_string());
        if (is_infinite()) return rational(1, 1);
        if (recip_ == 1.0) return infinity();
        if (den_ > 0) return rational(num_, num_ - den_);
        return from_reciprocal(1.0 - recip_);
    }

    std::string to_string() const {
        if (is_infinite()) return "inf";
        if (den_ > 0) {
            if (den_ == 1) return std::to_string(num_);
            return std::to_string(num_) + "/" + std::to_string(den_);
        }
        std::ostringstream os;
        os.precision(17);
        os << value();
        return os.str();
    }

    /// Ordering of the exponent values p (not of the reciprocals).
    friend std::partial_ordering operator<=>(const Exponent& a, const Exponent& b) {
        return b.recip_ <=> a.recip_;
    }
    friend bool operator==(const Exponent& a, const Exponent& b) { return a.recip_ == b.recip_; }

private:
    double recip_ = 1.0;
    std::int64_t num_ = 1;
    std::int64_t den_ = 1;  // 0 encodes infinity, -1 encodes "not rational"
};

inline Exponent dual_exponent(const Exponent& p) { return p.dual(); }

inline const Exponent kInf = Exponent::infinity();
inline Exponent exponent(std::int64_t num, std::int64_t den = 1) { return Exponent::rational(num, den); }

}  // namespace snumbers
