#pragma once

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <sstream>
#include <string>

#include "swid/errors.hpp"

namespace swid {

// Exact backend: every probability is an arbitrary-precision rational, so
// identities like g-formula == IPW can be asserted with operator==.
using Rational = boost::multiprecision::cpp_rational;

// Extended-precision decimal backend (50 significant digits).
using Decimal = boost::multiprecision::cpp_dec_float_50;

using BigInt = boost::multiprecision::cpp_int;

inline Rational rational_from_string(const std::string& text) {
    // Accepts "num/den", plain integers, and decimal literals like "0.25".
    auto bad = [&] { return DistributionError("cannot parse probability: '" + text + "'"); };
    if (text.empty()) throw bad();
    auto slash = text.find('/');
    try {
        if (slash != std::string::npos) {
            BigInt num(text.substr(0, slash));
            BigInt den(text.substr(slash + 1));
            if (den == 0) throw bad();
            return Rational(num, den);
        }
        auto dot = text.find('.');
        if (dot == std::string::npos) return Rational(BigInt(text));
        std::string digits = text.substr(0, dot) + text.substr(dot + 1);
        bool neg = false;
        if (!digits.empty() && (digits[0] == '+' || digits[0] == '-')) {
            neg = digits[0] == '-';
            digits.erase(digits.begin());
        }
        if (digits.empty()) throw bad();
        BigInt num(digits);
        BigInt den = 1;
        for (std::size_t i = 0; i < text.size() - dot - 1; ++i) den *= 10;
        return neg ? Rational(-num, den) : Rational(num, den);
    } catch (const std::runtime_error&) {
        throw bad();
    }
}

// Canonical text form: "num/den", or just "num" when the denominator is 1.
inline std::string rational_to_string(const Rational& r) {
    std::ostringstream os;
    os << numerator(r);
    if (denominator(r) != 1) os << "/" << denominator(r);
    return os.str();
}

inline double rational_to_double(const Rational& r) { return r.convert_to<double>(); }

// Traits bridging the two arithmetic backends. The numeric engines are
// templated on N and use only these entry points plus +,-,*,/ and comparisons.
template <typename N>
struct NumberTraits;

template <>
struct NumberTraits<Rational> {
    static constexpr bool exact = true;
    static Rational zero() { return Rational(0); }
    static Rational one() { return Rational(1); }
    static Rational from_rational(const Rational& r) { return r; }
    static std::string to_text(const Rational& v) { return rational_to_string(v); }
    static double to_double(const Rational& v) { return rational_to_double(v); }
    static Rational abs(const Rational& v) { return v < 0 ? Rational(-v) : v; }
};

template <>
struct NumberTraits<Decimal> {
    static constexpr bool exact = false;
    static Decimal zero() { return Decimal(0); }
    static Decimal one() { return Decimal(1); }
    static Decimal from_rational(const Rational& r) {
        return Decimal(numerator(r)) / Decimal(denominator(r));
    }
    static std::string to_text(const Decimal& v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    }
    static double to_double(const Decimal& v) { return v.convert_to<double>(); }
    static Decimal abs(const Decimal& v) { return v < 0 ? Decimal(-v) : v; }
};

// splitmix64: counter-based generator used for per-row reproducible sampling.
// Deterministic across platforms, unlike the std distribution adaptors.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL);
    splitmix64(s);
    return s;
}

// Small deterministic RNG facade; avoids std::uniform_int_distribution whose
// output is implementation-defined.
class DetRng {
public:
    explicit DetRng(std::uint64_t seed) : state_(seed) { splitmix64(state_); }

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, n). n must be > 0; modulo bias is irrelevant at test scale.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    double unit() {  // uniform in [0,1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

}  // namespace swid
