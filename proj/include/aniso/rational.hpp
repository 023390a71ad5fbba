#pragma once

#include "aniso/error.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aniso {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

[[nodiscard]] inline double to_double(const Rational& r) { return r.convert_to<double>(); }

[[nodiscard]] inline std::vector<double> to_doubles(const std::vector<Rational>& v) {
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& r : v) out.push_back(to_double(r));
    return out;
}

/// "num/den" in lowest terms, or "num" when the denominator is 1.
[[nodiscard]] inline std::string to_string(const Rational& r) {
    const BigInt num = boost::multiprecision::numerator(r);
    const BigInt den = boost::multiprecision::denominator(r);
    if (den == 1) return num.str();
    return num.str() + "/" + den.str();
}

namespace detail {

inline BigInt parse_integer(std::string_view s, std::string_view whole) {
    std::size_t i = 0;
    bool negative = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
        negative = s[i] == '-';
        ++i;
    }
    require(i < s.size(), "malformed rational '" + std::string(whole) + "'");
    BigInt value = 0;
    for (; i < s.size(); ++i) {
        require(std::isdigit(static_cast<unsigned char>(s[i])) != 0,
                "malformed rational '" + std::string(whole) + "'");
        value = value * 10 + (s[i] - '0');
    }
    return negative ? BigInt(-value) : value;
}

inline BigInt pow10(unsigned k) {
    BigInt r = 1;
    for (unsigned i = 0; i < k; ++i) r *= 10;
    return r;
}

// Exact value of a decimal literal such as "-0.125" or "2.5e-3".
inline Rational parse_decimal(std::string_view s, std::string_view whole) {
    long exponent = 0;
    if (const auto e = s.find_first_of("eE"); e != std::string_view::npos) {
        const BigInt ex = parse_integer(s.substr(e + 1), whole);
        require(ex > -4000 && ex < 4000, "exponent out of range in '" + std::string(whole) + "'");
        exponent = ex.convert_to<long>();
        s = s.substr(0, e);
    }
    std::string digits;
    long frac_digits = 0;
    bool seen_point = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c == '.') {
            require(!seen_point, "malformed rational '" + std::string(whole) + "'");
            seen_point = true;
            continue;
        }
        if (seen_point && std::isdigit(static_cast<unsigned char>(c))) ++frac_digits;
        digits.push_back(c);
    }
    require(!digits.empty() && digits != "-" && digits != "+",
            "malformed rational '" + std::string(whole) + "'");
    Rational value(parse_integer(digits, whole));
    const long shift = exponent - frac_digits;
    if (shift > 0) value *= Rational(pow10(static_cast<unsigned>(shift)));
    if (shift < 0) value /= Rational(pow10(static_cast<unsigned>(-shift)));
    return value;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace detail

/// Parses "a/b", an integer, or a decimal literal into an exact rational.
[[nodiscard]] inline Rational parse_rational(std::string_view text) {
    const std::string_view s = detail::trim(text);
    require(!s.empty(), "empty rational literal");
    if (const auto slash = s.find('/'); slash != std::string_view::npos) {
        const BigInt num = detail::parse_integer(detail::trim(s.substr(0, slash)), s);
        const BigInt den = detail::parse_integer(detail::trim(s.substr(slash + 1)), s);
        require(den != 0, "zero denominator in '" + std::string(s) + "'");
        return Rational(num, den);
    }
    if (s.find_first_of(".eE") != std::string_view::npos) return detail::parse_decimal(s, s);
    return Rational(detail::parse_integer(s, s));
}

/// Comma-separated list of rationals, e.g. "3/2,3/2,5".
[[nodiscard]] inline std::vector<Rational> parse_rational_list(std::string_view text) {
    std::vector<Rational> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                               : comma - start);
        out.push_back(parse_rational(piece));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

[[nodiscard]] inline Rational pow_int(const Rational& base, int k) {
    Rational result = 1;
    Rational b = k < 0 ? Rational(1) / base : base;
    unsigned e = static_cast<unsigned>(k < 0 ? -k : k);
    while (e != 0) {
        if (e & 1U) result *= b;
        b *= b;
        e >>= 1U;
    }
    return result;
}

/// Exact square root when r is the square of a rational.
[[nodiscard]] inline std::optional<Rational> exact_sqrt(const Rational& r) {
    if (r < 0) return std::nullopt;
    const BigInt num = boost::multiprecision::numerator(r);
    const BigInt den = boost::multiprecision::denominator(r);
    const BigInt sn = boost::multiprecision::sqrt(num);
    const BigInt sd = boost::multiprecision::sqrt(den);
    if (sn * sn != num || sd * sd != den) return std::nullopt;
    return Rational(sn, sd);
}

}  // namespace aniso
