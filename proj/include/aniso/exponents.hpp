#pragma once

// Exact exponent calculus for an anisotropy vector p = (p_1, ..., p_n):
// harmonic mean, critical and Serrin exponents, the index set Theta, the
// vanishing threshold p_bar0, the decay threshold q0 and the regime tag.

#include "aniso/error.hpp"
#include "aniso/rational.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace aniso {

/// Sorted, 0-based coordinate indices.
using IndexSet = std::vector<std::size_t>;

class ExponentVector {
public:
    /// Validates n >= 2, p_i > 1 and sum 1/p_i > 1.
    static ExponentVector make(std::vector<Rational> p) {
        require(p.size() >= 2, "dimension n must be at least 2 (got n = " +
                                   std::to_string(p.size()) + ")");
        Rational inverse_sum = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            require(p[i] > 1, "p_i must exceed 1 (p_" + std::to_string(i + 1) + " = " +
                                  to_string(p[i]) + ")");
            inverse_sum += Rational(1) / p[i];
        }
        require(inverse_sum > 1, "harmonic mean p must be below n (sum of 1/p_i = " +
                                     to_string(inverse_sum) + " must exceed 1)");
        return ExponentVector(std::move(p));
    }

    [[nodiscard]] std::size_t n() const { return p_.size(); }
    [[nodiscard]] const std::vector<Rational>& p() const { return p_; }
    [[nodiscard]] const Rational& operator[](std::size_t i) const { return p_[i]; }
    [[nodiscard]] std::vector<double> p_double() const { return to_doubles(p_); }

    /// Same exponents with coordinates reordered: result[k] = p[perm[k]].
    [[nodiscard]] ExponentVector permuted(const std::vector<std::size_t>& perm) const {
        require(perm.size() == n(), "permutation size mismatch");
        std::vector<Rational> q;
        q.reserve(n());
        for (const auto k : perm) q.push_back(p_.at(k));
        return make(std::move(q));
    }

private:
    explicit ExponentVector(std::vector<Rational> p) : p_(std::move(p)) {}
    std::vector<Rational> p_;
};

enum class Regime { subserrin, serrin_limit, vanishing, supercritical };

[[nodiscard]] inline std::string to_string(Regime r) {
    switch (r) {
        case Regime::subserrin: return "SUBSERRIN";
        case Regime::serrin_limit: return "SERRIN_LIMIT";
        case Regime::vanishing: return "VANISHING";
        case Regime::supercritical: return "SUPERCRITICAL";
    }
    return "UNKNOWN";
}

/// The decay threshold q0 together with the index split it induces.
struct DecayThreshold {
    double value = 0.0;                  // max(p_serrin, largest root)
    std::optional<Rational> exact;       // set when q0 is rational
    std::optional<double> raw_root;      // largest real root of phi, if any
    std::optional<Rational> raw_root_exact;
    bool clamped = false;                // raw root fell below p_serrin (or none)
    IndexSet i0;                         // { i : p_i > p_bar0 }
    IndexSet i0_complement;
    Rational phi_a, phi_b, phi_c;        // phi(q) = a q^2 + b q + c
};

struct DerivedExponents {
    std::size_t n = 0;
    Rational p_harmonic;
    Rational p_critical;
    Rational p_serrin;
    Rational p_max;
    Rational p_min;
    Regime regime = Regime::subserrin;
    std::optional<IndexSet> theta;
    std::optional<Rational> p_bar0;
    std::optional<DecayThreshold> q0;
};

[[nodiscard]] inline Regime classify_regime(const DerivedExponents& de) {
    if (de.p_max < de.p_serrin) return Regime::subserrin;
    if (de.p_max == de.p_serrin) return Regime::serrin_limit;
    if (de.p_max < de.p_critical) return Regime::vanishing;
    return Regime::supercritical;
}

/// p, p*, p_*, p_+, p_- and the regime. Theta, p_bar0 and q0 stay unset.
[[nodiscard]] inline DerivedExponents derive(const ExponentVector& ev) {
    DerivedExponents de;
    const Rational n(static_cast<long>(ev.n()));
    Rational inverse_sum = 0;
    for (const auto& pi : ev.p()) inverse_sum += Rational(1) / pi;
    de.n = ev.n();
    de.p_harmonic = n / inverse_sum;
    de.p_critical = n * de.p_harmonic / (n - de.p_harmonic);
    de.p_serrin = (n - 1) * de.p_harmonic / (n - de.p_harmonic);
    de.p_max = *std::max_element(ev.p().begin(), ev.p().end());
    de.p_min = *std::min_element(ev.p().begin(), ev.p().end());
    de.regime = classify_regime(de);
    return de;
}

namespace detail {

inline Rational max_rational(const Rational& a, const Rational& b) { return a < b ? b : a; }

}  // namespace detail

/// Indices i with
///   (p_i - p_- - (n/p)(p_i - p_*)) * sum_j max((p_i - p_j)/p_j, 0) >= (p_* - 1)(p_i - p_-).
[[nodiscard]] inline IndexSet theta_set(const ExponentVector& ev, const DerivedExponents& de) {
    const Rational n_over_p = Rational(static_cast<long>(ev.n())) / de.p_harmonic;
    IndexSet theta;
    for (std::size_t i = 0; i < ev.n(); ++i) {
        const Rational& pi = ev[i];
        Rational excess = 0;
        for (std::size_t j = 0; j < ev.n(); ++j) {
            excess += detail::max_rational((pi - ev[j]) / ev[j], Rational(0));
        }
        const Rational lhs = (pi - de.p_min - n_over_p * (pi - de.p_serrin)) * excess;
        const Rational rhs = (de.p_serrin - 1) * (pi - de.p_min);
        if (lhs >= rhs) theta.push_back(i);
    }
    return theta;
}

/// max(p_*, max{p_i : i in Theta}).
[[nodiscard]] inline Rational p_bar0(const ExponentVector& ev, const IndexSet& theta,
                                     const Rational& p_serrin) {
    Rational result = p_serrin;
    for (const auto i : theta) result = detail::max_rational(result, ev.p().at(i));
    return result;
}

[[nodiscard]] inline Rational p_bar0(const ExponentVector& ev, const IndexSet& theta) {
    return p_bar0(ev, theta, derive(ev).p_serrin);
}

namespace detail {

using Quad = boost::multiprecision::cpp_bin_float_quad;

inline Rational eval_quadratic(const Rational& a, const Rational& b, const Rational& c,
                               const Rational& q) {
    return (a * q + b) * q + c;
}

// Exact rational value of a finite double.
inline Rational rational_from_double(double x) {
    int exponent = 0;
    const double mantissa = std::frexp(x, &exponent);
    const auto scaled = static_cast<long long>(std::ldexp(mantissa, 53));
    const Rational r{BigInt(scaled)};
    exponent -= 53;
    const Rational two(2);
    return exponent >= 0 ? r * pow_int(two, exponent) : r / pow_int(two, -exponent);
}

// Largest root of a q^2 + b q + c (a < 0) with irrational discriminant:
// quad-precision estimate, then exact-sign bisection down to a 1e-12 bracket.
inline double refine_largest_root(const Rational& a, const Rational& b, const Rational& c,
                                  const Rational& disc) {
    const Quad qa = a.convert_to<Quad>();
    const Quad qb = b.convert_to<Quad>();
    const Quad qc = c.convert_to<Quad>();
    const Quad qd = disc.convert_to<Quad>();
    const Quad sq = boost::multiprecision::sqrt(qd);
    const Quad half = -(qb + (qb < 0 ? -sq : sq)) / 2;
    const Quad r1 = half / qa;
    const Quad r2 = qc / half;
    const double estimate = (r1 > r2 ? r1 : r2).convert_to<double>();

    // phi > 0 strictly between the roots, phi < 0 above the largest one.
    double width = 1e-9 * std::max(1.0, std::abs(estimate));
    Rational lo = rational_from_double(estimate - width);
    Rational hi = rational_from_double(estimate + width);
    for (int guard = 0; guard < 200 && !(eval_quadratic(a, b, c, lo) > 0); ++guard) {
        width *= 2;
        lo = rational_from_double(estimate - width);
    }
    for (int guard = 0; guard < 200 && !(eval_quadratic(a, b, c, hi) < 0); ++guard) {
        width *= 2;
        hi = rational_from_double(estimate + width);
    }
    const Rational tolerance = Rational(1, 1'000'000'000'000LL);
    while (hi - lo >= tolerance) {
        const Rational mid = (lo + hi) / 2;
        if (eval_quadratic(a, b, c, mid) > 0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return to_double((lo + hi) / 2);
}

}  // namespace detail

/// phi(q) = (q - p_- - (n/p)(q - p_*)) * sum_{i in I0^c} (q - p_i)/p_i - (p_* - 1)(q - p_-)
/// and q0 = max(p_*, largest real root of phi).
[[nodiscard]] inline DecayThreshold q0(const ExponentVector& ev, const DerivedExponents& de,
                                       const Rational& p_bar0_value) {
    DecayThreshold out;
    for (std::size_t i = 0; i < ev.n(); ++i) {
        (ev[i] > p_bar0_value ? out.i0 : out.i0_complement).push_back(i);
    }
    require(!out.i0_complement.empty(), "I0 complement is empty (p_bar0 below p_-)");

    const Rational n_over_p = Rational(static_cast<long>(ev.n())) / de.p_harmonic;
    // First factor alpha q + beta, second factor s1 q - s0.
    const Rational alpha = 1 - n_over_p;
    const Rational beta = n_over_p * de.p_serrin - de.p_min;
    Rational s1 = 0;
    for (const auto i : out.i0_complement) s1 += Rational(1) / ev[i];
    const Rational s0(static_cast<long>(out.i0_complement.size()));
    const Rational k = de.p_serrin - 1;

    out.phi_a = alpha * s1;
    out.phi_b = beta * s1 - alpha * s0 - k;
    out.phi_c = -beta * s0 + k * de.p_min;

    const Rational disc = out.phi_b * out.phi_b - 4 * out.phi_a * out.phi_c;
    if (disc >= 0) {
        if (const auto root = exact_sqrt(disc)) {
            // a < 0, so the '-' branch gives the larger root.
            const Rational r1 = (-out.phi_b - *root) / (2 * out.phi_a);
            const Rational r2 = (-out.phi_b + *root) / (2 * out.phi_a);
            out.raw_root_exact = detail::max_rational(r1, r2);
            out.raw_root = to_double(*out.raw_root_exact);
        } else {
            out.raw_root = detail::refine_largest_root(out.phi_a, out.phi_b, out.phi_c, disc);
        }
    }

    if (out.raw_root_exact && *out.raw_root_exact >= de.p_serrin) {
        out.exact = out.raw_root_exact;
        out.value = *out.raw_root;
    } else if (!out.raw_root_exact && out.raw_root && *out.raw_root >= to_double(de.p_serrin)) {
        out.value = *out.raw_root;
    } else {
        out.clamped = true;
        out.exact = de.p_serrin;
        out.value = to_double(de.p_serrin);
    }
    return out;
}

/// phi evaluated exactly at q (for audits and grid scans).
[[nodiscard]] inline Rational phi_at(const DecayThreshold& t, const Rational& q) {
    return detail::eval_quadratic(t.phi_a, t.phi_b, t.phi_c, q);
}

/// All derived quantities, including Theta, p_bar0 and q0.
[[nodiscard]] inline DerivedExponents analyze(const ExponentVector& ev) {
    DerivedExponents de = derive(ev);
    de.theta = theta_set(ev, de);
    de.p_bar0 = p_bar0(ev, *de.theta, de.p_serrin);
    de.q0 = q0(ev, de, *de.p_bar0);
    return de;
}

}  // namespace aniso
