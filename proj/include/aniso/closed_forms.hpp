#pragma once

// Closed-form evaluators: the isotropic extremal u_{a,b}, decay envelopes,
// the anisotropic quasi-distance d_p and membership in the annular domains
// Omega_q.

#include "aniso/error.hpp"
#include "aniso/exponents.hpp"
#include "aniso/scaling.hpp"

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace aniso {

/// x -> (a + b sum_i |x_i|^{p/(p-1)})^{(p-n)/p}.
[[nodiscard]] inline Evaluator isotropic_extremal(std::size_t n, const Rational& p, double a,
                                                  double b) {
    require(n >= 2, "dimension n must be at least 2");
    require(p > 1, "isotropic exponent p must exceed 1");
    require(p < Rational(static_cast<long>(n)), "isotropic exponent p must be below n");
    require(std::isfinite(a) && a > 0 && std::isfinite(b) && b > 0,
            "extremal parameters a and b must be positive");
    const double conj = to_double(p / (p - 1));
    const double power = to_double((p - Rational(static_cast<long>(n))) / p);
    return [n, a, b, conj, power](std::span<const double> x) {
        require(x.size() == n, "point dimension mismatch");
        double s = 0;
        for (const double xi : x) s += std::pow(std::abs(xi), conj);
        return std::pow(a + b * s, power);
    };
}

struct EnvelopeSpec {
    ExponentVector ev;
    double q;
    IndexSet axes;
    double c;
};

/// Per-axis exponent q p_i / (q - p_i) of the envelope.
[[nodiscard]] inline std::vector<double> envelope_exponents(const EnvelopeSpec& spec) {
    require(std::isfinite(spec.q), "envelope q must be finite");
    require(std::isfinite(spec.c) && spec.c > 0, "envelope constant c must be positive");
    const auto pd = spec.ev.p_double();
    std::vector<double> exps;
    exps.reserve(spec.axes.size());
    for (const auto i : spec.axes) {
        require(i < pd.size(), "envelope axis " + std::to_string(i + 1) + " out of range");
        require(spec.q > pd[i], "envelope q must exceed p_" + std::to_string(i + 1));
        exps.push_back(spec.q * pd[i] / (spec.q - pd[i]));
    }
    return exps;
}

/// x -> c (1 + sum_{i in axes} |x_i|^{q p_i/(q - p_i)})^{-1}.
[[nodiscard]] inline Evaluator decay_envelope(const EnvelopeSpec& spec) {
    auto exps = envelope_exponents(spec);
    return [axes = spec.axes, exps = std::move(exps), c = spec.c,
            n = spec.ev.n()](std::span<const double> x) {
        require(x.size() == n, "point dimension mismatch");
        double s = 0;
        for (std::size_t k = 0; k < axes.size(); ++k) s += std::pow(std::abs(x[axes[k]]), exps[k]);
        return c / (1 + s);
    };
}

/// d_p(x, y) = sum_i |x_i - y_i|^{delta p_i/(p* - p_i)}, delta = (p* - p_+)/p_+.
class AnisoDistance {
public:
    explicit AnisoDistance(const ExponentVector& ev) {
        const auto de = derive(ev);
        require(de.p_max < de.p_critical,
                "d_p needs p_+ < p* (regime " + to_string(de.regime) + ")");
        delta_ = (de.p_critical - de.p_max) / de.p_max;
        for (const auto& pi : ev.p()) exact_.push_back(delta_ * pi / (de.p_critical - pi));
        exps_ = to_doubles(exact_);
    }

    [[nodiscard]] const Rational& delta() const { return delta_; }
    [[nodiscard]] const std::vector<Rational>& exponents_exact() const { return exact_; }
    [[nodiscard]] const std::vector<double>& exponents() const { return exps_; }

    [[nodiscard]] double operator()(std::span<const double> x, std::span<const double> y) const {
        require(x.size() == exps_.size() && y.size() == exps_.size(), "point dimension mismatch");
        double d = 0;
        for (std::size_t i = 0; i < exps_.size(); ++i) d += std::pow(std::abs(x[i] - y[i]), exps_[i]);
        return d;
    }

    /// d_p(x, 0).
    [[nodiscard]] double from_origin(std::span<const double> x) const {
        require(x.size() == exps_.size(), "point dimension mismatch");
        double d = 0;
        for (std::size_t i = 0; i < exps_.size(); ++i) d += std::pow(std::abs(x[i]), exps_[i]);
        return d;
    }

private:
    Rational delta_;
    std::vector<Rational> exact_;
    std::vector<double> exps_;
};

struct OmegaSpec {
    IndexSet i1;
    IndexSet i2;
    double r1 = 1;
    double r2 = 1;
    double lam = 0.5;
    std::map<std::size_t, double> qweights;

    void validate() const {
        require(!i2.empty(), "Omega needs a nonempty I2");
        for (const auto i : i1) {
            for (const auto j : i2) {
                require(i != j, "I1 and I2 must be disjoint (index " + std::to_string(i + 1) + ")");
            }
        }
        require(r1 > 0 && r2 > 0, "Omega radii must be positive");
        require(lam > 0 && lam < 1, "Omega lambda must lie in (0,1)");
        auto check = [&](std::size_t i) {
            const auto it = qweights.find(i);
            require(it != qweights.end(), "missing q weight for index " + std::to_string(i + 1));
            require(it->second > 1, "q weight for index " + std::to_string(i + 1) + " must exceed 1");
        };
        for (const auto i : i1) check(i);
        for (const auto i : i2) check(i);
    }
};

/// sum_{I1} |x_i|^{q_i} < (1 + lam) R1 and |sum_{I2} |x_i|^{q_i} - R2| < lam R2.
[[nodiscard]] inline bool omega_contains(const OmegaSpec& spec, std::span<const double> x) {
    spec.validate();
    auto partial = [&](const IndexSet& set) {
        double s = 0;
        for (const auto i : set) {
            require(i < x.size(), "Omega index out of range for point");
            s += std::pow(std::abs(x[i]), spec.qweights.at(i));
        }
        return s;
    };
    return partial(spec.i1) < (1 + spec.lam) * spec.r1 &&
           std::abs(partial(spec.i2) - spec.r2) < spec.lam * spec.r2;
}

}  // namespace aniso
