#pragma once

// Coordinate-wise scalings x -> (mu_1 x_1, ..., mu_n x_n) with an amplitude
// prefactor: the anisotropic scaling family, the tau/sigma changes of scale
// relating the product and weighted-sum Sobolev inequalities, and the
// Euler-Lagrange rescaling of a constrained minimizer.

#include "aniso/error.hpp"
#include "aniso/exponents.hpp"

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace aniso {

/// Point evaluator u : R^n -> R.
using Evaluator = std::function<double(std::span<const double>)>;

class DiagonalMap {
public:
    DiagonalMap(std::vector<double> scales, double amplitude)
        : scales_(std::move(scales)), amplitude_(amplitude) {
        for (std::size_t i = 0; i < scales_.size(); ++i) {
            require(std::isfinite(scales_[i]) && scales_[i] > 0,
                    "map scale " + std::to_string(i + 1) + " must be positive and finite");
        }
        require(std::isfinite(amplitude_) && amplitude_ > 0,
                "map amplitude must be positive and finite");
    }

    static DiagonalMap identity(std::size_t n) { return {std::vector<double>(n, 1.0), 1.0}; }

    [[nodiscard]] const std::vector<double>& scales() const { return scales_; }
    [[nodiscard]] double amplitude() const { return amplitude_; }
    [[nodiscard]] std::size_t n() const { return scales_.size(); }

    /// Product of the coordinate scales (the Jacobian of x -> mu x).
    [[nodiscard]] double jacobian() const {
        double log_sum = 0;
        for (const double s : scales_) log_sum += std::log(s);
        return std::exp(log_sum);
    }

private:
    std::vector<double> scales_;
    double amplitude_;
};

/// (m1 o m2): applying m2 first and then m1 to an evaluator.
[[nodiscard]] inline DiagonalMap compose(const DiagonalMap& m1, const DiagonalMap& m2) {
    require(m1.n() == m2.n(), "cannot compose maps of different dimension");
    std::vector<double> scales(m1.n());
    for (std::size_t i = 0; i < scales.size(); ++i) scales[i] = m1.scales()[i] * m2.scales()[i];
    return {std::move(scales), m1.amplitude() * m2.amplitude()};
}

/// Positive weights theta_i with sum 1/theta_i = n/p.
class ThetaVector {
public:
    static ThetaVector make(const ExponentVector& ev, const std::vector<Rational>& theta) {
        check_size(ev, theta.size());
        Rational inverse_sum = 0;
        for (const auto& t : theta) {
            require(t > 0, "theta_i must be positive");
            inverse_sum += Rational(1) / t;
        }
        const Rational target = Rational(static_cast<long>(ev.n())) / derive(ev).p_harmonic;
        require(inverse_sum == target, "sum of 1/theta_i = " + to_string(inverse_sum) +
                                           " must equal n/p = " + to_string(target));
        return ThetaVector(to_doubles(theta));
    }

    static ThetaVector make(const ExponentVector& ev, std::vector<double> theta) {
        check_size(ev, theta.size());
        double inverse_sum = 0;
        for (const double t : theta) {
            require(std::isfinite(t) && t > 0, "theta_i must be positive and finite");
            inverse_sum += 1.0 / t;
        }
        const double target = static_cast<double>(ev.n()) / to_double(derive(ev).p_harmonic);
        require(std::abs(inverse_sum - target) <= 1e-12 * target,
                "sum of 1/theta_i must equal n/p to relative 1e-12");
        return ThetaVector(std::move(theta));
    }

    /// theta_i = p for every i.
    static ThetaVector uniform(const ExponentVector& ev) {
        return make(ev, std::vector<Rational>(ev.n(), derive(ev).p_harmonic));
    }

    [[nodiscard]] const std::vector<double>& values() const { return theta_; }

private:
    explicit ThetaVector(std::vector<double> theta) : theta_(std::move(theta)) {}
    static void check_size(const ExponentVector& ev, std::size_t size) {
        require(size == ev.n(), "theta must have n = " + std::to_string(ev.n()) + " entries");
    }
    std::vector<double> theta_;
};

/// u_lambda(x) = lambda u(lambda^{(p*-p_1)/p_1} x_1, ..., lambda^{(p*-p_n)/p_n} x_n).
[[nodiscard]] inline DiagonalMap scale_family(const ExponentVector& ev, double lambda) {
    require(std::isfinite(lambda) && lambda > 0, "scaling parameter lambda must be positive");
    const Rational p_crit = derive(ev).p_critical;
    std::vector<double> scales(ev.n());
    for (std::size_t i = 0; i < ev.n(); ++i) {
        scales[i] = std::pow(lambda, to_double((p_crit - ev[i]) / ev[i]));
    }
    return {std::move(scales), lambda};
}

/// lambda_i = theta_i^{1/theta_i} prod_j theta_j^{-p/(n theta_i theta_j)}; unit Jacobian.
[[nodiscard]] inline DiagonalMap tau_theta(const ExponentVector& ev, const ThetaVector& theta) {
    const auto& t = theta.values();
    const double p = to_double(derive(ev).p_harmonic);
    const double n = static_cast<double>(ev.n());
    double weighted_log = 0;  // sum_j log(theta_j) / theta_j
    for (const double tj : t) weighted_log += std::log(tj) / tj;
    std::vector<double> scales(ev.n());
    for (std::size_t i = 0; i < ev.n(); ++i) {
        scales[i] = std::exp(std::log(t[i]) / t[i] - p / (n * t[i]) * weighted_log);
    }
    return {std::move(scales), 1.0};
}

/// mu_i(u) = prod_j G_j^{p/(n theta_i p_j)} / G_i^{1/p_i} with G_i = int |d_i u|^{p_i}.
[[nodiscard]] inline DiagonalMap sigma_theta(const ExponentVector& ev, const ThetaVector& theta,
                                             std::span<const double> grad_integrals) {
    require(grad_integrals.size() == ev.n(), "need one gradient integral per axis");
    for (std::size_t i = 0; i < grad_integrals.size(); ++i) {
        require(std::isfinite(grad_integrals[i]) && grad_integrals[i] > 0,
                "gradient integral " + std::to_string(i + 1) +
                    " must be positive (degenerate field)");
    }
    const auto& t = theta.values();
    const auto pd = ev.p_double();
    const double p = to_double(derive(ev).p_harmonic);
    const double n = static_cast<double>(ev.n());
    double weighted_log = 0;  // sum_j log(G_j) / p_j
    for (std::size_t j = 0; j < ev.n(); ++j) weighted_log += std::log(grad_integrals[j]) / pd[j];
    std::vector<double> scales(ev.n());
    for (std::size_t i = 0; i < ev.n(); ++i) {
        scales[i] = std::exp(p / (n * t[i]) * weighted_log - std::log(grad_integrals[i]) / pd[i]);
    }
    return {std::move(scales), 1.0};
}

struct EulerLagrangeRescale {
    double lambda_u;
    DiagonalMap map;
};

/// lambda(u) = sum_i p_i G_i / int |u|^{p*}, scales (lambda(u)/p_i)^{1/p_i}.
[[nodiscard]] inline EulerLagrangeRescale euler_lagrange_rescale(
    const ExponentVector& ev, std::span<const double> grad_integrals, double mass_integral) {
    require(grad_integrals.size() == ev.n(), "need one gradient integral per axis");
    require(std::isfinite(mass_integral) && mass_integral > 0, "mass integral must be positive");
    const auto pd = ev.p_double();
    double weighted = 0;
    for (std::size_t i = 0; i < ev.n(); ++i) weighted += pd[i] * grad_integrals[i];
    const double lambda_u = weighted / mass_integral;
    require(lambda_u > 0, "lambda(u) must be positive (zero gradient field)");
    std::vector<double> scales(ev.n());
    for (std::size_t i = 0; i < ev.n(); ++i) scales[i] = std::pow(lambda_u / pd[i], 1.0 / pd[i]);
    return {lambda_u, DiagonalMap(std::move(scales), 1.0)};
}

/// x -> amplitude * u(mu_1 x_1, ..., mu_n x_n).
[[nodiscard]] inline Evaluator apply_map(const DiagonalMap& map, Evaluator u) {
    return [map, u = std::move(u)](std::span<const double> x) {
        std::vector<double> y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = map.scales()[i] * x[i];
        return map.amplitude() * u(y);
    };
}

}  // namespace aniso
