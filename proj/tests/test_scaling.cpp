#include "aniso/closed_forms.hpp"
#include "aniso/scaling.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace aniso;

namespace {

Rational R(long a, long b = 1) { return Rational(a, b); }

const auto cube2 = ExponentVector::make({2, 2, 2});
const auto mixed = ExponentVector::make({R(3, 2), R(3, 2), 5});
const auto planar = ExponentVector::make({R(3, 2), R(3, 2)});

// 4 pi int_0^inf r^2 g(r e_1) dr for a radial integrand.
double radial_integral(const std::function<double(double)>& g) {
    using boost::math::quadrature::gauss_kronrod;
    auto integrand = [&](double r) { return 4 * boost::math::constants::pi<double>() * r * r * g(r); };
    double total = 0;
    double lo = 0;
    for (double hi : {0.25, 1.0, 4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0, 1e5, 1e6}) {
        total += gauss_kronrod<double, 61>::integrate(integrand, lo, hi, 15, 1e-13);
        lo = hi;
    }
    return total;
}

// Random theta with sum 1/theta_i = n/p.
std::vector<double> random_theta(std::mt19937_64& rng, const ExponentVector& ev) {
    std::uniform_real_distribution<double> w(0.05, 1.0);
    const double target = static_cast<double>(ev.n()) / to_double(derive(ev).p_harmonic);
    std::vector<double> weights(ev.n());
    double sum = 0;
    for (auto& x : weights) sum += (x = w(rng));
    std::vector<double> theta(ev.n());
    for (std::size_t i = 0; i < ev.n(); ++i) theta[i] = sum / (target * weights[i]);
    return theta;
}

}  // namespace

TEST(ScaleFamily, IsotropicExample) {
    const auto m = scale_family(cube2, 2.0);
    EXPECT_DOUBLE_EQ(m.amplitude(), 2.0);
    for (const double s : m.scales()) EXPECT_DOUBLE_EQ(s, 4.0);
}

TEST(ScaleFamily, UnitParameterIsIdentity) {
    const auto m = scale_family(mixed, 1.0);
    EXPECT_EQ(m.amplitude(), 1.0);
    for (const double s : m.scales()) EXPECT_EQ(s, 1.0);
}

TEST(ScaleFamily, AnisotropicExponents) {
    const auto m = scale_family(mixed, 2.0);
    EXPECT_NEAR(m.scales()[0], std::pow(2.0, 11.0 / 4), 1e-13);
    EXPECT_NEAR(m.scales()[1], std::pow(2.0, 11.0 / 4), 1e-13);
    EXPECT_NEAR(m.scales()[2], std::pow(2.0, 1.0 / 8), 1e-14);
}

TEST(ScaleFamily, CompositionMultipliesParameters) {
    for (const double a : {0.3, 0.5, 2.0, 7.0}) {
        for (const double b : {0.25, 1.5, 3.0}) {
            const auto lhs = compose(scale_family(mixed, a), scale_family(mixed, b));
            const auto rhs = scale_family(mixed, a * b);
            EXPECT_NEAR(lhs.amplitude(), rhs.amplitude(), 1e-14 * rhs.amplitude());
            for (std::size_t i = 0; i < 3; ++i) {
                EXPECT_NEAR(lhs.scales()[i], rhs.scales()[i], 1e-13 * rhs.scales()[i]);
            }
        }
    }
}

TEST(ScaleFamily, RejectsNonpositive) {
    EXPECT_THROW((void)scale_family(cube2, 0.0), ValidationError);
    EXPECT_THROW((void)scale_family(cube2, -1.0), ValidationError);
}

TEST(ThetaVector, RejectsWrongHarmonicSum) {
    // 1/2 + 1/6 = 2/3, while n/p = 4/3 here.
    EXPECT_THROW((void)ThetaVector::make(planar, std::vector<Rational>{2, 6}), ValidationError);
    EXPECT_THROW((void)ThetaVector::make(planar, std::vector<double>{2.0, 6.0}), ValidationError);
    EXPECT_THROW((void)ThetaVector::make(planar, std::vector<Rational>{1}), ValidationError);
    EXPECT_NO_THROW((void)ThetaVector::make(planar, std::vector<Rational>{1, 3}));
}

TEST(TauTheta, UniformThetaIsIdentity) {
    for (const auto& ev : {cube2, mixed, planar}) {
        const auto m = tau_theta(ev, ThetaVector::uniform(ev));
        for (const double s : m.scales()) EXPECT_NEAR(s, 1.0, 1e-15);
    }
}

TEST(TauTheta, PlanarExample) {
    const auto theta = ThetaVector::make(planar, std::vector<Rational>{1, 3});
    const auto m = tau_theta(planar, theta);
    EXPECT_NEAR(m.scales()[0], std::pow(3.0, -0.25), 1e-15);
    EXPECT_NEAR(m.scales()[1], std::pow(3.0, 0.25), 1e-15);
    EXPECT_NEAR(m.jacobian(), 1.0, 1e-12);
}

TEST(SigmaTheta, SymmetricInputsGiveIdentity) {
    for (const double g : {0.5, 1.0, 7.0}) {
        const auto m = sigma_theta(cube2, ThetaVector::uniform(cube2), std::vector<double>(3, g));
        for (const double s : m.scales()) EXPECT_NEAR(s, 1.0, 1e-14);
    }
}

TEST(SigmaTheta, PlanarExample) {
    const auto theta = ThetaVector::make(planar, std::vector<Rational>{1, 3});
    const auto m = sigma_theta(planar, theta, std::vector<double>{1.0, 16.0});
    EXPECT_NEAR(m.scales()[0], 4.0, 1e-14);
    EXPECT_NEAR(m.scales()[1], 0.25, 1e-15);
    EXPECT_NEAR(m.jacobian(), 1.0, 1e-12);
}

TEST(SigmaTheta, RejectsDegenerateIntegrals) {
    const auto theta = ThetaVector::uniform(planar);
    EXPECT_THROW((void)sigma_theta(planar, theta, std::vector<double>{0.0, 1.0}), ValidationError);
    EXPECT_THROW((void)sigma_theta(planar, theta, std::vector<double>{1.0, -2.0}), ValidationError);
}

TEST(UnitJacobian, RandomDraws) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> num(11, 60);
    std::uniform_real_distribution<double> logg(-8.0, 8.0);
    int draws = 0;
    while (draws < 1500) {
        const std::size_t n = 2 + draws % 4;
        std::vector<Rational> p;
        for (std::size_t i = 0; i < n; ++i) p.push_back(Rational(num(rng), 10));
        Rational s = 0;
        for (const auto& x : p) s += 1 / x;
        if (s <= 1) continue;
        const auto ev = ExponentVector::make(p);
        const auto theta = ThetaVector::make(ev, random_theta(rng, ev));
        std::vector<double> g(n);
        for (auto& x : g) x = std::exp(logg(rng));
        EXPECT_NEAR(tau_theta(ev, theta).jacobian(), 1.0, 1e-12);
        EXPECT_NEAR(sigma_theta(ev, theta, g).jacobian(), 1.0, 1e-12);
        ++draws;
    }
}

TEST(EulerLagrange, IsotropicExample) {
    const auto el = euler_lagrange_rescale(cube2, std::vector<double>{1, 1, 1}, 6.0);
    EXPECT_DOUBLE_EQ(el.lambda_u, 1.0);
    EXPECT_EQ(el.map.amplitude(), 1.0);
    for (const double s : el.map.scales()) EXPECT_NEAR(s, 1 / std::sqrt(2.0), 1e-15);
}

TEST(EulerLagrange, AnisotropicExample) {
    const auto el = euler_lagrange_rescale(mixed, std::vector<double>{2, 3, 4}, 10.0);
    EXPECT_NEAR(el.lambda_u, 2.75, 1e-15);
    EXPECT_NEAR(el.map.scales()[0], std::pow(2.75 / 1.5, 2.0 / 3), 1e-14);
    EXPECT_NEAR(el.map.scales()[1], std::pow(2.75 / 1.5, 2.0 / 3), 1e-14);
    EXPECT_NEAR(el.map.scales()[2], std::pow(2.75 / 5, 0.2), 1e-14);
}

TEST(EulerLagrange, HomogeneousOfDegreeZero) {
    const std::vector<double> g{2, 3, 4};
    const double base = euler_lagrange_rescale(mixed, g, 10.0).lambda_u;
    for (const double c : {0.01, 3.0, 1e4}) {
        const std::vector<double> gc{2 * c, 3 * c, 4 * c};
        EXPECT_NEAR(euler_lagrange_rescale(mixed, gc, 10.0 * c).lambda_u, base, 1e-13 * base);
    }
    EXPECT_THROW((void)euler_lagrange_rescale(mixed, g, 0.0), ValidationError);
}

TEST(ApplyMap, IdentityAndComposition) {
    const auto u = isotropic_extremal(3, 2, 1.0, 1.0);
    const auto id = apply_map(DiagonalMap::identity(3), u);
    const DiagonalMap m1({0.5, 2.0, 3.0}, 1.5);
    const DiagonalMap m2({1.25, 0.75, 0.1}, 0.2);
    const auto nested = apply_map(m1, apply_map(m2, u));
    const auto composed = apply_map(compose(m1, m2), u);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> coord(-20, 20);
    for (int k = 0; k < 1000; ++k) {
        const std::vector<double> x{coord(rng), coord(rng), coord(rng)};
        EXPECT_EQ(id(x), u(x));
        EXPECT_NEAR(nested(x), composed(x), 1e-15 * std::abs(composed(x)) + 1e-300);
    }
}

TEST(ApplyMap, ScalingPreservesCriticalNorm) {
    // int |u_{1,1}|^6 over R^3 is pi^2/4.
    const auto u = isotropic_extremal(3, 2, 1.0, 1.0);
    const double exact = std::pow(boost::math::constants::pi<double>(), 2) / 4;
    for (const double lambda : {0.5, 2.0}) {
        const auto ul = apply_map(scale_family(cube2, lambda), u);
        const double mass = radial_integral([&](double r) {
            const std::vector<double> x{r, 0, 0};
            return std::pow(ul(x), 6);
        });
        EXPECT_NEAR(mass, exact, 1e-3 * exact) << "lambda " << lambda;

        // |grad u_lambda| along the ray, by central differences.
        const double grad = radial_integral([&](double r) {
            const double h = 1e-5 * std::max(r, 1e-2);
            const std::vector<double> a{r + h, 0, 0}, b{std::abs(r - h), 0, 0};
            const double d = (ul(a) - ul(b)) / (r + h - std::abs(r - h));
            return d * d;
        });
        const double grad0 = radial_integral([&](double r) {
            const double d = -r * std::pow(1 + r * r, -1.5);
            return d * d;
        });
        EXPECT_NEAR(grad, grad0, 1e-3 * grad0) << "lambda " << lambda;
    }
}
