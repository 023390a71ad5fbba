#pragma once

// Empirical decay analysis: log-log tail slopes along coordinate rays,
// minimal envelope constants, support extents and the tail radius r_kappa,
// plus a least-squares fit of the isotropic profile u_{a,b}.

#include "aniso/closed_forms.hpp"
#include "aniso/error.hpp"
#include "aniso/exponents.hpp"
#include "aniso/grid.hpp"
#include "aniso/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace aniso {

struct RaySample {
    double radius;
    double value;
    double residual;  // log|u| minus the fitted line
};

struct DecayFitReport {
    std::size_t axis = 0;
    double r_lo = 0;
    double r_hi = 0;
    bool vanishing = false;  // a nonpositive value met in the window
    double fitted_slope = std::numeric_limits<double>::quiet_NaN();
    double slope_stderr = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> predicted_slope;
    std::optional<double> fitted_c;  // max of |u|^q (1 + r^{q p_i/(q - p_i)}) along the ray
    double tolerance = 0.05;
    bool pass = false;
    std::vector<RaySample> ray;
};

struct SlopeTarget {
    double q;        // decay parameter
    double p_axis;   // p_i on the fitted axis
    double tolerance = 0.05;
};

/// Implied |u| slope -p_i/(q - p_i).
[[nodiscard]] inline double predicted_slope(double q, double p_axis) {
    require(q > p_axis, "q must exceed p_i for a decay prediction");
    return -p_axis / (q - p_axis);
}

namespace detail {

inline DecayFitReport fit_ray(std::size_t axis, double r_lo, double r_hi, std::size_t samples,
                              const std::function<double(double)>& along,
                              const std::optional<SlopeTarget>& target) {
    require(std::isfinite(r_lo) && std::isfinite(r_hi) && 0 < r_lo && r_lo < r_hi,
            "fit window must satisfy 0 < r_lo < r_hi");
    require(samples >= 8, "slope fit needs at least 8 sample radii");
    DecayFitReport rep;
    rep.axis = axis;
    rep.r_lo = r_lo;
    rep.r_hi = r_hi;
    std::vector<double> lx(samples), ly(samples);
    const double ratio = std::log(r_hi / r_lo);
    for (std::size_t k = 0; k < samples; ++k) {
        const double r = r_lo * std::exp(ratio * static_cast<double>(k) / static_cast<double>(samples - 1));
        const double v = along(r);
        rep.ray.push_back({r, v, 0.0});
        if (!(std::abs(v) > 0)) rep.vanishing = true;
        lx[k] = std::log(r);
        ly[k] = rep.vanishing ? 0.0 : std::log(std::abs(v));
    }
    if (target) {
        rep.tolerance = target->tolerance;
        rep.predicted_slope = predicted_slope(target->q, target->p_axis);
    }
    if (rep.vanishing) return rep;

    const double n = static_cast<double>(samples);
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < samples; ++k) {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
    }
    rep.fitted_slope = sxy / sxx;
    const double intercept = my - rep.fitted_slope * mx;
    double ssr = 0;
    for (std::size_t k = 0; k < samples; ++k) {
        const double res = ly[k] - (intercept + rep.fitted_slope * lx[k]);
        rep.ray[k].residual = res;
        ssr += res * res;
    }
    rep.slope_stderr = std::sqrt(ssr / (n - 2) / sxx);
    if (target) {
        const double e = target->q * target->p_axis / (target->q - target->p_axis);
        double c = 0;
        for (const auto& s : rep.ray) {
            c = std::max(c, std::pow(std::abs(s.value), target->q) * (1 + std::pow(s.radius, e)));
        }
        rep.fitted_c = c;
        rep.pass = std::abs(rep.fitted_slope - *rep.predicted_slope) <= rep.tolerance;
    }
    return rep;
}

// Linear interpolation of a field along the ray t e_axis (other coordinates 0).
inline double field_on_axis(const ScalarField& f, std::size_t axis, double t) {
    const auto& g = f.grid();
    const double h = g.spacing(axis);
    const double centre = static_cast<double>(g.counts()[axis] - 1) / 2;
    const double pos = t / h + centre;
    require(pos >= 0 && pos <= static_cast<double>(g.counts()[axis] - 1),
            "fit window leaves the grid box");
    const auto k = std::min(static_cast<std::size_t>(pos), g.counts()[axis] - 2);
    const double w = pos - static_cast<double>(k);
    const std::size_t base = g.centre_index() - (g.counts()[axis] - 1) / 2 * g.strides()[axis];
    const double a = f[base + k * g.strides()[axis]];
    const double b = f[base + (k + 1) * g.strides()[axis]];
    return (1 - w) * a + w * b;
}

}  // namespace detail

/// Tail slope of an evaluator along the positive axis ray.
[[nodiscard]] inline DecayFitReport fit_tail_slope(const Evaluator& u, std::size_t n, std::size_t axis,
                                                   double r_lo, double r_hi, std::size_t samples = 32,
                                                   std::optional<SlopeTarget> target = std::nullopt) {
    require(axis < n, "axis " + std::to_string(axis + 1) + " out of range");
    std::vector<double> x(n, 0.0);
    return detail::fit_ray(axis, r_lo, r_hi, samples,
                           [&](double r) {
                               x.assign(n, 0.0);
                               x[axis] = r;
                               return u(x);
                           },
                           target);
}

/// Tail slope of a grid field, linearly interpolated along the axis through the centre.
[[nodiscard]] inline DecayFitReport fit_tail_slope(const ScalarField& f, std::size_t axis, double r_lo,
                                                   double r_hi, std::size_t samples = 32,
                                                   std::optional<SlopeTarget> target = std::nullopt) {
    require(axis < f.grid().n(), "axis " + std::to_string(axis + 1) + " out of range");
    require(r_hi <= f.grid().extents()[axis], "fit window leaves the grid box");
    return detail::fit_ray(axis, r_lo, r_hi, samples,
                           [&](double r) { return detail::field_on_axis(f, axis, r); }, target);
}

inline void write_ray_csv(std::ostream& out, const DecayFitReport& rep) {
    out << "radius,value,residual\n";
    out.precision(17);
    for (const auto& s : rep.ray) out << s.radius << ',' << s.value << ',' << s.residual << '\n';
}

struct EnvelopeFit {
    double c = 0;
    std::size_t argmax = 0;
    std::vector<double> point;
    std::size_t nodes = 0;
};

/// max over the sub-box |x_i| <= region_i of
/// (|u|^q + sum_i |d_i u|^{p_i}) (1 + sum_{i in axes} |x_i|^{q p_i/(q - p_i)}).
[[nodiscard]] inline EnvelopeFit fit_envelope_constant(const ScalarField& f, const ExponentVector& ev,
                                                       double q, const IndexSet& axes,
                                                       const std::vector<double>& region) {
    const auto& g = f.grid();
    require(g.n() == ev.n(), "field dimension does not match the exponent vector");
    require(region.size() == g.n(), "region needs one half-width per axis");
    const auto exps = envelope_exponents({ev, q, axes, 1.0});
    const auto pd = ev.p_double();
    std::vector<std::vector<double>> grads;
    for (std::size_t i = 0; i < g.n(); ++i) grads.push_back(forward_difference(g, f.values(), i));

    EnvelopeFit fit;
    std::vector<double> x;
    const double slack = 1e-9;
    for (std::size_t j = 0; j < g.size(); ++j) {
        g.point(j, x);
        bool inside = true;
        for (std::size_t i = 0; i < g.n() && inside; ++i) {
            inside = std::abs(x[i]) <= region[i] * (1 + slack);
        }
        if (!inside) continue;
        ++fit.nodes;
        double lhs = std::pow(std::abs(f[j]), q);
        for (std::size_t i = 0; i < g.n(); ++i) lhs += std::pow(std::abs(grads[i][j]), pd[i]);
        double w = 1;
        for (std::size_t k = 0; k < axes.size(); ++k) w += std::pow(std::abs(x[axes[k]]), exps[k]);
        if (fit.nodes == 1 || lhs * w > fit.c) {
            fit.c = lhs * w;
            fit.argmax = j;
            fit.point = x;
        }
    }
    require(fit.nodes > 0, "envelope region contains no grid nodes");
    return fit;
}

struct SupportReport {
    std::vector<double> extents;        // R_i(u)
    std::vector<bool> vanishing;        // extent below the box half-width
    double threshold = 0;
    double r0_estimate = 0;             // max extent over the supplied index set
    std::size_t nodes_above = 0;
};

[[nodiscard]] inline SupportReport detect_support(const ScalarField& f, double threshold,
                                                  const IndexSet& i0 = {}) {
    require(std::isfinite(threshold) && threshold > 0, "support threshold must be positive");
    const auto& g = f.grid();
    SupportReport rep;
    rep.threshold = threshold;
    rep.extents.assign(g.n(), 0.0);
    std::vector<double> x;
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (!(std::abs(f[j]) > threshold)) continue;
        ++rep.nodes_above;
        g.point(j, x);
        for (std::size_t i = 0; i < g.n(); ++i) rep.extents[i] = std::max(rep.extents[i], std::abs(x[i]));
    }
    for (std::size_t i = 0; i < g.n(); ++i) {
        rep.vanishing.push_back(rep.extents[i] < g.extents()[i] * (1 - 1e-12));
    }
    for (const auto i : i0) {
        require(i < g.n(), "index " + std::to_string(i + 1) + " out of range");
        rep.r0_estimate = std::max(rep.r0_estimate, rep.extents[i]);
    }
    return rep;
}

/// Smallest r in {0} u {d_p(x_j, 0)} with int_{d_p > r} |u|^{p*} < kappa^{p*}.
[[nodiscard]] inline double tail_radius(const ScalarField& f, const ExponentVector& ev, double kappa) {
    require(std::isfinite(kappa) && kappa > 0, "kappa must be positive");
    const auto& g = f.grid();
    require(g.n() == ev.n(), "field dimension does not match the exponent vector");
    const AnisoDistance dist(ev);
    const double p_crit = to_double(derive(ev).p_critical);
    const double budget = std::pow(kappa, p_crit);

    std::vector<double> d(g.size());
    std::vector<double> x;
    for (std::size_t j = 0; j < g.size(); ++j) {
        g.point(j, x);
        d[j] = dist.from_origin(x);
    }
    std::vector<std::size_t> order(g.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return d[a] < d[b]; });

    // tail[k] = mass of nodes order[k..], accumulated from the far end.
    std::vector<double> tail(g.size() + 1, 0.0);
    double comp = 0;
    for (std::size_t k = g.size(); k-- > 0;) {
        const double term = detail::abs_pow(f[order[k]], p_crit) * g.node_weight(order[k]) - comp;
        const double sum = tail[k + 1] + term;
        comp = (sum - tail[k + 1]) - term;
        tail[k] = sum;
    }
    if (tail[0] < budget) return 0.0;

    // mass outside the closed ball of radius d[order[k]] is tail[first index with larger d].
    auto outside = [&](std::size_t k) {
        const double r = d[order[k]];
        const auto it = std::upper_bound(order.begin(), order.end(), r,
                                         [&](double value, std::size_t idx) { return value < d[idx]; });
        return tail[static_cast<std::size_t>(it - order.begin())];
    };
    std::size_t lo = 0, hi = g.size() - 1;  // outside(hi) = 0 < budget
    if (outside(0) < budget) return d[order[0]];
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        (outside(mid) < budget ? hi : lo) = mid;
    }
    return d[order[hi]];
}

struct ProfileFit {
    double a = 1;
    double b = 1;
    double rms = 0;  // residual RMS on the fitted nodes
    int iterations = 0;
};

/// Least-squares fit of u_{a,b} = (a + b sum |x_i|^{p/(p-1)})^{(p-n)/p} to the
/// central plane x_n = 0 of an isotropic field, in log a and log b.
[[nodiscard]] inline ProfileFit fit_isotropic_profile(const ScalarField& f, const Rational& p) {
    const auto& g = f.grid();
    const std::size_t n = g.n();
    require(p > 1 && p < Rational(static_cast<long>(n)), "profile exponent must satisfy 1 < p < n");
    const double conj = to_double(p / (p - 1));
    const double k = to_double((p - Rational(static_cast<long>(n))) / p);
    const std::size_t mid_last = (g.counts()[n - 1] - 1) / 2;

    std::vector<double> s_vals, u_vals;
    std::vector<double> x;
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (g.axis_index(j, n - 1) != mid_last) continue;
        g.point(j, x);
        double s = 0;
        for (const double xi : x) s += std::pow(std::abs(xi), conj);
        s_vals.push_back(s);
        u_vals.push_back(f[j]);
    }
    const double u0 = f[g.centre_index()];
    require(u0 > 0, "profile fit needs a positive centre value");

    double la = std::log(std::pow(u0, 1 / k));
    double lb = la;
    auto residuals = [&](double la_, double lb_, std::vector<double>& r, std::vector<double>* ja,
                         std::vector<double>* jb) {
        const double a = std::exp(la_), b = std::exp(lb_);
        double ss = 0;
        for (std::size_t m = 0; m < s_vals.size(); ++m) {
            const double base = a + b * s_vals[m];
            const double model = std::pow(base, k);
            r[m] = model - u_vals[m];
            ss += r[m] * r[m];
            if (ja) {
                const double dm = k * model / base;
                (*ja)[m] = dm * a;
                (*jb)[m] = dm * b * s_vals[m];
            }
        }
        return ss;
    };
    std::vector<double> r(s_vals.size()), ja(s_vals.size()), jb(s_vals.size()), rt(s_vals.size());
    double mu = 1e-3;
    ProfileFit fit;
    double ss = residuals(la, lb, r, &ja, &jb);
    for (fit.iterations = 0; fit.iterations < 500; ++fit.iterations) {
        double aa = 0, ab = 0, bb = 0, ra = 0, rb = 0;
        for (std::size_t m = 0; m < r.size(); ++m) {
            aa += ja[m] * ja[m];
            ab += ja[m] * jb[m];
            bb += jb[m] * jb[m];
            ra += ja[m] * r[m];
            rb += jb[m] * r[m];
        }
        bool improved = false;
        for (int tries = 0; tries < 40 && !improved; ++tries) {
            const double A = aa * (1 + mu), D = bb * (1 + mu);
            const double det = A * D - ab * ab;
            const double da = -(D * ra - ab * rb) / det;
            const double db = -(A * rb - ab * ra) / det;
            const double trial = residuals(la + da, lb + db, rt, nullptr, nullptr);
            if (std::isfinite(trial) && trial < ss) {
                const bool tiny = std::abs(da) + std::abs(db) < 1e-12;
                la += da;
                lb += db;
                ss = residuals(la, lb, r, &ja, &jb);
                mu = std::max(mu / 3, 1e-12);
                improved = !tiny;
                if (tiny) tries = 40;
            } else {
                mu *= 4;
            }
        }
        if (!improved) break;
    }
    fit.a = std::exp(la);
    fit.b = std::exp(lb);
    fit.rms = std::sqrt(ss / static_cast<double>(r.size()));
    return fit;
}

/// Relative L2 distance between a field and an evaluator over nodes with |x|_2 <= radius.
[[nodiscard]] inline double relative_l2_error(const ScalarField& f, const Evaluator& u, double radius) {
    const auto& g = f.grid();
    std::vector<double> x;
    double num = 0, den = 0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        g.point(j, x);
        double r2 = 0;
        for (const double xi : x) r2 += xi * xi;
        if (r2 > radius * radius * (1 + 1e-12)) continue;
        const double diff = f[j] - u(x);
        num += diff * diff;
        den += f[j] * f[j];
    }
    require(den > 0, "field vanishes on the comparison region");
    return std::sqrt(num / den);
}

}  // namespace aniso
