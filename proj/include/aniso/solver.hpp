#pragma once

// Discrete extremal functions: minimize sum_i (1/p_i) int |d_i u|^{p_i} over
// grid fields with int |u|^{p*} = 1, by projected gradient descent on the
// eps-regularized energy with renormalization after every step.

#include "aniso/closed_forms.hpp"
#include "aniso/error.hpp"
#include "aniso/exponents.hpp"
#include "aniso/grid.hpp"
#include "aniso/reduce.hpp"
#include "aniso/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace aniso {

/// E(u) = sum_i (1/p_i) sum_cells (D_i u^2 + eps^2)^{p_i/2} vol with forward differences D_i.
class RegularizedEnergy {
public:
    RegularizedEnergy(const TensorGrid& grid, const ExponentVector& ev, double eps)
        : grid_(&grid), p_(ev.p_double()), eps2_(eps * eps) {
        require(grid.n() == ev.n(), "grid dimension does not match the exponent vector");
        require(std::isfinite(eps) && eps > 0, "regularization eps must be positive");
    }

    [[nodiscard]] double value(const std::vector<double>& u) const {
        double total = 0;
        for (std::size_t i = 0; i < p_.size(); ++i) {
            const auto d = forward_difference(*grid_, u, i);
            const double half = p_[i] / 2;
            const double s = reduce_sum(d.size(), [&](std::size_t j) {
                const double t = d[j] * d[j] + eps2_;
                return half == 1.0 ? t : std::pow(t, half);
            });
            total += s / p_[i];
        }
        return total * grid_->cell_volume();
    }

    /// Value, and the gradient with respect to every node written to g.
    double value_and_gradient(const std::vector<double>& u, std::vector<double>& g) const {
        const auto& grid = *grid_;
        const double vol = grid.cell_volume();
        g.assign(u.size(), 0.0);
        double total = 0;
        std::vector<double> psi(u.size());
        for (std::size_t i = 0; i < p_.size(); ++i) {
            const auto d = forward_difference(grid, u, i);
            const double half = p_[i] / 2;
            parallel_blocks(d.size(), detail::reduce_block, [&](std::size_t b, std::size_t e) {
                for (std::size_t j = b; j < e; ++j) {
                    const double t = d[j] * d[j] + eps2_;
                    psi[j] = half == 1.0 ? d[j] : d[j] * std::pow(t, half - 1);
                }
            });
            const double s = reduce_sum(d.size(), [&](std::size_t j) {
                const double t = d[j] * d[j] + eps2_;
                return half == 1.0 ? t : std::pow(t, half);
            });
            total += s / p_[i];
            const std::size_t stride = grid.strides()[i];
            const double w = vol / grid.spacing(i);
            parallel_blocks(u.size(), detail::reduce_block, [&](std::size_t b, std::size_t e) {
                for (std::size_t j = b; j < e; ++j) {
                    const double below = grid.axis_index(j, i) == 0 ? 0.0 : psi[j - stride];
                    g[j] += w * (below - psi[j]);
                }
            });
        }
        return total * vol;
    }

private:
    const TensorGrid* grid_;
    std::vector<double> p_;
    double eps2_;
};

struct SolverConfig {
    SolverConfig(ExponentVector e, TensorGrid g) : ev(std::move(e)), grid(std::move(g)) {}

    ExponentVector ev;
    TensorGrid grid;
    double lambda_growth = 1.0;
    std::vector<double> eps_schedule{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
    double step0 = 0.5;  // in units of h_min^2 / cell volume
    double tol = 1e-9;
    int max_iters = 20000;
    std::uint64_t seed = 0;
    double init_noise = 0.0;  // relative multiplicative noise on the initializer
    std::optional<ScalarField> init_field;

    void validate() const {
        require(grid.n() == ev.n(), "grid dimension does not match the exponent vector");
        const auto de = derive(ev);
        require(de.regime != Regime::supercritical,
                "minimization needs p_+ < p* (regime SUPERCRITICAL)");
        require(std::isfinite(lambda_growth) && lambda_growth > 0, "lambda_growth must be positive");
        require(!eps_schedule.empty(), "eps_schedule must not be empty");
        for (std::size_t k = 0; k < eps_schedule.size(); ++k) {
            require(std::isfinite(eps_schedule[k]) && eps_schedule[k] > 0,
                    "eps_schedule entries must be positive");
            require(k == 0 || eps_schedule[k] < eps_schedule[k - 1],
                    "eps_schedule must be strictly decreasing");
        }
        require(std::isfinite(step0) && step0 > 0, "step0 must be positive");
        require(std::isfinite(tol) && tol > 0, "tol must be positive");
        require(max_iters > 0, "max_iters must be positive");
        require(init_noise >= 0 && init_noise < 1, "init_noise must lie in [0,1)");
        if (init_field) require(init_field->grid() == grid, "init_field grid differs from the config grid");
    }
};

struct StageReport {
    double eps = 0;
    int iterations = 0;
    double energy = 0;  // regularized, at stage exit
    bool converged = false;
    bool stagnated = false;
};

struct SolverReport {
    explicit SolverReport(ScalarField f) : field(std::move(f)) {}

    ScalarField field;
    double energy = 0;       // unregularized sum_i (1/p_i) G_i
    double mass = 0;
    double init_energy = 0;  // unregularized, normalized initializer
    double lambda_u = 0;
    int iterations = 0;
    bool converged = false;
    double residual = 0;     // L2 norm of the projected gradient at exit
    std::vector<StageReport> stages;
    std::vector<double> energy_history;  // accepted regularized energies
    std::vector<std::size_t> stage_starts;  // index into energy_history per stage
};

namespace detail {

inline std::vector<unsigned char> interior_mask(const TensorGrid& grid) {
    std::vector<unsigned char> mask(grid.size(), 1);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        for (std::size_t i = 0; i < grid.n(); ++i) {
            const auto k = grid.axis_index(j, i);
            if (k == 0 || k + 1 == grid.counts()[i]) {
                mask[j] = 0;
                break;
            }
        }
    }
    return mask;
}

inline double mass_of(const TensorGrid& grid, const std::vector<double>& u, double p_crit) {
    return integrate_pow(grid, u, p_crit);
}

inline void normalize(const TensorGrid& grid, std::vector<double>& u, double p_crit) {
    const double m = mass_of(grid, u, p_crit);
    if (!(m > 0) || !std::isfinite(m)) throw NumericalError("mass vanished or overflowed during descent");
    const double s = std::pow(m, -1.0 / p_crit);
    for (auto& v : u) v *= s;
}

inline ScalarField initial_field(const SolverConfig& cfg, double p_crit) {
    std::vector<double> u;
    if (cfg.init_field) {
        u = cfg.init_field->values();
    } else {
        const auto de = derive(cfg.ev);
        u = sample(cfg.grid, isotropic_extremal(cfg.ev.n(), de.p_harmonic, 1.0, 1.0)).values();
    }
    if (cfg.init_noise > 0) {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        for (auto& v : u) v *= 1 + cfg.init_noise * unif(rng);
    }
    const auto mask = interior_mask(cfg.grid);
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (!mask[j]) u[j] = 0;
    }
    normalize(cfg.grid, u, p_crit);
    return {cfg.grid, std::move(u)};
}

}  // namespace detail

[[nodiscard]] inline SolverReport minimize(const SolverConfig& cfg) {
    cfg.validate();
    const auto& grid = cfg.grid;
    const auto de = derive(cfg.ev);
    const double p_crit = to_double(de.p_critical);
    const double vol = grid.cell_volume();
    double h_min = grid.spacing(0);
    for (std::size_t i = 1; i < grid.n(); ++i) h_min = std::min(h_min, grid.spacing(i));
    const double step_unit = h_min * h_min / vol;
    const auto mask = detail::interior_mask(grid);

    ScalarField start = detail::initial_field(cfg, p_crit);
    std::vector<double> u = start.values();
    SolverReport rep(start);
    rep.init_energy = constrained_energy(start, cfg.ev).energy;

    std::vector<double> g, gm(u.size()), trial(u.size()), pg(u.size());
    auto masked_dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
        return reduce_sum(a.size(), [&](std::size_t j) { return mask[j] ? a[j] * b[j] : 0.0; });
    };
    // Gradient of the energy projected onto the tangent space of the mass sphere.
    auto projected_gradient = [&](const RegularizedEnergy& energy, const std::vector<double>& x) {
        const double e = energy.value_and_gradient(x, g);
        for (std::size_t j = 0; j < x.size(); ++j) {
            gm[j] = mask[j] ? p_crit * detail::abs_pow(x[j], p_crit - 1) * (x[j] < 0 ? -1 : 1) * vol : 0;
        }
        const double gmm = masked_dot(gm, gm);
        const double coef = gmm > 0 ? masked_dot(g, gm) / gmm : 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) pg[j] = mask[j] ? g[j] - coef * gm[j] : 0.0;
        return e;
    };

    double step = cfg.step0;
    for (const double eps : cfg.eps_schedule) {
        if (rep.iterations >= cfg.max_iters) break;
        const RegularizedEnergy energy(grid, cfg.ev, eps);
        StageReport stage;
        stage.eps = eps;
        rep.stage_starts.push_back(rep.energy_history.size());
        double e_cur = projected_gradient(energy, u);
        if (!std::isfinite(e_cur)) throw NumericalError("non-finite energy at stage start");
        rep.energy_history.push_back(e_cur);
        while (rep.iterations < cfg.max_iters) {
            bool accepted = false;
            double e_new = e_cur;
            double smallest_increase = std::numeric_limits<double>::infinity();
            for (int halving = 0; halving <= 30; ++halving) {
                const double t = step * step_unit;
                for (std::size_t j = 0; j < u.size(); ++j) trial[j] = u[j] - t * pg[j];
                detail::normalize(grid, trial, p_crit);
                e_new = energy.value(trial);
                if (!std::isfinite(e_new)) {
                    step *= 0.5;
                    continue;
                }
                if (e_new <= e_cur) {
                    accepted = true;
                    break;
                }
                smallest_increase = std::min(smallest_increase, e_new - e_cur);
                step *= 0.5;
            }
            ++rep.iterations;
            ++stage.iterations;
            if (!accepted) {
                const double roundoff = 8 * std::numeric_limits<double>::epsilon() * std::abs(e_cur);
                if (smallest_increase <= roundoff) {
                    stage.converged = stage.stagnated = true;
                    break;
                }
                std::ostringstream msg;
                msg << "energy increased after 30 backtracking halvings (eps_reg=" << eps
                    << ", iteration " << rep.iterations << ", energy " << e_cur
                    << ", smallest increase " << smallest_increase << ")";
                throw NumericalError(msg.str());
            }
            std::swap(u, trial);
            const double change = (e_cur - e_new) / std::max(std::abs(e_new), 1e-300);
            e_cur = projected_gradient(energy, u);
            rep.energy_history.push_back(e_cur);
            step *= 1.5;
            if (change < cfg.tol) {
                stage.converged = true;
                break;
            }
        }
        stage.energy = e_cur;
        rep.stages.push_back(stage);
    }

    rep.converged = !rep.stages.empty() && rep.stages.size() == cfg.eps_schedule.size() &&
                    rep.stages.back().converged;
    rep.residual = std::sqrt(masked_dot(pg, pg));
    rep.field = ScalarField(grid, std::move(u));
    const auto em = constrained_energy(rep.field, cfg.ev);
    rep.energy = em.energy;
    rep.mass = em.mass;
    const auto gi = gradient_integrals(rep.field, cfg.ev);
    rep.lambda_u = euler_lagrange_rescale(cfg.ev, gi, em.mass).lambda_u;
    return rep;
}

/// lambda(u) and the rescaling map for a solver output.
[[nodiscard]] inline EulerLagrangeRescale report_euler_lagrange(const SolverReport& rep,
                                                                const ExponentVector& ev) {
    const auto gi = gradient_integrals(rep.field, ev);
    return euler_lagrange_rescale(ev, gi, integrate_pow(rep.field, to_double(derive(ev).p_critical)));
}

}  // namespace aniso
