#pragma once

// Exponent bookkeeping of the Moser iteration, in exact rational arithmetic:
// the gamma recursion, stopping data, the bounds k-/k+, exhaustive
// enumeration of the stopping sets Phi_k, the lambda ladder and the sigma /
// net exponents of the decay argument.

#include "aniso/error.hpp"
#include "aniso/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace aniso {

using Path = std::vector<std::size_t>;

namespace detail {

inline Rational n_over_p(const ExponentVector& ev, const DerivedExponents& de) {
    return Rational(static_cast<long>(ev.n())) / de.p_harmonic;
}

// n/(n-p), the growth factor of the iteration.
inline Rational growth(const ExponentVector& ev, const DerivedExponents& de) {
    const Rational n(static_cast<long>(ev.n()));
    return n / (n - de.p_harmonic);
}

}  // namespace detail

/// ((n-p)/n) gamma + p_i - p.
[[nodiscard]] inline Rational gamma_next(const ExponentVector& ev, const Rational& gamma,
                                         std::size_t i) {
    require(i < ev.n(), "index " + std::to_string(i + 1) + " out of range");
    const auto de = derive(ev);
    const Rational n(static_cast<long>(ev.n()));
    return (n - de.p_harmonic) / n * gamma + ev[i] - de.p_harmonic;
}

/// ((n-p)/n)^k gamma + sum_j ((n-p)/n)^{k-j} (p_{i_j} - p).
[[nodiscard]] inline Rational gamma_closed(const ExponentVector& ev, const Rational& gamma,
                                           const Path& path) {
    const auto de = derive(ev);
    const Rational shrink = 1 / detail::growth(ev, de);
    const int k = static_cast<int>(path.size());
    Rational result = pow_int(shrink, k) * gamma;
    for (int j = 1; j <= k; ++j) {
        const auto i = path[static_cast<std::size_t>(j - 1)];
        require(i < ev.n(), "index " + std::to_string(i + 1) + " out of range");
        result += pow_int(shrink, k - j) * (ev[i] - de.p_harmonic);
    }
    return result;
}

struct StoppingData {
    Rational p0;
    Rational p_eps;
    Rational threshold;  // (n/p)(p_eps - p)
    IndexSet universe;   // I1 u I2, sorted
};

[[nodiscard]] inline StoppingData stopping_data(const ExponentVector& ev, const IndexSet& i1,
                                                const IndexSet& i2, const Rational& eps) {
    require(!i2.empty(), "I2 must be nonempty");
    require(eps > 0 && eps < 1, "eps must lie in (0,1)");
    const auto de = derive(ev);
    StoppingData sd;
    sd.universe = i1;
    sd.universe.insert(sd.universe.end(), i2.begin(), i2.end());
    std::sort(sd.universe.begin(), sd.universe.end());
    require(std::adjacent_find(sd.universe.begin(), sd.universe.end()) == sd.universe.end(),
            "I1 and I2 must be disjoint");
    sd.p0 = de.p_serrin;
    for (const auto i : sd.universe) {
        require(i < ev.n(), "index " + std::to_string(i + 1) + " out of range");
        sd.p0 = detail::max_rational(sd.p0, ev[i]);
    }
    sd.p_eps = (1 + eps) * sd.p0;
    sd.threshold = detail::n_over_p(ev, de) * (sd.p_eps - de.p_harmonic);
    return sd;
}

struct KBounds {
    int kminus = 0;
    int kplus = 0;
    std::vector<std::string> boundary_hits;
};

/// k- = least k >= 1 with gamma < (n/p) r^k (p_eps - p_-),
/// k+ = greatest k >= 1 with (n/p) r^{k-1} eps p0 < gamma, where r = n/(n-p).
[[nodiscard]] inline KBounds k_bounds(const ExponentVector& ev, const Rational& gamma,
                                      const Rational& eps, const Rational& p0) {
    require(eps > 0 && eps < 1, "eps must lie in (0,1)");
    const auto de = derive(ev);
    require(p0 >= de.p_serrin, "p0 must be at least p_*");
    const Rational n_p = detail::n_over_p(ev, de);
    const Rational r = detail::growth(ev, de);
    const Rational p_eps = (1 + eps) * p0;
    const Rational threshold = n_p * (p_eps - de.p_harmonic);
    require(gamma >= threshold, "gamma = " + to_string(gamma) + " is below the stopping threshold " +
                                    to_string(threshold));

    KBounds kb;
    Rational lower = n_p * r * (p_eps - de.p_min);
    int k = 1;
    while (!(gamma < lower)) {
        if (gamma == lower) kb.boundary_hits.push_back("k- boundary equality at k=" + std::to_string(k));
        lower *= r;
        ++k;
    }
    kb.kminus = k;

    Rational upper = n_p * eps * p0;
    k = 1;
    while (upper < gamma) {
        upper *= r;
        ++k;
    }
    if (upper == gamma) kb.boundary_hits.push_back("k+ boundary equality at k=" + std::to_string(k));
    kb.kplus = k - 1;
    return kb;
}

/// lambda_k = (1/4)(1 + 2^{k - kplus - 1}) for k = 0..kplus.
[[nodiscard]] inline std::vector<Rational> lambda_ladder(int kplus) {
    require(kplus >= 0, "kplus must be nonnegative");
    std::vector<Rational> ladder;
    for (int k = 0; k <= kplus; ++k) {
        ladder.push_back(Rational(1, 4) * (1 + pow_int(Rational(2), k - kplus - 1)));
    }
    return ladder;
}

struct PathEntry {
    Path path;
    Rational gamma;
};

struct IterationTrace {
    Rational gamma0;
    Rational eps;
    StoppingData stop;
    std::map<int, std::vector<PathEntry>> phi;  // k -> stopped paths, lexicographic order
    int kminus = 0;
    int kplus = 0;
    int kmax = 0;
    std::uint64_t unterminated = 0;  // paths of length kmax that never stopped
    std::vector<Rational> ladder;
    std::vector<std::string> log;
};

inline constexpr double max_enumeration_nodes = 1e7;

/// Depth-first enumeration of every path over I1 u I2, stopped the first time
/// gamma falls below the threshold. kmax = 0 selects kplus.
[[nodiscard]] inline IterationTrace enumerate_phi(const ExponentVector& ev, const IndexSet& i1,
                                                  const IndexSet& i2, const Rational& gamma,
                                                  const Rational& eps, int kmax = 0) {
    IterationTrace tr;
    tr.gamma0 = gamma;
    tr.eps = eps;
    tr.stop = stopping_data(ev, i1, i2, eps);
    const auto kb = k_bounds(ev, gamma, eps, tr.stop.p0);
    tr.kminus = kb.kminus;
    tr.kplus = kb.kplus;
    tr.log = kb.boundary_hits;
    tr.kmax = kmax == 0 ? kb.kplus : kmax;
    require(tr.kmax >= kb.kplus, "kmax must be at least kplus = " + std::to_string(kb.kplus));

    const double width = static_cast<double>(tr.stop.universe.size());
    const double nodes = std::pow(width, tr.kmax);
    require(nodes <= max_enumeration_nodes,
            "enumeration too large: |I1 u I2|^k = " + std::to_string(static_cast<std::size_t>(width)) +
                "^" + std::to_string(tr.kmax) + " exceeds 1e7 nodes");
    if (gamma == tr.stop.threshold) tr.log.push_back("gamma0 equals the stopping threshold");

    const auto de = derive(ev);
    const Rational n(static_cast<long>(ev.n()));
    const Rational shrink = (n - de.p_harmonic) / n;
    Path path;
    auto dfs = [&](auto&& self, const Rational& g) -> void {
        const int depth = static_cast<int>(path.size());
        if (depth > 0) {
            if (g < tr.stop.threshold) {
                tr.phi[depth].push_back({path, g});
                return;
            }
            if (g == tr.stop.threshold) {
                std::string where;
                for (const auto i : path) where += (where.empty() ? "" : ",") + std::to_string(i + 1);
                tr.log.push_back("path (" + where + ") lands exactly on the threshold");
            }
        }
        if (depth == tr.kmax) {
            ++tr.unterminated;
            return;
        }
        for (const auto i : tr.stop.universe) {
            path.push_back(i);
            self(self, shrink * g + ev[i] - de.p_harmonic);
            path.pop_back();
        }
    };
    dfs(dfs, gamma);
    tr.ladder = lambda_ladder(tr.kplus);
    return tr;
}

/// Violated trace invariants; empty when the trace is consistent.
[[nodiscard]] inline std::vector<std::string> validate_trace(const ExponentVector& ev,
                                                             const IterationTrace& tr) {
    std::vector<std::string> issues;
    for (const auto& [k, entries] : tr.phi) {
        if (!entries.empty() && (k < tr.kminus || k > tr.kplus)) {
            issues.push_back("phi[" + std::to_string(k) + "] nonempty outside [kminus, kplus]");
        }
        for (const auto& e : entries) {
            if (static_cast<int>(e.path.size()) != k) issues.push_back("path length mismatch");
            Path prefix;
            for (std::size_t j = 0; j < e.path.size(); ++j) {
                prefix.push_back(e.path[j]);
                const Rational g = gamma_closed(ev, tr.gamma0, prefix);
                const bool last = j + 1 == e.path.size();
                if (last && !(g < tr.stop.threshold)) issues.push_back("stopped path above threshold");
                if (!last && g < tr.stop.threshold) issues.push_back("path has a stopping prefix");
            }
            if (gamma_closed(ev, tr.gamma0, e.path) != e.gamma) issues.push_back("recorded gamma mismatch");
        }
    }
    for (std::size_t k = 0; k < tr.ladder.size(); ++k) {
        const auto& v = tr.ladder[k];
        if (!(v > Rational(1, 4) && v <= Rational(3, 8))) issues.push_back("ladder value out of range");
        if (k > 0 && !(tr.ladder[k - 1] < v)) issues.push_back("ladder not increasing");
    }
    return issues;
}

/// sigma = (1/(gamma q)) sum_j (n/(n-p))^j (q - p_{i_j}).
[[nodiscard]] inline Rational sigma_exponent(const ExponentVector& ev, const Rational& q,
                                             const Rational& gamma, const Path& path) {
    require(gamma != 0 && q != 0, "sigma needs nonzero gamma and q");
    const Rational r = detail::growth(ev, derive(ev));
    Rational sum = 0;
    Rational weight = 1;
    for (const auto i : path) {
        require(i < ev.n(), "index " + std::to_string(i + 1) + " out of range");
        weight *= r;
        sum += weight * (q - ev[i]);
    }
    return sum / (gamma * q);
}

struct NetExponent {
    Rational tau;
    Rational sigma;
    Rational lhs;  // tau - sigma
    Rational rhs;  // -(1/p_*)(1 - (p_* - 1)/gamma)
};

/// tau - sigma at q = p_*, computed from the definitions and from the closed form.
[[nodiscard]] inline NetExponent net_exponent_identity(const ExponentVector& ev,
                                                       const Rational& gamma, const Path& path) {
    require(gamma > 0, "gamma must be positive");
    const auto de = derive(ev);
    const Rational& ps = de.p_serrin;
    const int k = static_cast<int>(path.size());
    NetExponent out;
    out.tau = (ps - 1 - gamma_closed(ev, gamma, path)) / (ps * gamma) *
              pow_int(detail::growth(ev, de), k);
    out.sigma = sigma_exponent(ev, ps, gamma, path);
    out.lhs = out.tau - out.sigma;
    out.rhs = -(1 / ps) * (1 - (ps - 1) / gamma);
    return out;
}

}  // namespace aniso
