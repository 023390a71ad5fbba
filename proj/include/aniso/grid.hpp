#pragma once

// Tensor grids over boxes [-L_1, L_1] x ... x [-L_n, L_n], scalar fields on
// them, forward differences, power integrals and the Sobolev quotient.

#include "aniso/error.hpp"
#include "aniso/exponents.hpp"
#include "aniso/reduce.hpp"
#include "aniso/scaling.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace aniso {

class TensorGrid {
public:
    static constexpr std::size_t max_points = std::size_t{1} << 28;

    TensorGrid(std::vector<double> extents, std::vector<std::size_t> counts)
        : extents_(std::move(extents)), counts_(std::move(counts)) {
        require(!counts_.empty(), "grid needs at least one axis");
        require(extents_.size() == counts_.size(), "grid extents and counts differ in length");
        std::size_t total = 1;
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            const auto axis = std::to_string(i + 1);
            require(counts_[i] >= 3 && counts_[i] % 2 == 1,
                    "grid count on axis " + axis + " must be odd and at least 3");
            require(std::isfinite(extents_[i]) && extents_[i] > 0,
                    "grid extent on axis " + axis + " must be positive");
            require(total <= max_points / counts_[i], "grid exceeds 2^28 points");
            total *= counts_[i];
        }
        size_ = total;
        strides_.assign(counts_.size(), 1);
        for (std::size_t i = counts_.size() - 1; i > 0; --i) strides_[i - 1] = strides_[i] * counts_[i];
        spacing_.resize(counts_.size());
        cell_volume_ = 1;
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            spacing_[i] = 2 * extents_[i] / static_cast<double>(counts_[i] - 1);
            cell_volume_ *= spacing_[i];
        }
    }

    /// Same extent L and count m on each of n axes.
    static TensorGrid cube(std::size_t n, double extent, std::size_t count) {
        return {std::vector<double>(n, extent), std::vector<std::size_t>(n, count)};
    }

    [[nodiscard]] std::size_t n() const { return counts_.size(); }
    [[nodiscard]] std::size_t size() const { return size_; }
    [[nodiscard]] const std::vector<double>& extents() const { return extents_; }
    [[nodiscard]] const std::vector<std::size_t>& counts() const { return counts_; }
    [[nodiscard]] const std::vector<std::size_t>& strides() const { return strides_; }
    [[nodiscard]] double spacing(std::size_t axis) const { return spacing_.at(axis); }
    [[nodiscard]] double cell_volume() const { return cell_volume_; }

    /// Position of node k on an axis; symmetric about 0 by construction.
    [[nodiscard]] double coordinate(std::size_t axis, std::size_t k) const {
        const double centre = static_cast<double>(counts_[axis] - 1) / 2;
        return (static_cast<double>(k) - centre) * spacing_[axis];
    }

    [[nodiscard]] std::size_t axis_index(std::size_t flat, std::size_t axis) const {
        return (flat / strides_[axis]) % counts_[axis];
    }

    [[nodiscard]] std::size_t centre_index() const {
        std::size_t flat = 0;
        for (std::size_t i = 0; i < n(); ++i) flat += (counts_[i] - 1) / 2 * strides_[i];
        return flat;
    }

    /// Volume of the node's cell clipped to the box: halved once per face the node lies on.
    [[nodiscard]] double node_weight(std::size_t flat) const {
        double w = cell_volume_;
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            const auto k = (flat / strides_[i]) % counts_[i];
            if (k == 0 || k + 1 == counts_[i]) w *= 0.5;
        }
        return w;
    }

    void point(std::size_t flat, std::vector<double>& x) const {
        x.resize(n());
        for (std::size_t i = 0; i < n(); ++i) x[i] = coordinate(i, axis_index(flat, i));
    }

    bool operator==(const TensorGrid& o) const {
        return counts_ == o.counts_ && extents_ == o.extents_;
    }

private:
    std::vector<double> extents_;
    std::vector<std::size_t> counts_;
    std::vector<std::size_t> strides_;
    std::vector<double> spacing_;
    double cell_volume_ = 1;
    std::size_t size_ = 0;
};

class ScalarField {
public:
    ScalarField(TensorGrid grid, std::vector<double> values)
        : grid_(std::move(grid)), values_(std::move(values)) {
        require(values_.size() == grid_.size(), "field has " + std::to_string(values_.size()) +
                                                    " values, grid needs " +
                                                    std::to_string(grid_.size()));
        for (const double v : values_) require(std::isfinite(v), "field contains non-finite values");
    }

    static ScalarField zeros(const TensorGrid& grid) {
        return {grid, std::vector<double>(grid.size(), 0.0)};
    }

    [[nodiscard]] const TensorGrid& grid() const { return grid_; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }
    [[nodiscard]] std::vector<double>& values() { return values_; }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }

private:
    TensorGrid grid_;
    std::vector<double> values_;
};

[[nodiscard]] inline ScalarField sample(const TensorGrid& grid, const Evaluator& u) {
    std::vector<double> values(grid.size());
    std::vector<double> x;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        grid.point(j, x);
        values[j] = u(x);
        if (!std::isfinite(values[j])) {
            std::ostringstream msg;
            msg << "non-finite sample at node (";
            for (std::size_t i = 0; i < x.size(); ++i) msg << (i ? ", " : "") << x[i];
            msg << ")";
            throw NumericalError(msg.str());
        }
    }
    return {grid, std::move(values)};
}

/// (u[k + e_axis] - u[k]) / h, with u taken as 0 beyond the upper face.
[[nodiscard]] inline std::vector<double> forward_difference(const TensorGrid& grid,
                                                            const std::vector<double>& u,
                                                            std::size_t axis) {
    require(axis < grid.n(), "axis " + std::to_string(axis + 1) + " out of range");
    const std::size_t stride = grid.strides()[axis];
    const std::size_t last = grid.counts()[axis] - 1;
    const double inv_h = 1.0 / grid.spacing(axis);
    std::vector<double> d(u.size());
    parallel_blocks(u.size(), detail::reduce_block, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            const double next = grid.axis_index(j, axis) == last ? 0.0 : u[j + stride];
            d[j] = (next - u[j]) * inv_h;
        }
    });
    return d;
}

[[nodiscard]] inline ScalarField partial_diff(const ScalarField& f, std::size_t axis) {
    return {f.grid(), forward_difference(f.grid(), f.values(), axis)};
}

namespace detail {

// |v|^e with cheap paths for small integer exponents.
inline double abs_pow(double v, double e) {
    const double a = std::abs(v);
    if (e == 2.0) return a * a;
    if (e == 1.0) return a;
    if (e == std::floor(e) && e > 0 && e <= 16) {
        double r = 1;
        for (int k = 0; k < static_cast<int>(e); ++k) r *= a;
        return r;
    }
    return std::pow(a, e);
}

}  // namespace detail

/// Rectangle rule over node values, each node weighted by its clipped cell.
[[nodiscard]] inline double integrate_pow(const TensorGrid& grid, const std::vector<double>& v,
                                          double e) {
    require(std::isfinite(e) && e > 0, "integration exponent must be positive");
    return reduce_sum(v.size(), [&](std::size_t j) { return detail::abs_pow(v[j], e) * grid.node_weight(j); });
}

[[nodiscard]] inline double integrate_pow(const ScalarField& f, double e) {
    return integrate_pow(f.grid(), f.values(), e);
}

/// Sum of |d|^e times the cell volume, for per-cell arrays such as forward differences.
[[nodiscard]] inline double integrate_cells_pow(const TensorGrid& grid, const std::vector<double>& d,
                                                double e) {
    require(std::isfinite(e) && e > 0, "integration exponent must be positive");
    return reduce_sum(d.size(), [&](std::size_t j) { return detail::abs_pow(d[j], e); }) *
           grid.cell_volume();
}

/// G_i = int |d_i u|^{p_i} for each axis.
[[nodiscard]] inline std::vector<double> gradient_integrals(const ScalarField& f,
                                                            const ExponentVector& ev) {
    require(f.grid().n() == ev.n(), "field dimension does not match the exponent vector");
    const auto pd = ev.p_double();
    std::vector<double> g(ev.n());
    for (std::size_t i = 0; i < ev.n(); ++i) {
        g[i] = integrate_cells_pow(f.grid(), forward_difference(f.grid(), f.values(), i), pd[i]);
    }
    return g;
}

/// (sum_i G_i)^{p*/p} / int |u|^{p*}.
[[nodiscard]] inline double sobolev_quotient(const ScalarField& f, const ExponentVector& ev) {
    const auto de = derive(ev);
    const double p_crit = to_double(de.p_critical);
    const double mass = integrate_pow(f, p_crit);
    require(mass > 0, "Sobolev quotient of the zero field is undefined");
    double total = 0;
    for (const double g : gradient_integrals(f, ev)) total += g;
    return std::pow(total, to_double(de.p_critical / de.p_harmonic)) / mass;
}

struct EnergyMass {
    double energy = 0;  // sum_i (1/p_i) G_i
    double mass = 0;    // int |u|^{p*}
};

[[nodiscard]] inline EnergyMass constrained_energy(const ScalarField& f, const ExponentVector& ev) {
    const auto pd = ev.p_double();
    const auto g = gradient_integrals(f, ev);
    EnergyMass em;
    for (std::size_t i = 0; i < g.size(); ++i) em.energy += g[i] / pd[i];
    em.mass = integrate_pow(f, to_double(derive(ev).p_critical));
    return em;
}

// Binary container: uint64 n, uint64 counts[n], float64 extents[n], float64
// values[prod counts], all little-endian.
namespace detail {

template <class T>
void put_le(std::ostream& out, T value) {
    static_assert(sizeof(T) == 8);
    std::uint64_t bits = 0;
    std::memcpy(&bits, &value, 8);
    unsigned char bytes[8];
    for (int k = 0; k < 8; ++k) bytes[k] = static_cast<unsigned char>(bits >> (8 * k));
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

template <class T>
T get_le(std::istream& in, const std::string& what) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    require(in.gcount() == 8, "truncated field file while reading " + what);
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= std::uint64_t{bytes[k]} << (8 * k);
    T value;
    std::memcpy(&value, &bits, 8);
    return value;
}

}  // namespace detail

inline void write_field(std::ostream& out, const ScalarField& f) {
    const auto& g = f.grid();
    detail::put_le<std::uint64_t>(out, g.n());
    for (const auto m : g.counts()) detail::put_le<std::uint64_t>(out, m);
    for (const auto L : g.extents()) detail::put_le<double>(out, L);
    for (const double v : f.values()) detail::put_le<double>(out, v);
}

inline void write_field(const std::string& path, const ScalarField& f) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot open '" + path + "' for writing");
    write_field(out, f);
    require(static_cast<bool>(out), "failed writing '" + path + "'");
}

[[nodiscard]] inline ScalarField read_field(std::istream& in) {
    const auto n = detail::get_le<std::uint64_t>(in, "dimension");
    require(n >= 1 && n <= 64, "implausible field dimension " + std::to_string(n));
    std::vector<std::size_t> counts(n);
    std::vector<double> extents(n);
    for (auto& m : counts) m = detail::get_le<std::uint64_t>(in, "counts");
    for (auto& L : extents) L = detail::get_le<double>(in, "extents");
    TensorGrid grid(std::move(extents), std::move(counts));
    std::vector<double> values(grid.size());
    for (auto& v : values) v = detail::get_le<double>(in, "values");
    return {std::move(grid), std::move(values)};
}

[[nodiscard]] inline ScalarField read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open field file '" + path + "'");
    return read_field(in);
}

/// CSV of the line through the grid centre along an axis: "x,value".
inline void write_axis_slice(std::ostream& out, const ScalarField& f, std::size_t axis) {
    const auto& g = f.grid();
    require(axis < g.n(), "axis " + std::to_string(axis + 1) + " out of range");
    const std::size_t base = g.centre_index() - (g.counts()[axis] - 1) / 2 * g.strides()[axis];
    out << "x,value\n";
    out.precision(17);
    for (std::size_t k = 0; k < g.counts()[axis]; ++k) {
        out << g.coordinate(axis, k) << ',' << f[base + k * g.strides()[axis]] << '\n';
    }
}

}  // namespace aniso
