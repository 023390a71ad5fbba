#pragma once

// JSON encodings of inputs and results. Keys keep insertion order so that
// identical inputs give byte-identical documents. Index sets are 1-based.

#include "aniso/decay.hpp"
#include "aniso/error.hpp"
#include "aniso/exponents.hpp"
#include "aniso/moser.hpp"
#include "aniso/scaling.hpp"
#include "aniso/solver.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace aniso {

using Json = nlohmann::ordered_json;

inline constexpr int schema_version = 1;

[[nodiscard]] inline Json rational_json(const Rational& r) {
    return Json{{"exact", to_string(r)}, {"decimal", to_double(r)}};
}

[[nodiscard]] inline Json rational_list_json(const std::vector<Rational>& v) {
    Json out = Json::array();
    for (const auto& r : v) out.push_back(to_string(r));
    return out;
}

[[nodiscard]] inline Json index_json(const IndexSet& s) {
    Json out = Json::array();
    for (const auto i : s) out.push_back(i + 1);
    return out;
}

/// Rational from a JSON string ("3/2", "0.1") or number (integers exact, others by decimal text).
[[nodiscard]] inline Rational rational_from_json(const Json& j, const std::string& what) {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<long long>());
    if (j.is_number_float()) return parse_rational(j.dump());
    throw ValidationError(what + " must be a rational string or a number");
}

/// {"n":3,"p":["3/2","3/2","5"]}; "n" is optional and checked when present.
[[nodiscard]] inline ExponentVector exponent_vector_from_json(const Json& j) {
    require(j.is_object() && j.contains("p"), "exponent vector needs a \"p\" entry");
    std::vector<Rational> p;
    const auto& jp = j.at("p");
    if (jp.is_string()) {
        p = parse_rational_list(jp.get<std::string>());
    } else {
        require(jp.is_array(), "\"p\" must be an array or a comma-separated string");
        for (const auto& e : jp) p.push_back(rational_from_json(e, "p_i"));
    }
    if (j.contains("n")) {
        require(j.at("n").is_number_integer() && j.at("n").get<long long>() == static_cast<long long>(p.size()),
                "\"n\" does not match the length of \"p\"");
    }
    return ExponentVector::make(std::move(p));
}

[[nodiscard]] inline Json to_json(const ExponentVector& ev) {
    return Json{{"n", ev.n()}, {"p", rational_list_json(ev.p())}};
}

[[nodiscard]] inline Json to_json(const DerivedExponents& de) {
    Json j;
    j["n"] = de.n;
    j["p_harmonic"] = rational_json(de.p_harmonic);
    j["p_critical"] = rational_json(de.p_critical);
    j["p_serrin"] = rational_json(de.p_serrin);
    j["p_max"] = rational_json(de.p_max);
    j["p_min"] = rational_json(de.p_min);
    j["regime"] = to_string(de.regime);
    if (de.theta) j["theta"] = index_json(*de.theta);
    if (de.p_bar0) j["p_bar0"] = rational_json(*de.p_bar0);
    if (de.q0) {
        const auto& t = *de.q0;
        Json q;
        q["decimal"] = t.value;
        q["exact"] = t.exact ? Json(to_string(*t.exact)) : Json(nullptr);
        q["raw_root"] = t.raw_root ? Json(*t.raw_root) : Json(nullptr);
        q["raw_root_exact"] = t.raw_root_exact ? Json(to_string(*t.raw_root_exact)) : Json(nullptr);
        q["clamped"] = t.clamped;
        q["phi"] = Json{{"a", to_string(t.phi_a)}, {"b", to_string(t.phi_b)}, {"c", to_string(t.phi_c)}};
        j["q0"] = q;
        j["i0"] = index_json(t.i0);
        j["i0_complement"] = index_json(t.i0_complement);
    }
    return j;
}

[[nodiscard]] inline Json to_json(const DiagonalMap& m) {
    return Json{{"amplitude", m.amplitude()}, {"scales", m.scales()}};
}

[[nodiscard]] inline Json to_json(const IterationTrace& tr) {
    Json j;
    j["gamma0"] = rational_json(tr.gamma0);
    j["eps"] = rational_json(tr.eps);
    j["p0"] = rational_json(tr.stop.p0);
    j["p_eps"] = rational_json(tr.stop.p_eps);
    j["threshold"] = rational_json(tr.stop.threshold);
    j["index_universe"] = index_json(tr.stop.universe);
    j["kminus"] = tr.kminus;
    j["kplus"] = tr.kplus;
    j["kmax"] = tr.kmax;
    Json phi = Json::object();
    Json counts = Json::object();
    for (const auto& [k, entries] : tr.phi) {
        Json list = Json::array();
        for (const auto& e : entries) {
            list.push_back(Json{{"path", index_json(e.path)}, {"gamma", rational_json(e.gamma)}});
        }
        phi[std::to_string(k)] = list;
        counts[std::to_string(k)] = entries.size();
    }
    j["phi_counts"] = counts;
    j["phi"] = phi;
    j["unterminated_paths"] = tr.unterminated;
    Json ladder = Json::array();
    for (const auto& v : tr.ladder) ladder.push_back(rational_json(v));
    j["ladder"] = ladder;
    j["log"] = tr.log;
    return j;
}

[[nodiscard]] inline Json to_json(const DecayFitReport& r) {
    Json j;
    j["axis"] = r.axis + 1;
    j["window"] = Json::array({r.r_lo, r.r_hi});
    j["samples"] = r.ray.size();
    j["vanishing"] = r.vanishing;
    j["fitted_slope"] = r.vanishing ? Json(nullptr) : Json(r.fitted_slope);
    j["slope_stderr"] = r.vanishing ? Json(nullptr) : Json(r.slope_stderr);
    j["predicted_slope"] = r.predicted_slope ? Json(*r.predicted_slope) : Json(nullptr);
    j["fitted_c"] = r.fitted_c ? Json(*r.fitted_c) : Json(nullptr);
    j["tolerance"] = r.tolerance;
    j["pass"] = r.pass;
    return j;
}

[[nodiscard]] inline Json to_json(const SupportReport& r) {
    Json j;
    j["threshold"] = r.threshold;
    j["extents"] = r.extents;
    j["vanishing_axes"] = Json::array();
    for (std::size_t i = 0; i < r.vanishing.size(); ++i) {
        if (r.vanishing[i]) j["vanishing_axes"].push_back(i + 1);
    }
    j["r0_estimate"] = r.r0_estimate;
    j["nodes_above"] = r.nodes_above;
    return j;
}

[[nodiscard]] inline Json to_json(const TensorGrid& g) {
    return Json{{"extents", g.extents()}, {"counts", g.counts()}};
}

[[nodiscard]] inline Json to_json(const SolverReport& r) {
    Json j;
    j["energy"] = r.energy;
    j["mass"] = r.mass;
    j["init_energy"] = r.init_energy;
    j["lambda_u"] = r.lambda_u;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["residual"] = r.residual;
    Json stages = Json::array();
    for (const auto& s : r.stages) {
        stages.push_back(Json{{"eps_reg", s.eps},
                              {"iterations", s.iterations},
                              {"energy", s.energy},
                              {"converged", s.converged},
                              {"stagnated", s.stagnated}});
    }
    j["stages"] = stages;
    return j;
}

}  // namespace aniso
