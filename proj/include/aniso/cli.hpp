#pragma once

// Command-line front end. Every command prints one JSON document
//   {"schema_version":1,"command":...,"config":{...},"result":{...}}
// on stdout. Failures print {"schema_version":1,"error":{...}} on stderr and
// exit with 1 (invalid input) or 2 (numerical failure).

#include "aniso/closed_forms.hpp"
#include "aniso/decay.hpp"
#include "aniso/error.hpp"
#include "aniso/exponents.hpp"
#include "aniso/grid.hpp"
#include "aniso/json_io.hpp"
#include "aniso/moser.hpp"
#include "aniso/reduce.hpp"
#include "aniso/scaling.hpp"
#include "aniso/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace aniso::cli {

/// Malformed JSON input, located by line and column.
class JsonSyntaxError : public ValidationError {
public:
    JsonSyntaxError(const std::string& what, std::size_t line, std::size_t column)
        : ValidationError(what), line(line), column(column) {}
    std::size_t line;
    std::size_t column;
};

namespace detail {

inline IndexSet parse_index_list(const std::string& text, std::size_t n, const std::string& what) {
    IndexSet out;
    for (const auto& r : parse_rational_list(text)) {
        require(boost::multiprecision::denominator(r) == 1, what + " entries must be integers");
        require(r >= 1 && r <= static_cast<long>(n),
                what + " entry " + to_string(r) + " outside 1.." + std::to_string(n));
        out.push_back(static_cast<std::size_t>(r.convert_to<long>() - 1));
    }
    std::sort(out.begin(), out.end());
    require(std::adjacent_find(out.begin(), out.end()) == out.end(), what + " has repeated entries");
    return out;
}

inline std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& r : parse_rational_list(text)) out.push_back(to_double(r));
    return out;
}

inline Json parse_json_text(const std::string& text, const std::string& source) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        std::size_t line = 1, column = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t k = 0; k < stop; ++k) {
            if (text[k] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw JsonSyntaxError("malformed JSON in '" + source + "' at line " + std::to_string(line) +
                                  ", column " + std::to_string(column),
                              line, column);
    }
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::filesystem::path prepare_out(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    require(!ec && std::filesystem::is_directory(dir), "output directory '" + dir + "' is not writable");
    return dir;
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

// Solver config: {"p", "grid":{"extents","counts"}, "eps_schedule", "step0", "tol",
// "max_iters", "seed", "init_noise", "lambda_growth", "init_field"}.
inline SolverConfig solver_config_from_json(const Json& j, Json& resolved) {
    require(j.is_object(), "solver config must be a JSON object");
    static const std::vector<std::string> known{"n", "p", "grid", "eps_schedule", "step0", "tol",
                                                "max_iters", "seed", "init_noise", "lambda_growth",
                                                "init_field"};
    for (const auto& [key, value] : j.items()) {
        require(std::find(known.begin(), known.end(), key) != known.end(),
                "unknown solver config key \"" + key + "\"");
    }
    const auto ev = exponent_vector_from_json(j);
    require(j.contains("grid") && j.at("grid").is_object(), "solver config needs a \"grid\" object");
    const auto& jg = j.at("grid");
    require(jg.contains("extents") && jg.contains("counts"), "grid needs \"extents\" and \"counts\"");
    std::vector<double> extents;
    std::vector<std::size_t> counts;
    try {
        extents = jg.at("extents").is_array() ? jg.at("extents").get<std::vector<double>>()
                                              : std::vector<double>(ev.n(), jg.at("extents").get<double>());
        counts = jg.at("counts").is_array()
                     ? jg.at("counts").get<std::vector<std::size_t>>()
                     : std::vector<std::size_t>(ev.n(), jg.at("counts").get<std::size_t>());
    } catch (const Json::exception&) {
        throw ValidationError("grid extents must be numbers and counts positive integers");
    }
    SolverConfig cfg(ev, TensorGrid(extents, counts));
    try {
        cfg.lambda_growth = get_or(j, "lambda_growth", cfg.lambda_growth);
        cfg.eps_schedule = get_or(j, "eps_schedule", cfg.eps_schedule);
        cfg.step0 = get_or(j, "step0", cfg.step0);
        cfg.tol = get_or(j, "tol", cfg.tol);
        cfg.max_iters = get_or(j, "max_iters", cfg.max_iters);
        cfg.seed = get_or(j, "seed", cfg.seed);
        cfg.init_noise = get_or(j, "init_noise", cfg.init_noise);
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("bad solver config value: ") + e.what());
    }
    std::string init_path;
    if (j.contains("init_field")) {
        require(j.at("init_field").is_string(), "\"init_field\" must be a path string");
        init_path = j.at("init_field").get<std::string>();
        cfg.init_field = read_field(init_path);
    }
    cfg.validate();

    resolved = to_json(ev);
    resolved["grid"] = to_json(cfg.grid);
    resolved["eps_schedule"] = cfg.eps_schedule;
    resolved["step0"] = cfg.step0;
    resolved["tol"] = cfg.tol;
    resolved["max_iters"] = cfg.max_iters;
    resolved["seed"] = cfg.seed;
    resolved["init_noise"] = cfg.init_noise;
    resolved["lambda_growth"] = cfg.lambda_growth;
    resolved["init_field"] = init_path.empty() ? Json(nullptr) : Json(init_path);
    return cfg;
}

inline void emit(std::ostream& out, const std::string& command, Json config, Json result,
                 const Json& global) {
    config.update(global);
    Json doc;
    doc["schema_version"] = schema_version;
    doc["command"] = command;
    doc["config"] = std::move(config);
    doc["result"] = std::move(result);
    out << doc.dump(2) << '\n';
}

inline void emit_error(std::ostream& err, const std::string& kind, const std::string& message,
                       std::optional<std::pair<std::size_t, std::size_t>> where = std::nullopt) {
    Json e;
    e["kind"] = kind;
    e["message"] = message;
    if (where) {
        e["line"] = where->first;
        e["column"] = where->second;
    }
    err << Json{{"schema_version", schema_version}, {"error", e}}.dump() << '\n';
}

}  // namespace detail

/// Entry point; args exclude the program name.
[[nodiscard]] inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Anisotropic Sobolev exponents, transforms, Moser bookkeeping and extremals", "aniso"};
    app.require_subcommand(1);
    unsigned threads = 0;
    std::string out_dir = ".";
    app.add_option("--threads", threads, "worker thread cap (0 = hardware)");
    app.add_option("--out", out_dir, "directory for written artifacts");

    std::string p_text, theta_text, grads_text, gamma_text, eps_text, i1_text, i2_text, config_path,
        field_path, window_text, i0_text, mass_text, lambda_text, q_text, tol_text;
    std::size_t axis = 0, samples = 32;
    int kmax = 0;
    double threshold = 0;

    auto* exponents = app.add_subcommand("exponents", "derived exponents, Theta, p_bar0, q0, regime");
    exponents->add_option("--p", p_text, "exponent vector, e.g. 3/2,3/2,5")->required();

    auto* transform = app.add_subcommand("transform", "tau_theta, sigma_theta and related maps");
    transform->add_option("--p", p_text, "exponent vector")->required();
    transform->add_option("--theta", theta_text, "theta vector with sum 1/theta_i = n/p")->required();
    transform->add_option("--grad-integrals", grads_text, "G_i = int |d_i u|^{p_i}");
    transform->add_option("--mass", mass_text, "int |u|^{p*} for the Euler-Lagrange rescaling");
    transform->add_option("--lambda", lambda_text, "parameter of the scaling family");

    auto* moser = app.add_subcommand("moser", "Moser iteration exponent trace");
    moser->add_option("--p", p_text, "exponent vector")->required();
    moser->add_option("--gamma", gamma_text, "starting exponent gamma")->required();
    moser->add_option("--eps", eps_text, "eps in (0,1)")->required();
    moser->add_option("--i1", i1_text, "index set I1 (1-based)");
    moser->add_option("--i2", i2_text, "index set I2 (1-based, default all indices)");
    moser->add_option("--kmax", kmax, "enumeration depth (default k+)");

    auto* solve = app.add_subcommand("solve", "minimize the constrained energy on a grid");
    solve->add_option("--config", config_path, "solver config JSON")->required();

    auto* fit = app.add_subcommand("fit", "tail slope of a field along an axis");
    fit->add_option("--field", field_path, "field file")->required();
    fit->add_option("--axis", axis, "axis (1-based)")->required();
    fit->add_option("--window", window_text, "radii lo,hi")->required();
    fit->add_option("--q", q_text, "decay parameter q")->required();
    fit->add_option("--p", p_text, "exponent vector, enables the predicted slope");
    fit->add_option("--samples", samples, "number of log-spaced radii");
    fit->add_option("--tol", tol_text, "slope tolerance (default 0.15)");

    auto* support = app.add_subcommand("support", "support extents of a field");
    support->add_option("--field", field_path, "field file")->required();
    support->add_option("--threshold", threshold, "value threshold")->required();
    support->add_option("--i0", i0_text, "index set for the R0 estimate (1-based)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        detail::emit_error(err, "usage", e.what());
        return 1;
    }

    try {
        set_max_threads(threads);
        Json global{{"threads", threads}, {"out", out_dir}};

        if (exponents->parsed()) {
            const auto ev = ExponentVector::make(parse_rational_list(p_text));
            Json config = to_json(ev);
            detail::emit(out, "exponents", config, to_json(analyze(ev)), global);
            return 0;
        }

        if (transform->parsed()) {
            const auto ev = ExponentVector::make(parse_rational_list(p_text));
            const auto theta_exact = parse_rational_list(theta_text);
            std::optional<ThetaVector> theta;
            try {
                theta = ThetaVector::make(ev, theta_exact);
            } catch (const ValidationError&) {
                theta = ThetaVector::make(ev, to_doubles(theta_exact));
            }
            Json config = to_json(ev);
            config["theta"] = rational_list_json(theta_exact);
            Json result;
            const auto tau = tau_theta(ev, *theta);
            result["tau_theta"] = to_json(tau);
            result["tau_theta_jacobian"] = tau.jacobian();
            if (!grads_text.empty()) {
                const auto g = detail::parse_double_list(grads_text);
                config["grad_integrals"] = g;
                const auto sigma = sigma_theta(ev, *theta, g);
                result["sigma_theta"] = to_json(sigma);
                result["sigma_theta_jacobian"] = sigma.jacobian();
                if (!mass_text.empty()) {
                    const double mass = to_double(parse_rational(mass_text));
                    config["mass"] = mass;
                    const auto el = euler_lagrange_rescale(ev, g, mass);
                    result["euler_lagrange"] = Json{{"lambda_u", el.lambda_u}, {"map", to_json(el.map)}};
                }
            } else {
                require(mass_text.empty(), "--mass needs --grad-integrals");
            }
            if (!lambda_text.empty()) {
                const double lambda = to_double(parse_rational(lambda_text));
                config["lambda"] = lambda;
                result["scale_family"] = to_json(scale_family(ev, lambda));
            }
            detail::emit(out, "transform", config, result, global);
            return 0;
        }

        if (moser->parsed()) {
            const auto ev = ExponentVector::make(parse_rational_list(p_text));
            const Rational gamma = parse_rational(gamma_text);
            const Rational eps = parse_rational(eps_text);
            const IndexSet i1 = i1_text.empty() ? IndexSet{} : detail::parse_index_list(i1_text, ev.n(), "--i1");
            IndexSet i2;
            if (i2_text.empty()) {
                for (std::size_t i = 0; i < ev.n(); ++i) {
                    if (std::find(i1.begin(), i1.end(), i) == i1.end()) i2.push_back(i);
                }
            } else {
                i2 = detail::parse_index_list(i2_text, ev.n(), "--i2");
            }
            const auto trace = enumerate_phi(ev, i1, i2, gamma, eps, kmax);
            Json config = to_json(ev);
            config["gamma"] = to_string(gamma);
            config["eps"] = to_string(eps);
            config["i1"] = index_json(i1);
            config["i2"] = index_json(i2);
            config["kmax"] = kmax;
            Json result = to_json(trace);
            result["violations"] = validate_trace(ev, trace);
            detail::emit(out, "moser", config, result, global);
            return 0;
        }

        if (solve->parsed()) {
            Json resolved;
            const auto cfg = detail::solver_config_from_json(
                detail::parse_json_text(detail::read_text(config_path), config_path), resolved);
            const auto dir = detail::prepare_out(out_dir);
            const auto rep = minimize(cfg);
            const auto el = report_euler_lagrange(rep, cfg.ev);
            write_field((dir / "field.bin").string(), rep.field);
            {
                std::ofstream csv(dir / "slice_axis1.csv");
                write_axis_slice(csv, rep.field, 0);
            }
            Json config = resolved;
            config["source"] = config_path;
            config.update(global);
            Json result = to_json(rep);
            result["euler_lagrange"] = Json{{"lambda_u", el.lambda_u}, {"map", to_json(el.map)}};
            result["artifacts"] = Json{{"field", (dir / "field.bin").string()},
                                       {"slice", (dir / "slice_axis1.csv").string()},
                                       {"report", (dir / "report.json").string()}};
            {
                Json doc{{"schema_version", schema_version}, {"command", "solve"}, {"config", config},
                         {"result", result}};
                std::ofstream rj(dir / "report.json");
                rj << doc.dump(2) << '\n';
            }
            detail::emit(out, "solve", config, result, global);
            return 0;
        }

        if (fit->parsed()) {
            const auto field = read_field(field_path);
            require(axis >= 1 && axis <= field.grid().n(), "--axis outside 1.." + std::to_string(field.grid().n()));
            const auto window = detail::parse_double_list(window_text);
            require(window.size() == 2, "--window needs two radii lo,hi");
            const double q = to_double(parse_rational(q_text));
            const double tol = tol_text.empty() ? 0.15 : to_double(parse_rational(tol_text));
            std::optional<SlopeTarget> target;
            Json config{{"field", field_path}, {"axis", axis}, {"window", window}, {"q", q},
                        {"samples", samples}, {"tolerance", tol}};
            if (!p_text.empty()) {
                const auto ev = ExponentVector::make(parse_rational_list(p_text));
                require(ev.n() == field.grid().n(), "--p length does not match the field dimension");
                config["p"] = rational_list_json(ev.p());
                target = SlopeTarget{q, to_double(ev[axis - 1]), tol};
            }
            const auto rep = fit_tail_slope(field, axis - 1, window[0], window[1], samples, target);
            const auto dir = detail::prepare_out(out_dir);
            const auto csv_path = dir / ("ray_axis" + std::to_string(axis) + ".csv");
            {
                std::ofstream csv(csv_path);
                write_ray_csv(csv, rep);
            }
            Json result = to_json(rep);
            result["ray_csv"] = csv_path.string();
            detail::emit(out, "fit", config, result, global);
            return 0;
        }

        if (support->parsed()) {
            const auto field = read_field(field_path);
            const IndexSet i0 = i0_text.empty() ? IndexSet{}
                                                : detail::parse_index_list(i0_text, field.grid().n(), "--i0");
            Json config{{"field", field_path}, {"threshold", threshold}, {"i0", index_json(i0)}};
            detail::emit(out, "support", config, to_json(detect_support(field, threshold, i0)), global);
            return 0;
        }
        detail::emit_error(err, "usage", "no command given");
        return 1;
    } catch (const JsonSyntaxError& e) {
        detail::emit_error(err, "parse", e.what(), std::make_pair(e.line, e.column));
        return 1;
    } catch (const ValidationError& e) {
        detail::emit_error(err, "validation", e.what());
        return 1;
    } catch (const NumericalError& e) {
        detail::emit_error(err, "numerical", e.what());
        return 2;
    } catch (const std::exception& e) {
        detail::emit_error(err, "io", e.what());
        return 1;
    }
}

}  // namespace aniso::cli
