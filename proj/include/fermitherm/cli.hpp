// cli.hpp — Sweep runner behind the command-line tool: grids, commands, CSV/JSON output

#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fermitherm/errors.hpp"
#include "fermitherm/metrology.hpp"
#include "fermitherm/model.hpp"
#include "fermitherm/multi_probe.hpp"
#include "fermitherm/parallel.hpp"
#include "fermitherm/single_probe.hpp"
#include "fermitherm/version.hpp"

namespace fermitherm::cli {

enum class Command { equilibrium_sweep, transient_fi, fi_rate, tstar_contour, gamma_opt, multi_additivity, verify };
enum class Format { csv, json };

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 1;
inline constexpr int exit_numerical = 2;

inline const std::map<std::string, Command>& command_names() {
    static const std::map<std::string, Command> names{
        {"equilibrium-sweep", Command::equilibrium_sweep}, {"transient-fi", Command::transient_fi},
        {"fi-rate", Command::fi_rate},                     {"tstar-contour", Command::tstar_contour},
        {"gamma-opt", Command::gamma_opt},                 {"multi-additivity", Command::multi_additivity},
        {"verify", Command::verify}};
    return names;
}

inline std::string to_string(Command c) {
    for (const auto& [name, value] : command_names())
        if (value == c) return name;
    return "?";
}

// Either a generated axis (min:max:n[:lin|log]) or an explicit list.
struct AxisSpec {
    double min{0.0}, max{1.0};
    std::size_t points{2};
    bool log{false};
    std::vector<double> explicit_values;

    std::vector<double> values() const {
        if (!explicit_values.empty()) return explicit_values;
        std::vector<double> v(points);
        for (std::size_t i = 0; i < points; ++i) {
            const double s = static_cast<double>(i) / static_cast<double>(points - 1);
            v[i] = log ? std::exp(std::log(min) + s * (std::log(max) - std::log(min))) : min + s * (max - min);
        }
        v.front() = min;
        v.back() = max;
        return v;
    }

    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        if (!explicit_values.empty()) {
            for (std::size_t i = 0; i < explicit_values.size(); ++i) os << (i ? "," : "") << explicit_values[i];
        } else {
            os << min << ':' << max << ':' << points << ':' << (log ? "log" : "lin");
        }
        return os.str();
    }
};

namespace detail {

inline double parse_number(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InvalidParams(what + ": cannot parse number '" + s + "'");
    }
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

} // namespace detail

inline std::vector<double> parse_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    for (const auto& part : detail::split(text, ',')) out.push_back(detail::parse_number(part, what));
    if (out.empty()) throw InvalidParams(what + ": empty list");
    return out;
}

// "min:max:n[:lin|log]" or "v1,v2,...".
inline AxisSpec parse_axis(const std::string& text, const std::string& what) {
    AxisSpec a;
    if (text.find(':') == std::string::npos) {
        a.explicit_values = parse_list(text, what);
        for (std::size_t i = 1; i < a.explicit_values.size(); ++i)
            if (!(a.explicit_values[i] > a.explicit_values[i - 1]))
                throw InvalidParams(what + ": list values must be strictly increasing");
        a.min = a.explicit_values.front();
        a.max = a.explicit_values.back();
        a.points = a.explicit_values.size();
        return a;
    }
    const auto parts = detail::split(text, ':');
    if (parts.size() != 3 && parts.size() != 4) throw InvalidParams(what + ": expected min:max:n[:lin|log]");
    a.min = detail::parse_number(parts[0], what);
    a.max = detail::parse_number(parts[1], what);
    const double n = detail::parse_number(parts[2], what);
    if (n != std::floor(n) || n < 2.0 || n > 1e7) throw InvalidParams(what + ": need an integer number of points >= 2");
    a.points = static_cast<std::size_t>(n);
    if (parts.size() == 4) {
        if (parts[3] == "log") a.log = true;
        else if (parts[3] != "lin") throw InvalidParams(what + ": spacing must be lin or log");
    }
    if (!(a.min < a.max)) throw InvalidParams(what + ": need min < max");
    if (a.log && !(a.min > 0.0)) throw InvalidParams(what + ": log grids need min > 0");
    return a;
}

struct RunConfig {
    Command command{Command::verify};
    double epsilon{1.0};
    double mu{0.0};
    double gamma{1.0};
    double temperature{1.0};
    double p0{0.0};
    std::optional<std::vector<double>> epsilons; // two-probe energies; default (mu, mu + 1)
    std::optional<AxisSpec> t_grid, gamma_grid, T_grid;
    bool steady{false}; // multi-additivity at t -> infinity
    std::string out{"out.csv"};
    Format format{Format::csv};
    QuadConfig quad{};
    std::size_t jobs{0}; // 0 = available parallelism
    std::string config_file;

    void validate() const {
        single_probe_params(epsilon, mu, gamma, temperature, p0).validate();
        quad.validate();
        if (out.empty()) throw InvalidParams("--out must not be empty");
        if (epsilons && epsilons->size() != 2) throw InvalidParams("--epsilons expects exactly two values");
        if (gamma_grid && !(gamma_grid->min > 0.0)) throw InvalidParams("--gamma-grid values must be positive");
        if (T_grid && !(T_grid->min > 0.0)) throw InvalidParams("--T-grid values must be positive");
        if (t_grid && t_grid->min < 0.0) throw InvalidParams("--t-grid must be non-negative");
    }
};

// ---- tables ------------------------------------------------------------------

using Cell = std::variant<double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

namespace detail {

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline nlohmann::ordered_json cell_json(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) {
        if (!std::isfinite(*d)) return detail::format_double(*d);
        return *d;
    }
    return std::get<std::string>(c);
}

} // namespace detail

inline std::string status_of(const std::exception_ptr& e) {
    try {
        std::rethrow_exception(e);
    } catch (const NonConvergence&) {
        return "non_convergence";
    } catch (const SingularDecomposition&) {
        return "singular_decomposition";
    } catch (const DegenerateDistribution&) {
        return "degenerate_distribution";
    } catch (const FlatObjective&) {
        return "flat_objective";
    } catch (const OutOfRange&) {
        return "out_of_range";
    } catch (const NotPSD&) {
        return "not_psd";
    } catch (const std::exception&) {
        return "error";
    }
}

// Everything a command produces: data rows plus flags for the sidecar.
struct RunOutcome {
    Table table;
    std::size_t failed_rows{0};
    std::size_t boundary_optima{0};
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();
};

namespace detail {

inline ModelParams single_params(const RunConfig& c) {
    return single_probe_params(c.epsilon, c.mu, c.gamma, c.temperature, c.p0);
}

inline AxisSpec axis_or(const std::optional<AxisSpec>& a, const std::string& fallback) {
    return a ? *a : parse_axis(fallback, "default grid");
}

inline std::size_t jobs_of(const RunConfig& c) { return c.jobs == 0 ? default_jobs() : c.jobs; }

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

// Evaluates row(i) for every grid cell in parallel; a throwing cell yields a
// row of NaN values with the error in its status column.
inline void fill_rows(RunOutcome& out, std::size_t cells, std::size_t width, std::size_t jobs,
                      const std::function<std::vector<Cell>(std::size_t)>& keys,
                      const std::function<std::vector<Cell>(std::size_t)>& values) {
    struct Result {
        std::vector<Cell> values;
        std::string status;
    };
    auto results = parallel_map(cells, jobs, [&](std::size_t i) {
        Result r;
        try {
            r.values = values(i);
            r.status = "ok";
        } catch (...) {
            r.values.assign(width, Cell{nan});
            r.status = status_of(std::current_exception());
        }
        return r;
    });
    for (std::size_t i = 0; i < cells; ++i) {
        std::vector<Cell> row = keys(i);
        row.insert(row.end(), results[i].values.begin(), results[i].values.end());
        row.emplace_back(results[i].status);
        if (results[i].status != "ok") ++out.failed_rows;
        out.table.rows.push_back(std::move(row));
    }
}

} // namespace detail

// ---- commands ------------------------------------------------------------------

inline RunOutcome equilibrium_sweep(const RunConfig& c) {
    const auto Ts = detail::axis_or(c.T_grid, "1e-3:10:60:log").values();
    const auto gammas = detail::axis_or(c.gamma_grid, "0.1,0.5,1,5").values();
    RunOutcome out;
    out.table.columns = {"T", "gamma", "p1_steady", "noise_to_signal", "markovian_noise_to_signal", "status"};
    const std::size_t nT = Ts.size();
    detail::fill_rows(
        out, gammas.size() * nT, 3, detail::jobs_of(c),
        [&](std::size_t i) { return std::vector<Cell>{Ts[i % nT], gammas[i / nT]}; },
        [&](std::size_t i) {
            ModelParams p = detail::single_params(c);
            p.temperature = Ts[i % nT];
            p.gamma = gammas[i / nT];
            return std::vector<Cell>{p1_steady(p, c.quad), noise_to_signal(p, c.quad), markovian_noise_to_signal(p)};
        });
    return out;
}

inline RunOutcome transient_fi(const RunConfig& c) {
    const auto ts = detail::axis_or(c.t_grid, "0.1:50:100:log").values();
    const auto gammas = detail::axis_or(c.gamma_grid, detail::format_double(c.gamma)).values();
    RunOutcome out;
    out.table.columns = {"gamma", "t", "gamma_t", "p1_exact", "dp1_dT", "fi_exact", "p1_markovian", "fi_markovian", "status"};
    const std::size_t nt = ts.size();
    detail::fill_rows(
        out, gammas.size() * nt, 5, detail::jobs_of(c),
        [&](std::size_t i) {
            return std::vector<Cell>{gammas[i / nt], ts[i % nt], gammas[i / nt] * ts[i % nt]};
        },
        [&](std::size_t i) {
            const ModelParams p = detail::single_params(c).with_gamma(gammas[i / nt]);
            const double t = ts[i % nt];
            const double pe = p1_exact(t, p, c.quad), de = p1_exact_dT(t, p, c.quad);
            const double pm = p1_markovian(t, p);
            return std::vector<Cell>{pe, de, fi_two_outcome(pe, de), pm, fi_two_outcome(pm, p1_markovian_dT(t, p))};
        });
    return out;
}

inline RunOutcome fi_rate(const RunConfig& c) {
    const auto gts = detail::axis_or(c.t_grid, "1e-3:50:100:log").values(); // in units of 1/Gamma
    const auto gammas = detail::axis_or(c.gamma_grid, detail::format_double(c.gamma)).values();
    RunOutcome out;
    out.table.columns = {"gamma", "gamma_t", "t", "fi_rate_exact", "fi_rate_markovian", "status"};
    const std::size_t nt = gts.size();
    detail::fill_rows(
        out, gammas.size() * nt, 2, detail::jobs_of(c),
        [&](std::size_t i) {
            return std::vector<Cell>{gammas[i / nt], gts[i % nt], gts[i % nt] / gammas[i / nt]};
        },
        [&](std::size_t i) {
            const ModelParams p = detail::single_params(c).with_gamma(gammas[i / nt]);
            const double t = gts[i % nt] / p.gamma;
            if (!(t > 0.0)) throw InvalidParams("fi-rate: t must be > 0");
            return std::vector<Cell>{fermitherm::fi_rate(t, fisher_information(t, p, Method::exact, c.quad)),
                                     fermitherm::fi_rate(t, fisher_information(t, p, Method::markovian, c.quad))};
        });
    return out;
}

inline RunOutcome tstar_contour(const RunConfig& c) {
    const auto gammas = detail::axis_or(c.gamma_grid, "0.01:1:8:log").values();
    const auto Ts = detail::axis_or(c.T_grid, "0.05:2:8:log").values();
    RunOutcome out;
    out.table.columns = {"gamma", "T", "t_star", "gamma_t_star", "max_fi_rate", "boundary_flag", "status"};
    const std::size_t nT = Ts.size();
    detail::fill_rows(
        out, gammas.size() * nT, 4, detail::jobs_of(c),
        [&](std::size_t i) { return std::vector<Cell>{gammas[i / nT], Ts[i % nT]}; },
        [&](std::size_t i) {
            ModelParams p = detail::single_params(c).with_gamma(gammas[i / nT]);
            p.temperature = Ts[i % nT];
            const ScalarOptimum o = optimal_measurement_time(p, Method::exact, c.quad);
            return std::vector<Cell>{o.argmax, o.argmax * p.gamma, o.max, o.boundary ? 1.0 : 0.0};
        });
    for (const auto& row : out.table.rows)
        if (const auto* b = std::get_if<double>(&row[5]); b && *b == 1.0) ++out.boundary_optima;
    return out;
}

// Optimal coupling per temperature: steady-state QFI (Gamma*) and the best
// FI rate over t (the maximum of the rate curve).
inline RunOutcome gamma_opt(const RunConfig& c) {
    const auto Ts = detail::axis_or(c.T_grid, "0.1").values();
    const AxisSpec gaxis = detail::axis_or(c.gamma_grid, "0.01:10:64:log");
    RunOutcome out;
    out.table.columns = {"T", "gamma_star_qfi", "qfi_max", "boundary_qfi", "gamma_star_rate", "rate_max", "boundary_rate", "status"};
    OptimizeOptions opt;
    opt.grid_points = std::max<std::size_t>(64, gaxis.points);
    detail::fill_rows(
        out, Ts.size(), 6, detail::jobs_of(c), [&](std::size_t i) { return std::vector<Cell>{Ts[i]}; },
        [&](std::size_t i) {
            ModelParams p = detail::single_params(c);
            p.temperature = Ts[i];
            const ScalarOptimum q = optimize_scalar(
                [&](double g) { return fisher_information_steady(p.with_gamma(g), Method::exact, c.quad); }, gaxis.min,
                gaxis.max, opt);
            const ScalarOptimum r = optimize_scalar(
                [&](double g) { return optimal_measurement_time(p.with_gamma(g), Method::exact, c.quad).max; },
                gaxis.min, gaxis.max, opt);
            return std::vector<Cell>{q.argmax, q.max, q.boundary ? 1.0 : 0.0, r.argmax, r.max, r.boundary ? 1.0 : 0.0};
        });
    for (const auto& row : out.table.rows)
        for (std::size_t col : {3u, 6u})
            if (const auto* b = std::get_if<double>(&row[col]); b && *b == 1.0) ++out.boundary_optima;
    return out;
}

inline ModelParams two_probe_params(const RunConfig& c) {
    ModelParams p;
    p.epsilons = c.epsilons ? *c.epsilons : std::vector<double>{c.mu, c.mu + 1.0};
    p.initial_occupations = {c.p0, c.p0};
    p.mu = c.mu;
    p.gamma = c.gamma;
    p.temperature = c.temperature;
    return p;
}

inline RunOutcome multi_additivity(const RunConfig& c) {
    const auto gammas = detail::axis_or(c.gamma_grid, detail::format_double(c.gamma)).values();
    const auto Ts = detail::axis_or(c.T_grid, detail::format_double(c.temperature)).values();
    const std::vector<double> gts = c.steady ? std::vector<double>{std::numeric_limits<double>::infinity()}
                                             : detail::axis_or(c.t_grid, "0.01:20:60:log").values(); // Gamma t
    const ModelParams base = two_probe_params(c);
    RunOutcome out;
    out.table.columns = {"gamma", "T", "gamma_t", "t", "qfi_common", "qfi_independent", "ratio", "status"};
    const std::size_t nt = gts.size(), nT = Ts.size();
    auto params_of = [&](std::size_t i) {
        ModelParams p = base;
        p.gamma = gammas[i / (nT * nt)];
        p.temperature = Ts[(i / nt) % nT];
        return p;
    };
    auto evaluate = [&](const ModelParams& p, double gt) {
        return c.steady ? qfi_common_vs_independent_steady(p, c.quad)
                        : qfi_common_vs_independent(gt / p.gamma, p, c.quad);
    };
    detail::fill_rows(
        out, gammas.size() * nT * nt, 3, detail::jobs_of(c),
        [&](std::size_t i) {
            const ModelParams p = params_of(i);
            const double gt = gts[i % nt];
            return std::vector<Cell>{p.gamma, p.temperature, gt, gt / p.gamma};
        },
        [&](std::size_t i) {
            const AdditivityResult r = evaluate(params_of(i), gts[i % nt]);
            return std::vector<Cell>{r.qfi_common, r.qfi_independent, r.ratio};
        });

    // How much the ratio depends on where the pair sits relative to mu.
    nlohmann::ordered_json sens = nlohmann::ordered_json::array();
    const ModelParams p = params_of(0);
    for (double shift : {-0.1, 0.0, 0.1}) {
        ModelParams q = p;
        for (double& e : q.epsilons) e += shift;
        nlohmann::ordered_json entry{{"epsilon1", q.epsilons[0]}, {"epsilon2", q.epsilons[1]}};
        try {
            entry["ratio"] = evaluate(q, gts[0]).ratio;
        } catch (...) {
            entry["ratio"] = status_of(std::current_exception());
        }
        sens.push_back(entry);
    }
    out.extra["epsilon1_sensitivity"] = {{"gamma", p.gamma}, {"T", p.temperature}, {"gamma_t", detail::format_double(gts[0])},
                                         {"entries", sens}};
    out.extra["epsilons"] = base.epsilons;
    return out;
}

// Self-checks of the library invariants; every row carries pass/fail.
inline RunOutcome verify(const RunConfig& c) {
    RunOutcome out;
    out.table.columns = {"check", "case", "value", "reference", "deviation", "tolerance", "status"};
    struct Check {
        std::string name, label;
        std::function<std::pair<double, double>()> eval;
        double tol;
        bool relative;
    };
    std::vector<Check> checks;
    const ModelParams base = detail::single_params(c);

    for (int k = 0; k < 100; ++k) {
        const double w = base.mu - 10.0 + 20.0 * k / 99.0;
        checks.push_back({"fdr", "omega=" + detail::format_double(w),
                          [=] { return fdr_check(w, base); }, 1e-12, true});
    }
    QuadConfig tight = c.quad;
    tight.rel_tol = std::min(tight.rel_tol, 1e-11);
    tight.abs_tol = std::min(tight.abs_tol, 1e-13);
    const std::vector<std::array<double, 3>> triples{{1.0, 0.1, 3.0}, {0.5, 1.0, 0.7}, {2.0, 0.3, 5.0}, {0.2, 2.0, 12.0}};
    for (const auto& [g, T, t] : triples) {
        ModelParams p = base;
        p.gamma = g;
        p.temperature = T;
        checks.push_back({"n1_reduction", "gamma=" + detail::format_double(g) + " T=" + detail::format_double(T) +
                                              " t=" + detail::format_double(t),
                          [=] { return std::pair{evolve_correlations(t, p, tight).c(0, 0).real(), p1_exact(t, p, tight)}; },
                          1e-8, false});
        checks.push_back({"dT_vs_finite_difference", "gamma=" + detail::format_double(g) + " T=" + detail::format_double(T) +
                                                         " t=" + detail::format_double(t),
                          [=] {
                              const double h = 1e-4 * T;
                              const double fd = (p1_exact(t, p.with_temperature(T + h), tight) -
                                                 p1_exact(t, p.with_temperature(T - h), tight)) / (2.0 * h);
                              return std::pair{p1_exact_dT(t, p, tight), fd};
                          },
                          1e-4, true});
    }
    for (double t : {0.1, 1.0, 10.0})
        checks.push_back({"markovian_rate_closed_form", "t=" + detail::format_double(t),
                          [=] {
                              const ModelParams p = base.with_gamma(base.gamma);
                              ModelParams q = p;
                              q.initial_occupations = {0.0};
                              return std::pair{markovian_fi_rate_closed_form(t, q),
                                               fermitherm::fi_rate(t, fisher_information(t, q, Method::markovian))};
                          },
                          1e-12, true});

    struct Checked {
        double value{detail::nan}, reference{detail::nan}, deviation{detail::nan};
        std::string status;
    };
    const auto results = parallel_map(checks.size(), detail::jobs_of(c), [&](std::size_t i) {
        Checked r;
        try {
            std::tie(r.value, r.reference) = checks[i].eval();
            r.deviation = std::abs(r.value - r.reference);
            if (checks[i].relative) r.deviation /= std::max(std::abs(r.reference), 1e-300);
            r.status = r.deviation <= checks[i].tol ? "pass" : "fail";
        } catch (...) {
            r.status = status_of(std::current_exception());
        }
        return r;
    });
    for (std::size_t i = 0; i < checks.size(); ++i) {
        const Checked& r = results[i];
        out.table.rows.push_back({checks[i].name, checks[i].label, r.value, r.reference, r.deviation, checks[i].tol, r.status});
        if (r.status != "pass") ++out.failed_rows;
    }
    return out;
}

inline RunOutcome execute(const RunConfig& c) {
    switch (c.command) {
    case Command::equilibrium_sweep: return equilibrium_sweep(c);
    case Command::transient_fi: return transient_fi(c);
    case Command::fi_rate: return fi_rate(c);
    case Command::tstar_contour: return tstar_contour(c);
    case Command::gamma_opt: return gamma_opt(c);
    case Command::multi_additivity: return multi_additivity(c);
    case Command::verify: return verify(c);
    }
    throw InvalidParams("unknown command");
}

// ---- output ----------------------------------------------------------------------

inline nlohmann::ordered_json resolved_config(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["command"] = to_string(c.command);
    j["epsilon"] = c.epsilon;
    j["mu"] = c.mu;
    j["gamma"] = c.gamma;
    j["temperature"] = c.temperature;
    j["p0"] = c.p0;
    if (c.command == Command::multi_additivity) j["epsilons"] = two_probe_params(c).epsilons;
    if (c.t_grid) j["t_grid"] = c.t_grid->describe();
    if (c.gamma_grid) j["gamma_grid"] = c.gamma_grid->describe();
    if (c.T_grid) j["T_grid"] = c.T_grid->describe();
    if (c.command == Command::multi_additivity) j["steady"] = c.steady;
    j["format"] = c.format == Format::csv ? "csv" : "json";
    j["out"] = c.out;
    if (!c.config_file.empty()) j["config_file"] = c.config_file;
    return j;
}

inline nlohmann::ordered_json tolerances(const RunConfig& c) {
    return {{"rel_tol", c.quad.rel_tol}, {"abs_tol", c.quad.abs_tol}, {"max_panels", c.quad.max_panels}};
}

inline std::string render_csv(const RunConfig& c, const Table& t) {
    std::ostringstream os;
    os << "# fermitherm " << version << '\n';
    const auto config = resolved_config(c), tol = tolerances(c);
    for (const auto& [k, v] : config.items()) os << "# " << k << " = " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    for (const auto& [k, v] : tol.items()) os << "# " << k << " = " << v.dump() << '\n';
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            if (const auto* d = std::get_if<double>(&row[i])) os << detail::format_double(*d);
            else os << std::get<std::string>(row[i]);
        }
        os << '\n';
    }
    return os.str();
}

inline std::string render_json(const Table& t) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
        nlohmann::ordered_json rec;
        for (std::size_t i = 0; i < row.size(); ++i) rec[t.columns[i]] = detail::cell_json(row[i]);
        arr.push_back(std::move(rec));
    }
    return arr.dump(2) + "\n";
}

inline std::string metadata_path(const std::string& out) { return out + ".meta.json"; }

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InvalidParams("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw InvalidParams("failed writing '" + path + "'");
}

// Runs one command and writes the data file plus its metadata sidecar.
// Returns the process exit status.
inline int run(const RunConfig& c, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    try {
        c.validate();
        // Fail on an unwritable destination before doing any work.
        write_file(c.out, "");
    } catch (const Error& e) {
        log << "config error: " << e.what() << '\n';
        return exit_config;
    }

    RunOutcome outcome;
    try {
        outcome = execute(c);
    } catch (const InvalidParams& e) {
        log << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        log << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    nlohmann::ordered_json meta;
    meta["version"] = version;
    meta["config"] = resolved_config(c);
    meta["tolerances"] = tolerances(c);
    meta["jobs"] = detail::jobs_of(c);
    meta["rows"] = outcome.table.rows.size();
    meta["failed_rows"] = outcome.failed_rows;
    meta["boundary_optima"] = outcome.boundary_optima;
    meta["wall_time_s"] = wall;
    for (const auto& [k, v] : outcome.extra.items()) meta[k] = v;

    try {
        write_file(c.out, c.format == Format::csv ? render_csv(c, outcome.table) : render_json(outcome.table));
        write_file(metadata_path(c.out), meta.dump(2) + "\n");
    } catch (const Error& e) {
        log << "config error: " << e.what() << '\n';
        return exit_config;
    }
    if (outcome.failed_rows > 0) {
        log << outcome.failed_rows << " of " << outcome.table.rows.size() << " rows failed; see the status column\n";
        return exit_numerical;
    }
    return exit_ok;
}

} // namespace fermitherm::cli
