// single_probe.hpp — Exact and Markovian occupation dynamics of one fermionic probe

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fermitherm/errors.hpp"
#include "fermitherm/model.hpp"
#include "fermitherm/parallel.hpp"
#include "fermitherm/quad.hpp"

namespace fermitherm {

enum class Method { exact, markovian, short_time };

inline const char* to_string(Method m) {
    switch (m) {
    case Method::exact: return "exact";
    case Method::markovian: return "markovian";
    case Method::short_time: return "short_time";
    }
    return "?";
}

struct Trajectory {
    std::vector<double> times;
    std::vector<double> p1;
    std::vector<double> dp1_dT;
    Method method{Method::exact};

    void validate() const {
        if (p1.size() != times.size() || dp1_dT.size() != times.size())
            throw InvalidParams("Trajectory: sequences must have equal length");
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (i == 0 ? !(times[0] >= 0.0) : !(times[i] > times[i - 1]))
                throw InvalidParams("Trajectory: times must be non-negative and strictly increasing");
            if (!(p1[i] >= 0.0 && p1[i] <= 1.0)) throw InvalidParams("Trajectory: p1 outside [0, 1]");
        }
    }
};

namespace detail {

inline void require_single_mode(const ModelParams& p, const char* who) {
    p.validate();
    if (p.modes() != 1) throw InvalidParams(std::string(who) + ": expects single-mode parameters");
}

inline double checked(const QuadResult& r, double prefactor, const char* who) {
    if (!r.converged)
        throw NonConvergence(std::string(who) + ": quadrature did not converge", prefactor * r.value,
                             prefactor * r.error);
    return prefactor * r.value;
}

// Keeps a probability inside [0, 1] when the excursion is quadrature noise.
inline double clamp_probability(double p, double slack, const char* who) {
    if (p < 0.0) {
        if (-p > slack) throw OutOfRange(std::string(who) + ": probability below 0 beyond tolerance");
        return 0.0;
    }
    if (p > 1.0) {
        if (p - 1.0 > slack) throw OutOfRange(std::string(who) + ": probability above 1 beyond tolerance");
        return 1.0;
    }
    return p;
}

inline double coupling_prefactor(const ModelParams& p) { return 2.0 * p.gamma / std::numbers::pi; }

} // namespace detail

// p1(t) = e^{-Gamma t} p1(0) + (2 Gamma / pi) * integral f(w) W_t(w - eps) dw
inline double p1_exact(double t, const ModelParams& p, const QuadConfig& cfg = {}) {
    detail::require_single_mode(p, "p1_exact");
    const QuadResult r = integrate_fermi_lorentzian(t, p, cfg, Weight::transient, Numerator::fermi);
    const double pref = detail::coupling_prefactor(p);
    const double value = std::exp(-p.gamma * t) * p.p0() + detail::checked(r, pref, "p1_exact");
    return detail::clamp_probability(value, cfg.abs_tol + pref * r.error, "p1_exact");
}

// Temperature derivative, taken under the integral (only f depends on T).
inline double p1_exact_dT(double t, const ModelParams& p, const QuadConfig& cfg = {}) {
    detail::require_single_mode(p, "p1_exact_dT");
    const QuadResult r = integrate_fermi_lorentzian(t, p, cfg, Weight::transient, Numerator::fermi_dT);
    return detail::checked(r, detail::coupling_prefactor(p), "p1_exact_dT");
}

// Long-time limit, evaluated from its own Lorentzian formula.
inline double p1_steady(const ModelParams& p, const QuadConfig& cfg = {}) {
    detail::require_single_mode(p, "p1_steady");
    const QuadResult r = integrate_fermi_lorentzian(0.0, p, cfg, Weight::steady, Numerator::fermi);
    const double pref = detail::coupling_prefactor(p);
    return detail::clamp_probability(detail::checked(r, pref, "p1_steady"), cfg.abs_tol + pref * r.error,
                                     "p1_steady");
}

inline double p1_steady_dT(const ModelParams& p, const QuadConfig& cfg = {}) {
    detail::require_single_mode(p, "p1_steady_dT");
    const QuadResult r = integrate_fermi_lorentzian(0.0, p, cfg, Weight::steady, Numerator::fermi_dT);
    return detail::checked(r, detail::coupling_prefactor(p), "p1_steady_dT");
}

// Rate-equation solution: relaxation towards f(eps) at rate Gamma.
inline double p1_markovian(double t, const ModelParams& p) {
    detail::require_single_mode(p, "p1_markovian");
    if (!(t >= 0.0)) throw InvalidParams("p1_markovian: t must be >= 0");
    const double decay = std::exp(-p.gamma * t);
    return decay * p.p0() + (-std::expm1(-p.gamma * t)) * fermi(p.epsilon(), p);
}

inline double p1_markovian_dT(double t, const ModelParams& p) {
    detail::require_single_mode(p, "p1_markovian_dT");
    if (!(t >= 0.0)) throw InvalidParams("p1_markovian_dT: t must be >= 0");
    return (-std::expm1(-p.gamma * t)) * fermi_dT(p.epsilon(), p);
}

inline double p1_markovian_steady(const ModelParams& p) { return fermi(p.epsilon(), p); }
inline double p1_markovian_steady_dT(const ModelParams& p) { return fermi_dT(p.epsilon(), p); }

// Second-order short-time expansion p1 ~ n0 + curvature * t^2 with
//   curvature = (Gamma / 2 pi) * integral over [mu - W, mu + W] of (f - n0).
// For a flat band the integral only has a W -> inf limit when n0 = 1/2;
// `converged` reports whether doubling W left it unchanged.
struct ShortTimeExpansion {
    double n0{0.0};
    double curvature{0.0};
    double window{0.0};
    bool converged{false};
    double validity_time{0.0}; // Gamma t = 0.1

    double value(double t) const { return n0 + curvature * t * t; }
};

inline double short_time_curvature(const ModelParams& p, double window, const QuadConfig& cfg) {
    const double n0 = p.p0();
    auto integrand = [&](double y) { return fermi(p.mu + y, p) - n0; };
    const double T = p.temperature;
    std::vector<double> breaks{-window, 0.0, window};
    for (double b : {T, 10.0 * T, 40.0 * T})
        if (b < window) {
            breaks.push_back(b);
            breaks.push_back(-b);
        }
    const QuadResult r = integrate_adaptive(integrand, std::move(breaks), cfg);
    return detail::checked(r, p.gamma / (2.0 * std::numbers::pi), "short_time_curvature");
}

inline ShortTimeExpansion short_time_expansion(const ModelParams& p, const QuadConfig& cfg = {}) {
    detail::require_single_mode(p, "short_time_expansion");
    ShortTimeExpansion out;
    out.n0 = p.p0();
    out.validity_time = 0.1 / p.gamma;
    const double w0 = std::max({40.0 * p.temperature, 4.0 * std::abs(p.epsilon() - p.mu), 1.0});
    double previous = short_time_curvature(p, w0, cfg);
    double w = w0;
    for (int k = 0; k < 4; ++k) {
        w *= 2.0;
        const double current = short_time_curvature(p, w, cfg);
        const double tol = std::max(cfg.abs_tol, cfg.rel_tol * std::abs(current));
        out.converged = std::abs(current - previous) <= tol;
        out.curvature = current;
        out.window = w;
        if (!out.converged) break;
        previous = current;
    }
    return out;
}

// Expansion with an explicit band half-width W (finite-band regularization).
inline ShortTimeExpansion short_time_expansion(const ModelParams& p, double bandwidth, const QuadConfig& cfg) {
    detail::require_single_mode(p, "short_time_expansion");
    if (!(bandwidth > 0.0)) throw InvalidParams("short_time_expansion: bandwidth must be positive");
    ShortTimeExpansion out;
    out.n0 = p.p0();
    out.validity_time = 0.1 / p.gamma;
    out.window = bandwidth;
    out.curvature = short_time_curvature(p, bandwidth, cfg);
    out.converged = true;
    return out;
}

// Throws DivergentExpansion when the flat-band window integral has no limit.
inline double p1_short_time(double t, const ModelParams& p, const QuadConfig& cfg = {}) {
    if (!(t >= 0.0)) throw InvalidParams("p1_short_time: t must be >= 0");
    const ShortTimeExpansion e = short_time_expansion(p, cfg);
    if (!e.converged)
        throw DivergentExpansion("p1_short_time: integral of (f - n0) grows with the band window");
    return e.value(t);
}

inline double p1_short_time(double t, const ModelParams& p, double bandwidth, const QuadConfig& cfg) {
    if (!(t >= 0.0)) throw InvalidParams("p1_short_time: t must be >= 0");
    return short_time_expansion(p, bandwidth, cfg).value(t);
}

// Frequency-domain fluctuation-dissipation pair (C(w), 4 pi f(w) Re chi(w)).
inline std::pair<double, double> fdr_check(double omega, const ModelParams& p) {
    p.validate();
    const BathSpec bath = BathSpec::from(p);
    const double f = fermi(omega, p);
    const double noise = 2.0 * std::numbers::pi * f * bath.spectral_density(omega);
    const double re_chi = 0.5 * bath.spectral_density(omega);
    return {noise, 4.0 * std::numbers::pi * f * re_chi};
}

// Samples p1 and dp1/dT on a time grid. Grid points are independent and may
// be evaluated concurrently; the result is ordered by the input grid.
inline Trajectory make_trajectory(std::span<const double> times, const ModelParams& p, Method method,
                                  const QuadConfig& cfg = {}, std::size_t jobs = 1) {
    Trajectory tr;
    tr.method = method;
    tr.times.assign(times.begin(), times.end());
    std::optional<ShortTimeExpansion> expansion;
    if (method == Method::short_time) {
        expansion = short_time_expansion(p, cfg);
        if (!expansion->converged)
            throw DivergentExpansion("make_trajectory: short-time expansion diverges for this n0");
    }
    auto samples = parallel_map(times.size(), jobs, [&](std::size_t i) {
        const double t = times[i];
        switch (method) {
        case Method::exact: return std::pair{p1_exact(t, p, cfg), p1_exact_dT(t, p, cfg)};
        case Method::markovian: return std::pair{p1_markovian(t, p), p1_markovian_dT(t, p)};
        case Method::short_time: return std::pair{expansion->value(t), 0.0};
        }
        return std::pair{0.0, 0.0};
    });
    for (const auto& [v, d] : samples) {
        tr.p1.push_back(v);
        tr.dp1_dT.push_back(d);
    }
    tr.validate();
    return tr;
}

} // namespace fermitherm
