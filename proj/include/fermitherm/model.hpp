// model.hpp — Physical parameters, Fermi statistics and the wide-band bath

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "fermitherm/errors.hpp"

namespace fermitherm {

// Units: hbar = k_B = 1. All figures use eps - mu = 1 as the energy unit.
struct ModelParams {
    std::vector<double> epsilons{1.0};           // probe mode energies
    double mu{0.0};                              // bath chemical potential
    double gamma{1.0};                           // wide-band coupling rate
    double temperature{1.0};                     // bath temperature
    std::vector<double> initial_occupations{0.0}; // p_i(0), one per mode

    std::size_t modes() const noexcept { return epsilons.size(); }
    double beta() const noexcept { return 1.0 / temperature; }
    double epsilon() const { return epsilons.at(0); }
    double p0() const { return initial_occupations.at(0); }

    // Throws InvalidParams when an invariant is violated.
    void validate() const {
        if (epsilons.empty())
            throw InvalidParams("ModelParams: at least one probe mode is required");
        if (initial_occupations.size() != epsilons.size())
            throw InvalidParams("ModelParams: need one initial occupation per mode");
        if (!(gamma > 0.0) || !std::isfinite(gamma))
            throw InvalidParams("ModelParams: gamma must be positive and finite");
        if (!(temperature > 0.0) || !std::isfinite(temperature))
            throw InvalidParams("ModelParams: temperature must be positive and finite");
        if (!std::isfinite(mu))
            throw InvalidParams("ModelParams: mu must be finite");
        for (double e : epsilons)
            if (!std::isfinite(e)) throw InvalidParams("ModelParams: energies must be finite");
        for (double p : initial_occupations)
            if (!(p >= 0.0 && p <= 1.0))
                throw InvalidParams("ModelParams: initial occupations must lie in [0, 1]");
    }

    // Parameters of mode i on its own, with the same bath.
    ModelParams single_mode(std::size_t i) const {
        ModelParams out = *this;
        out.epsilons = {epsilons.at(i)};
        out.initial_occupations = {initial_occupations.at(i)};
        return out;
    }

    ModelParams with_gamma(double g) const {
        ModelParams out = *this;
        out.gamma = g;
        return out;
    }

    ModelParams with_temperature(double T) const {
        ModelParams out = *this;
        out.temperature = T;
        return out;
    }
};

// Convenience constructor for the single-mode model.
inline ModelParams single_probe_params(double epsilon, double mu, double gamma, double temperature,
                                       double p0 = 0.0) {
    ModelParams p;
    p.epsilons = {epsilon};
    p.mu = mu;
    p.gamma = gamma;
    p.temperature = temperature;
    p.initial_occupations = {p0};
    return p;
}

// Spectral density of the bath. Only the flat (wide-band) case exists;
// the struct is the extension point for a frequency-dependent Gamma(omega).
struct BathSpec {
    enum class Kind { flat };

    Kind kind{Kind::flat};
    double gamma{1.0};

    static BathSpec from(const ModelParams& p) { return BathSpec{Kind::flat, p.gamma}; }

    double spectral_density(double /*omega*/) const { return gamma; }

    void validate() const {
        if (!(gamma > 0.0)) throw InvalidParams("BathSpec: gamma must be positive");
    }
};

namespace detail {

// Beyond this |(omega - mu)/T| the exponential is clamped.
inline constexpr double exp_saturation = 700.0;

inline double fermi_reduced(double x) {
    if (x > exp_saturation) return 0.0;
    if (x < -exp_saturation) return 1.0;
    if (x > 0.0) {
        const double e = std::exp(-x);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(x));
}

// f (1 - f) evaluated without forming 1 - f.
inline double fermi_variance_reduced(double x) {
    const double ax = std::abs(x);
    if (ax > exp_saturation) return 0.0;
    const double e = std::exp(-ax);
    const double d = 1.0 + e;
    return e / (d * d);
}

} // namespace detail

// Fermi occupation 1 / (exp((omega - mu)/T) + 1).
inline double fermi(double omega, double mu, double temperature) {
    return detail::fermi_reduced((omega - mu) / temperature);
}

inline double fermi(double omega, const ModelParams& p) { return fermi(omega, p.mu, p.temperature); }

// d f / dT = ((omega - mu)/T^2) f (1 - f); exactly zero at omega = mu.
inline double fermi_dT(double omega, double mu, double temperature) {
    const double y = omega - mu;
    if (y == 0.0) return 0.0;
    return (y / (temperature * temperature)) * detail::fermi_variance_reduced(y / temperature);
}

inline double fermi_dT(double omega, const ModelParams& p) { return fermi_dT(omega, p.mu, p.temperature); }

// Analytic continuation of the Fermi function to complex energies.
inline std::complex<double> fermi(std::complex<double> z, double mu, double temperature) {
    const std::complex<double> x = (z - mu) / temperature;
    if (x.real() > 0.0) {
        const std::complex<double> e = std::exp(-x);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(x));
}

inline std::complex<double> fermi_dT(std::complex<double> z, double mu, double temperature) {
    const std::complex<double> f = fermi(z, mu, temperature);
    return ((z - mu) / (temperature * temperature)) * f * (1.0 - f);
}

} // namespace fermitherm
