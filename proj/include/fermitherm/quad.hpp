// quad.hpp — Adaptive Gauss-Kronrod quadrature for Fermi x Lorentzian x oscillatory integrands

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <queue>
#include <type_traits>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fermitherm/errors.hpp"
#include "fermitherm/model.hpp"

namespace fermitherm {

// How the cos((omega - eps) t) factor of the transient weight is handled.
// `panels` resolves every oscillation on the real axis, `residues` closes the
// contour in the upper half plane. `automatic` uses panels unless the panel
// count would exceed a fraction of max_panels.
enum class OscillationRoute { automatic, panels, residues };

struct QuadConfig {
    double rel_tol{1e-9};
    double abs_tol{1e-12};
    std::size_t max_panels{std::size_t{1} << 20};
    double window_scale{1.0}; // multiplies the auto-selected Fermi-edge window
    OscillationRoute route{OscillationRoute::automatic};

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
            throw InvalidParams("QuadConfig: tolerances must be positive");
        if (max_panels < 16) throw InvalidParams("QuadConfig: max_panels must be at least 16");
        if (!(window_scale >= 1.0)) throw InvalidParams("QuadConfig: window_scale must be >= 1");
    }
};

template <class Value>
struct QuadResultT {
    Value value{};
    double error{0.0};
    std::size_t panels{0};
    bool converged{true};
};

using QuadResult = QuadResultT<double>;
using ComplexQuadResult = QuadResultT<std::complex<double>>;

template <class V>
QuadResultT<V>& operator+=(QuadResultT<V>& a, const QuadResultT<V>& b) {
    a.value += b.value;
    a.error += b.error;
    a.panels += b.panels;
    a.converged = a.converged && b.converged;
    return a;
}

namespace detail {

template <class V>
struct Panel {
    double a, b;
    V value;
    double error;
    double abs_mass; // integral of |f|, for the roundoff floor
};

template <class F, class V = std::invoke_result_t<F&, double>>
Panel<V> gk15_panel(F& f, double a, double b) {
    using boost::math::quadrature::gauss;
    using boost::math::quadrature::gauss_kronrod;
    const auto& xk = gauss_kronrod<double, 15>::abscissa();
    const auto& wk = gauss_kronrod<double, 15>::weights();
    const auto& wg = gauss<double, 7>::weights();

    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    std::array<V, 15> fv;
    fv[0] = f(c);
    for (std::size_t j = 1; j < 8; ++j) {
        const double dx = h * xk[j];
        fv[2 * j - 1] = f(c - dx);
        fv[2 * j] = f(c + dx);
    }

    V resk = wk[0] * fv[0];
    V resg = wg[0] * fv[0];
    double resabs = wk[0] * std::abs(fv[0]);
    for (std::size_t j = 1; j < 8; ++j) {
        const V pair = fv[2 * j - 1] + fv[2 * j];
        resk += wk[j] * pair;
        resabs += wk[j] * (std::abs(fv[2 * j - 1]) + std::abs(fv[2 * j]));
        if (j % 2 == 0) resg += wg[j / 2] * pair;
    }
    const V mean = 0.5 * resk;
    double resasc = wk[0] * std::abs(fv[0] - mean);
    for (std::size_t j = 1; j < 8; ++j)
        resasc += wk[j] * (std::abs(fv[2 * j - 1] - mean) + std::abs(fv[2 * j] - mean));

    double err = std::abs((resk - resg) * h);
    resasc *= std::abs(h);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();
    return Panel<V>{a, b, resk * h, err, resabs * std::abs(h)};
}

} // namespace detail

// Globally adaptive GK15 on [breaks.front(), breaks.back()]. Interior
// breakpoints seed the initial panels; panels wider than max_width are split
// uniformly before adaptation starts. Convergence is declared once the summed
// error estimate drops below max(abs_tol, rel_tol |I|, roundoff floor).
template <class F>
auto integrate_adaptive(F&& f, std::vector<double> breaks, const QuadConfig& cfg,
                        double max_width = std::numeric_limits<double>::infinity())
    -> QuadResultT<std::invoke_result_t<F&, double>> {
    using V = std::invoke_result_t<F&, double>;
    using P = detail::Panel<V>;

    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    QuadResultT<V> out;
    if (breaks.size() < 2) return out;

    const std::size_t budget = cfg.max_panels;
    std::vector<std::pair<double, double>> seeds;
    {
        double total_pieces = 0.0;
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
            total_pieces += std::max(1.0, std::ceil((breaks[i + 1] - breaks[i]) / max_width));
        // Coarser seeding when the cap alone would exhaust the budget.
        const double shrink = total_pieces > 0.5 * static_cast<double>(budget)
                                  ? total_pieces / (0.5 * static_cast<double>(budget))
                                  : 1.0;
        if (shrink > 1.0) out.converged = false;
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
            const double a = breaks[i], b = breaks[i + 1];
            const auto pieces = static_cast<std::size_t>(
                std::max(1.0, std::ceil((b - a) / max_width / shrink)));
            for (std::size_t k = 0; k < pieces; ++k) {
                const double lo = a + (b - a) * static_cast<double>(k) / static_cast<double>(pieces);
                const double hi = k + 1 == pieces ? b : a + (b - a) * static_cast<double>(k + 1) / static_cast<double>(pieces);
                seeds.emplace_back(lo, hi);
            }
        }
    }

    std::vector<P> panels;
    panels.reserve(seeds.size() * 2);
    auto cmp = [&panels](std::size_t i, std::size_t j) { return panels[i].error < panels[j].error; };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)> heap(cmp);

    V total{};
    double total_err = 0.0;
    double mass = 0.0;
    for (const auto& [a, b] : seeds) {
        panels.push_back(detail::gk15_panel(f, a, b));
        total += panels.back().value;
        total_err += panels.back().error;
        mass += panels.back().abs_mass;
        heap.push(panels.size() - 1);
    }

    constexpr double eps = std::numeric_limits<double>::epsilon();
    auto tolerance = [&] { return std::max({cfg.abs_tol, cfg.rel_tol * std::abs(total), 50.0 * eps * mass}); };

    std::size_t live = panels.size();
    while (total_err > tolerance() && !heap.empty()) {
        if (live >= budget) {
            out.converged = false;
            break;
        }
        const std::size_t idx = heap.top();
        heap.pop();
        const P worst = panels[idx];
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b) ||
            (worst.b - worst.a) < 1e3 * eps * std::max(std::abs(worst.a), std::abs(worst.b))) {
            continue; // cannot be refined further; its error stays in the total
        }
        P left = detail::gk15_panel(f, worst.a, mid);
        P right = detail::gk15_panel(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        mass += left.abs_mass + right.abs_mass - worst.abs_mass;
        panels[idx] = left;
        heap.push(idx);
        panels.push_back(right);
        heap.push(panels.size() - 1);
        ++live;
    }

    // Resum to remove drift from the incremental updates.
    out.value = V{};
    out.error = 0.0;
    mass = 0.0;
    for (const auto& p : panels) {
        out.value += p.value;
        out.error += p.error;
        mass += p.abs_mass;
    }
    total = out.value;
    out.panels = live;
    if (out.error > tolerance() * 1.0000001) out.converged = false;
    return out;
}

// Integral over [0, inf) through y = scale * s / (1 - s).
template <class F>
auto integrate_half_line(F&& g, double scale, const QuadConfig& cfg, std::vector<double> y_breaks = {})
    -> QuadResultT<std::invoke_result_t<F&, double>> {
    using V = std::invoke_result_t<F&, double>;
    auto mapped = [&](double s) -> V {
        const double one_minus = 1.0 - s;
        if (one_minus <= 0.0) return V{};
        const double y = scale * s / one_minus;
        const V v = g(y);
        const V r = v * (scale / (one_minus * one_minus));
        return std::isfinite(std::abs(r)) ? r : V{};
    };
    std::vector<double> breaks{0.0, 1.0};
    for (double y : y_breaks)
        if (y > 0.0 && std::isfinite(y)) breaks.push_back(y / (y + scale));
    return integrate_adaptive(mapped, std::move(breaks), cfg);
}

// Which weight multiplies the numerator in the Lorentzian integral.
enum class Weight {
    steady,    // 1 / (Gamma^2 + 4 x^2)
    transient, // (1 - 2 e^{-Gamma t/2} cos(x t) + e^{-Gamma t}) / (Gamma^2 + 4 x^2)
};

// Numerator factor: the Fermi function or its temperature derivative.
enum class Numerator { fermi, fermi_dT };

namespace detail {

inline double lorentz(double x, double gamma) { return 1.0 / (gamma * gamma + 4.0 * x * x); }

inline std::complex<double> lorentz(std::complex<double> z, double gamma) {
    return 1.0 / (gamma * gamma + 4.0 * z * z);
}

// (1 - 2 e^{-a} cos(x t) + e^{-2a}) / (Gamma^2 + 4 x^2), a = Gamma t / 2, written
// as a sum of non-negative terms so small-t values keep full relative precision.
inline double transient_weight(double x, double gamma, double t) {
    const double a = 0.5 * gamma * t;
    const double em = std::expm1(-a);
    const double s = std::sin(0.5 * x * t);
    return (em * em + 4.0 * std::exp(-a) * s * s) * lorentz(x, gamma);
}

inline double weight_value(Weight w, double x, double gamma, double t) {
    return w == Weight::steady ? lorentz(x, gamma) : transient_weight(x, gamma, t);
}

// phi(w) = (e^w - 1)/w and the divided difference (phi(w1) - phi(w2))/(w1 - w2),
// both by Taylor series; valid for |w| < 1/2.
inline std::complex<double> phi_series(std::complex<double> w) {
    std::complex<double> sum{}, term{1.0, 0.0};
    for (int k = 0; k < 30; ++k) {
        term /= static_cast<double>(k + 1); // w^k / (k+1)!
        sum += term;
        term *= w;
    }
    return sum;
}

inline std::complex<double> phi_divided_difference(std::complex<double> w1, std::complex<double> w2) {
    // sum_{k>=1} h_{k-1}(w1, w2) / (k+1)!, h the complete homogeneous polynomial
    std::complex<double> sum{}, h{1.0, 0.0}, w2_pow{1.0, 0.0};
    double fact = 2.0;
    for (int k = 1; k < 30; ++k) {
        sum += h / fact;
        fact *= static_cast<double>(k + 2);
        w2_pow *= w2;
        h = h * w1 + w2_pow;
    }
    return sum;
}

// W(y - d) - W(-y - d) without the cancellation of the two near-equal terms.
// The transient weight is (t^2/4) |phi(-z t)|^2 with z = Gamma/2 + i x.
inline double weight_odd_difference(Weight w, double y, double d, double gamma, double t) {
    const double x1 = y - d, x2 = -y - d;
    const double L1 = lorentz(x1, gamma), L2 = lorentz(x2, gamma);
    if (w == Weight::steady) return 16.0 * y * d * L1 * L2;
    const std::complex<double> w1(-0.5 * gamma * t, -x1 * t), w2(-0.5 * gamma * t, -x2 * t);
    if (std::max(std::abs(w1), std::abs(w2)) >= 0.5)
        return transient_weight(x1, gamma, t) - transient_weight(x2, gamma, t);
    const std::complex<double> diff = std::complex<double>(0.0, -2.0 * y * t) * phi_divided_difference(w1, w2);
    const std::complex<double> sum = phi_series(w1) + phi_series(w2);
    return 0.25 * t * t * (diff * std::conj(sum)).real();
}

inline double weight_sup(Weight w, double gamma, double t) {
    if (w == Weight::steady) return 1.0 / (gamma * gamma);
    const double n = 1.0 + std::exp(-0.5 * gamma * t);
    return n * n / (gamma * gamma);
}

// Integral of 1/(Gamma^2 + 4x^2) over (-inf, x0].
inline double lorentz_below(double x0, double gamma) {
    if (x0 < 0.0) return std::atan(gamma / (-2.0 * x0)) / (2.0 * gamma);
    return (0.5 * std::numbers::pi + std::atan(2.0 * x0 / gamma)) / (2.0 * gamma);
}

// Integral of cos(u t)/(Gamma^2 + 4u^2) over [X, inf), X >= 0, t > 0.
// Beyond X1 = max(X, Gamma) the path is rotated to X1 + i y; the integrand
// e^{-y t} L(X1 + i y) is non-oscillatory and the Lorentzian poles at
// +-i Gamma/2 lie outside the swept quadrant.
inline QuadResult cos_lorentz_above(double X, double gamma, double t, const QuadConfig& cfg) {
    QuadResult out;
    const double X1 = std::max(X, gamma);
    if (X < X1) {
        auto direct = [&](double u) { return std::cos(u * t) * lorentz(u, gamma); };
        out += integrate_adaptive(direct, {X, X1}, cfg, std::numbers::pi / (4.0 * t));
    }
    auto rotated = [&](double y) {
        return std::exp(-y * t) * lorentz(std::complex<double>(X1, y), gamma);
    };
    ComplexQuadResult r = integrate_half_line(rotated, X1, cfg, {1.0 / t});
    const std::complex<double> phase = std::complex<double>(0.0, 1.0) * std::polar(1.0, X1 * t);
    out.value += (phase * r.value).real();
    out.error += r.error;
    out.panels += r.panels;
    out.converged = out.converged && r.converged;
    return out;
}

// Integral of the weight over (-inf, x0] (the bath's filled Fermi sea at T = 0).
inline QuadResult weight_below(Weight w, double x0, double gamma, double t, const QuadConfig& cfg) {
    QuadResult out;
    const double smooth = lorentz_below(x0, gamma);
    if (w == Weight::steady) {
        out.value = smooth;
        return out;
    }
    if (t == 0.0) return out;
    const double a = 0.5 * gamma * t;
    const double em = std::expm1(-a);
    QuadResult cos_part;
    if (x0 <= 0.0) {
        cos_part = cos_lorentz_above(-x0, gamma, t, cfg);
    } else {
        cos_part = cos_lorentz_above(x0, gamma, t, cfg);
        cos_part.value = std::numbers::pi / (2.0 * gamma) * std::exp(-a) - cos_part.value;
    }
    // 1 - 2e^{-a}cos + e^{-2a} = em^2 + 2 e^{-a} (1 - cos)
    out.value = em * em * smooth + 2.0 * std::exp(-a) * (smooth - cos_part.value);
    out.error = 2.0 * std::exp(-a) * cos_part.error;
    out.panels = cos_part.panels;
    out.converged = cos_part.converged;
    return out;
}

// Half-width (in y = omega - mu) beyond which the Fermi-edge integrand is
// below a tenth of abs_tol.
inline double fermi_window(Numerator n, double temperature, double sup, const QuadConfig& cfg) {
    const double target = 0.1 * cfg.abs_tol;
    double u = 20.0;
    for (; u < 740.0; u += 1.0) {
        const double bound = n == Numerator::fermi ? temperature * std::exp(-u) * sup
                                                   : (1.0 + u) * std::exp(-u) * sup;
        if (bound < target) break;
    }
    return u * temperature * cfg.window_scale;
}

// Integral over y in [0, Y] of F(y) [W(y - d) - W(-y - d)], the part of the
// integral carried by f - step (odd about mu), with d = eps - mu.
inline QuadResult fermi_edge(Weight w, Numerator n, double d, double gamma, double temperature, double t,
                             double window, const QuadConfig& cfg, bool cap_panels) {
    auto edge = [&](double y) {
        const double F = n == Numerator::fermi ? detail::fermi_reduced(y / temperature)
                                               : (y / (temperature * temperature)) *
                                                     detail::fermi_variance_reduced(y / temperature);
        if (F == 0.0) return 0.0;
        return F * weight_odd_difference(w, y, d, gamma, t);
    };
    std::vector<double> breaks{0.0, window};
    const double ad = std::abs(d);
    for (double b : {ad - gamma, ad, ad + gamma, temperature, 4.0 * temperature})
        if (b > 0.0 && b < window) breaks.push_back(b);
    for (double b = std::max({ad + gamma, temperature, gamma}) * 4.0; b < window; b *= 4.0) breaks.push_back(b);
    const double cap = (cap_panels && w == Weight::transient && t > 0.0) ? std::numbers::pi / (4.0 * t)
                                                                        : std::numeric_limits<double>::infinity();
    return integrate_adaptive(edge, std::move(breaks), cfg, cap);
}

} // namespace detail

// Upper-half-plane residue evaluation of
//   Z = integral of F(omega) e^{i (omega - eps) t} / (Gamma^2 + 4 (omega - eps)^2) d omega
// with F the Fermi function (or its T-derivative). Poles: the Lorentzian at
// eps + i Gamma/2 and the Matsubara poles mu + i pi T (2n+1), residue -T of f.
inline std::complex<double> oscillatory_residue_sum(double t, const ModelParams& p, Numerator n) {
    using namespace std::complex_literals;
    constexpr double pi = std::numbers::pi;
    const double eps = p.epsilon(), mu = p.mu, gamma = p.gamma, T = p.temperature;
    const std::complex<double> z0(eps, 0.5 * gamma);

    std::complex<double> lorentz_pole = (pi / (2.0 * gamma)) * std::exp(-0.5 * gamma * t) *
                                        (n == Numerator::fermi ? fermi(z0, mu, T) : fermi_dT(z0, mu, T));

    std::complex<double> sum{};
    for (std::size_t k = 0; k < 10'000'000; ++k) {
        const double nu = pi * static_cast<double>(2 * k + 1);
        const std::complex<double> x(mu - eps, nu * T); // omega_k - eps
        if (std::abs(x - std::complex<double>(0.0, 0.5 * gamma)) < 1e-9 * (gamma + T))
            throw NonConvergence("oscillatory_residue_sum: Lorentzian and Matsubara poles coincide", 0.0, 0.0);
        const std::complex<double> e = std::exp(1i * x * t);
        const std::complex<double> L = detail::lorentz(x, gamma);
        std::complex<double> term;
        if (n == Numerator::fermi) {
            term = T * e * L;
        } else {
            // d/dT [T e^{i x t} L(x)] with dx/dT = i nu
            const std::complex<double> dL = -8.0 * x * L * L;
            term = e * L * (1.0 - T * nu * t) + 1i * T * nu * e * dL;
        }
        sum += term;
        if (k > 2 && std::abs(term) <= 1e-17 * std::abs(sum)) break;
        if (k > 2 && std::abs(term) < 1e-300) break;
    }
    return lorentz_pole - 2.0 * pi * 1i * sum;
}

// Integral over the whole real omega axis of F(omega) W(omega - eps), with F
// the Fermi function or its T-derivative and W the steady or transient
// Lorentzian weight. Returns the raw integral (no 2 Gamma / pi prefactor).
inline QuadResult integrate_fermi_lorentzian(double t, const ModelParams& p, const QuadConfig& cfg, Weight w,
                                             Numerator n) {
    p.validate();
    cfg.validate();
    if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidParams("integrate_fermi_lorentzian: t must be finite and >= 0");
    QuadResult out;
    if (w == Weight::transient && t == 0.0) return out;

    const double d = p.epsilon() - p.mu;
    const double gamma = p.gamma, T = p.temperature;
    const double window = detail::fermi_window(n, T, detail::weight_sup(w, gamma, t), cfg);

    bool use_residues = false;
    if (w == Weight::transient) {
        const double panels_needed = window * 4.0 * t / std::numbers::pi;
        if (cfg.route == OscillationRoute::residues)
            use_residues = true;
        else if (cfg.route == OscillationRoute::automatic)
            use_residues = panels_needed > static_cast<double>(cfg.max_panels) / 16.0;
    }

    if (!use_residues) {
        if (n == Numerator::fermi) out += detail::weight_below(w, -d, gamma, t, cfg);
        out += detail::fermi_edge(w, n, d, gamma, T, t, window, cfg, true);
        return out;
    }

    // W = (1 + e^{-2a}) L - 2 e^{-a} cos(x t) L
    const double a = 0.5 * gamma * t;
    QuadResult smooth;
    if (n == Numerator::fermi) smooth += detail::weight_below(Weight::steady, -d, gamma, t, cfg);
    smooth += detail::fermi_edge(Weight::steady, n, d, gamma, T, t, window, cfg, false);
    const std::complex<double> z = oscillatory_residue_sum(t, p, n);
    out.value = (1.0 + std::exp(-2.0 * a)) * smooth.value - 2.0 * std::exp(-a) * z.real();
    out.error = smooth.error;
    out.panels = smooth.panels;
    out.converged = smooth.converged;
    return out;
}

} // namespace fermitherm
