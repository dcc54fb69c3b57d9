// metrology.hpp — Fisher information, SLD quantum Fisher information and scalar optimizers

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fermitherm/errors.hpp"
#include "fermitherm/linalg.hpp"
#include "fermitherm/model.hpp"
#include "fermitherm/parallel.hpp"
#include "fermitherm/single_probe.hpp"

namespace fermitherm {

struct FisherCurve {
    std::vector<double> axis;
    std::string axis_name{"t"}; // "t", "gamma" or "T"
    std::vector<double> values;
    std::optional<std::pair<double, double>> optimum;
    bool boundary_optimum{false};
    Method method{Method::exact};

    void validate() const {
        if (axis.size() != values.size()) throw InvalidParams("FisherCurve: axis and values differ in length");
        for (double v : values)
            if (!(v >= 0.0)) throw InvalidParams("FisherCurve: Fisher information must be >= 0");
    }
};

// (dp/dT)^2 / (p (1 - p)) for the two-outcome occupation measurement.
// dp = 0 gives 0 even at p in {0, 1}.
inline double fi_two_outcome(double p1, double dp1_dT) {
    if (!(p1 >= 0.0 && p1 <= 1.0)) throw InvalidParams("fi_two_outcome: p1 must lie in [0, 1]");
    if (dp1_dT == 0.0) return 0.0;
    if (p1 == 0.0 || p1 == 1.0)
        throw DegenerateDistribution("fi_two_outcome: p1 at the boundary with non-zero derivative");
    return dp1_dT * dp1_dT / (p1 * (1.0 - p1));
}

inline double fi_rate(double t, double fi) {
    if (!(t > 0.0)) throw InvalidParams("fi_rate: t must be > 0");
    return fi / t;
}

// rho = V diag(eigenvalues) V^dagger, d_eigen = V^dagger drho V.
struct SpectralDecomposition {
    Eigen::VectorXd eigenvalues;
    ComplexMatrix eigenvectors;
    ComplexMatrix d_eigen;
};

namespace detail {

inline constexpr double state_tol = 1e-10;

inline void require_hermitian(const ComplexMatrix& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() == 0) throw NotAState(std::string(what) + " must be square and non-empty");
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > state_tol) throw NotAState(std::string(what) + " is not Hermitian");
}

} // namespace detail

inline SpectralDecomposition spectral_decomposition(const ComplexMatrix& rho, const ComplexMatrix& drho) {
    detail::require_hermitian(rho, "rho");
    detail::require_hermitian(drho, "drho_dT");
    if (rho.rows() != drho.rows()) throw NotAState("rho and drho_dT differ in dimension");
    if (std::abs(rho.trace() - 1.0) > detail::state_tol) throw NotAState("rho must have unit trace");
    if (std::abs(drho.trace()) > detail::state_tol) throw NotAState("drho_dT must be traceless");

    const ComplexMatrix herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(herm);
    if (es.info() != Eigen::Success) throw NotAState("rho: eigen-decomposition failed");
    SpectralDecomposition out;
    out.eigenvalues = es.eigenvalues();
    for (Eigen::Index i = 0; i < out.eigenvalues.size(); ++i) {
        double& p = out.eigenvalues(i);
        if (p < -detail::state_tol || p > 1.0 + detail::state_tol) throw NotAState("rho is not positive semidefinite");
        p = std::clamp(p, 0.0, 1.0);
    }
    out.eigenvectors = es.eigenvectors();
    out.d_eigen = out.eigenvectors.adjoint() * (0.5 * (drho + drho.adjoint())) * out.eigenvectors;
    return out;
}

// Quantum Fisher information sum_{p_i + p_j > theta} 2 |<i|drho|j>|^2 / (p_i + p_j).
inline double qfi_sld(const ComplexMatrix& rho, const ComplexMatrix& drho, double theta = 1e-12) {
    const SpectralDecomposition s = spectral_decomposition(rho, drho);
    double q = 0.0;
    const Eigen::Index n = s.eigenvalues.size();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double denom = s.eigenvalues(i) + s.eigenvalues(j);
            if (denom > theta) q += 2.0 * std::norm(s.d_eigen(i, j)) / denom;
        }
    return q;
}

// ---- scalar optimization ---------------------------------------------------

struct OptimizeOptions {
    std::size_t grid_points{64};
    bool log_grid{true};
    double refine_tol{1e-4}; // relative, on the argument
    double abs_tol{0.0};     // FlatObjective when max - min <= abs_tol on the grid
    std::size_t jobs{1};     // grid evaluations only
};

struct ScalarOptimum {
    double argmax{0.0};
    double max{0.0};
    bool boundary{false}; // optimum sits at an end of the search interval
    std::vector<double> grid;
    std::vector<double> grid_values;
};

// Grid scan followed by golden-section refinement in the bracket around the
// best grid point. Ties on the grid go to the smaller argument.
inline ScalarOptimum optimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                                     const OptimizeOptions& opt = {}) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
        throw InvalidParams("optimize_scalar: need finite bounds with lo < hi");
    if (opt.log_grid && !(lo > 0.0)) throw InvalidParams("optimize_scalar: log grid needs lo > 0");
    if (opt.grid_points < 64) throw InvalidParams("optimize_scalar: at least 64 grid points are required");
    if (!(opt.refine_tol > 0.0)) throw InvalidParams("optimize_scalar: refine_tol must be positive");

    // Work in s = log x on log grids.
    auto to_x = [&](double s) { return opt.log_grid ? std::exp(s) : s; };
    const double s_lo = opt.log_grid ? std::log(lo) : lo;
    const double s_hi = opt.log_grid ? std::log(hi) : hi;
    const std::size_t n = opt.grid_points;

    ScalarOptimum out;
    out.grid.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = s_lo + (s_hi - s_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        out.grid[i] = i == 0 ? lo : (i + 1 == n ? hi : to_x(s));
    }
    out.grid_values = parallel_map(n, opt.jobs, [&](std::size_t i) { return f(out.grid[i]); });

    std::size_t best = 0;
    double fmin = out.grid_values[0];
    for (std::size_t i = 0; i < n; ++i) {
        const double v = out.grid_values[i];
        if (!std::isfinite(v)) throw InvalidParams("optimize_scalar: objective is not finite on the grid");
        if (v > out.grid_values[best]) best = i;
        fmin = std::min(fmin, v);
    }
    if (out.grid_values[best] - fmin <= opt.abs_tol) throw FlatObjective("optimize_scalar: objective is flat on the grid");

    auto s_of = [&](std::size_t i) { return opt.log_grid ? std::log(out.grid[i]) : out.grid[i]; };
    double a = s_of(best == 0 ? 0 : best - 1);
    double b = s_of(best + 1 == n ? n - 1 : best + 1);

    constexpr double invphi = 0.6180339887498949;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = f(to_x(c)), fd = f(to_x(d));
    auto width_ok = [&] {
        const double xa = to_x(a), xb = to_x(b);
        return std::abs(xb - xa) <= opt.refine_tol * std::max(std::abs(xa), std::abs(xb)) ||
               std::abs(xb - xa) <= opt.refine_tol * (hi - lo) * 1e-6;
    };
    for (int it = 0; it < 200 && !width_ok(); ++it) {
        if (fc >= fd) { // ties keep the left part
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(to_x(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(to_x(d));
        }
    }
    double xr = fc >= fd ? to_x(c) : to_x(d);
    double fr = std::max(fc, fd);
    if (out.grid_values[best] >= fr) {
        xr = out.grid[best];
        fr = out.grid_values[best];
    }
    out.argmax = xr;
    out.max = fr;
    const double edge_tol = 2.0 * opt.refine_tol;
    out.boundary = std::abs(xr - lo) <= edge_tol * std::max(std::abs(lo), 1e-300) ||
                   std::abs(xr - hi) <= edge_tol * std::abs(hi);
    return out;
}

// ---- equilibrium figures of merit -----------------------------------------

// 1 / (T^2 F) from the exact steady state; +inf when F = 0.
inline double noise_to_signal(const ModelParams& p, const QuadConfig& cfg = {}) {
    const double p1 = p1_steady(p, cfg);
    const double dp = p1_steady_dT(p, cfg);
    const double fi = fi_two_outcome(p1, dp);
    const double T = p.temperature;
    return fi > 0.0 ? 1.0 / (T * T * fi) : std::numeric_limits<double>::infinity();
}

// Weak-coupling (thermal) limit: T^2 F = x^2 e^x / (1 + e^x)^2 with x = (eps - mu)/T.
inline double markovian_signal_to_noise(const ModelParams& p) {
    p.validate();
    const double x = (p.epsilon() - p.mu) / p.temperature;
    return x * x * detail::fermi_variance_reduced(x);
}

inline double markovian_noise_to_signal(const ModelParams& p) {
    const double s = markovian_signal_to_noise(p);
    return s > 0.0 ? 1.0 / s : std::numeric_limits<double>::infinity();
}

// ---- transient Fisher information -------------------------------------------

// Fisher information of the occupation measurement at time t. The probe state
// is diagonal, so this is also its quantum Fisher information.
inline double fisher_information(double t, const ModelParams& p, Method method, const QuadConfig& cfg = {}) {
    switch (method) {
    case Method::exact: return fi_two_outcome(p1_exact(t, p, cfg), p1_exact_dT(t, p, cfg));
    case Method::markovian: return fi_two_outcome(p1_markovian(t, p), p1_markovian_dT(t, p));
    case Method::short_time: break;
    }
    throw InvalidParams("fisher_information: the short-time expansion carries no T-derivative");
}

inline double fisher_information_steady(const ModelParams& p, Method method, const QuadConfig& cfg = {}) {
    if (method == Method::markovian) return fi_two_outcome(p1_markovian_steady(p), p1_markovian_steady_dT(p));
    return fi_two_outcome(p1_steady(p, cfg), p1_steady_dT(p, cfg));
}

// Closed-form Markovian FI rate for p1(0) = 0 with gap d = eps - mu:
//   d^2 beta^4 (e^{Gamma t} - 1) e^{beta d} / (t (e^{beta d} + 1)^2 (e^{-beta d} + e^{Gamma t})),
// rearranged so that no exponential overflows.
inline double markovian_fi_rate_closed_form(double t, const ModelParams& p) {
    p.validate();
    if (!(t > 0.0)) throw InvalidParams("markovian_fi_rate_closed_form: t must be > 0");
    const double beta = p.beta();
    const double d = p.epsilon() - p.mu;
    const double x = beta * d;
    const double gt = p.gamma * t;
    const double b2 = beta * beta;
    return d * d * b2 * b2 * detail::fermi_variance_reduced(x) * (-std::expm1(-gt)) /
           (t * (1.0 + std::exp(std::min(-x - gt, 700.0))));
}

inline FisherCurve fisher_curve(std::span<const double> times, const ModelParams& p, Method method,
                                const QuadConfig& cfg = {}, std::size_t jobs = 1) {
    FisherCurve c;
    c.axis.assign(times.begin(), times.end());
    c.method = method;
    c.values = parallel_map(times.size(), jobs, [&](std::size_t i) { return fisher_information(times[i], p, method, cfg); });
    if (!c.values.empty()) {
        const auto it = std::max_element(c.values.begin(), c.values.end());
        c.optimum = std::pair{c.axis[static_cast<std::size_t>(it - c.values.begin())], *it};
    }
    c.validate();
    return c;
}

inline FisherCurve fi_rate_curve(std::span<const double> times, const ModelParams& p, Method method,
                                 const QuadConfig& cfg = {}, std::size_t jobs = 1) {
    FisherCurve c = fisher_curve(times, p, method, cfg, jobs);
    for (std::size_t i = 0; i < c.values.size(); ++i) c.values[i] = fi_rate(c.axis[i], c.values[i]);
    const auto it = std::max_element(c.values.begin(), c.values.end());
    if (it != c.values.end()) c.optimum = std::pair{c.axis[static_cast<std::size_t>(it - c.values.begin())], *it};
    return c;
}

// t* = argmax_t F(t)/t on [1e-4/Gamma, 50/Gamma].
inline ScalarOptimum optimal_measurement_time(const ModelParams& p, Method method, const QuadConfig& cfg = {},
                                              OptimizeOptions opt = {}) {
    const double lo = 1e-4 / p.gamma, hi = 50.0 / p.gamma;
    return optimize_scalar([&](double t) { return fi_rate(t, fisher_information(t, p, method, cfg)); }, lo, hi, opt);
}

} // namespace fermitherm
