// multi_probe.hpp — Several probe fermions sharing one bath: correlation matrix and two-mode state

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fermitherm/errors.hpp"
#include "fermitherm/linalg.hpp"
#include "fermitherm/metrology.hpp"
#include "fermitherm/model.hpp"
#include "fermitherm/quad.hpp"
#include "fermitherm/single_probe.hpp"

namespace fermitherm {

using cplx = std::complex<double>;

// d/dt d = A d + noise, with A = -i diag(E) - (Gamma/2) J (J the all-ones matrix).
struct LangevinGenerator {
    ComplexMatrix a;

    Eigen::Index modes() const { return a.rows(); }

    // Strict stability. A symmetric probe set has an undamped mode, so the
    // library itself only requires Re(lambda) <= 0.
    bool stable(double tol = 0.0) const {
        Eigen::ComplexEigenSolver<ComplexMatrix> es(a, false);
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
            if (!(es.eigenvalues()(k).real() < -tol)) return false;
        return true;
    }
};

inline LangevinGenerator build_generator(const ModelParams& p) {
    p.validate();
    const auto n = static_cast<Eigen::Index>(p.modes());
    LangevinGenerator g;
    g.a = ComplexMatrix::Constant(n, n, cplx(-0.5 * p.gamma, 0.0));
    for (Eigen::Index j = 0; j < n; ++j) g.a(j, j) = cplx(-0.5 * p.gamma, -p.epsilons[static_cast<std::size_t>(j)]);
    return g;
}

// C_ij = <d_i^dagger d_j> and its temperature derivative.
struct CorrelationMatrix {
    ComplexMatrix c;
    ComplexMatrix c_dT;

    Eigen::Index modes() const { return c.rows(); }

    void validate(double tol = 1e-8) const {
        if (c.rows() != c.cols() || c_dT.rows() != c.rows() || c_dT.cols() != c.cols())
            throw InvalidParams("CorrelationMatrix: shape mismatch");
        if ((c - c.adjoint()).cwiseAbs().maxCoeff() > 1e-10) throw InvalidParams("CorrelationMatrix: c not Hermitian");
        if ((c_dT - c_dT.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
            throw InvalidParams("CorrelationMatrix: c_dT not Hermitian");
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (c + c.adjoint()), Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -tol || es.eigenvalues().maxCoeff() > 1.0 + tol)
            throw InvalidParams("CorrelationMatrix: spectrum outside [0, 1]");
    }
};

namespace detail {

// (e^w - 1)/w, with the series near 0.
inline cplx phi(cplx w) { return std::abs(w) < 0.5 ? phi_series(w) : (std::exp(w) - 1.0) / w; }

// Mode decomposition of the Langevin solution: g(omega) = B h(omega) with
// h_k = (e^{-i omega t} - e^{lambda_k t}) / (-i omega - lambda_k) and B = V diag(V^{-1} 1).
struct ModeBasis {
    ComplexVector lambda;
    ComplexMatrix b;
};

inline ModeBasis mode_basis(const LangevinGenerator& g) {
    const EigenModes m = eigen_modes(g.a);
    if (!m.usable())
        throw SingularDecomposition("multi_probe: generator is not diagonalizable to working precision "
                                    "(exceptional point)");
    ModeBasis out;
    out.lambda = m.values;
    const ComplexVector w = m.inverse * ComplexVector::Ones(g.a.rows());
    out.b = m.vectors * w.asDiagonal();
    return out;
}

inline cplx h_transient(cplx lambda, double omega, double t) {
    const cplx z = lambda + cplx(0.0, omega);
    return std::exp(lambda * t) * t * phi(-z * t);
}

// Pair integrals I_kl = integral F(omega) conj(h_k) h_l d omega, for the step
// (-inf, mu] and for the Fermi edge F = f - step or F = df/dT.
struct PairIntegrator {
    const ModelParams& p;
    const ModeBasis& basis;
    const QuadConfig& cfg;
    double t;          // time; ignored when steady
    bool steady;       // h_k -> 1 / (-i omega - lambda_k) up to a common phase

    cplx h(std::size_t k, double omega) const {
        const cplx lam = basis.lambda(static_cast<Eigen::Index>(k));
        if (steady) return 1.0 / (cplx(0.0, -omega) - lam);
        return h_transient(lam, omega, t);
    }

    double lowest_pole() const {
        double lo = p.mu;
        for (Eigen::Index k = 0; k < basis.lambda.size(); ++k) lo = std::min(lo, -basis.lambda(k).imag());
        return lo;
    }

    std::vector<double> pole_breaks(double lo, double hi) const {
        std::vector<double> br{lo, hi};
        for (Eigen::Index k = 0; k < basis.lambda.size(); ++k) {
            const double e = -basis.lambda(k).imag();
            const double g = std::max(-basis.lambda(k).real(), 1e-3 * p.gamma);
            for (double x : {e - g, e, e + g})
                if (x > lo && x < hi) br.push_back(x);
        }
        return br;
    }

    double cap() const {
        return steady || t == 0.0 ? std::numeric_limits<double>::infinity() : std::numbers::pi / (4.0 * t);
    }

    // Integral over (-inf, mu] of conj(h_k) h_l.
    ComplexQuadResult step(std::size_t k, std::size_t l) const {
        const double margin = p.gamma + 1.0;
        const double wl = lowest_pole() - margin;
        ComplexQuadResult out = integrate_adaptive([&](double w) { return std::conj(h(k, w)) * h(l, w); },
                                                   pole_breaks(wl, p.mu), cfg, cap());

        const cplx lk = basis.lambda(static_cast<Eigen::Index>(k));
        const cplx ll = basis.lambda(static_cast<Eigen::Index>(l));
        const cplx lkb = std::conj(lk);
        // conj(h_k) h_l = pk(w) pl(w) [1 + e^{(conj lk + ll) t} - e^{i w t} e^{ll t} - e^{-i w t} e^{conj lk t}]
        auto pk = [&](cplx w) { return 1.0 / (cplx(0.0, 1.0) * w - lkb); };
        auto pl = [&](cplx w) { return 1.0 / (cplx(0.0, -1.0) * w - ll); };
        const double scale = std::max(margin, 1.0);

        const cplx c0 = steady ? cplx(1.0) : 1.0 + std::exp((lkb + ll) * t);
        out += integrate_half_line([&](double y) { return c0 * pk(wl - y) * pl(wl - y); }, scale, cfg);
        if (!steady && t > 0.0) {
            const cplx i(0.0, 1.0);
            // e^{i w t} piece: rotate up, w = wl + i y
            ComplexQuadResult up = integrate_half_line(
                [&](double y) {
                    const cplx w(wl, y);
                    return std::exp(-y * t) * pk(w) * pl(w);
                },
                scale, cfg, {1.0 / t});
            up.value *= -(-i) * std::exp(i * wl * t) * std::exp(ll * t);
            out += up;
            // e^{-i w t} piece: rotate down, w = wl - i y
            ComplexQuadResult down = integrate_half_line(
                [&](double y) {
                    const cplx w(wl, -y);
                    return std::exp(-y * t) * pk(w) * pl(w);
                },
                scale, cfg, {1.0 / t});
            down.value *= -i * std::exp(-i * wl * t) * std::exp(lkb * t);
            out += down;
        }
        return out;
    }

    // Integral of F(y) [R(mu + y) - R(mu - y)] over y in [0, Y], R = conj(h_k) h_l.
    ComplexQuadResult edge(std::size_t k, std::size_t l, Numerator n) const {
        const double T = p.temperature;
        double sup = 0.0;
        if (steady) {
            for (Eigen::Index j = 0; j < basis.lambda.size(); ++j)
                sup = std::max(sup, 1.0 / std::max(basis.lambda(j).real() * basis.lambda(j).real(), 1e-300));
        } else {
            sup = t * t;
        }
        const double window = fermi_window(n, T, std::max(sup, 1.0), cfg);
        auto integrand = [&](double y) {
            const double F = n == Numerator::fermi ? fermi_reduced(y / T)
                                                   : (y / (T * T)) * fermi_variance_reduced(y / T);
            if (F == 0.0) return cplx{};
            const double wp = p.mu + y, wm = p.mu - y;
            return F * (std::conj(h(k, wp)) * h(l, wp) - std::conj(h(k, wm)) * h(l, wm));
        };
        std::vector<double> br{0.0, window};
        for (double b : {T, 4.0 * T})
            if (b < window) br.push_back(b);
        for (Eigen::Index j = 0; j < basis.lambda.size(); ++j) {
            const double e = std::abs(-basis.lambda(j).imag() - p.mu);
            const double g = std::max(-basis.lambda(j).real(), 1e-3 * p.gamma);
            for (double x : {e - g, e, e + g})
                if (x > 0.0 && x < window) br.push_back(x);
        }
        for (double b = 4.0 * std::max(T, p.gamma); b < window; b *= 4.0) br.push_back(b);
        return integrate_adaptive(integrand, std::move(br), cfg, cap());
    }
};

inline void require_converged(const ComplexQuadResult& r, const char* who) {
    if (!r.converged) throw NonConvergence(std::string(who) + ": quadrature did not converge", std::abs(r.value), r.error);
}

// Noise contribution (Gamma/2pi) conj(B) I B^T and its T-derivative.
inline CorrelationMatrix noise_correlations(const ModelParams& p, const ModeBasis& basis, double t, bool steady,
                                            const QuadConfig& cfg) {
    const Eigen::Index n = basis.lambda.size();
    ComplexMatrix I = ComplexMatrix::Zero(n, n), IdT = ComplexMatrix::Zero(n, n);
    PairIntegrator pi{p, basis, cfg, t, steady};
    std::vector<bool> active(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) active[static_cast<std::size_t>(k)] = basis.b.col(k).cwiseAbs().maxCoeff() > 1e-14;
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = k; l < n; ++l) {
            if (!active[static_cast<std::size_t>(k)] || !active[static_cast<std::size_t>(l)]) continue;
            const auto ku = static_cast<std::size_t>(k), lu = static_cast<std::size_t>(l);
            ComplexQuadResult r = pi.step(ku, lu);
            r += pi.edge(ku, lu, Numerator::fermi);
            require_converged(r, "evolve_correlations");
            const ComplexQuadResult rd = pi.edge(ku, lu, Numerator::fermi_dT);
            require_converged(rd, "evolve_correlations");
            I(k, l) = r.value;
            IdT(k, l) = rd.value;
            if (l != k) {
                I(l, k) = std::conj(r.value);
                IdT(l, k) = std::conj(rd.value);
            }
        }
    const double pref = p.gamma / (2.0 * std::numbers::pi);
    CorrelationMatrix out;
    out.c = pref * (basis.b.conjugate() * I * basis.b.transpose());
    out.c_dT = pref * (basis.b.conjugate() * IdT * basis.b.transpose());
    return out;
}

inline void hermitize(CorrelationMatrix& m) {
    m.c = 0.5 * (m.c + m.c.adjoint()).eval();
    m.c_dT = 0.5 * (m.c_dT + m.c_dT.adjoint()).eval();
}

} // namespace detail

inline ComplexMatrix initial_correlations(const ModelParams& p) {
    const auto n = static_cast<Eigen::Index>(p.modes());
    ComplexMatrix c0 = ComplexMatrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) c0(j, j) = p.initial_occupations[static_cast<std::size_t>(j)];
    return c0;
}

// C(t) = conj(U) C(0) U^T + (Gamma/2pi) integral f conj(g) g^T, U = e^{A t}.
inline CorrelationMatrix evolve_correlations(double t, const ModelParams& p, const QuadConfig& cfg = {}) {
    p.validate();
    cfg.validate();
    if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidParams("evolve_correlations: t must be finite and >= 0");
    const auto n = static_cast<Eigen::Index>(p.modes());
    CorrelationMatrix out;
    const ComplexMatrix c0 = initial_correlations(p);
    if (t == 0.0) {
        out.c = c0;
        out.c_dT = ComplexMatrix::Zero(n, n);
        return out;
    }
    const LangevinGenerator g = build_generator(p);
    const detail::ModeBasis basis = detail::mode_basis(g);
    const ComplexMatrix u = expm(g.a, t);
    out = detail::noise_correlations(p, basis, t, false, cfg);
    out.c += u.conjugate() * c0 * u.transpose();
    detail::hermitize(out);
    return out;
}

// Long-time limit; needs every mode to be damped.
inline CorrelationMatrix steady_correlations(const ModelParams& p, const QuadConfig& cfg = {}) {
    p.validate();
    cfg.validate();
    const LangevinGenerator g = build_generator(p);
    const detail::ModeBasis basis = detail::mode_basis(g);
    for (Eigen::Index k = 0; k < basis.lambda.size(); ++k)
        if (!(basis.lambda(k).real() < -1e-12 * p.gamma))
            throw InvalidParams("steady_correlations: an undamped mode makes the steady state depend on C(0)");
    CorrelationMatrix out = detail::noise_correlations(p, basis, 0.0, true, cfg);
    detail::hermitize(out);
    return out;
}

// ---- two-mode state ---------------------------------------------------------

// Occupation basis |n1 n2> ordered |00>, |01>, |10>, |11> (index 2 n1 + n2).
struct ProbeDensityMatrix {
    Eigen::Index dim{2};
    ComplexMatrix rho;
    ComplexMatrix rho_dT;
};

// Wick reconstruction. The coherence <10|rho|01> = <d2^dagger d1> = C_21.
inline ProbeDensityMatrix gaussian_to_density(const CorrelationMatrix& c, double psd_tol = 1e-8) {
    const Eigen::Index n = c.modes();
    if (n < 1 || n > 2) throw InvalidParams("gaussian_to_density: only one or two modes are supported");
    ProbeDensityMatrix out;
    if (n == 1) {
        const double p = c.c(0, 0).real(), dp = c.c_dT(0, 0).real();
        out.dim = 2;
        out.rho = ComplexMatrix::Zero(2, 2);
        out.rho_dT = ComplexMatrix::Zero(2, 2);
        out.rho(0, 0) = 1.0 - p;
        out.rho(1, 1) = p;
        out.rho_dT(0, 0) = -dp;
        out.rho_dT(1, 1) = dp;
    } else {
        auto build = [](double c11, double c22, cplx c12, double n12) {
            ComplexMatrix r = ComplexMatrix::Zero(4, 4);
            r(0, 0) = 1.0 - c11 - c22 + n12;
            r(1, 1) = c22 - n12;
            r(2, 2) = c11 - n12;
            r(3, 3) = n12;
            r(2, 1) = std::conj(c12);
            r(1, 2) = c12;
            return r;
        };
        const double c11 = c.c(0, 0).real(), c22 = c.c(1, 1).real();
        const cplx c12 = c.c(0, 1);
        const double d11 = c.c_dT(0, 0).real(), d22 = c.c_dT(1, 1).real();
        const cplx d12 = c.c_dT(0, 1);
        const double n12 = c11 * c22 - std::norm(c12);
        const double dn12 = d11 * c22 + c11 * d22 - 2.0 * (std::conj(c12) * d12).real();
        out.dim = 4;
        out.rho = build(c11, c22, c12, n12);
        // Every entry is affine in (c11, c22, c12, n12), except the constant 1.
        out.rho_dT = build(d11, d22, d12, dn12);
        out.rho_dT(0, 0) -= 1.0;
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(out.rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -psd_tol)
        throw NotPSD("gaussian_to_density: reconstructed state has a negative eigenvalue");
    return out;
}

inline double qfi_of(const CorrelationMatrix& c) {
    const ProbeDensityMatrix r = gaussian_to_density(c);
    return qfi_sld(r.rho, r.rho_dT);
}

// ---- common bath versus independent baths ------------------------------------

struct AdditivityResult {
    double qfi_common{0.0};
    double qfi_independent{0.0};
    double ratio{0.0};
};

namespace detail {

inline void require_two_modes(const ModelParams& p, const char* who) {
    p.validate();
    if (p.modes() != 2) throw InvalidParams(std::string(who) + ": expects exactly two modes");
}

inline AdditivityResult make_additivity(double common, double independent) {
    AdditivityResult r{common, independent, 0.0};
    r.ratio = independent > 0.0 ? common / independent : std::numeric_limits<double>::quiet_NaN();
    return r;
}

} // namespace detail

// QFI of the two probes on a common bath versus each probe on its own bath.
inline AdditivityResult qfi_common_vs_independent(double t, const ModelParams& p, const QuadConfig& cfg = {}) {
    detail::require_two_modes(p, "qfi_common_vs_independent");
    const double common = qfi_of(evolve_correlations(t, p, cfg));
    double independent = 0.0;
    for (std::size_t i = 0; i < 2; ++i) independent += fisher_information(t, p.single_mode(i), Method::exact, cfg);
    return detail::make_additivity(common, independent);
}

inline AdditivityResult qfi_common_vs_independent_steady(const ModelParams& p, const QuadConfig& cfg = {}) {
    detail::require_two_modes(p, "qfi_common_vs_independent_steady");
    const double common = qfi_of(steady_correlations(p, cfg));
    double independent = 0.0;
    for (std::size_t i = 0; i < 2; ++i) independent += fisher_information_steady(p.single_mode(i), Method::exact, cfg);
    return detail::make_additivity(common, independent);
}

// ---- symmetric probes ---------------------------------------------------------

struct SymmetricReduction {
    std::size_t n{1};
    CorrelationMatrix full;     // brute-force n-mode solution
    double plus_occupation{0.0};  // <d+^dagger d+>, d+ = sum_i d_i / sqrt(n)
    std::vector<double> dark_occupations; // the n - 1 modes orthogonal to d+
    double prediction_n_gamma{0.0};      // single mode with Gamma -> n Gamma
    double prediction_sqrt_n_gamma{0.0}; // single mode with Gamma -> sqrt(n) Gamma
    double deviation_n_gamma{0.0};
    double deviation_sqrt_n_gamma{0.0};
    double matching_scale{1.0}; // the rescaling factor that reproduces the plus mode
};

inline SymmetricReduction symmetric_reduction(std::size_t n, const ModelParams& base, double t, const QuadConfig& cfg = {}) {
    if (n < 1 || n > 8) throw InvalidParams("symmetric_reduction: n must be in [1, 8]");
    base.validate();
    const double eps = base.epsilon();
    const double p0 = base.p0();
    ModelParams p = base;
    p.epsilons.assign(n, eps);
    p.initial_occupations.assign(n, p0);

    SymmetricReduction out;
    out.n = n;
    out.full = evolve_correlations(t, p, cfg);

    // Orthonormal basis whose first vector is (1, ..., 1)/sqrt(n).
    const auto ni = static_cast<Eigen::Index>(n);
    ComplexMatrix q = ComplexMatrix::Identity(ni, ni);
    q.col(0) = ComplexVector::Constant(ni, cplx(1.0 / std::sqrt(static_cast<double>(n))));
    Eigen::HouseholderQR<ComplexMatrix> qr(q);
    ComplexMatrix basis = qr.householderQ();
    if ((basis.col(0) - q.col(0)).norm() > 1e-12) basis.col(0) *= -1.0;
    // b_a = sum_i conj(basis_ia) d_i, so <b_a^dagger b_b> = (basis^T C conj(basis))_ab.
    const ComplexMatrix rotated = basis.transpose() * out.full.c * basis.conjugate();
    out.plus_occupation = rotated(0, 0).real();
    for (Eigen::Index a = 1; a < ni; ++a) out.dark_occupations.push_back(rotated(a, a).real());

    const double nd = static_cast<double>(n);
    out.prediction_n_gamma = p1_exact(t, single_probe_params(eps, base.mu, nd * base.gamma, base.temperature, p0), cfg);
    out.prediction_sqrt_n_gamma =
        p1_exact(t, single_probe_params(eps, base.mu, std::sqrt(nd) * base.gamma, base.temperature, p0), cfg);
    out.deviation_n_gamma = std::abs(out.prediction_n_gamma - out.plus_occupation);
    out.deviation_sqrt_n_gamma = std::abs(out.prediction_sqrt_n_gamma - out.plus_occupation);
    out.matching_scale = out.deviation_n_gamma <= out.deviation_sqrt_n_gamma ? nd : std::sqrt(nd);
    return out;
}

} // namespace fermitherm
