// oracles.hpp — Independent reference computations used only by the tests

#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "fermitherm/model.hpp"

namespace oracle {

// Composite Simpson rule on [a, b] with n (even) intervals.
template <class F>
double simpson(F&& f, double a, double b, long n) {
    if (n % 2) ++n;
    const double h = (b - a) / static_cast<double>(n);
    double s = f(a) + f(b);
    for (long i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + h * static_cast<double>(i));
    return s * h / 3.0;
}

// Integral of cos(x t) / (Gamma^2 + 4 x^2) over [W, inf) by repeated
// integration by parts (asymptotic in 1/(W t)).
inline double cos_tail(double W, double gamma, double t) {
    // L = (1/(4 i g)) [1/(x - ig/2) - 1/(x + ig/2)], so every derivative is closed form;
    // int_W^inf e^{ixt} L = -e^{iWt} sum_k (-1)^k L^(k)(W) / (it)^(k+1).
    using C = std::complex<double>;
    const C a(0.0, 0.5 * gamma), pref = 1.0 / C(0.0, 4.0 * gamma), it(0.0, t);
    C sum = 0.0, fact = 1.0;
    for (int k = 0; k < 14; ++k) {
        if (k > 0) fact *= static_cast<double>(k);
        const double sgn = (k % 2) ? -1.0 : 1.0; // (-1)^k from the derivative
        const C deriv = pref * sgn * fact * (1.0 / std::pow(W - a, k + 1) - 1.0 / std::pow(W + a, k + 1));
        sum += sgn * deriv / std::pow(it, k + 1);
    }
    return (-std::exp(C(0.0, W * t)) * sum).real();
}

// p1(t) by fixed-grid Simpson on [eps - W, eps + W] plus analytic tails, with
// f = 1 below and f = 0 above the window (requires W >> T).
inline double p1_simpson(double t, const fermitherm::ModelParams& p, double W, long n) {
    const double eps = p.epsilon();
    const double g = p.gamma;
    const double a = 0.5 * g * t;
    const double ea = std::exp(-a);
    auto kernel = [&](double x) {
        return (1.0 - 2.0 * ea * std::cos(x * t) + ea * ea) / (g * g + 4.0 * x * x);
    };
    auto integrand = [&](double x) { return fermitherm::fermi(eps + x, p) * kernel(x); };
    double inner = simpson(integrand, -W, W, n);
    // Left tail: (1 + e^{-2a}) * int_{-inf}^{-W} L - 2 e^{-a} int_W^inf cos(xt) L
    const double smooth = std::atan(g / (2.0 * W)) / (2.0 * g);
    inner += (1.0 + ea * ea) * smooth - 2.0 * ea * cos_tail(W, g, t);
    return std::exp(-g * t) * p.p0() + 2.0 * g / std::numbers::pi * inner;
}

inline double p1_dT_simpson(double t, const fermitherm::ModelParams& p, double W, long n) {
    const double eps = p.epsilon(), mu = p.mu, T = p.temperature, g = p.gamma;
    const double ea = std::exp(-0.5 * g * t);
    auto integrand = [&](double w) {
        const double x = w - eps;
        return fermitherm::fermi_dT(w, mu, T) * (1.0 - 2.0 * ea * std::cos(x * t) + ea * ea) / (g * g + 4.0 * x * x);
    };
    return 2.0 * g / std::numbers::pi * simpson(integrand, mu - W, mu + W, n);
}

// Symmetric logarithmic derivative from the vectorized Lyapunov equation
// L rho + rho L = 2 drho, then F = Tr(rho L^2).
inline double qfi_lyapunov(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& drho) {
    const Eigen::Index d = rho.rows();
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);
    Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(d * d, d * d);
    // column-major vec: vec(L rho) = (rho^T kron I) vec L, vec(rho L) = (I kron rho) vec L
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            op.block(i * d, j * d, d, d) += rho.transpose()(i, j) * id;
            op.block(i * d, j * d, d, d) += id(i, j) * rho;
        }
    Eigen::VectorXcd rhs = 2.0 * Eigen::Map<const Eigen::VectorXcd>(drho.data(), d * d);
    Eigen::VectorXcd vecL = op.completeOrthogonalDecomposition().solve(rhs);
    Eigen::MatrixXcd L = Eigen::Map<Eigen::MatrixXcd>(vecL.data(), d, d);
    return (rho * L * L).trace().real();
}

// Correlation matrix of probes coupled to a discretized flat band of N levels
// on [mu - W, mu + W], by exact single-particle unitary evolution.
struct DiscreteBath {
    Eigen::VectorXd levels;
    Eigen::MatrixXd vectors;
    std::size_t probes;
    Eigen::VectorXd bath;

    DiscreteBath(const std::vector<double>& eps, double mu, double gamma, double W, int N) : probes(eps.size()) {
        const auto n = static_cast<Eigen::Index>(eps.size());
        bath = Eigen::VectorXd::LinSpaced(N, mu - W, mu + W);
        const double dw = bath(1) - bath(0);
        const double v = std::sqrt(gamma * dw / (2.0 * std::numbers::pi));
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n + N, n + N);
        for (Eigen::Index i = 0; i < n; ++i) {
            h(i, i) = eps[static_cast<std::size_t>(i)];
            h.block(i, n, 1, N).setConstant(v);
            h.block(n, i, N, 1).setConstant(v);
        }
        for (int k = 0; k < N; ++k) h(n + k, n + k) = bath(k);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        levels = es.eigenvalues();
        vectors = es.eigenvectors();
    }

    // C(t) for probes initially empty and the bath in a Fermi state at T.
    Eigen::MatrixXcd correlations(double t, double mu, double T) const {
        const auto n = static_cast<Eigen::Index>(probes);
        const Eigen::Index M = levels.size();
        Eigen::VectorXcd phase(M);
        for (Eigen::Index k = 0; k < M; ++k) phase(k) = std::exp(std::complex<double>(0.0, -levels(k) * t));
        const Eigen::MatrixXcd up = (vectors.topRows(n).cast<std::complex<double>>() * phase.asDiagonal()) *
                                    vectors.transpose().cast<std::complex<double>>();
        Eigen::VectorXd c0 = Eigen::VectorXd::Zero(M);
        for (Eigen::Index k = n; k < M; ++k) c0(k) = fermitherm::fermi(bath(k - n), mu, T);
        return up.conjugate() * c0.asDiagonal() * up.transpose();
    }
};

} // namespace oracle
