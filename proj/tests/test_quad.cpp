// test_quad.cpp — Adaptive quadrature, Lorentzian integrals and the matrix exponential

#include <cmath>
#include <complex>
#include <numbers>

#include <gtest/gtest.h>

#include "fermitherm/linalg.hpp"
#include "fermitherm/quad.hpp"
#include "oracles.hpp"

using namespace fermitherm;

TEST(Adaptive, PolynomialIsExact) {
    const QuadResult r = integrate_adaptive([](double x) { return 3.0 * x * x; }, {0.0, 2.0}, QuadConfig{});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value, 8.0, 1e-14);
}

TEST(Adaptive, PeakedIntegrandWithBreakpoint) {
    auto f = [](double x) { return 1.0 / (1e-4 + x * x); };
    const QuadResult r = integrate_adaptive(f, {-1.0, 0.0, 1.0}, QuadConfig{});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value, 2.0 * std::atan(100.0) * 100.0, 1e-8);
}

TEST(Adaptive, ComplexValued) {
    auto f = [](double x) { return std::exp(std::complex<double>(0.0, 3.0 * x)); };
    const ComplexQuadResult r = integrate_adaptive(f, {0.0, 1.0}, QuadConfig{});
    const std::complex<double> exact = (std::exp(std::complex<double>(0.0, 3.0)) - 1.0) / std::complex<double>(0.0, 3.0);
    EXPECT_NEAR(std::abs(r.value - exact), 0.0, 1e-13);
}

TEST(Adaptive, ReportsExhaustedBudget) {
    QuadConfig cfg;
    cfg.max_panels = 16;
    cfg.rel_tol = 1e-14;
    cfg.abs_tol = 1e-300;
    const QuadResult r = integrate_adaptive([](double x) { return std::sqrt(std::abs(std::sin(50.0 * x))); }, {0.0, 10.0}, cfg);
    EXPECT_FALSE(r.converged);
}

TEST(HalfLine, Exponential) {
    const QuadResult r = integrate_half_line([](double y) { return std::exp(-2.0 * y); }, 1.0, QuadConfig{});
    EXPECT_NEAR(r.value, 0.5, 1e-12);
}

TEST(Lorentz, BelowClosedForm) {
    const double g = 0.7;
    for (double x0 : {-5.0, -0.1, 0.0, 0.3, 4.0}) {
        const QuadResult r = integrate_half_line([&](double y) { return detail::lorentz(x0 - y, g); }, 1.0, QuadConfig{});
        EXPECT_NEAR(detail::lorentz_below(x0, g), r.value, 1e-10) << x0;
    }
}

TEST(Lorentz, RotatedCosineTailMatchesIntegrationByParts) {
    for (double t : {0.5, 2.0, 10.0}) {
        const double W = 200.0, g = 1.0;
        const QuadResult r = detail::cos_lorentz_above(W, g, t, QuadConfig{});
        EXPECT_TRUE(r.converged);
        EXPECT_NEAR(r.value, oracle::cos_tail(W, g, t), 1e-12) << t;
    }
}

TEST(Lorentz, FullLineCosine) {
    // integral over R of cos(x t)/(g^2 + 4x^2) = pi/(2g) e^{-g t/2}
    const double g = 0.8, t = 1.3;
    const QuadResult r = detail::cos_lorentz_above(0.0, g, t, QuadConfig{});
    EXPECT_NEAR(2.0 * r.value, std::numbers::pi / (2.0 * g) * std::exp(-0.5 * g * t), 1e-11);
}

TEST(Weight, OddDifferenceSeriesAgreesWithDirect) {
    for (double t : {0.05, 0.2}) {
        for (double y : {0.1, 1.0, 1.5}) {
            const double direct = detail::transient_weight(y - 1.0, 1.0, t) - detail::transient_weight(-y - 1.0, 1.0, t);
            const double stable = detail::weight_odd_difference(Weight::transient, y, 1.0, 1.0, t);
            EXPECT_NEAR(stable, direct, 1e-14) << t << " " << y;
        }
    }
}

TEST(FermiLorentzian, SteadyAgainstSimpson) {
    const ModelParams p = single_probe_params(1.0, 0.0, 0.5, 0.4);
    const QuadResult r = integrate_fermi_lorentzian(0.0, p, QuadConfig{}, Weight::steady, Numerator::fermi);
    // steady = (2 Gamma / pi) * r; compare to the t -> inf Simpson oracle
    const double W = 4000.0;
    auto integrand = [&](double x) { return fermi(1.0 + x, p) / (0.25 + 4.0 * x * x); };
    const double ref = oracle::simpson(integrand, -W, W, 2'000'000) + std::atan(0.5 / (2.0 * W)) / (2.0 * 0.5);
    EXPECT_NEAR(r.value, ref, 1e-9);
}

TEST(FermiLorentzian, ResidueRouteMatchesPanels) {
    for (double t : {0.7, 3.0, 12.0}) {
        for (double T : {0.2, 1.5}) {
            const ModelParams p = single_probe_params(1.0, 0.0, 0.6, T);
            QuadConfig panels, residues;
            panels.route = OscillationRoute::panels;
            residues.route = OscillationRoute::residues;
            for (Numerator n : {Numerator::fermi, Numerator::fermi_dT}) {
                const double a = integrate_fermi_lorentzian(t, p, panels, Weight::transient, n).value;
                const double b = integrate_fermi_lorentzian(t, p, residues, Weight::transient, n).value;
                EXPECT_NEAR(a, b, 1e-10) << "t=" << t << " T=" << T;
            }
        }
    }
}

TEST(FermiLorentzian, TransientAtZeroTimeVanishes) {
    const ModelParams p;
    EXPECT_EQ(integrate_fermi_lorentzian(0.0, p, QuadConfig{}, Weight::transient, Numerator::fermi).value, 0.0);
}

TEST(FermiLorentzian, RejectsNegativeTime) {
    EXPECT_THROW(integrate_fermi_lorentzian(-1.0, ModelParams{}, QuadConfig{}, Weight::transient, Numerator::fermi),
                 InvalidParams);
}

TEST(QuadConfig, Validation) {
    QuadConfig c;
    c.rel_tol = 0.0;
    EXPECT_THROW(c.validate(), InvalidParams);
    c = QuadConfig{};
    c.window_scale = 0.5;
    EXPECT_THROW(c.validate(), InvalidParams);
}

TEST(Expm, DiagonalAndNilpotent) {
    ComplexMatrix d = ComplexMatrix::Zero(2, 2);
    d(0, 0) = {-1.0, 2.0};
    d(1, 1) = {0.5, 0.0};
    const ComplexMatrix e = expm(d, 0.3);
    EXPECT_NEAR(std::abs(e(0, 0) - std::exp(0.3 * d(0, 0))), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(e(1, 1) - std::exp(0.15)), 0.0, 1e-14);

    // Jordan block: not diagonalizable, falls back to Pade
    ComplexMatrix j = ComplexMatrix::Zero(2, 2);
    j(0, 0) = j(1, 1) = {-0.5, 0.0};
    j(0, 1) = 1.0;
    const ComplexMatrix ej = expm(j, 2.0);
    EXPECT_NEAR(std::abs(ej(0, 1) - 2.0 * std::exp(-1.0)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(ej(1, 0)), 0.0, 1e-14);
}

TEST(Expm, SemigroupProperty) {
    ComplexMatrix a(3, 3);
    a << std::complex<double>(-0.5, -1.0), -0.5, -0.5, -0.5, std::complex<double>(-0.5, 0.3), -0.5, -0.5, -0.5,
        std::complex<double>(-0.5, 2.0);
    const ComplexMatrix lhs = expm(a, 1.7);
    const ComplexMatrix rhs = expm(a, 0.9) * expm(a, 0.8);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LT((expm(a, 0.0) - ComplexMatrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Expm, RejectsBadShapes) {
    EXPECT_THROW(expm(ComplexMatrix(2, 3), 1.0), InvalidParams);
    EXPECT_THROW(expm(ComplexMatrix::Zero(9, 9), 1.0), InvalidParams);
}
