// test_model.cpp — Fermi statistics and parameter validation

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "fermitherm/model.hpp"

using namespace fermitherm;

TEST(Fermi, SymmetryPointIsOneHalf) {
    for (double T : {1e-3, 0.1, 1.0, 1e4}) EXPECT_EQ(fermi(0.3, 0.3, T), 0.5);
}

TEST(Fermi, InfiniteTemperatureLimit) { EXPECT_NEAR(fermi(1.0, 0.0, 1e12), 0.5, 1e-12); }

TEST(Fermi, TenThermalEnergiesAboveMu) {
    const double expected = 1.0 / (std::exp(10.0) + 1.0); // 4.5398e-5
    EXPECT_NEAR(fermi(1.0, 0.0, 0.1), expected, 1e-15 * expected);
    EXPECT_NEAR(expected, 4.5398e-5, 1e-9);
}

TEST(Fermi, SaturatesWithoutOverflow) {
    EXPECT_EQ(fermi(1.0, 0.0, 1e-6), 0.0);
    EXPECT_EQ(fermi(-1.0, 0.0, 1e-6), 1.0);
    EXPECT_EQ(fermi_dT(1.0, 0.0, 1e-6), 0.0);
    EXPECT_TRUE(std::isfinite(fermi_dT(1.0, 0.0, 1e-3)));
}

TEST(Fermi, MonotoneAndInsideUnitInterval) {
    const ModelParams p = single_probe_params(1.0, 0.2, 1.0, 0.7);
    double previous = 1.0;
    for (int i = 0; i <= 400; ++i) {
        const double w = -20.0 + 0.1 * i;
        const double f = fermi(w, p);
        EXPECT_GT(f, 0.0);
        EXPECT_LT(f, 1.0);
        EXPECT_LT(f, previous);
        previous = f;
    }
}

TEST(FermiDT, ZeroAtChemicalPotential) {
    for (double T : {0.01, 1.0, 50.0}) EXPECT_EQ(fermi_dT(0.4, 0.4, T), 0.0);
}

TEST(FermiDT, ClosedFormAtUnitGapAndTemperature) {
    const double e = std::exp(1.0);
    EXPECT_NEAR(fermi_dT(1.0, 0.0, 1.0), e / ((1.0 + e) * (1.0 + e)), 1e-15);
    EXPECT_NEAR(fermi_dT(1.0, 0.0, 1.0), 0.196612, 1e-6);
}

TEST(FermiDT, MatchesCentredFiniteDifference) {
    for (double T : {0.05, 0.3, 1.0, 4.0}) {
        for (int i = 0; i <= 60; ++i) {
            const double w = -3.0 + 0.1 * i;
            const double h = 1e-6 * T;
            // difference the small side, f(w) = 1 - f(-w), to avoid cancellation near 1
            const double s = w < 0.0 ? -1.0 : 1.0;
            const double fd = s * (fermi(s * w, 0.0, T + h) - fermi(s * w, 0.0, T - h)) / (2.0 * h);
            const double an = fermi_dT(w, 0.0, T);
            EXPECT_LT(std::abs(an - fd) / std::max(std::abs(an), 1e-12), 1e-5) << "T=" << T << " w=" << w;
        }
    }
}

TEST(FermiDT, AntisymmetricAboutMu) {
    const double mu = 0.5;
    for (double y : {0.01, 0.3, 1.0, 2.5})
        for (double T : {0.2, 1.0}) {
            const double a = fermi_dT(mu + y, mu, T), b = fermi_dT(mu - y, mu, T);
            EXPECT_GT(a * (-b), 0.0);
            EXPECT_NEAR(a, -b, 1e-15);
        }
}

TEST(FermiComplex, AgreesWithRealAxis) {
    for (double w : {-2.0, 0.0, 0.7}) {
        EXPECT_NEAR(std::abs(fermi(std::complex<double>(w, 0.0), 0.0, 0.5) - fermi(w, 0.0, 0.5)), 0.0, 1e-15);
        EXPECT_NEAR(std::abs(fermi_dT(std::complex<double>(w, 0.0), 0.0, 0.5) - fermi_dT(w, 0.0, 0.5)), 0.0, 1e-14);
    }
}

TEST(ModelParams, RejectsInvalidValues) {
    EXPECT_THROW(single_probe_params(1.0, 0.0, 0.0, 1.0).validate(), InvalidParams);
    EXPECT_THROW(single_probe_params(1.0, 0.0, 1.0, -1.0).validate(), InvalidParams);
    EXPECT_THROW(single_probe_params(1.0, 0.0, 1.0, 1.0, 1.5).validate(), InvalidParams);
    EXPECT_THROW(single_probe_params(std::numeric_limits<double>::quiet_NaN(), 0.0, 1.0, 1.0).validate(), InvalidParams);
    ModelParams p;
    p.epsilons = {1.0, 2.0};
    EXPECT_THROW(p.validate(), InvalidParams);
    p.epsilons.clear();
    p.initial_occupations.clear();
    EXPECT_THROW(p.validate(), InvalidParams);
}

TEST(ModelParams, DefaultsAndHelpers) {
    ModelParams p;
    EXPECT_NO_THROW(p.validate());
    EXPECT_EQ(p.epsilon() - p.mu, 1.0);
    EXPECT_EQ(p.p0(), 0.0);
    EXPECT_EQ(p.with_temperature(4.0).beta(), 0.25);
    EXPECT_EQ(p.with_gamma(0.3).gamma, 0.3);
    ModelParams two;
    two.epsilons = {0.0, 1.0};
    two.initial_occupations = {0.2, 0.7};
    EXPECT_EQ(two.single_mode(1).epsilon(), 1.0);
    EXPECT_EQ(two.single_mode(1).p0(), 0.7);
}

TEST(BathSpec, FlatSpectralDensity) {
    const BathSpec b = BathSpec::from(single_probe_params(1.0, 0.0, 0.4, 1.0));
    EXPECT_EQ(b.spectral_density(-5.0), 0.4);
    EXPECT_EQ(b.spectral_density(7.0), 0.4);
    EXPECT_THROW((BathSpec{BathSpec::Kind::flat, 0.0}.validate()), InvalidParams);
}
