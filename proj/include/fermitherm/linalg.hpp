// linalg.hpp — Small dense complex matrices: eigenmodes and the matrix exponential

#pragma once

#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "fermitherm/errors.hpp"

namespace fermitherm {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// A = V diag(values) V^{-1}
struct EigenModes {
    ComplexVector values;
    ComplexMatrix vectors;
    ComplexMatrix inverse;
    double condition{std::numeric_limits<double>::infinity()};

    bool usable(double max_condition = 1e8) const {
        return std::isfinite(condition) && condition < max_condition;
    }
};

inline double condition_number(const ComplexMatrix& m) {
    Eigen::JacobiSVD<ComplexMatrix> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(s.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / s(s.size() - 1);
}

inline EigenModes eigen_modes(const ComplexMatrix& a) {
    EigenModes out;
    Eigen::ComplexEigenSolver<ComplexMatrix> es(a, true);
    if (es.info() != Eigen::Success) return out;
    out.values = es.eigenvalues();
    out.vectors = es.eigenvectors();
    out.condition = condition_number(out.vectors);
    if (std::isfinite(out.condition)) out.inverse = out.vectors.inverse();
    return out;
}

inline bool all_finite(const ComplexMatrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i)
        if (!std::isfinite(m.data()[i].real()) || !std::isfinite(m.data()[i].imag())) return false;
    return true;
}

// e^{A t}. Eigendecomposition when the eigenvector matrix is well conditioned,
// otherwise scaling-and-squaring with Pade approximants (Eigen MatrixFunctions).
inline ComplexMatrix expm(const ComplexMatrix& a, double t) {
    if (a.rows() != a.cols() || a.rows() < 1) throw InvalidParams("expm: matrix must be square and non-empty");
    if (a.rows() > 8) throw InvalidParams("expm: dimension above 8 is not supported");
    const EigenModes modes = eigen_modes(a);
    if (modes.usable()) {
        ComplexVector e(modes.values.size());
        for (Eigen::Index k = 0; k < e.size(); ++k) e(k) = std::exp(modes.values(k) * t);
        ComplexMatrix out = modes.vectors * e.asDiagonal() * modes.inverse;
        if (all_finite(out)) return out;
    }
    ComplexMatrix scaled = a * t;
    ComplexMatrix out = scaled.exp();
    if (!all_finite(out)) throw SingularDecomposition("expm: both eigen and Pade paths failed");
    return out;
}

} // namespace fermitherm
