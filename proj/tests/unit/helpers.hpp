// helpers.hpp — shared fixtures for the unit tests.

#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "nmpec/bath.hpp"
#include "nmpec/generator.hpp"
#include "nmpec/operators.hpp"

namespace testing {

using nmpec::cplx;
using nmpec::Matrix;
using nmpec::Vector;

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline Matrix random_matrix(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Matrix m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = cplx(n(rng), n(rng));
    return m;
}

inline Matrix random_density(int dim, std::mt19937_64& rng) {
    const Matrix g = random_matrix(dim, rng);
    Matrix rho = g * g.adjoint();
    return rho / rho.trace().real();
}

inline Matrix random_unitary(int dim, std::mt19937_64& rng) {
    Eigen::HouseholderQR<Matrix> qr(random_matrix(dim, rng));
    return qr.householderQ();
}

inline Vector ket(std::initializer_list<cplx> amps) {
    Vector v(static_cast<Eigen::Index>(amps.size()));
    Eigen::Index i = 0;
    for (cplx a : amps) v(i++) = a;
    return v;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline nmpec::SystemModel dephasing_model(double lambda) {
    return nmpec::SystemModel(Matrix::Zero(2, 2), {nmpec::ops::sigma_z()}, lambda);
}

inline nmpec::SystemModel spin_boson_model(double delta, double lambda) {
    return nmpec::SystemModel(-0.5 * delta * nmpec::ops::sigma_z(), {nmpec::ops::sigma_x()}, lambda);
}

inline nmpec::BathSpec one_pole(cplx g, cplx omega) { return nmpec::BathSpec::single_channel({{g, omega}}); }

/// The spin-boson initial state used throughout the examples.
inline Vector tilted_state() {
    const double pi = 3.14159265358979323846;
    return ket({std::sqrt(3.0) / 2.0 * std::polar(1.0, -pi / 4), 0.5 * std::polar(1.0, pi / 4)});
}

/// Closed-form dephasing coherence factor exp(-4 lambda^2 int_0^t Re k(s) ds)
/// for k(s) = |g|^2 (e^{i omega s} - 1)/(i omega).
inline double dephasing_factor(double lambda2, double g2, cplx omega, double t) {
    const cplx I(0.0, 1.0);
    const cplx integral = g2 * ((std::exp(I * omega * t) - 1.0) / (I * omega) - t) / (I * omega);
    return std::exp(-4.0 * lambda2 * integral.real());
}

}  // namespace testing
