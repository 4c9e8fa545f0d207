#include "nmpec/bath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace nmpec {

BathSpec::BathSpec(std::size_t channels, std::vector<Pole> poles)
    : channels_(channels), poles_(std::move(poles)) {
    if (channels_ == 0) throw std::invalid_argument("BathSpec: at least one channel is required");
    for (std::size_t mu = 0; mu < poles_.size(); ++mu) {
        const auto& p = poles_[mu];
        if (p.amplitudes.size() != channels_) {
            std::ostringstream os;
            os << "pole " << mu << ": expected " << channels_ << " amplitudes, got " << p.amplitudes.size();
            throw std::invalid_argument(os.str());
        }
        if (!(p.omega.imag() > 0.0) || !std::isfinite(p.omega.real()) || !std::isfinite(p.omega.imag())) {
            std::ostringstream os;
            os << "pole " << mu << ": non-decaying frequency (Im(omega) = " << p.omega.imag() << ")";
            throw std::invalid_argument(os.str());
        }
    }
}

BathSpec BathSpec::single_channel(const std::vector<std::pair<cplx, cplx>>& poles) {
    std::vector<Pole> out;
    out.reserve(poles.size());
    for (const auto& [g, omega] : poles) out.push_back(Pole{{g}, omega});
    return BathSpec(1, std::move(out));
}

double BathSpec::theta() const {
    double theta = std::numeric_limits<double>::infinity();
    for (const auto& p : poles_) theta = std::min(theta, p.omega.imag());
    return theta;
}

Eigen::MatrixXcd bcf_eval(const BathSpec& bath, double t) {
    const auto J = static_cast<Eigen::Index>(bath.channels());
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(J, J);
    const double at = std::abs(t);
    for (const auto& p : bath.poles()) {
        const cplx phase = std::exp(cplx(0, 1) * p.omega * at);
        for (Eigen::Index j = 0; j < J; ++j)
            for (Eigen::Index k = 0; k < J; ++k)
                c(j, k) += std::conj(p.amplitudes[static_cast<std::size_t>(j)]) *
                           p.amplitudes[static_cast<std::size_t>(k)] * phase;
    }
    if (t < 0) return c.adjoint();
    return c;
}

EnvParams env_params(const BathSpec& bath) {
    if (bath.empty()) throw std::invalid_argument("env_params: bath has no poles");
    EnvParams e;
    e.theta = bath.theta();
    for (const auto& p : bath.poles()) {
        double s = 0.0;
        for (const auto& g : p.amplitudes) s += std::abs(g);
        e.g_b1 += 2.0 * s * s / p.omega.imag();
        e.g_b2 += 0.5 * s * s;
    }
    return e;
}

cplx NoisePath::at(std::size_t channel, double t) const {
    const auto& v = values.at(channel);
    if (v.empty()) return 0.0;
    const double x = t / dt;
    if (x <= 0.0) return v.front();
    const auto k = static_cast<std::size_t>(std::floor(x));
    if (k + 1 >= v.size()) return v.back();
    const double f = x - static_cast<double>(k);
    return (1.0 - f) * v[k] + f * v[k + 1];
}

NoiseGenerator::NoiseGenerator(const BathSpec& bath, UniformGrid grid, NoiseMethod method,
                               NoiseConvention convention)
    : bath_(bath), grid_(grid), method_(method), convention_(convention) {
    if (!(grid_.dt > 0.0)) throw std::invalid_argument("NoiseGenerator: grid step must be positive");
    if (method_ == NoiseMethod::circulant && !bath_.empty()) build_circulant();
}

Eigen::MatrixXcd NoiseGenerator::covariance(double tau) const {
    const Eigen::MatrixXcd c = bcf_eval(bath_, tau);
    return convention_ == NoiseConvention::conjugate_bcf ? Eigen::MatrixXcd(c.conjugate()) : c;
}

void NoiseGenerator::build_circulant() {
    const auto J = static_cast<Eigen::Index>(bath_.channels());
    std::size_t m = 2;
    while (m < 2 * std::max<std::size_t>(grid_.steps, 1)) m *= 2;
    constexpr std::size_t max_size = std::size_t{1} << 22;
    constexpr double clip_tol = 1e-10;

    Eigen::FFT<double> fft;
    for (;;) {
        const std::size_t half = m / 2;
        // Lagged covariance matrices on the circulant ring.
        std::vector<Eigen::MatrixXcd> lag(m, Eigen::MatrixXcd::Zero(J, J));
        for (std::size_t k = 0; k <= half; ++k) lag[k] = covariance(static_cast<double>(k) * grid_.dt);
        lag[half] = 0.5 * (lag[half] + lag[half].adjoint().eval());
        for (std::size_t k = 1; k < half; ++k) lag[m - k] = lag[k].adjoint();

        std::vector<Eigen::MatrixXcd> spectrum(m, Eigen::MatrixXcd::Zero(J, J));
        std::vector<cplx> in(m), out(m);
        for (Eigen::Index a = 0; a < J; ++a) {
            for (Eigen::Index b = 0; b < J; ++b) {
                for (std::size_t k = 0; k < m; ++k) in[k] = lag[k](a, b);
                fft.fwd(out, in);
                for (std::size_t k = 0; k < m; ++k) spectrum[k](a, b) = out[k];
            }
        }

        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        std::vector<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>> eig(m);
        for (std::size_t k = 0; k < m; ++k) {
            eig[k].compute(0.5 * (spectrum[k] + spectrum[k].adjoint()));
            lo = std::min(lo, eig[k].eigenvalues().minCoeff());
            hi = std::max(hi, eig[k].eigenvalues().maxCoeff());
        }
        diag_.embedding_size = m;
        diag_.min_eigenvalue = lo;
        diag_.max_eigenvalue = hi;

        const bool acceptable = lo >= -clip_tol * std::max(hi, 1.0);
        if (!acceptable && m < max_size) {
            m *= 2;
            continue;
        }
        if (!acceptable) {
            std::ostringstream os;
            os << "noise covariance is not positive after circulant embedding (min eigenvalue " << lo
               << ", max " << hi << ", embedding size " << m << ")";
            throw std::runtime_error(os.str());
        }

        m_ = m;
        spectral_factor_.resize(m);
        diag_.clipped = 0;
        for (std::size_t k = 0; k < m; ++k) {
            Eigen::VectorXd ev = eig[k].eigenvalues();
            for (Eigen::Index i = 0; i < ev.size(); ++i) {
                if (ev(i) < 0.0) {
                    ev(i) = 0.0;
                    ++diag_.clipped;
                }
            }
            spectral_factor_[k] = eig[k].eigenvectors() * ev.cwiseSqrt().asDiagonal();
        }
        if (diag_.clipped > 0) {
            std::ostringstream os;
            os << "clipped " << diag_.clipped << " slightly negative spectral eigenvalues (min " << lo << ")";
            diag_.warnings.push_back(os.str());
        }
        return;
    }
}

NoisePath NoiseGenerator::sample(RandomStream& stream) const {
    const std::size_t J = bath_.channels();
    const std::size_t points = grid_.steps + 1;
    NoisePath path;
    path.dt = grid_.dt;
    path.values.assign(J, std::vector<cplx>(points, cplx(0.0)));
    if (bath_.empty()) return path;

    if (method_ == NoiseMethod::pole_recursion) {
        const bool conj = convention_ == NoiseConvention::conjugate_bcf;
        for (const auto& p : bath_.poles()) {
            const cplx w = conj ? std::conj(p.omega) : p.omega;
            const cplx a = std::exp((conj ? cplx(0, -1) : cplx(0, 1)) * w * grid_.dt);
            const double s = std::sqrt(std::max(0.0, 1.0 - std::norm(a)));
            cplx zeta = stream.complex_normal();
            for (std::size_t k = 0; k < points; ++k) {
                if (k > 0) zeta = a * zeta + s * stream.complex_normal();
                for (std::size_t j = 0; j < J; ++j) {
                    const cplx g = conj ? p.amplitudes[j] : std::conj(p.amplitudes[j]);
                    path.values[j][k] += g * zeta;
                }
            }
        }
        return path;
    }

    const auto Jx = static_cast<Eigen::Index>(J);
    std::vector<std::vector<cplx>> freq(J, std::vector<cplx>(m_));
    Eigen::VectorXcd z(Jx);
    for (std::size_t k = 0; k < m_; ++k) {
        for (Eigen::Index j = 0; j < Jx; ++j) z(j) = stream.complex_normal();
        const Eigen::VectorXcd y = spectral_factor_[k] * z;
        for (std::size_t j = 0; j < J; ++j) freq[j][k] = y(static_cast<Eigen::Index>(j));
    }
    Eigen::FFT<double> fft;
    std::vector<cplx> time(m_);
    const double scale = std::sqrt(static_cast<double>(m_));
    for (std::size_t j = 0; j < J; ++j) {
        fft.inv(time, freq[j]);
        for (std::size_t k = 0; k < points; ++k) path.values[j][k] = scale * time[k];
    }
    return path;
}

std::vector<NoisePath> noise_paths(const BathSpec& bath, UniformGrid grid, std::size_t count,
                                   std::uint64_t seed, std::uint64_t first_index, NoiseMethod method) {
    if (count == 0) throw std::invalid_argument("noise_paths: count must be positive");
    const NoiseGenerator gen(bath, grid, method);
    std::vector<NoisePath> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        RandomStream stream(seed, StreamDomain::user, first_index + i);
        out.push_back(gen.sample(stream));
    }
    return out;
}

}  // namespace nmpec
