// bath.hpp — pole-expanded bath correlation functions, spectral constants and
// stationary colored Gaussian noise for the stochastic unraveling.
//
// The correlation function is
//     C_jk(t) = sum_mu conj(g_{j,mu}) g_{k,mu} exp(i omega_mu t),   t >= 0,
// extended to t < 0 by C_jk(-t) = conj(C_kj(t)).

#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nmpec/rng.hpp"

namespace nmpec {

using cplx = std::complex<double>;

struct Pole {
    std::vector<cplx> amplitudes;  ///< g_{j,mu}, one per channel
    cplx omega;                    ///< Im(omega) > 0
};

class BathSpec {
public:
    BathSpec() = default;
    /// Throws std::invalid_argument naming the offending pole when a frequency
    /// does not decay or the amplitude count differs from `channels`.
    BathSpec(std::size_t channels, std::vector<Pole> poles);

    /// Single channel, one pole per (g, omega) pair.
    static BathSpec single_channel(const std::vector<std::pair<cplx, cplx>>& poles);

    [[nodiscard]] std::size_t channels() const { return channels_; }
    [[nodiscard]] const std::vector<Pole>& poles() const { return poles_; }
    [[nodiscard]] bool empty() const { return poles_.empty(); }
    /// inf_mu Im(omega_mu); +inf for an empty bath.
    [[nodiscard]] double theta() const;

private:
    std::size_t channels_ = 1;
    std::vector<Pole> poles_;
};

/// C(t) as a J x J matrix, valid for any real t.
Eigen::MatrixXcd bcf_eval(const BathSpec& bath, double t);

struct EnvParams {
    double g_b1 = 0.0;   ///< 2 sum_mu (sum_j |g_{j,mu}|)^2 / Im(omega_mu), also called G_env
    double g_b2 = 0.0;   ///< (1/2) sum_mu (sum_j |g_{j,mu}|)^2
    double theta = 0.0;  ///< inf_mu Im(omega_mu)
};

EnvParams env_params(const BathSpec& bath);

/// One sample path eta_j(t_k) on a uniform grid t_k = k * dt, k = 0..steps.
struct NoisePath {
    double dt = 0.0;
    std::vector<std::vector<cplx>> values;  ///< [channel][grid index]

    [[nodiscard]] std::size_t channels() const { return values.size(); }
    [[nodiscard]] std::size_t points() const { return values.empty() ? 0 : values.front().size(); }
    [[nodiscard]] cplx operator()(std::size_t channel, std::size_t k) const { return values[channel][k]; }
    /// Linear interpolation between grid points.
    [[nodiscard]] cplx at(std::size_t channel, double t) const;
};

struct UniformGrid {
    double dt = 0.0;
    std::size_t steps = 0;  ///< grid has steps + 1 points
};

enum class NoiseMethod {
    circulant,       ///< circulant embedding of the sampled covariance, FFT synthesis
    pole_recursion,  ///< exact AR(1) recursion per pole (independent check route)
};

/// Second-moment convention of the complex noise; see README. The default
/// `conjugate_bcf` sets E[eta_j(t) conj(eta_k(s))] = conj(C_jk(t - s)), which
/// is the convention under which the noise-averaged unraveling reproduces
/// the second-order master equation. `bcf` drops the conjugation.
enum class NoiseConvention { conjugate_bcf, bcf };

struct NoiseDiagnostics {
    std::size_t embedding_size = 0;
    double min_eigenvalue = 0.0;   ///< smallest spectral eigenvalue before clipping
    double max_eigenvalue = 0.0;
    std::size_t clipped = 0;       ///< eigenvalues in [-1e-10 * max, 0) set to zero
    std::vector<std::string> warnings;
};

/// Stationary complex Gaussian noise generator with E[eta] = 0,
/// E[eta eta] = 0 and the covariance fixed by the bath and the convention.
class NoiseGenerator {
public:
    NoiseGenerator(const BathSpec& bath, UniformGrid grid,
                   NoiseMethod method = NoiseMethod::circulant,
                   NoiseConvention convention = NoiseConvention::conjugate_bcf);

    [[nodiscard]] NoisePath sample(RandomStream& stream) const;
    /// E[eta_a(t + tau) conj(eta_b(t))] as a J x J matrix.
    [[nodiscard]] Eigen::MatrixXcd covariance(double tau) const;
    [[nodiscard]] const NoiseDiagnostics& diagnostics() const { return diag_; }
    [[nodiscard]] const UniformGrid& grid() const { return grid_; }

private:
    void build_circulant();

    BathSpec bath_;
    UniformGrid grid_;
    NoiseMethod method_;
    NoiseConvention convention_;
    NoiseDiagnostics diag_;
    std::size_t m_ = 0;
    std::vector<Eigen::MatrixXcd> spectral_factor_;  ///< per frequency, Lambda_j = F F^dagger
};

/// N paths, path i drawn from stream (seed, domain, first_index + i).
std::vector<NoisePath> noise_paths(const BathSpec& bath, UniformGrid grid, std::size_t count,
                                   std::uint64_t seed, std::uint64_t first_index = 0,
                                   NoiseMethod method = NoiseMethod::circulant);

}  // namespace nmpec
