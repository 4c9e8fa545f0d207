// nmsse.hpp — linear non-Markovian stochastic Schroedinger equation
//
//   d psi/dt = -i H psi - lambda^2 int_0^t K(tau) psi(t - tau) dtau + lambda sum_j eta_j(t) S_j psi
//   K(tau)   = sum_jk C_jk(tau) S_j e^{-iH tau} S_k
//
// integrated by Heun's method on the fine grid, memory integral by the
// trapezoid rule over the stored history.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nmpec/bath.hpp"
#include "nmpec/generator.hpp"
#include "nmpec/reference.hpp"
#include "nmpec/rng.hpp"

namespace nmpec {

enum class MemoryMethod {
    pole_recursion,  ///< trapezoid sum updated per pole in O(1) per step (exact rewrite of `history`)
    history,         ///< explicit trapezoid sum over the stored history, truncated window
};

struct NmsseOptions {
    NoiseMethod noise = NoiseMethod::circulant;
    NoiseConvention convention = NoiseConvention::conjugate_bcf;
    MemoryMethod memory = MemoryMethod::pole_recursion;
    double truncation = 1e-8;  ///< history window drops e^{-theta tau} below this
    double blowup_norm = 10.0;
};

struct StochasticTrajectory {
    std::size_t step = 0;
    std::vector<cplx> psi;           ///< current state
    std::vector<cplx> history_head;  ///< state recorded in the history at the current step
    std::vector<cplx> aux;           ///< pole accumulators, pole-major
    std::vector<cplx> history;       ///< step-major, history method only
    NoisePath noise;
    bool aborted = false;
    std::string diagnostic;

    [[nodiscard]] Vector state() const;
    [[nodiscard]] double norm() const;
};

class NmsseEngine {
public:
    NmsseEngine(const SystemModel& model, const BathSpec& bath, double dt_f, std::size_t steps,
                NmsseOptions options = {});

    [[nodiscard]] StochasticTrajectory start(const Vector& psi0, RandomStream& noise_stream) const;
    [[nodiscard]] StochasticTrajectory start(const Vector& psi0, NoisePath noise) const;

    /// Advances up to `count` fine steps; returns false once the trajectory
    /// is aborted by the blow-up guard.
    bool advance(StochasticTrajectory& traj, std::size_t count = 1) const;

    /// Replaces the current state (e.g. after a basis operation). With
    /// `record_in_history` the memory integral sees the new state at the
    /// current point; otherwise the history keeps the previous one.
    void replace_state(StochasticTrajectory& traj, const Vector& psi, bool record_in_history = true) const;

    /// Precomputed K(i dt_f).
    [[nodiscard]] Matrix kernel(std::size_t i) const;
    /// K(tau) evaluated from the correlation matrix and the couplings.
    [[nodiscard]] Matrix kernel_direct(double tau) const;

    [[nodiscard]] double dt() const { return dt_; }
    [[nodiscard]] std::size_t steps() const { return steps_; }
    [[nodiscard]] std::size_t window() const { return window_; }
    [[nodiscard]] const NoiseGenerator& noise() const { return noise_; }
    [[nodiscard]] const SystemModel& model() const { return model_; }
    [[nodiscard]] const NmsseOptions& options() const { return options_; }

    struct Stepper {
        virtual ~Stepper() = default;
        virtual bool run(StochasticTrajectory& traj, std::size_t count) const = 0;
    };

private:
    void build_kernels(const HeisenbergPicture& hp);

    SystemModel model_;
    BathSpec bath_;
    double dt_;
    std::size_t steps_;
    NmsseOptions options_;
    NoiseGenerator noise_;
    std::size_t window_ = 0;
    std::vector<Matrix> jumps_, prop_, kernels_;
    Matrix self_;  // (dt/2) K(0)
    std::shared_ptr<const Stepper> stepper_;
};

struct EnsembleOptions {
    std::size_t stride = 1;  ///< output every stride fine steps
    unsigned threads = 0;    ///< 0 = hardware concurrency
    NmsseOptions nmsse;
    std::size_t chunk = 64;  ///< trajectories per work unit
};

struct EnsembleResult {
    std::vector<DensityState> states;  ///< renormalized to unit trace
    std::vector<Matrix> stderr_;       ///< entrywise (stderr Re, stderr Im) of the unnormalized mean
    std::vector<double> trace;         ///< mean |psi|^2 before renormalization
    std::size_t samples = 0;
    std::size_t aborted = 0;
    NoiseDiagnostics diagnostics;
};

EnsembleResult ensemble_density(const SystemModel& model, const BathSpec& bath, const Vector& psi0, double T,
                                double dt_f, std::size_t N, std::uint64_t seed, const EnsembleOptions& options = {});

}  // namespace nmpec
