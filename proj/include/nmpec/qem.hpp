// qem.hpp — Monte Carlo mitigation loop, estimator and bound calculators.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "nmpec/bath.hpp"
#include "nmpec/generator.hpp"
#include "nmpec/nmsse.hpp"
#include "nmpec/pec.hpp"

namespace nmpec {

enum class RunMode { noisy_only, mitigated, both };
/// Which state the memory integral records at a step boundary where a basis
/// operation was applied.
enum class HistoryMode { post_operation, pre_operation };

struct RunConfig {
    SystemModel model;
    BathSpec bath;
    double T = 0.0;
    double dt = 0.0;
    double dt_f = 0.0;
    std::size_t N_r = 1;
    std::uint64_t seed = 0;
    std::vector<Matrix> observables;
    std::vector<std::string> observable_names;
    RunMode mode = RunMode::both;
    Vector psi0;
    PlanOptions plan;
    HistoryMode history = HistoryMode::post_operation;
    NmsseOptions nmsse;
    unsigned threads = 0;
    double epsilon = 0.1;
    double delta = 0.05;

    /// M = T / dt
    [[nodiscard]] std::size_t steps() const;
    /// dt / dt_f
    [[nodiscard]] std::size_t substeps() const;
    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

struct TrajectoryOutcome {
    std::vector<std::vector<double>> values;  ///< [observable][step], coefficient * <psi|O|psi>
    std::vector<double> trace_weight;         ///< [step], coefficient * <psi|psi>
    std::vector<double> coefficient;          ///< [step], running product of gamma * alpha * weight
    std::vector<std::size_t> indices;         ///< sampled basis index per step
    bool dead = false;
    std::size_t death_step = 0;
    bool aborted = false;
    std::string diagnostic;
};

/// Runs one trajectory. With `plans` empty the trajectory is the bare noisy
/// evolution. `forced` overrides sampling with fixed indices.
TrajectoryOutcome run_trajectory(const RunConfig& config, const NmsseEngine& engine,
                                 const std::vector<QuasiProbabilityPlan>& plans, std::size_t index,
                                 const std::vector<std::size_t>* forced = nullptr);
TrajectoryOutcome run_trajectory(const RunConfig& config, const std::vector<QuasiProbabilityPlan>& plans,
                                 std::size_t index, const std::vector<std::size_t>* forced = nullptr);

struct BoundValues {
    EnvParams env;
    double h_norm = 0.0;
    double one_step = 0.0;         ///< at t = 0
    double bias = 0.0;
    double gamma_constant = 0.0;   ///< c in gamma_tot <= exp(c lambda^2 T G_b1)
    double gamma_bound = 1.0;
    std::size_t theorem_samples = 0;
    std::size_t required_samples = 0;  ///< from the compiled gamma_tot when available
    double gamma_tot = 1.0;
    double dt_prescription = 0.0;
};

double one_step_bound(const EnvParams& env, double h_norm, double lambda2, double dt, double t);
double bias_bound(const EnvParams& env, double h_norm, double lambda2, double dt, double T);
/// U_max * P_S * 2^n with U_max = max_ab sum_l |u[l,a,b]| and P_S the largest
/// Pauli 1-norm among the couplings.
double gamma_constant(const SystemModel& model);
double gamma_bound(const EnvParams& env, const SystemModel& model, double T);
/// ceil(4 ln(2/delta) exp(lambda^2 T G_b1) / eps^2)
std::size_t theorem_samples(const EnvParams& env, double lambda2, double T, double epsilon, double delta);
/// ceil(gamma_tot ln(2/delta) / eps^2)
std::size_t required_samples(double epsilon, double delta, double gamma_tot);
/// Largest dt for which the bias bound stays below epsilon / 2.
double dt_prescription(const EnvParams& env, double h_norm, double lambda2, double T, double epsilon);

BoundValues bounds(const RunConfig& config, const std::vector<QuasiProbabilityPlan>* plans = nullptr);

struct SeriesStats {
    std::vector<double> mean;
    std::vector<double> stderr_;
};

struct EstimateReport {
    std::vector<double> times;
    std::vector<std::string> names;
    std::vector<std::vector<double>> ideal;  ///< [observable][step]
    std::vector<SeriesStats> noisy, mitigated;  ///< per observable, empty when not run
    std::vector<double> noisy_trace, mitigated_trace;
    std::vector<double> gamma_tot;  ///< running product per step
    std::vector<QuasiProbabilityPlan> plans;
    BoundValues bounds;
    std::size_t samples = 0;
    std::size_t dead = 0;
    std::size_t aborted = 0;
    NoiseDiagnostics diagnostics;
};

/// Ratio estimator sum(coefficient <O>) / sum(coefficient |psi|^2) with the
/// delta-method standard error.
EstimateReport estimate(const RunConfig& config);

struct CutoffBath {
    double omega_c = 0.0;
    BathSpec bath;
};

struct SweepRow {
    double omega_c = 0.0;
    double g_env = 0.0;
    std::vector<double> gamma_tot;  ///< running product per step
};

std::vector<SweepRow> sweep_gamma_tot(const RunConfig& config, const std::vector<CutoffBath>& cutoffs);

/// Single-pole family omega = i / omega_c, |g|^2 = scale * omega_c^2.
BathSpec single_pole_cutoff(double omega_c, double scale = 1.0);

}  // namespace nmpec
