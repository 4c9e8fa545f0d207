// reference.hpp — deterministic propagators used as oracles for the
// stochastic engine.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nmpec/generator.hpp"
#include "nmpec/pec.hpp"

namespace nmpec {

struct DensityState {
    double t = 0.0;
    Matrix rho;
};

/// Checks the DensityState invariants (Hermitian, unit trace, eigenvalues >= -1e-6).
bool is_density_state(const Matrix& rho, double tol = 1e-8);

Matrix pure_state(const Vector& psi);

DensityState propagate_ideal(const Matrix& hamiltonian, const Matrix& rho0, double t);
Vector propagate_ideal(const Matrix& hamiltonian, const Vector& psi0, double t);

/// Cached column-stacked Liouvillian -i[H, .] + L_N(t) with A(t) in closed form.
class QmeLiouvillian {
public:
    explicit QmeLiouvillian(const Generator& gen);
    [[nodiscard]] Matrix at(double t) const;
    [[nodiscard]] const Generator& generator() const { return gen_; }

private:
    struct Piece {
        Eigen::Index a, b;
        Matrix x, y;  // superoperators of X_ab and Y_ab
    };
    const Generator& gen_;
    Matrix hamiltonian_part_;
    std::vector<Piece> pieces_;
};

/// RK4 integration of the time-local master equation; returns states at
/// t = k * stride * dt_ode. Throws std::runtime_error on trace drift > 1e-6.
std::vector<DensityState> propagate_noisy(const Generator& gen, const Matrix& rho0, double T, double dt_ode,
                                          std::size_t stride = 1);
std::vector<DensityState> propagate_noisy(const SystemModel& model, const BathSpec& bath, const Matrix& rho0,
                                          double T, double dt_ode, std::size_t stride = 1);

/// Column-stacked propagators of the master equation over [k dt, (k+1) dt],
/// k = 0..M-1, each from `substeps` RK4 steps.
std::vector<Matrix> segment_propagators(const Generator& gen, double dt, std::size_t M, std::size_t substeps);

/// Column-stacked superoperator of sum_l q_l B_l.
Matrix plan_superop(const QuasiProbabilityPlan& plan, const BasisCoeffs& coeffs);

/// States Q_k Phi_k ... Q_1 Phi_1 rho0 for k = 0..M (k = 0 gives rho0).
std::vector<Matrix> mitigated_state_exact(const std::vector<Matrix>& segments,
                                          const std::vector<QuasiProbabilityPlan>& plans,
                                          const BasisCoeffs& coeffs, const Matrix& rho0);

/// Explicit sum over all l-vectors of prod q_l tr(O B_lM Phi_M ... B_l1 Phi_1 rho0).
/// M <= 6 for one qubit, M <= 3 for two.
double mitigated_expectation_exact(const std::vector<Matrix>& segments,
                                   const std::vector<QuasiProbabilityPlan>& plans, const BasisCoeffs& coeffs,
                                   const Matrix& observable, const Matrix& rho0);

/// Second-order perturbative state from the double time integrals, using
/// `points` nodes per axis of iterated trapezoid.
DensityState second_order_state(const Generator& gen, const Matrix& rho0, double t, std::size_t points = 201);

/// CSV with columns t, rho_<i>_<j>_re, rho_<i>_<j>_im.
std::string states_to_csv(const std::vector<DensityState>& states);

}  // namespace nmpec
