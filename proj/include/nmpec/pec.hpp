// pec.hpp — quasi-probability compilation of the recovery map I - dt L_N.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "nmpec/generator.hpp"
#include "nmpec/operators.hpp"
#include "nmpec/rng.hpp"

namespace nmpec {

/// u[l, a, b]: expansion of X_ab(rho) = V_a rho V_b - rho V_b V_a over the
/// basis operations. The partner Y_ab(rho) = V_a rho V_b - V_b V_a rho expands
/// with coefficients conj(u[l, b, a]).
class BasisCoeffs {
public:
    explicit BasisCoeffs(int n);

    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] std::size_t operations() const { return ops_.size(); }
    [[nodiscard]] std::size_t paulis() const { return paulis_.size(); }
    [[nodiscard]] const std::vector<BasisOperation>& basis() const { return ops_; }
    [[nodiscard]] const PauliBasis& pauli() const { return paulis_; }
    /// Stacked real PTMs, one column per basis operation.
    [[nodiscard]] const RealMatrix& stacked() const { return stacked_; }

    /// Coefficient vector over l for the pair (a, b).
    [[nodiscard]] const Vector& u(std::size_t a, std::size_t b) const { return u_[a * paulis_.size() + b]; }
    /// Largest PTM reconstruction residual over all pairs.
    [[nodiscard]] double max_residual() const { return residual_; }
    /// max_ab sum_l |u[l, a, b]|
    [[nodiscard]] double max_l1() const;

    /// Real coefficients over the basis of an arbitrary Hermiticity-preserving map.
    [[nodiscard]] Eigen::VectorXd expand(const PTM& ptm) const;
    /// PTM of sum_l q_l B_l.
    [[nodiscard]] PTM compose(const Eigen::VectorXd& q) const;

private:
    int n_;
    std::vector<BasisOperation> ops_;
    PauliBasis paulis_;
    RealMatrix stacked_;
    Eigen::PartialPivLU<RealMatrix> lu_;
    std::vector<Vector> u_;
    double residual_ = 0.0;
};

/// Shared per-n coefficient tables; construction costs a 16^n dense solve.
const BasisCoeffs& basis_coeffs(int n);

enum class QuasiMode {
    full,        ///< L_N including the coherent part
    incoherent,  ///< L_D only (operator-splitting route)
};

struct QuasiProbabilityPlan {
    std::size_t step = 0;
    double t = 0.0;
    Eigen::VectorXd q;
    double gamma = 1.0;
    std::vector<int> alpha;
    Eigen::VectorXd p;
    double max_imag = 0.0;           ///< largest imaginary residue before taking the real part
    std::vector<std::size_t> support;  ///< indices with q != 0
    std::vector<double> cumulative;    ///< cumulative p over support

    [[nodiscard]] PTM ptm(const BasisCoeffs& coeffs) const { return coeffs.compose(q); }
};

inline constexpr double kDefaultGammaCap = 10.0;
inline constexpr double kQuasiZero = 1e-14;

/// Plan for the step starting at t, compiled from A = A(t + dt).
QuasiProbabilityPlan quasi_probs(const Matrix& A, const BasisCoeffs& coeffs, double dt, double lambda,
                                 double t = 0.0, double gamma_cap = kDefaultGammaCap,
                                 QuasiMode mode = QuasiMode::full);

/// Builds plan from already-known coefficients q (normalization, signs, sampling table).
QuasiProbabilityPlan make_plan(Eigen::VectorXd q, double t, std::size_t step, double gamma_cap);

struct PlanOptions {
    int quad_panels = 8;
    bool exact_coefficients = false;  ///< closed-form A instead of trapezoid
    double gamma_cap = kDefaultGammaCap;
    QuasiMode mode = QuasiMode::full;
};

/// Plans for steps k = 0..M-1 on t_k = k dt.
std::vector<QuasiProbabilityPlan> compile_plans(const Generator& gen, double dt, std::size_t M,
                                                const PlanOptions& options = {});

/// PTM of I - dt L(A) (L = L_N, or L_D in incoherent mode).
PTM recovery_ptm(const SystemModel& model, const Matrix& A, double dt, QuasiMode mode = QuasiMode::full);

std::size_t sample_index(const QuasiProbabilityPlan& plan, RandomStream& stream);

double gamma_tot(const std::vector<QuasiProbabilityPlan>& plans);
/// Running products; entry k is the product over the first k plans.
std::vector<double> gamma_tot_series(const std::vector<QuasiProbabilityPlan>& plans);

/// JSON table [{step, t, gamma, q[]}].
std::string plans_to_json(const std::vector<QuasiProbabilityPlan>& plans);

}  // namespace nmpec
