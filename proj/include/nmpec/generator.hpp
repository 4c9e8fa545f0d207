// generator.hpp — the second-order time-local noise generator L_N(t).
//
//   A_ab(t) = sum_mu f^mu_a int_0^t conj(v^mu_b(tau)) dtau
//   L_N rho = lambda^2 sum_ab [ A_ab (V_a rho V_b - rho V_b V_a)
//                             + conj(A_ba) (V_a rho V_b - V_b V_a rho) ]
// with f^mu_a = tr(T_mu V_a)/2^n and v^mu_b(tau) = tr(T_mu(-tau) V_b) e^{i omega_mu tau}/2^n.

#pragma once

#include <cstddef>
#include <vector>

#include "nmpec/bath.hpp"
#include "nmpec/operators.hpp"

namespace nmpec {

class SystemModel {
public:
    SystemModel() = default;
    /// Validates Hermiticity of H and of every S_j, and ||S_j|| = 1 (1e-8).
    SystemModel(Matrix hamiltonian, std::vector<Matrix> couplings, double lambda);

    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] int dim() const { return 1 << n_; }
    [[nodiscard]] const Matrix& hamiltonian() const { return h_; }
    [[nodiscard]] const std::vector<Matrix>& couplings() const { return s_; }
    [[nodiscard]] double lambda() const { return lambda_; }
    [[nodiscard]] double lambda2() const { return lambda_ * lambda_; }

    [[nodiscard]] SystemModel with_lambda(double lambda) const;

private:
    int n_ = 1;
    Matrix h_;
    std::vector<Matrix> s_;
    double lambda_ = 0.0;
};

/// T_mu = sum_j g_{j,mu} S_j.
std::vector<Matrix> jump_ops(const SystemModel& model, const BathSpec& bath);

/// Heisenberg evolution op(tau) = e^{iH tau} op e^{-iH tau} from one
/// eigendecomposition of H.
class HeisenbergPicture {
public:
    explicit HeisenbergPicture(const Matrix& hamiltonian);

    [[nodiscard]] Matrix evolve(const Matrix& op, double tau) const;
    /// e^{-iH t}
    [[nodiscard]] Matrix propagator(double t) const;
    [[nodiscard]] const Eigen::VectorXd& energies() const { return energies_; }
    [[nodiscard]] const Matrix& eigenvectors() const { return vectors_; }

private:
    Eigen::VectorXd energies_;
    Matrix vectors_;
};

Matrix heisenberg(const Matrix& op, double tau, const Matrix& hamiltonian);

struct CoeffMatrix {
    double t = 0.0;
    Matrix A;
};

struct GammaXi {
    Matrix gamma;
    Matrix xi;
};

GammaXi hermitian_split(const Matrix& A);

/// Per-run generator data: projections of the jump operators, active Pauli
/// support and closed-form integrals of conj(v^mu_b).
class Generator {
public:
    Generator(const SystemModel& model, const BathSpec& bath);

    [[nodiscard]] const SystemModel& model() const { return model_; }
    [[nodiscard]] const BathSpec& bath() const { return bath_; }
    [[nodiscard]] const PauliBasis& basis() const { return basis_; }
    [[nodiscard]] const std::vector<Matrix>& jumps() const { return jumps_; }

    /// f^mu as a vector over Pauli indices.
    [[nodiscard]] const Vector& f(std::size_t mu) const { return f_[mu]; }
    /// v^mu(tau) as a vector over Pauli indices, evaluated from the
    /// Heisenberg-evolved jump operator.
    [[nodiscard]] Vector v(std::size_t mu, double tau) const;

    /// A(t) from the closed-form integral.
    [[nodiscard]] Matrix coeff_exact(double t) const;
    /// A(t) by composite trapezoid with step quad_step (t / quad_step rounded).
    [[nodiscard]] Matrix coeff_trapezoid(double t, double quad_step) const;
    /// A(k dt) for k = 0..steps, trapezoid with `panels` panels per step,
    /// accumulated incrementally.
    [[nodiscard]] std::vector<Matrix> coeff_table(double dt, std::size_t steps, int panels) const;

    /// Pauli indices a with f^mu_a != 0 for some mu.
    [[nodiscard]] const std::vector<std::size_t>& active_rows() const { return rows_; }
    /// Pauli indices b with v^mu_b not identically zero for some mu.
    [[nodiscard]] const std::vector<std::size_t>& active_cols() const { return cols_; }
    /// Sorted union of active rows and columns.
    [[nodiscard]] std::vector<std::size_t> active_support() const;

private:
    struct Mode {
        std::size_t mu;
        std::vector<cplx> weight;  // per Pauli index b
        cplx nu;                   // v^mu_b(tau) = sum_modes weight_b e^{i nu tau}
    };

    SystemModel model_;
    BathSpec bath_;
    PauliBasis basis_;
    HeisenbergPicture hp_;
    std::vector<Matrix> jumps_;
    std::vector<Vector> f_;
    std::vector<Mode> modes_;
    std::vector<std::size_t> rows_, cols_;
};

CoeffMatrix coeff_matrix(const SystemModel& model, const BathSpec& bath, double t, double quad_step);

/// lambda^2 sum_ab [ A_ab X_ab + conj(A_ba) Y_ab ] applied to rho.
Matrix apply_L_N(const SystemModel& model, const Matrix& A, const Matrix& rho);
/// lambda^2 sum_ab Gamma_ab (2 V_a rho V_b - rho V_b V_a - V_b V_a rho)
Matrix apply_L_D(const SystemModel& model, const Matrix& A, const Matrix& rho);
/// i lambda^2 [sum_ab Xi_ab V_b V_a, rho]
Matrix apply_L_C(const SystemModel& model, const Matrix& A, const Matrix& rho);

/// Column-stacked superoperator matrices of L_N and of -i[H, .].
Matrix liouvillian_noise(const SystemModel& model, const Matrix& A);
Matrix liouvillian_hamiltonian(const Matrix& hamiltonian);

/// Ascending eigenvalues of Gamma = (A + A^dagger)/2, optionally restricted
/// to the given Pauli indices.
Eigen::VectorXd gamma_spectrum(const Matrix& A, const std::vector<std::size_t>& support = {});
Eigen::VectorXd gamma_spectrum(const Generator& gen, double t, bool restrict_to_support = true);

}  // namespace nmpec
