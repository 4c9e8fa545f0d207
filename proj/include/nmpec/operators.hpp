// operators.hpp — dense n-qubit linear algebra: Pauli bases, superoperators,
// Pauli transfer matrices and the 16-element single-qubit PEC basis.

#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace nmpec {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;

/// Linear map on operators of a fixed dimension.
using Superop = std::function<Matrix(const Matrix&)>;

inline constexpr double kOperatorTol = 1e-8;
inline constexpr int kMaxQubits = 3;

namespace ops {
Matrix identity(int dim);
Matrix sigma_x();
Matrix sigma_y();
Matrix sigma_z();
Matrix kron(const Matrix& a, const Matrix& b);
/// Single-qubit operator acting on `qubit` (0 = leftmost) of an n-qubit register.
Matrix embed(const Matrix& op, int qubit, int n);
/// Pauli word such as "XZI"; the leftmost letter acts on the most significant qubit.
Matrix pauli_string(std::string_view word);
}  // namespace ops

bool is_hermitian(const Matrix& m, double tol = kOperatorTol);
bool is_unitary(const Matrix& m, double tol = kOperatorTol);
double spectral_norm(const Matrix& m);
/// Sum of absolute eigenvalues of a Hermitian matrix.
double trace_norm(const Matrix& hermitian);
int qubit_count(Eigen::Index dim);

/// Orthogonal basis of Pauli strings, identity first, lexicographic in
/// I < X < Y < Z with the leftmost qubit most significant.
struct PauliBasis {
    int n = 0;
    std::vector<Matrix> elements;
    std::vector<std::string> labels;

    [[nodiscard]] int dim() const { return 1 << n; }
    [[nodiscard]] std::size_t size() const { return elements.size(); }
    /// Index of a Pauli word, e.g. "ZI" -> 12.
    [[nodiscard]] std::size_t index_of(std::string_view word) const;
    /// Expansion coefficients c_a = tr(V_a m) / 2^n.
    [[nodiscard]] Vector coefficients(const Matrix& m) const;
    [[nodiscard]] Matrix from_coefficients(const Vector& c) const;
};

PauliBasis pauli_basis(int n);

/// Pauli transfer matrix, entry(a, b) = tr(V_a S(V_b)) / 2^n. Stored complex
/// so that non-Hermiticity-preserving maps are representable; entries are
/// real exactly when S preserves Hermiticity.
struct PTM {
    int n = 0;
    Matrix matrix;

    [[nodiscard]] bool trace_preserving(double tol = 1e-9) const;
    [[nodiscard]] bool hermiticity_preserving(double tol = 1e-9) const;
    [[nodiscard]] RealMatrix real() const { return matrix.real(); }
    /// S(rho) reconstructed from the PTM.
    [[nodiscard]] Matrix apply(const PauliBasis& basis, const Matrix& rho) const;
};

PTM ptm_of(const Superop& superop, const PauliBasis& basis);
PTM ptm_of(const Superop& superop, int n);

/// rho -> U rho U^dagger
Superop conjugation(Matrix u);

/// One element of the PEC basis. `table_index` holds the per-qubit entry of
/// the standard single-qubit table, zero-based (0 = [I], 12 = [pi]).
struct BasisOperation {
    enum class Kind { unitary, projective };

    std::vector<int> table_index;
    Kind kind = Kind::unitary;
    std::string label;
    /// Kraus operator B; the map is rho -> B rho B^dagger.
    Matrix op;
    /// For projective kinds, B = left * pi * right with pi = |0><0| on every
    /// projective factor. For unitary kinds left = op and right = identity.
    Matrix left;
    Matrix right;

    [[nodiscard]] bool projective() const { return kind == Kind::projective; }
    [[nodiscard]] Superop superop() const;
};

/// All 16^n tensor-product basis operations, ordered lexicographically in
/// the per-qubit table index (leftmost qubit most significant).
std::vector<BasisOperation> basis_operations(int n);

struct BasisApplication {
    Vector state;
    double weight = 1.0;
    bool dead = false;
};

/// Applies B to a normalized state. Unitary kinds return weight 1; projective
/// kinds return the normalized projected state and its squared norm as the
/// weight. A state annihilated by the projector is flagged dead.
BasisApplication apply_basis_op(const BasisOperation& op, const Vector& psi);

/// Stacked real PTMs of the basis, one vectorized PTM per column.
RealMatrix stacked_basis_ptms(const std::vector<BasisOperation>& basis, const PauliBasis& paulis);

}  // namespace nmpec
