#include "nmpec/operators.hpp"

#include <cmath>
#include <stdexcept>

namespace nmpec {

namespace ops {

Matrix identity(int dim) { return Matrix::Identity(dim, dim); }

Matrix sigma_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

Matrix sigma_y() {
    Matrix m(2, 2);
    m << 0, cplx(0, -1), cplx(0, 1), 0;
    return m;
}

Matrix sigma_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Matrix embed(const Matrix& op, int qubit, int n) {
    if (qubit < 0 || qubit >= n) throw std::invalid_argument("embed: qubit index out of range");
    Matrix out = Matrix::Identity(1, 1);
    for (int q = 0; q < n; ++q) out = kron(out, q == qubit ? op : identity(2));
    return out;
}

Matrix pauli_string(std::string_view word) {
    if (word.empty()) throw std::invalid_argument("pauli_string: empty word");
    Matrix out = Matrix::Identity(1, 1);
    for (char c : word) {
        switch (c) {
            case 'I': out = kron(out, identity(2)); break;
            case 'X': out = kron(out, sigma_x()); break;
            case 'Y': out = kron(out, sigma_y()); break;
            case 'Z': out = kron(out, sigma_z()); break;
            default:
                throw std::invalid_argument("pauli_string: invalid letter '" + std::string(1, c) + "'");
        }
    }
    return out;
}

}  // namespace ops

bool is_hermitian(const Matrix& m, double tol) {
    return m.rows() == m.cols() && (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool is_unitary(const Matrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    return (m * m.adjoint() - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() <= tol;
}

double spectral_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

double trace_norm(const Matrix& hermitian) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (hermitian + hermitian.adjoint()),
                                             Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
}

int qubit_count(Eigen::Index dim) {
    int n = 0;
    while ((Eigen::Index{1} << n) < dim) ++n;
    if ((Eigen::Index{1} << n) != dim || n < 1) throw std::invalid_argument("dimension is not a power of two");
    return n;
}

std::size_t PauliBasis::index_of(std::string_view word) const {
    if (static_cast<int>(word.size()) != n) throw std::invalid_argument("PauliBasis::index_of: word length mismatch");
    std::size_t idx = 0;
    for (char c : word) {
        std::size_t digit = 0;
        switch (c) {
            case 'I': digit = 0; break;
            case 'X': digit = 1; break;
            case 'Y': digit = 2; break;
            case 'Z': digit = 3; break;
            default: throw std::invalid_argument("PauliBasis::index_of: invalid letter");
        }
        idx = idx * 4 + digit;
    }
    return idx;
}

Vector PauliBasis::coefficients(const Matrix& m) const {
    Vector c(static_cast<Eigen::Index>(size()));
    const double inv = 1.0 / dim();
    for (std::size_t a = 0; a < size(); ++a)
        c(static_cast<Eigen::Index>(a)) = (elements[a].cwiseProduct(m.transpose())).sum() * inv;
    return c;
}

Matrix PauliBasis::from_coefficients(const Vector& c) const {
    Matrix m = Matrix::Zero(dim(), dim());
    for (std::size_t a = 0; a < size(); ++a) m += c(static_cast<Eigen::Index>(a)) * elements[a];
    return m;
}

PauliBasis pauli_basis(int n) {
    if (n < 1 || n > kMaxQubits) throw std::invalid_argument("pauli_basis: qubit count must be in [1, 3]");
    static const char letters[4] = {'I', 'X', 'Y', 'Z'};
    PauliBasis basis;
    basis.n = n;
    const std::size_t count = std::size_t{1} << (2 * n);
    basis.elements.reserve(count);
    basis.labels.reserve(count);
    for (std::size_t idx = 0; idx < count; ++idx) {
        std::string word(static_cast<std::size_t>(n), 'I');
        std::size_t rest = idx;
        for (int q = n - 1; q >= 0; --q) {
            word[static_cast<std::size_t>(q)] = letters[rest % 4];
            rest /= 4;
        }
        basis.elements.push_back(ops::pauli_string(word));
        basis.labels.push_back(std::move(word));
    }
    return basis;
}

bool PTM::trace_preserving(double tol) const {
    for (Eigen::Index b = 0; b < matrix.cols(); ++b) {
        const cplx expected = b == 0 ? 1.0 : 0.0;
        if (std::abs(matrix(0, b) - expected) > tol) return false;
    }
    return true;
}

bool PTM::hermiticity_preserving(double tol) const {
    return matrix.imag().cwiseAbs().maxCoeff() <= tol;
}

Matrix PTM::apply(const PauliBasis& basis, const Matrix& rho) const {
    return basis.from_coefficients(matrix * basis.coefficients(rho));
}

PTM ptm_of(const Superop& superop, const PauliBasis& basis) {
    const auto count = static_cast<Eigen::Index>(basis.size());
    PTM out{basis.n, Matrix(count, count)};
    for (Eigen::Index b = 0; b < count; ++b) {
        Matrix image = superop(basis.elements[static_cast<std::size_t>(b)]);
        if (image.rows() != basis.dim() || image.cols() != basis.dim())
            throw std::invalid_argument("ptm_of: superoperator changed the operator dimension");
        out.matrix.col(b) = basis.coefficients(image);
    }
    return out;
}

PTM ptm_of(const Superop& superop, int n) { return ptm_of(superop, pauli_basis(n)); }

Superop conjugation(Matrix u) {
    return [u = std::move(u)](const Matrix& rho) -> Matrix { return u * rho * u.adjoint(); };
}

Superop BasisOperation::superop() const { return conjugation(op); }

namespace {

struct SingleQubitEntry {
    const char* label;
    bool projective;
    Matrix left;
    Matrix right;
};

std::vector<SingleQubitEntry> single_qubit_table() {
    const double s = 1.0 / std::sqrt(2.0);
    const Matrix id = ops::identity(2);
    const Matrix x = ops::sigma_x(), y = ops::sigma_y(), z = ops::sigma_z();
    const cplx i(0, 1);
    const Matrix rx = s * (id + i * x);
    const Matrix ry = s * (id + i * y);
    const Matrix rz = s * (id + i * z);
    const Matrix rx2 = rx * rx, rx3 = rx2 * rx;
    const Matrix rz2 = rz * rz, rz3 = rz2 * rz;

    std::vector<SingleQubitEntry> t;
    t.push_back({"[I]", false, id, id});
    t.push_back({"[X]", false, x, id});
    t.push_back({"[Y]", false, y, id});
    t.push_back({"[Z]", false, z, id});
    t.push_back({"[Rx]", false, rx, id});
    t.push_back({"[Ry]", false, ry, id});
    t.push_back({"[Rz]", false, rz, id});
    t.push_back({"[Ryz]", false, s * (y + z), id});
    t.push_back({"[Rzx]", false, s * (z + x), id});
    t.push_back({"[Rxy]", false, s * (x + y), id});
    t.push_back({"[pi_x]", true, rz3 * rx3, rx * rz});
    t.push_back({"[pi_y]", true, rx, rx3});
    t.push_back({"[pi_z]", true, id, id});
    t.push_back({"[pi_yx]", true, rz3 * rx3, rx3 * rz});
    t.push_back({"[pi_xz]", true, rx, rx3 * rz2});
    t.push_back({"[pi_xy]", true, id, rx2});
    return t;
}

}  // namespace

std::vector<BasisOperation> basis_operations(int n) {
    if (n < 1 || n > 2) throw std::invalid_argument("basis_operations: tensor enumeration supports 1 or 2 qubits");
    static const std::vector<SingleQubitEntry> table = single_qubit_table();
    Matrix proj = Matrix::Zero(2, 2);
    proj(0, 0) = 1.0;

    const std::size_t count = std::size_t{1} << (4 * n);
    std::vector<BasisOperation> out;
    out.reserve(count);
    for (std::size_t idx = 0; idx < count; ++idx) {
        BasisOperation op;
        op.table_index.assign(static_cast<std::size_t>(n), 0);
        std::size_t rest = idx;
        for (int q = n - 1; q >= 0; --q) {
            op.table_index[static_cast<std::size_t>(q)] = static_cast<int>(rest % 16);
            rest /= 16;
        }
        Matrix left = Matrix::Identity(1, 1), right = left, full = left;
        bool projective = false;
        for (int q = 0; q < n; ++q) {
            const auto& e = table[static_cast<std::size_t>(op.table_index[static_cast<std::size_t>(q)])];
            if (!op.label.empty()) op.label += "x";
            op.label += e.label;
            projective = projective || e.projective;
            left = ops::kron(left, e.left);
            right = ops::kron(right, e.right);
            full = ops::kron(full, e.projective ? Matrix(e.left * proj * e.right) : e.left);
        }
        op.kind = projective ? BasisOperation::Kind::projective : BasisOperation::Kind::unitary;
        op.op = std::move(full);
        op.left = std::move(left);
        op.right = std::move(right);
        out.push_back(std::move(op));
    }
    return out;
}

BasisApplication apply_basis_op(const BasisOperation& op, const Vector& psi) {
    if (psi.size() != op.op.cols()) throw std::invalid_argument("apply_basis_op: state dimension mismatch");
    if (std::abs(psi.squaredNorm() - 1.0) > kOperatorTol)
        throw std::invalid_argument("apply_basis_op: input state is not normalized");
    BasisApplication out;
    out.state = op.op * psi;
    if (!op.projective()) return out;
    out.weight = out.state.squaredNorm();
    if (out.weight < 1e-30) {
        out.weight = 0.0;
        out.dead = true;
        out.state.setZero();
        return out;
    }
    out.state /= std::sqrt(out.weight);
    return out;
}

RealMatrix stacked_basis_ptms(const std::vector<BasisOperation>& basis, const PauliBasis& paulis) {
    const auto d2 = static_cast<Eigen::Index>(paulis.size());
    RealMatrix stacked(d2 * d2, static_cast<Eigen::Index>(basis.size()));
    for (std::size_t l = 0; l < basis.size(); ++l) {
        const PTM p = ptm_of(basis[l].superop(), paulis);
        stacked.col(static_cast<Eigen::Index>(l)) = Eigen::Map<const Matrix>(p.matrix.data(), d2 * d2, 1).real();
    }
    return stacked;
}

}  // namespace nmpec
