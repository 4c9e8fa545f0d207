#include "nmpec/generator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace nmpec {

SystemModel::SystemModel(Matrix hamiltonian, std::vector<Matrix> couplings, double lambda)
    : h_(std::move(hamiltonian)), s_(std::move(couplings)), lambda_(lambda) {
    n_ = qubit_count(h_.rows());
    if (!is_hermitian(h_)) throw std::invalid_argument("SystemModel: Hamiltonian is not Hermitian");
    if (!(lambda_ >= 0.0) || !std::isfinite(lambda_))
        throw std::invalid_argument("SystemModel: coupling strength must be finite and non-negative");
    for (std::size_t j = 0; j < s_.size(); ++j) {
        std::ostringstream os;
        os << "SystemModel: coupling " << j;
        if (s_[j].rows() != h_.rows() || s_[j].cols() != h_.cols())
            throw std::invalid_argument(os.str() + " has the wrong dimension");
        if (!is_hermitian(s_[j])) throw std::invalid_argument(os.str() + " is not Hermitian");
        const double norm = spectral_norm(s_[j]);
        if (std::abs(norm - 1.0) > kOperatorTol) {
            os << " has spectral norm " << norm << ", expected 1 (absorb the scale into the bath amplitudes)";
            throw std::invalid_argument(os.str());
        }
    }
}

SystemModel SystemModel::with_lambda(double lambda) const {
    SystemModel m = *this;
    if (!(lambda >= 0.0)) throw std::invalid_argument("SystemModel: coupling strength must be non-negative");
    m.lambda_ = lambda;
    return m;
}

std::vector<Matrix> jump_ops(const SystemModel& model, const BathSpec& bath) {
    if (!bath.empty() && bath.channels() != model.couplings().size()) {
        std::ostringstream os;
        os << "jump_ops: bath has " << bath.channels() << " channels but the model has "
           << model.couplings().size() << " coupling operators";
        throw std::invalid_argument(os.str());
    }
    std::vector<Matrix> out;
    out.reserve(bath.poles().size());
    for (const auto& p : bath.poles()) {
        Matrix t = Matrix::Zero(model.dim(), model.dim());
        for (std::size_t j = 0; j < p.amplitudes.size(); ++j) t += p.amplitudes[j] * model.couplings()[j];
        out.push_back(std::move(t));
    }
    return out;
}

HeisenbergPicture::HeisenbergPicture(const Matrix& hamiltonian) {
    if (!is_hermitian(hamiltonian)) throw std::invalid_argument("HeisenbergPicture: Hamiltonian is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (hamiltonian + hamiltonian.adjoint()));
    energies_ = es.eigenvalues();
    vectors_ = es.eigenvectors();
}

Matrix HeisenbergPicture::evolve(const Matrix& op, double tau) const {
    const Matrix u = propagator(-tau);
    return u * op * u.adjoint();
}

Matrix HeisenbergPicture::propagator(double t) const {
    Vector phase(energies_.size());
    for (Eigen::Index i = 0; i < energies_.size(); ++i) phase(i) = std::exp(cplx(0, -energies_(i) * t));
    return vectors_ * phase.asDiagonal() * vectors_.adjoint();
}

Matrix heisenberg(const Matrix& op, double tau, const Matrix& hamiltonian) {
    return HeisenbergPicture(hamiltonian).evolve(op, tau);
}

GammaXi hermitian_split(const Matrix& A) {
    GammaXi out;
    out.gamma = 0.5 * (A + A.adjoint());
    out.xi = cplx(0, -0.5) * (A - A.adjoint());
    return out;
}

Generator::Generator(const SystemModel& model, const BathSpec& bath)
    : model_(model), bath_(bath), basis_(pauli_basis(model.n())), hp_(model.hamiltonian()),
      jumps_(jump_ops(model, bath)) {
    const auto P = static_cast<Eigen::Index>(basis_.size());
    const int d = model_.dim();
    const Matrix& U = hp_.eigenvectors();
    const Eigen::VectorXd& E = hp_.energies();

    std::vector<Matrix> rotated_basis;
    rotated_basis.reserve(basis_.size());
    for (const auto& v : basis_.elements) rotated_basis.push_back(U.adjoint() * v * U);

    std::vector<bool> row_on(basis_.size(), false), col_on(basis_.size(), false);
    for (std::size_t mu = 0; mu < jumps_.size(); ++mu) {
        f_.push_back(basis_.coefficients(jumps_[mu]));
        for (Eigen::Index a = 0; a < P; ++a)
            if (std::abs(f_.back()(a)) > 1e-14) row_on[static_cast<std::size_t>(a)] = true;

        const Matrix t = U.adjoint() * jumps_[mu] * U;
        const cplx omega = bath_.poles()[mu].omega;
        for (int a = 0; a < d; ++a) {
            for (int b = 0; b < d; ++b) {
                if (std::abs(t(a, b)) < 1e-15) continue;
                Mode m;
                m.mu = mu;
                m.nu = omega - (E(a) - E(b));
                m.weight.resize(basis_.size());
                for (std::size_t beta = 0; beta < basis_.size(); ++beta)
                    m.weight[beta] = t(a, b) * rotated_basis[beta](b, a) / static_cast<double>(d);
                // Merge degenerate frequencies.
                auto same = std::find_if(modes_.begin(), modes_.end(), [&](const Mode& o) {
                    return o.mu == mu && std::abs(o.nu - m.nu) < 1e-12;
                });
                if (same != modes_.end()) {
                    for (std::size_t beta = 0; beta < basis_.size(); ++beta) same->weight[beta] += m.weight[beta];
                } else {
                    modes_.push_back(std::move(m));
                }
            }
        }
    }
    for (const auto& m : modes_)
        for (std::size_t beta = 0; beta < basis_.size(); ++beta)
            if (std::abs(m.weight[beta]) > 1e-14) col_on[beta] = true;
    for (std::size_t i = 0; i < basis_.size(); ++i) {
        if (row_on[i]) rows_.push_back(i);
        if (col_on[i]) cols_.push_back(i);
    }
}

std::vector<std::size_t> Generator::active_support() const {
    std::vector<std::size_t> out = rows_;
    out.insert(out.end(), cols_.begin(), cols_.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Vector Generator::v(std::size_t mu, double tau) const {
    const Matrix tm = hp_.evolve(jumps_.at(mu), -tau);
    return basis_.coefficients(tm) * std::exp(cplx(0, 1) * bath_.poles()[mu].omega * tau);
}

Matrix Generator::coeff_exact(double t) const {
    const auto P = static_cast<Eigen::Index>(basis_.size());
    std::vector<Vector> integral(jumps_.size(), Vector::Zero(P));
    for (const auto& m : modes_) {
        const cplx nb = std::conj(m.nu);
        // int_0^t exp(-i conj(nu) tau) dtau
        const cplx w = (1.0 - std::exp(cplx(0, -1) * nb * t)) / (cplx(0, 1) * nb);
        for (Eigen::Index b = 0; b < P; ++b) integral[m.mu](b) += std::conj(m.weight[static_cast<std::size_t>(b)]) * w;
    }
    Matrix A = Matrix::Zero(P, P);
    for (std::size_t mu = 0; mu < jumps_.size(); ++mu) A += f_[mu] * integral[mu].transpose();
    return A;
}

Matrix Generator::coeff_trapezoid(double t, double quad_step) const {
    if (!(quad_step > 0.0)) throw std::invalid_argument("coeff_trapezoid: quad_step must be positive");
    if (t < 0.0) throw std::invalid_argument("coeff_trapezoid: t must be non-negative");
    const double ratio = t / quad_step;
    const auto panels = static_cast<std::size_t>(std::llround(ratio));
    if (std::abs(ratio - static_cast<double>(panels)) > 1e-9 * std::max(1.0, ratio)) {
        std::ostringstream os;
        os << "coeff_trapezoid: quad_step " << quad_step << " does not divide t = " << t;
        throw std::invalid_argument(os.str());
    }
    const auto P = static_cast<Eigen::Index>(basis_.size());
    Matrix A = Matrix::Zero(P, P);
    for (std::size_t mu = 0; mu < jumps_.size(); ++mu) {
        Vector integral = Vector::Zero(P);
        Vector prev = v(mu, 0.0).conjugate();
        for (std::size_t k = 1; k <= panels; ++k) {
            Vector cur = v(mu, static_cast<double>(k) * quad_step).conjugate();
            integral += 0.5 * quad_step * (prev + cur);
            prev = std::move(cur);
        }
        A += f_[mu] * integral.transpose();
    }
    return A;
}

std::vector<Matrix> Generator::coeff_table(double dt, std::size_t steps, int panels) const {
    if (!(dt > 0.0) || panels < 1) throw std::invalid_argument("coeff_table: dt and panels must be positive");
    const auto P = static_cast<Eigen::Index>(basis_.size());
    const double h = dt / panels;
    std::vector<Vector> integral(jumps_.size(), Vector::Zero(P));
    std::vector<Vector> prev(jumps_.size());
    for (std::size_t mu = 0; mu < jumps_.size(); ++mu) prev[mu] = v(mu, 0.0).conjugate();

    std::vector<Matrix> table;
    table.reserve(steps + 1);
    table.push_back(Matrix::Zero(P, P));
    for (std::size_t k = 0; k < steps; ++k) {
        Matrix A = Matrix::Zero(P, P);
        for (std::size_t mu = 0; mu < jumps_.size(); ++mu) {
            for (int p = 1; p <= panels; ++p) {
                const double tau = (static_cast<double>(k) + static_cast<double>(p) / panels) * dt;
                Vector cur = v(mu, tau).conjugate();
                integral[mu] += 0.5 * h * (prev[mu] + cur);
                prev[mu] = std::move(cur);
            }
            A += f_[mu] * integral[mu].transpose();
        }
        table.push_back(std::move(A));
    }
    return table;
}

CoeffMatrix coeff_matrix(const SystemModel& model, const BathSpec& bath, double t, double quad_step) {
    return {t, Generator(model, bath).coeff_trapezoid(t, quad_step)};
}

namespace {

void check_dims(const SystemModel& model, const Matrix& A, const Matrix& rho) {
    const auto P = Eigen::Index{1} << (2 * model.n());
    if (A.rows() != P || A.cols() != P) throw std::invalid_argument("generator: coefficient matrix has the wrong size");
    if (rho.rows() != model.dim() || rho.cols() != model.dim())
        throw std::invalid_argument("generator: density matrix has the wrong dimension");
}

const PauliBasis& cached_basis(int n) {
    static const PauliBasis b1 = pauli_basis(1), b2 = pauli_basis(2), b3 = pauli_basis(3);
    return n == 1 ? b1 : (n == 2 ? b2 : b3);
}

}  // namespace

Matrix apply_L_N(const SystemModel& model, const Matrix& A, const Matrix& rho) {
    check_dims(model, A, rho);
    const auto& V = cached_basis(model.n()).elements;
    const auto P = A.rows();
    Matrix out = Matrix::Zero(rho.rows(), rho.cols());
    for (Eigen::Index a = 0; a < P; ++a) {
        for (Eigen::Index b = 0; b < P; ++b) {
            const cplx x = A(a, b);
            const cplx y = std::conj(A(b, a));
            if (x == 0.0 && y == 0.0) continue;
            const Matrix& va = V[static_cast<std::size_t>(a)];
            const Matrix& vb = V[static_cast<std::size_t>(b)];
            const Matrix sandwich = va * rho * vb;
            const Matrix vbva = vb * va;
            out += x * (sandwich - rho * vbva) + y * (sandwich - vbva * rho);
        }
    }
    return model.lambda2() * out;
}

Matrix apply_L_D(const SystemModel& model, const Matrix& A, const Matrix& rho) {
    check_dims(model, A, rho);
    const auto& V = cached_basis(model.n()).elements;
    const Matrix gamma = hermitian_split(A).gamma;
    Matrix out = Matrix::Zero(rho.rows(), rho.cols());
    for (Eigen::Index a = 0; a < gamma.rows(); ++a) {
        for (Eigen::Index b = 0; b < gamma.cols(); ++b) {
            if (gamma(a, b) == 0.0) continue;
            const Matrix& va = V[static_cast<std::size_t>(a)];
            const Matrix& vb = V[static_cast<std::size_t>(b)];
            const Matrix vbva = vb * va;
            out += gamma(a, b) * (2.0 * va * rho * vb - rho * vbva - vbva * rho);
        }
    }
    return model.lambda2() * out;
}

Matrix apply_L_C(const SystemModel& model, const Matrix& A, const Matrix& rho) {
    check_dims(model, A, rho);
    const auto& V = cached_basis(model.n()).elements;
    const Matrix xi = hermitian_split(A).xi;
    Matrix shift = Matrix::Zero(rho.rows(), rho.cols());
    for (Eigen::Index a = 0; a < xi.rows(); ++a)
        for (Eigen::Index b = 0; b < xi.cols(); ++b)
            if (xi(a, b) != 0.0) shift += xi(a, b) * V[static_cast<std::size_t>(b)] * V[static_cast<std::size_t>(a)];
    return cplx(0, 1) * model.lambda2() * (shift * rho - rho * shift);
}

Matrix liouvillian_noise(const SystemModel& model, const Matrix& A) {
    const auto& V = cached_basis(model.n()).elements;
    const int d = model.dim();
    const Matrix id = Matrix::Identity(d, d);
    const auto P = A.rows();
    Matrix L = Matrix::Zero(d * d, d * d);
    for (Eigen::Index a = 0; a < P; ++a) {
        for (Eigen::Index b = 0; b < P; ++b) {
            const cplx x = A(a, b);
            const cplx y = std::conj(A(b, a));
            if (x == 0.0 && y == 0.0) continue;
            const Matrix& va = V[static_cast<std::size_t>(a)];
            const Matrix& vb = V[static_cast<std::size_t>(b)];
            const Matrix vbva = vb * va;
            const Matrix sandwich = ops::kron(vb.transpose(), va);
            L += x * (sandwich - ops::kron(vbva.transpose(), id)) + y * (sandwich - ops::kron(id, vbva));
        }
    }
    return model.lambda2() * L;
}

Matrix liouvillian_hamiltonian(const Matrix& hamiltonian) {
    const Matrix id = Matrix::Identity(hamiltonian.rows(), hamiltonian.cols());
    return cplx(0, -1) * (ops::kron(id, hamiltonian) - ops::kron(hamiltonian.transpose(), id));
}

Eigen::VectorXd gamma_spectrum(const Matrix& A, const std::vector<std::size_t>& support) {
    Matrix gamma = hermitian_split(A).gamma;
    if (!support.empty()) {
        const auto k = static_cast<Eigen::Index>(support.size());
        Matrix sub(k, k);
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index j = 0; j < k; ++j)
                sub(i, j) = gamma(static_cast<Eigen::Index>(support[static_cast<std::size_t>(i)]),
                                  static_cast<Eigen::Index>(support[static_cast<std::size_t>(j)]));
        gamma = std::move(sub);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(gamma, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

Eigen::VectorXd gamma_spectrum(const Generator& gen, double t, bool restrict_to_support) {
    const Matrix A = gen.coeff_exact(t);
    return restrict_to_support ? gamma_spectrum(A, gen.active_support()) : gamma_spectrum(A);
}

}  // namespace nmpec
