#include "nmpec/reference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace nmpec {

namespace {

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvec(const Vector& v, Eigen::Index d) { return Eigen::Map<const Matrix>(v.data(), d, d); }

cplx trace_of_vec(const Vector& v, Eigen::Index d) {
    cplx t = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) t += v(i * d + i);
    return t;
}

std::size_t step_count(double T, double dt, const char* what) {
    if (!(dt > 0.0) || !(T >= 0.0)) throw std::invalid_argument(std::string(what) + ": step and horizon must be positive");
    const double ratio = T / dt;
    const auto n = static_cast<std::size_t>(std::llround(ratio));
    if (std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio)) {
        std::ostringstream os;
        os << what << ": T = " << T << " is not a multiple of the step " << dt;
        throw std::invalid_argument(os.str());
    }
    return n;
}

}  // namespace

bool is_density_state(const Matrix& rho, double tol) {
    if (!is_hermitian(rho, tol)) return false;
    if (std::abs(rho.trace() - 1.0) > tol) return false;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -1e-6;
}

Matrix pure_state(const Vector& psi) { return psi * psi.adjoint(); }

DensityState propagate_ideal(const Matrix& hamiltonian, const Matrix& rho0, double t) {
    const Matrix u = HeisenbergPicture(hamiltonian).propagator(t);
    return {t, u * rho0 * u.adjoint()};
}

Vector propagate_ideal(const Matrix& hamiltonian, const Vector& psi0, double t) {
    return HeisenbergPicture(hamiltonian).propagator(t) * psi0;
}

QmeLiouvillian::QmeLiouvillian(const Generator& gen)
    : gen_(gen), hamiltonian_part_(liouvillian_hamiltonian(gen.model().hamiltonian())) {
    const auto& V = gen.basis().elements;
    const int d = gen.model().dim();
    const Matrix id = Matrix::Identity(d, d);
    const auto& rows = gen.active_rows();
    const auto& cols = gen.active_cols();
    // A_ab is nonzero only on rows x cols; conj(A_ba) only on cols x rows.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (auto a : rows)
        for (auto b : cols) pairs.emplace_back(a, b);
    for (auto b : rows)
        for (auto a : cols)
            if (std::find(pairs.begin(), pairs.end(), std::make_pair(a, b)) == pairs.end()) pairs.emplace_back(a, b);
    for (const auto& [a, b] : pairs) {
        const Matrix vbva = V[b] * V[a];
        const Matrix sandwich = ops::kron(V[b].transpose(), V[a]);
        pieces_.push_back({static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b),
                           sandwich - ops::kron(vbva.transpose(), id), sandwich - ops::kron(id, vbva)});
    }
}

Matrix QmeLiouvillian::at(double t) const {
    Matrix L = hamiltonian_part_;
    if (pieces_.empty()) return L;
    const Matrix A = gen_.coeff_exact(t);
    const double l2 = gen_.model().lambda2();
    for (const auto& p : pieces_) {
        const cplx x = A(p.a, p.b);
        const cplx y = std::conj(A(p.b, p.a));
        if (x != 0.0) L += (l2 * x) * p.x;
        if (y != 0.0) L += (l2 * y) * p.y;
    }
    return L;
}

std::vector<DensityState> propagate_noisy(const Generator& gen, const Matrix& rho0, double T, double dt_ode,
                                          std::size_t stride) {
    const std::size_t steps = step_count(T, dt_ode, "propagate_noisy");
    if (stride == 0) throw std::invalid_argument("propagate_noisy: stride must be positive");
    const auto d = static_cast<Eigen::Index>(gen.model().dim());
    if (rho0.rows() != d || rho0.cols() != d) throw std::invalid_argument("propagate_noisy: state dimension mismatch");
    const QmeLiouvillian liou(gen);

    std::vector<DensityState> out;
    out.reserve(steps / stride + 1);
    Vector r = vec(rho0);
    const cplx tr0 = rho0.trace();
    out.push_back({0.0, rho0});
    Matrix L0 = liou.at(0.0);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt_ode;
        const Matrix Lh = liou.at(t + 0.5 * dt_ode);
        Matrix L1 = liou.at(t + dt_ode);
        const Vector k1 = L0 * r;
        const Vector k2 = Lh * (r + 0.5 * dt_ode * k1);
        const Vector k3 = Lh * (r + 0.5 * dt_ode * k2);
        const Vector k4 = L1 * (r + dt_ode * k3);
        r += (dt_ode / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        L0 = std::move(L1);
        const double drift = std::abs(trace_of_vec(r, d) - tr0);
        if (drift > 1e-6 || !std::isfinite(drift)) {
            std::ostringstream os;
            os << "propagate_noisy: trace drift " << drift << " at t = " << t + dt_ode << " (step too large)";
            throw std::runtime_error(os.str());
        }
        if ((k + 1) % stride == 0) out.push_back({static_cast<double>(k + 1) * dt_ode, unvec(r, d)});
    }
    return out;
}

std::vector<DensityState> propagate_noisy(const SystemModel& model, const BathSpec& bath, const Matrix& rho0,
                                          double T, double dt_ode, std::size_t stride) {
    const Generator gen(model, bath);
    return propagate_noisy(gen, rho0, T, dt_ode, stride);
}

std::vector<Matrix> segment_propagators(const Generator& gen, double dt, std::size_t M, std::size_t substeps) {
    if (!(dt > 0.0) || substeps == 0) throw std::invalid_argument("segment_propagators: invalid step");
    const QmeLiouvillian liou(gen);
    const auto D = static_cast<Eigen::Index>(gen.model().dim()) * gen.model().dim();
    const double h = dt / static_cast<double>(substeps);
    std::vector<Matrix> out;
    out.reserve(M);
    Matrix L0 = liou.at(0.0);
    for (std::size_t k = 0; k < M; ++k) {
        Matrix phi = Matrix::Identity(D, D);
        for (std::size_t s = 0; s < substeps; ++s) {
            const double t = static_cast<double>(k) * dt + static_cast<double>(s) * h;
            const Matrix Lh = liou.at(t + 0.5 * h);
            Matrix L1 = liou.at(t + h);
            const Matrix k1 = L0 * phi;
            const Matrix k2 = Lh * (phi + 0.5 * h * k1);
            const Matrix k3 = Lh * (phi + 0.5 * h * k2);
            const Matrix k4 = L1 * (phi + h * k3);
            phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            L0 = std::move(L1);
        }
        out.push_back(std::move(phi));
    }
    return out;
}

namespace {

std::vector<Matrix> basis_superops(const BasisCoeffs& coeffs) {
    std::vector<Matrix> out;
    out.reserve(coeffs.operations());
    for (const auto& op : coeffs.basis()) out.push_back(ops::kron(op.op.conjugate(), op.op));
    return out;
}

const std::vector<Matrix>& cached_superops(const BasisCoeffs& coeffs) {
    static const std::vector<Matrix> one = basis_superops(basis_coeffs(1));
    if (coeffs.n() == 1) return one;
    static const std::vector<Matrix> two = basis_superops(basis_coeffs(2));
    return two;
}

}  // namespace

Matrix plan_superop(const QuasiProbabilityPlan& plan, const BasisCoeffs& coeffs) {
    const auto& sup = cached_superops(coeffs);
    Matrix out = Matrix::Zero(sup.front().rows(), sup.front().cols());
    for (auto l : plan.support) out += plan.q(static_cast<Eigen::Index>(l)) * sup[l];
    return out;
}

std::vector<Matrix> mitigated_state_exact(const std::vector<Matrix>& segments,
                                          const std::vector<QuasiProbabilityPlan>& plans,
                                          const BasisCoeffs& coeffs, const Matrix& rho0) {
    if (segments.size() < plans.size()) throw std::invalid_argument("mitigated_state_exact: missing segment propagators");
    const Eigen::Index d = rho0.rows();
    std::vector<Matrix> out{rho0};
    Vector r = vec(rho0);
    for (std::size_t k = 0; k < plans.size(); ++k) {
        r = plan_superop(plans[k], coeffs) * (segments[k] * r);
        out.push_back(unvec(r, d));
    }
    return out;
}

namespace {

struct Enumerator {
    const std::vector<Matrix>& segments;
    const std::vector<QuasiProbabilityPlan>& plans;
    const std::vector<Matrix>& superops;
    Vector observable;  // vec(O^T) so that tr(O rho) = observable . vec(rho)

    double run(std::size_t k, const Vector& r) const {
        if (k == plans.size()) return (observable.transpose() * r)(0).real();
        const Vector evolved = segments[k] * r;
        double sum = 0.0;
        for (auto l : plans[k].support)
            sum += plans[k].q(static_cast<Eigen::Index>(l)) * run(k + 1, superops[l] * evolved);
        return sum;
    }
};

}  // namespace

double mitigated_expectation_exact(const std::vector<Matrix>& segments,
                                   const std::vector<QuasiProbabilityPlan>& plans, const BasisCoeffs& coeffs,
                                   const Matrix& observable, const Matrix& rho0) {
    const std::size_t limit = coeffs.n() == 1 ? 6 : 3;
    if (plans.size() > limit) {
        std::ostringstream os;
        os << "mitigated_expectation_exact: M = " << plans.size() << " exceeds the enumeration limit " << limit;
        throw std::invalid_argument(os.str());
    }
    if (segments.size() < plans.size()) throw std::invalid_argument("mitigated_expectation_exact: missing segment propagators");
    const Enumerator e{segments, plans, cached_superops(coeffs), vec(Matrix(observable.transpose()))};
    return e.run(0, vec(rho0));
}

DensityState second_order_state(const Generator& gen, const Matrix& rho0, double t, std::size_t points) {
    if (points < 2) throw std::invalid_argument("second_order_state: need at least two nodes");
    const auto& model = gen.model();
    const HeisenbergPicture hp(model.hamiltonian());
    const Matrix u = hp.propagator(t);
    if (gen.jumps().empty() || model.lambda() == 0.0 || t == 0.0) return {t, u * rho0 * u.adjoint()};

    const std::size_t n = points - 1;
    const double h = t / static_cast<double>(n);
    const auto& poles = gen.bath().poles();
    std::vector<std::vector<Matrix>> jt(poles.size());
    for (std::size_t mu = 0; mu < poles.size(); ++mu) {
        jt[mu].reserve(points);
        for (std::size_t i = 0; i <= n; ++i) jt[mu].push_back(hp.evolve(gen.jumps()[mu], static_cast<double>(i) * h));
    }

    const Eigen::Index d = rho0.rows();
    Matrix outer = Matrix::Zero(d, d);
    for (std::size_t i = 1; i <= n; ++i) {
        Matrix inner = Matrix::Zero(d, d);
        for (std::size_t j = 0; j <= i; ++j) {
            const double w = (j == 0 || j == i) ? 0.5 : 1.0;
            Matrix term = Matrix::Zero(d, d);
            for (std::size_t mu = 0; mu < poles.size(); ++mu) {
                const cplx c = std::exp(cplx(0, 1) * poles[mu].omega * (static_cast<double>(i - j) * h));
                const Matrix& t1 = jt[mu][i];
                const Matrix& t2 = jt[mu][j];
                term += c * (t2 * rho0 * t1.adjoint() - t1.adjoint() * t2 * rho0);
            }
            inner += w * (term + term.adjoint());
        }
        outer += (i == n ? 0.5 : 1.0) * h * inner;
    }
    outer *= h;
    const Matrix rho_int = rho0 + model.lambda2() * outer;
    return {t, u * rho_int * u.adjoint()};
}

std::string states_to_csv(const std::vector<DensityState>& states) {
    std::ostringstream os;
    os << "t";
    if (states.empty()) return os.str() + "\n";
    const Eigen::Index d = states.front().rho.rows();
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) os << ",rho_" << i << "_" << j << "_re,rho_" << i << "_" << j << "_im";
    os << "\n";
    char buf[64];
    for (const auto& s : states) {
        std::snprintf(buf, sizeof buf, "%.10g", s.t);
        os << buf;
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) {
                std::snprintf(buf, sizeof buf, ",%.17g,%.17g", s.rho(i, j).real(), s.rho(i, j).imag());
                os << buf;
            }
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace nmpec
