#include "nmpec/pec.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace nmpec {

BasisCoeffs::BasisCoeffs(int n) : n_(n), ops_(basis_operations(n)), paulis_(pauli_basis(n)) {
    stacked_ = stacked_basis_ptms(ops_, paulis_);
    lu_.compute(stacked_);
    const double rcond = lu_.rcond();
    if (!(rcond > 1e-14)) throw std::runtime_error("BasisCoeffs: basis operations are linearly dependent");

    const std::size_t P = paulis_.size();
    const auto P2 = static_cast<Eigen::Index>(P * P);
    u_.resize(P * P);
    for (std::size_t a = 0; a < P; ++a) {
        for (std::size_t b = 0; b < P; ++b) {
            const Matrix& va = paulis_.elements[a];
            const Matrix& vb = paulis_.elements[b];
            const Matrix vbva = vb * va;
            const PTM target = ptm_of([&](const Matrix& rho) -> Matrix { return va * rho * vb - rho * vbva; }, paulis_);
            const Vector rhs = Eigen::Map<const Vector>(target.matrix.data(), P2);
            const Eigen::VectorXd re = lu_.solve(Eigen::VectorXd(rhs.real()));
            const Eigen::VectorXd im = lu_.solve(Eigen::VectorXd(rhs.imag()));
            Vector u(static_cast<Eigen::Index>(ops_.size()));
            for (Eigen::Index l = 0; l < u.size(); ++l) {
                double r = re(l), i = im(l);
                if (std::abs(r) < 1e-15) r = 0.0;
                if (std::abs(i) < 1e-15) i = 0.0;
                u(l) = cplx(r, i);
            }
            const Vector back = stacked_.cast<cplx>() * u;
            residual_ = std::max(residual_, (back - rhs).cwiseAbs().maxCoeff());
            u_[a * P + b] = std::move(u);
        }
    }
    if (residual_ > 1e-10) {
        std::ostringstream os;
        os << "BasisCoeffs: PTM solve residual " << residual_ << " exceeds 1e-10";
        throw std::runtime_error(os.str());
    }
}

double BasisCoeffs::max_l1() const {
    double m = 0.0;
    for (const auto& u : u_) m = std::max(m, u.cwiseAbs().sum());
    return m;
}

Eigen::VectorXd BasisCoeffs::expand(const PTM& ptm) const {
    const auto P2 = static_cast<Eigen::Index>(paulis_.size() * paulis_.size());
    const Eigen::VectorXd rhs = Eigen::Map<const Vector>(ptm.matrix.data(), P2).real();
    return lu_.solve(rhs);
}

PTM BasisCoeffs::compose(const Eigen::VectorXd& q) const {
    const auto P = static_cast<Eigen::Index>(paulis_.size());
    const Eigen::VectorXd flat = stacked_ * q;
    PTM out{n_, Matrix(P, P)};
    out.matrix = Eigen::Map<const Eigen::MatrixXd>(flat.data(), P, P).cast<cplx>();
    return out;
}

const BasisCoeffs& basis_coeffs(int n) {
    if (n < 1 || n > 2) throw std::invalid_argument("basis_coeffs: supported for 1 or 2 qubits");
    static std::once_flag once[2];
    static std::unique_ptr<BasisCoeffs> table[2];
    const auto i = static_cast<std::size_t>(n - 1);
    std::call_once(once[i], [&] { table[i] = std::make_unique<BasisCoeffs>(n); });
    return *table[i];
}

QuasiProbabilityPlan make_plan(Eigen::VectorXd q, double t, std::size_t step, double gamma_cap) {
    QuasiProbabilityPlan plan;
    plan.step = step;
    plan.t = t;
    for (Eigen::Index l = 0; l < q.size(); ++l)
        if (std::abs(q(l)) < kQuasiZero) q(l) = 0.0;
    plan.q = std::move(q);
    plan.gamma = plan.q.cwiseAbs().sum();
    if (!(plan.gamma > 0.0)) throw std::runtime_error("quasi_probs: all coefficients vanish");
    if (plan.gamma > gamma_cap) {
        std::ostringstream os;
        os << "step size too large for coupling: gamma = " << plan.gamma << " exceeds cap " << gamma_cap
           << " at t = " << t;
        throw std::runtime_error(os.str());
    }
    const auto L = plan.q.size();
    plan.alpha.assign(static_cast<std::size_t>(L), 1);
    plan.p = plan.q.cwiseAbs() / plan.gamma;
    double acc = 0.0;
    for (Eigen::Index l = 0; l < L; ++l) {
        if (plan.q(l) < 0.0) plan.alpha[static_cast<std::size_t>(l)] = -1;
        if (plan.q(l) == 0.0) continue;
        plan.support.push_back(static_cast<std::size_t>(l));
        acc += plan.p(l);
        plan.cumulative.push_back(acc);
    }
    plan.cumulative.back() = 1.0;
    return plan;
}

QuasiProbabilityPlan quasi_probs(const Matrix& A, const BasisCoeffs& coeffs, double dt, double lambda, double t,
                                 double gamma_cap, QuasiMode mode) {
    if (!(dt > 0.0)) throw std::invalid_argument("quasi_probs: dt must be positive");
    const std::size_t P = coeffs.paulis();
    if (static_cast<std::size_t>(A.rows()) != P || static_cast<std::size_t>(A.cols()) != P)
        throw std::invalid_argument("quasi_probs: coefficient matrix does not match the basis");
    const Matrix coef = mode == QuasiMode::full ? A : hermitian_split(A).gamma;
    const auto L = static_cast<Eigen::Index>(coeffs.operations());
    Vector sum = Vector::Zero(L);
    for (std::size_t a = 0; a < P; ++a) {
        for (std::size_t b = 0; b < P; ++b) {
            const cplx x = coef(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            const cplx y = std::conj(coef(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)));
            if (x != 0.0) sum += x * coeffs.u(a, b);
            if (y != 0.0) sum += y * coeffs.u(b, a).conjugate();
        }
    }
    const double scale = dt * lambda * lambda;
    Eigen::VectorXd q = -(scale * sum).real();
    q(0) += 1.0;
    const double imag = (scale * sum).imag().cwiseAbs().maxCoeff();
    QuasiProbabilityPlan plan = make_plan(std::move(q), t, 0, gamma_cap);
    plan.max_imag = imag;
    if (imag > 1e-10) {
        std::ostringstream os;
        os << "quasi_probs: imaginary residue " << imag << " in combined coefficients";
        throw std::runtime_error(os.str());
    }
    return plan;
}

std::vector<QuasiProbabilityPlan> compile_plans(const Generator& gen, double dt, std::size_t M,
                                                const PlanOptions& options) {
    const BasisCoeffs& coeffs = basis_coeffs(gen.model().n());
    std::vector<Matrix> table;
    if (options.exact_coefficients) {
        table.reserve(M + 1);
        for (std::size_t k = 0; k <= M; ++k) table.push_back(gen.coeff_exact(static_cast<double>(k) * dt));
    } else {
        table = gen.coeff_table(dt, M, options.quad_panels);
    }
    std::vector<QuasiProbabilityPlan> plans;
    plans.reserve(M);
    for (std::size_t k = 0; k < M; ++k) {
        const double t = static_cast<double>(k) * dt;
        auto plan = quasi_probs(table[k + 1], coeffs, dt, gen.model().lambda(), t, options.gamma_cap, options.mode);
        plan.step = k;
        plans.push_back(std::move(plan));
    }
    return plans;
}

PTM recovery_ptm(const SystemModel& model, const Matrix& A, double dt, QuasiMode mode) {
    const Superop map = [&](const Matrix& rho) -> Matrix {
        const Matrix l = mode == QuasiMode::full ? apply_L_N(model, A, rho) : apply_L_D(model, A, rho);
        return rho - dt * l;
    };
    return ptm_of(map, model.n());
}

std::size_t sample_index(const QuasiProbabilityPlan& plan, RandomStream& stream) {
    const double r = stream.uniform();
    const auto it = std::upper_bound(plan.cumulative.begin(), plan.cumulative.end(), r);
    const auto pos = std::min<std::size_t>(static_cast<std::size_t>(it - plan.cumulative.begin()),
                                           plan.support.size() - 1);
    return plan.support[pos];
}

double gamma_tot(const std::vector<QuasiProbabilityPlan>& plans) {
    double g = 1.0;
    for (const auto& p : plans) g *= p.gamma;
    return g;
}

std::vector<double> gamma_tot_series(const std::vector<QuasiProbabilityPlan>& plans) {
    std::vector<double> out{1.0};
    out.reserve(plans.size() + 1);
    for (const auto& p : plans) out.push_back(out.back() * p.gamma);
    return out;
}

std::string plans_to_json(const std::vector<QuasiProbabilityPlan>& plans) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : plans) {
        nlohmann::json q = nlohmann::json::array();
        for (Eigen::Index l = 0; l < p.q.size(); ++l) q.push_back(p.q(l));
        arr.push_back({{"step", p.step}, {"t", p.t}, {"gamma", p.gamma}, {"q", q}});
    }
    return arr.dump(1);
}

}  // namespace nmpec
