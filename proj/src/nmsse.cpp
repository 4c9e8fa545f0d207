#include "nmpec/nmsse.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "nmpec/parallel.hpp"

namespace nmpec {

Vector StochasticTrajectory::state() const { return Eigen::Map<const Vector>(psi.data(), static_cast<Eigen::Index>(psi.size())); }

double StochasticTrajectory::norm() const { return state().norm(); }

namespace {
template <int D>
std::shared_ptr<const NmsseEngine::Stepper> make_stepper(const SystemModel& model, double dt, std::size_t steps,
                                                         std::size_t window, bool recursion, double blowup,
                                                         const std::vector<Matrix>& jumps,
                                                         const std::vector<Matrix>& prop,
                                                         const std::vector<Matrix>& kernels, const Matrix& self);
}  // namespace

NmsseEngine::NmsseEngine(const SystemModel& model, const BathSpec& bath, double dt_f, std::size_t steps,
                         NmsseOptions options)
    : model_(model), bath_(bath), dt_(dt_f), steps_(steps), options_(options),
      noise_(bath, UniformGrid{dt_f, steps}, options.noise, options.convention) {
    if (!(dt_f > 0.0)) throw std::invalid_argument("NmsseEngine: fine step must be positive");
    if (!bath_.empty() && bath_.channels() != model_.couplings().size())
        throw std::invalid_argument("NmsseEngine: bath channel count does not match the coupling operators");
    const HeisenbergPicture hp(model_.hamiltonian());
    const int d = model_.dim();
    jumps_ = jump_ops(model_, bath_);
    self_ = Matrix::Zero(d, d);
    for (std::size_t mu = 0; mu < jumps_.size(); ++mu) {
        const cplx omega = bath_.poles()[mu].omega;
        prop_.push_back(std::exp(cplx(0, 1) * omega * dt_) * hp.propagator(dt_));
        self_ += 0.5 * dt_ * jumps_[mu].adjoint() * jumps_[mu];
    }
    if (!bath_.empty()) {
        const double tau_max = std::log(1.0 / options_.truncation) / bath_.theta();
        window_ = std::min<std::size_t>(steps_, static_cast<std::size_t>(std::ceil(tau_max / dt_)));
    }
    build_kernels(hp);
    const bool rec = options_.memory == MemoryMethod::pole_recursion;
    switch (d) {
        case 2: stepper_ = make_stepper<2>(model_, dt_, steps_, window_, rec, options_.blowup_norm, jumps_, prop_, kernels_, self_); break;
        case 4: stepper_ = make_stepper<4>(model_, dt_, steps_, window_, rec, options_.blowup_norm, jumps_, prop_, kernels_, self_); break;
        default:
            stepper_ = make_stepper<Eigen::Dynamic>(model_, dt_, steps_, window_, rec, options_.blowup_norm, jumps_, prop_,
                                                    kernels_, self_);
    }
}

void NmsseEngine::build_kernels(const HeisenbergPicture& hp) {
    const int d = model_.dim();
    if (options_.memory == MemoryMethod::history) {
        kernels_.reserve(window_ + 1);
        for (std::size_t i = 0; i <= window_; ++i) {
            const double tau = static_cast<double>(i) * dt_;
            const Matrix u = hp.propagator(tau);
            Matrix k = Matrix::Zero(d, d);
            for (std::size_t mu = 0; mu < jumps_.size(); ++mu)
                k += std::exp(cplx(0, 1) * bath_.poles()[mu].omega * tau) * jumps_[mu].adjoint() * u * jumps_[mu];
            kernels_.push_back(std::move(k));
        }
    }
}

Matrix NmsseEngine::kernel(std::size_t i) const {
    if (i < kernels_.size()) return kernels_[i];
    const double tau = static_cast<double>(i) * dt_;
    const Matrix u = HeisenbergPicture(model_.hamiltonian()).propagator(tau);
    Matrix k = Matrix::Zero(model_.dim(), model_.dim());
    for (std::size_t mu = 0; mu < jumps_.size(); ++mu)
        k += std::exp(cplx(0, 1) * bath_.poles()[mu].omega * tau) * jumps_[mu].adjoint() * u * jumps_[mu];
    return k;
}

Matrix NmsseEngine::kernel_direct(double tau) const {
    const int d = model_.dim();
    Matrix k = Matrix::Zero(d, d);
    if (bath_.empty()) return k;
    const Eigen::MatrixXcd c = bcf_eval(bath_, tau);
    const Matrix u = HeisenbergPicture(model_.hamiltonian()).propagator(tau);
    const auto& S = model_.couplings();
    for (std::size_t j = 0; j < S.size(); ++j)
        for (std::size_t l = 0; l < S.size(); ++l)
            k += c(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) * S[j] * u * S[l];
    return k;
}

StochasticTrajectory NmsseEngine::start(const Vector& psi0, RandomStream& noise_stream) const {
    return start(psi0, noise_.sample(noise_stream));
}

StochasticTrajectory NmsseEngine::start(const Vector& psi0, NoisePath noise) const {
    const auto d = static_cast<std::size_t>(model_.dim());
    if (static_cast<std::size_t>(psi0.size()) != d) throw std::invalid_argument("NmsseEngine: state dimension mismatch");
    if (std::abs(psi0.squaredNorm() - 1.0) > kOperatorTol)
        throw std::invalid_argument("NmsseEngine: initial state is not normalized");
    if (!bath_.empty() && (noise.points() < steps_ + 1 || noise.channels() != bath_.channels()))
        throw std::invalid_argument("NmsseEngine: noise path does not cover the grid");
    StochasticTrajectory traj;
    traj.psi.assign(psi0.data(), psi0.data() + d);
    traj.history_head = traj.psi;
    traj.aux.assign(jumps_.size() * d, cplx(0.0));
    if (options_.memory == MemoryMethod::history) {
        traj.history.assign((steps_ + 1) * d, cplx(0.0));
        std::copy(traj.psi.begin(), traj.psi.end(), traj.history.begin());
    }
    traj.noise = std::move(noise);
    return traj;
}

void NmsseEngine::replace_state(StochasticTrajectory& traj, const Vector& psi, bool record_in_history) const {
    const auto d = static_cast<std::size_t>(model_.dim());
    if (static_cast<std::size_t>(psi.size()) != d) throw std::invalid_argument("replace_state: dimension mismatch");
    traj.psi.assign(psi.data(), psi.data() + d);
    if (!record_in_history) return;
    traj.history_head = traj.psi;
    if (options_.memory == MemoryMethod::history)
        std::copy(traj.psi.begin(), traj.psi.end(), traj.history.begin() + static_cast<std::ptrdiff_t>(traj.step * d));
}

namespace {

template <int D>
struct Stepper final : NmsseEngine::Stepper {
    using Vec = Eigen::Matrix<cplx, D, 1>;
    using Mat = Eigen::Matrix<cplx, D, D>;

    Mat minus_ih;
    std::vector<Mat> lam_s, jump, jump_dag, prop, kern;
    Mat self;
    double lam2 = 0.0, h = 0.0, blowup = 10.0;
    std::size_t steps = 0, window = 0;
    bool recursion = true;
    bool free = false;  // lambda = 0: exact unitary step
    Mat unitary;
    int d = D;

    Mat noise_matrix(const StochasticTrajectory& traj, std::size_t k) const {
        Mat g = minus_ih;
        for (std::size_t j = 0; j < lam_s.size() && j < traj.noise.channels(); ++j) g += traj.noise(j, k) * lam_s[j];
        return g;
    }

    bool run(StochasticTrajectory& traj, std::size_t count) const override {
        Eigen::Map<Vec> psi(traj.psi.data(), d);
        Eigen::Map<Vec> head(traj.history_head.data(), d);
        const std::size_t poles = jump.size();
        const bool noisy = !lam_s.empty() && traj.noise.channels() > 0;
        for (std::size_t c = 0; c < count; ++c) {
            if (traj.aborted) return false;
            const std::size_t n = traj.step;
            if (n >= steps) throw std::out_of_range("NmsseEngine: advanced past the end of the grid");
            if (free) {
                psi = unitary * psi;
                if (!traj.history.empty())
                    std::copy(traj.psi.begin(), traj.psi.end(), traj.history.begin() + static_cast<std::ptrdiff_t>((n + 1) * d));
                head = psi;
                traj.step = n + 1;
                continue;
            }
            const Mat g0 = noisy ? noise_matrix(traj, n) : minus_ih;
            const Mat g1 = noisy ? noise_matrix(traj, n + 1) : minus_ih;

            Vec mem0 = Vec::Zero(d), mem1 = Vec::Zero(d);
            Vec pred(d);
            if (recursion) {
                if (n > 0) {
                    for (std::size_t mu = 0; mu < poles; ++mu)
                        mem0.noalias() += jump_dag[mu] * Eigen::Map<const Vec>(traj.aux.data() + mu * d, d);
                    mem0.noalias() += self * psi;
                }
                const Vec f0 = g0 * psi - lam2 * mem0;
                const double w = n == 0 ? 0.5 * h : h;
                for (std::size_t mu = 0; mu < poles; ++mu) {
                    Eigen::Map<Vec> r(traj.aux.data() + mu * d, d);
                    const Vec tmp = r + w * (jump[mu] * head);
                    r.noalias() = prop[mu] * tmp;
                    mem1.noalias() += jump_dag[mu] * r;
                }
                pred = psi + h * f0;
                mem1.noalias() += self * pred;
                const Vec f1 = g1 * pred - lam2 * mem1;
                psi += (0.5 * h) * (f0 + f1);
            } else {
                const cplx* hist = traj.history.data();
                if (n > 0) {
                    const std::size_t lo = n > window ? n - window : 0;
                    for (std::size_t i = lo; i < n; ++i) {
                        const double w = i == 0 ? 0.5 : 1.0;
                        mem0.noalias() += (w * h) * (kern[n - i] * Eigen::Map<const Vec>(hist + i * d, d));
                    }
                    mem0.noalias() += self * psi;
                }
                const Vec f0 = g0 * psi - lam2 * mem0;
                {
                    const std::size_t lo = n + 1 > window ? n + 1 - window : 0;
                    for (std::size_t i = lo; i <= n; ++i) {
                        const double w = i == 0 ? 0.5 : 1.0;
                        const Vec hi = i == n ? Vec(head) : Vec(Eigen::Map<const Vec>(hist + i * d, d));
                        mem1.noalias() += (w * h) * (kern[n + 1 - i] * hi);
                    }
                }
                pred = psi + h * f0;
                mem1.noalias() += self * pred;
                const Vec f1 = g1 * pred - lam2 * mem1;
                psi += (0.5 * h) * (f0 + f1);
                std::copy(traj.psi.begin(), traj.psi.end(), traj.history.begin() + static_cast<std::ptrdiff_t>((n + 1) * d));
            }
            head = psi;
            traj.step = n + 1;
            const double norm = psi.norm();
            if (!(norm <= blowup)) {
                traj.aborted = true;
                std::ostringstream os;
                os << "state norm " << norm << " exceeded " << blowup << " at step " << traj.step;
                traj.diagnostic = os.str();
                return false;
            }
        }
        return true;
    }
};

template <int D>
std::shared_ptr<const NmsseEngine::Stepper> make_stepper(const SystemModel& model, double dt, std::size_t steps, std::size_t window, bool recursion,
                        double blowup, const std::vector<Matrix>& jumps, const std::vector<Matrix>& prop,
                        const std::vector<Matrix>& kernels, const Matrix& self) {
    auto ptr = std::make_shared<Stepper<D>>();
    Stepper<D>& s = *ptr;
    s.d = model.dim();
    s.minus_ih = cplx(0, -1) * model.hamiltonian();
    if (model.lambda() != 0.0)
        for (const auto& S : model.couplings()) s.lam_s.push_back(model.lambda() * S);
    for (std::size_t mu = 0; mu < jumps.size(); ++mu) {
        s.jump.push_back(jumps[mu]);
        s.jump_dag.push_back(jumps[mu].adjoint());
        s.prop.push_back(prop[mu]);
    }
    for (const auto& k : kernels) s.kern.push_back(k);
    s.self = self;
    s.lam2 = model.lambda2();
    s.h = dt;
    s.steps = steps;
    s.window = window;
    s.recursion = recursion;
    s.blowup = blowup;
    s.free = model.lambda() == 0.0;
    if (s.free) s.unitary = HeisenbergPicture(model.hamiltonian()).propagator(dt);
    return ptr;
}

}  // namespace

bool NmsseEngine::advance(StochasticTrajectory& traj, std::size_t count) const { return stepper_->run(traj, count); }

EnsembleResult ensemble_density(const SystemModel& model, const BathSpec& bath, const Vector& psi0, double T,
                                double dt_f, std::size_t N, std::uint64_t seed, const EnsembleOptions& options) {
    if (N == 0) throw std::invalid_argument("ensemble_density: N must be positive");
    if (options.stride == 0 || options.chunk == 0) throw std::invalid_argument("ensemble_density: stride and chunk must be positive");
    const double ratio = T / dt_f;
    const auto steps = static_cast<std::size_t>(std::llround(ratio));
    if (!(dt_f > 0.0) || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio)) {
        std::ostringstream os;
        os << "ensemble_density: T = " << T << " is not a multiple of dt_f = " << dt_f;
        throw std::invalid_argument(os.str());
    }
    const NmsseEngine engine(model, bath, dt_f, steps, options.nmsse);
    const std::size_t outputs = steps / options.stride + 1;
    const Eigen::Index d = model.dim();

    struct Acc {
        std::vector<Matrix> sum;
        std::vector<Eigen::MatrixXd> sq_re, sq_im;
        std::vector<double> trace;
        std::size_t n = 0, aborted = 0;
        std::string diagnostic;
    };
    auto empty_acc = [&] {
        Acc a;
        a.sum.assign(outputs, Matrix::Zero(d, d));
        a.sq_re.assign(outputs, Eigen::MatrixXd::Zero(d, d));
        a.sq_im.assign(outputs, Eigen::MatrixXd::Zero(d, d));
        a.trace.assign(outputs, 0.0);
        return a;
    };

    const std::size_t chunks = (N + options.chunk - 1) / options.chunk;
    std::vector<Acc> parts(chunks);
    parallel_chunks(chunks, options.threads, [&](std::size_t c) {
        Acc acc = empty_acc();
        std::vector<Matrix> local(outputs);
        const std::size_t end = std::min(N, (c + 1) * options.chunk);
        for (std::size_t i = c * options.chunk; i < end; ++i) {
            RandomStream stream(seed, StreamDomain::ensemble_noise, i);
            StochasticTrajectory traj = engine.start(psi0, stream);
            bool ok = true;
            local[0] = pure_state(psi0);
            for (std::size_t o = 1; o < outputs && ok; ++o) {
                ok = engine.advance(traj, options.stride);
                if (ok) local[o] = pure_state(traj.state());
            }
            if (!ok) {
                ++acc.aborted;
                if (acc.diagnostic.empty()) acc.diagnostic = traj.diagnostic;
                continue;
            }
            ++acc.n;
            for (std::size_t o = 0; o < outputs; ++o) {
                acc.sum[o] += local[o];
                acc.sq_re[o] += local[o].real().cwiseAbs2();
                acc.sq_im[o] += local[o].imag().cwiseAbs2();
                acc.trace[o] += local[o].trace().real();
            }
        }
        parts[c] = std::move(acc);
    });

    Acc total = pairwise_reduce(std::move(parts), [&](Acc& a, Acc& b) {
        for (std::size_t o = 0; o < outputs; ++o) {
            a.sum[o] += b.sum[o];
            a.sq_re[o] += b.sq_re[o];
            a.sq_im[o] += b.sq_im[o];
            a.trace[o] += b.trace[o];
        }
        a.n += b.n;
        a.aborted += b.aborted;
        if (a.diagnostic.empty()) a.diagnostic = b.diagnostic;
    });

    if (total.aborted * 100 > N) {
        std::ostringstream os;
        os << "ensemble_density: " << total.aborted << " of " << N << " trajectories aborted (" << total.diagnostic << ")";
        throw std::runtime_error(os.str());
    }
    if (total.n == 0) throw std::runtime_error("ensemble_density: no surviving trajectories");

    EnsembleResult res;
    res.samples = total.n;
    res.aborted = total.aborted;
    res.diagnostics = engine.noise().diagnostics();
    const double n = static_cast<double>(total.n);
    for (std::size_t o = 0; o < outputs; ++o) {
        const Matrix mean = total.sum[o] / n;
        Matrix se(d, d);
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) {
                const double vr = std::max(0.0, total.sq_re[o](i, j) / n - std::pow(mean(i, j).real(), 2));
                const double vi = std::max(0.0, total.sq_im[o](i, j) / n - std::pow(mean(i, j).imag(), 2));
                const double denom = total.n > 1 ? n - 1.0 : 1.0;
                se(i, j) = cplx(std::sqrt(vr / denom), std::sqrt(vi / denom));
            }
        }
        const double tr = mean.trace().real();
        res.trace.push_back(tr);
        res.states.push_back({static_cast<double>(o * options.stride) * dt_f, mean / tr});
        res.stderr_.push_back(std::move(se));
    }
    return res;
}

}  // namespace nmpec
