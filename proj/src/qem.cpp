#include "nmpec/qem.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "nmpec/parallel.hpp"
#include "nmpec/reference.hpp"

namespace nmpec {

namespace {

std::size_t exact_ratio(double num, double den, const char* num_name, const char* den_name) {
    std::ostringstream os;
    if (!(den > 0.0) || !std::isfinite(den)) {
        os << den_name << " must be positive (got " << den << ")";
        throw std::invalid_argument(os.str());
    }
    const double r = num / den;
    const auto k = static_cast<std::size_t>(std::llround(r));
    if (k == 0 || std::abs(r - static_cast<double>(k)) > 1e-9 * std::max(1.0, r)) {
        os << num_name << " = " << num << " is not a positive integer multiple of " << den_name << " = " << den;
        throw std::invalid_argument(os.str());
    }
    return k;
}

}  // namespace

std::size_t RunConfig::steps() const { return exact_ratio(T, dt, "T", "dt"); }

std::size_t RunConfig::substeps() const { return exact_ratio(dt, dt_f, "dt", "dt_f"); }

void RunConfig::validate() const {
    (void)steps();
    (void)substeps();
    if (N_r == 0) throw std::invalid_argument("N_r must be at least 1");
    if (!bath.empty() && bath.channels() != model.couplings().size()) {
        std::ostringstream os;
        os << "bath has " << bath.channels() << " channels but the model has " << model.couplings().size()
           << " coupling operators";
        throw std::invalid_argument(os.str());
    }
    if (psi0.size() != model.dim()) throw std::invalid_argument("initial_state: dimension does not match the model");
    if (std::abs(psi0.squaredNorm() - 1.0) > kOperatorTol) throw std::invalid_argument("initial_state: not normalized");
    if (observables.empty()) throw std::invalid_argument("observables: at least one observable is required");
    if (observable_names.size() != observables.size())
        throw std::invalid_argument("observables: names and operators differ in count");
    for (std::size_t i = 0; i < observables.size(); ++i) {
        if (observables[i].rows() != model.dim() || !is_hermitian(observables[i]))
            throw std::invalid_argument("observables[" + std::to_string(i) + "]: not a Hermitian operator of the model dimension");
    }
    if (mode != RunMode::noisy_only && model.n() > 2)
        throw std::invalid_argument("mitigation supports at most two qubits");
    if (!(plan.gamma_cap >= 1.0)) throw std::invalid_argument("gamma_cap must be at least 1");
    if (plan.quad_panels < 1) throw std::invalid_argument("quad_panels must be positive");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1]");
    if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in (0, 1]");
}

TrajectoryOutcome run_trajectory(const RunConfig& config, const NmsseEngine& engine,
                                 const std::vector<QuasiProbabilityPlan>& plans, std::size_t index,
                                 const std::vector<std::size_t>* forced) {
    const std::size_t M = config.steps();
    const std::size_t sub = config.substeps();
    const bool mitigate = !plans.empty();
    if (mitigate && plans.size() != M) throw std::invalid_argument("run_trajectory: plan count does not match T / dt");
    if (forced && forced->size() != M) throw std::invalid_argument("run_trajectory: forced index count does not match T / dt");
    const std::vector<BasisOperation>* basis = mitigate ? &basis_coeffs(config.model.n()).basis() : nullptr;

    RandomStream noise_stream(config.seed, mitigate ? StreamDomain::mitigated_noise : StreamDomain::noisy_noise, index);
    RandomStream sampling(config.seed, StreamDomain::mitigated_sampling, index);
    StochasticTrajectory traj = engine.start(config.psi0, noise_stream);

    const std::size_t nobs = config.observables.size();
    TrajectoryOutcome out;
    out.values.assign(nobs, std::vector<double>(M + 1, 0.0));
    out.trace_weight.assign(M + 1, 0.0);
    out.coefficient.assign(M + 1, 0.0);
    double coef = 1.0;

    auto measure = [&](std::size_t k) {
        const Vector psi = traj.state();
        out.coefficient[k] = coef;
        out.trace_weight[k] = coef * psi.squaredNorm();
        for (std::size_t o = 0; o < nobs; ++o)
            out.values[o][k] = coef * psi.dot(config.observables[o] * psi).real();
    };
    measure(0);

    for (std::size_t k = 0; k < M; ++k) {
        if (!engine.advance(traj, sub)) {
            out.aborted = true;
            out.diagnostic = traj.diagnostic;
            return out;
        }
        if (mitigate) {
            const auto& plan = plans[k];
            const std::size_t l = forced ? (*forced)[k] : sample_index(plan, sampling);
            out.indices.push_back(l);
            const Vector psi = traj.state();
            const double norm = psi.norm();
            const BasisApplication app = apply_basis_op((*basis)[l], psi / norm);
            coef *= plan.gamma * plan.alpha[l] * app.weight;
            if (app.dead || coef == 0.0) {
                out.dead = true;
                out.death_step = k + 1;
                return out;
            }
            engine.replace_state(traj, norm * app.state, config.history == HistoryMode::post_operation);
        }
        measure(k + 1);
    }
    return out;
}

TrajectoryOutcome run_trajectory(const RunConfig& config, const std::vector<QuasiProbabilityPlan>& plans,
                                 std::size_t index, const std::vector<std::size_t>* forced) {
    const NmsseEngine engine(config.model, config.bath, config.dt_f, config.steps() * config.substeps(), config.nmsse);
    return run_trajectory(config, engine, plans, index, forced);
}

double one_step_bound(const EnvParams& env, double h_norm, double lambda2, double dt, double t) {
    return dt * dt * lambda2 * (h_norm * env.g_b1 + env.g_b2 * std::exp(-env.theta * t));
}

double bias_bound(const EnvParams& env, double h_norm, double lambda2, double dt, double T) {
    return dt * T * lambda2 * h_norm * env.g_b1 + dt * dt * lambda2 * env.g_b2 / (1.0 - std::exp(-env.theta * dt));
}

double gamma_constant(const SystemModel& model) {
    const BasisCoeffs& coeffs = basis_coeffs(model.n());
    double ps = 0.0;
    for (const auto& s : model.couplings()) ps = std::max(ps, coeffs.pauli().coefficients(s).cwiseAbs().sum());
    return coeffs.max_l1() * ps * static_cast<double>(model.dim());
}

double gamma_bound(const EnvParams& env, const SystemModel& model, double T) {
    return std::exp(gamma_constant(model) * model.lambda2() * T * env.g_b1);
}

namespace {

std::size_t saturating_count(double x) {
    constexpr double top = static_cast<double>(std::numeric_limits<std::size_t>::max());
    return x >= top ? std::numeric_limits<std::size_t>::max() : static_cast<std::size_t>(x);
}

}  // namespace

std::size_t theorem_samples(const EnvParams& env, double lambda2, double T, double epsilon, double delta) {
    return saturating_count(std::ceil(4.0 * std::log(2.0 / delta) * std::exp(lambda2 * T * env.g_b1) / (epsilon * epsilon)));
}

std::size_t required_samples(double epsilon, double delta, double gamma_tot) {
    if (!(epsilon > 0.0 && epsilon <= 1.0) || !(delta > 0.0 && delta <= 1.0))
        throw std::invalid_argument("required_samples: epsilon and delta must lie in (0, 1]");
    return saturating_count(std::ceil(gamma_tot * std::log(2.0 / delta) / (epsilon * epsilon)));
}

double dt_prescription(const EnvParams& env, double h_norm, double lambda2, double T, double epsilon) {
    const double rate = lambda2 * (T * h_norm * env.g_b1 + env.g_b2 / (1.0 - std::exp(-env.theta)));
    if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
    return std::min(1.0, epsilon / (2.0 * rate));
}

BoundValues bounds(const RunConfig& config, const std::vector<QuasiProbabilityPlan>* plans) {
    BoundValues b;
    const double l2 = config.model.lambda2();
    b.h_norm = spectral_norm(config.model.hamiltonian());
    if (!config.bath.empty()) b.env = env_params(config.bath);
    const double T = static_cast<double>(config.steps()) * config.dt;
    if (!config.bath.empty()) {
        b.one_step = one_step_bound(b.env, b.h_norm, l2, config.dt, 0.0);
        b.bias = bias_bound(b.env, b.h_norm, l2, config.dt, T);
    }
    if (config.model.n() <= 2) {
        b.gamma_constant = gamma_constant(config.model);
        b.gamma_bound = std::exp(b.gamma_constant * l2 * T * b.env.g_b1);
    }
    b.theorem_samples = theorem_samples(b.env, l2, T, config.epsilon, config.delta);
    b.gamma_tot = plans ? gamma_tot(*plans) : b.gamma_bound;
    b.required_samples = required_samples(config.epsilon, config.delta, b.gamma_tot);
    b.dt_prescription = config.bath.empty() ? std::numeric_limits<double>::infinity()
                                            : dt_prescription(b.env, b.h_norm, l2, T, config.epsilon);
    return b;
}

namespace {

struct Moments {
    // Per observable and step: sums of x, x^2, n, n^2, x n, with n the trace weight.
    std::vector<std::vector<double>> x, xx, xn;
    std::vector<double> n, nn;
    std::size_t count = 0, dead = 0, aborted = 0;
    std::string diagnostic;

    Moments(std::size_t nobs, std::size_t points)
        : x(nobs, std::vector<double>(points, 0.0)), xx(x), xn(x), n(points, 0.0), nn(points, 0.0) {}
    Moments() = default;

    void add(const TrajectoryOutcome& t) {
        if (t.aborted) {
            ++aborted;
            if (diagnostic.empty()) diagnostic = t.diagnostic;
            return;
        }
        ++count;
        if (t.dead) ++dead;
        for (std::size_t k = 0; k < n.size(); ++k) {
            const double w = t.trace_weight[k];
            n[k] += w;
            nn[k] += w * w;
            for (std::size_t o = 0; o < x.size(); ++o) {
                const double v = t.values[o][k];
                x[o][k] += v;
                xx[o][k] += v * v;
                xn[o][k] += v * w;
            }
        }
    }

    void merge(const Moments& b) {
        for (std::size_t k = 0; k < n.size(); ++k) {
            n[k] += b.n[k];
            nn[k] += b.nn[k];
            for (std::size_t o = 0; o < x.size(); ++o) {
                x[o][k] += b.x[o][k];
                xx[o][k] += b.xx[o][k];
                xn[o][k] += b.xn[o][k];
            }
        }
        count += b.count;
        dead += b.dead;
        aborted += b.aborted;
        if (diagnostic.empty()) diagnostic = b.diagnostic;
    }
};

Moments run_ensemble(const RunConfig& config, const NmsseEngine& engine,
                     const std::vector<QuasiProbabilityPlan>& plans) {
    const std::size_t points = config.steps() + 1;
    const std::size_t nobs = config.observables.size();
    constexpr std::size_t chunk = 256;
    const std::size_t chunks = (config.N_r + chunk - 1) / chunk;
    std::vector<Moments> parts(chunks);
    parallel_chunks(chunks, config.threads, [&](std::size_t c) {
        Moments m(nobs, points);
        const std::size_t end = std::min(config.N_r, (c + 1) * chunk);
        for (std::size_t i = c * chunk; i < end; ++i) m.add(run_trajectory(config, engine, plans, i));
        parts[c] = std::move(m);
    });
    Moments total = pairwise_reduce(std::move(parts), [](Moments& a, Moments& b) { a.merge(b); });
    if (total.aborted * 100 > config.N_r) {
        std::ostringstream os;
        os << total.aborted << " of " << config.N_r << " trajectories aborted (" << total.diagnostic << ")";
        throw std::runtime_error(os.str());
    }
    return total;
}

void summarize(const Moments& m, std::vector<SeriesStats>& stats, std::vector<double>& trace) {
    const double N = static_cast<double>(m.count);
    stats.assign(m.x.size(), {});
    trace.assign(m.n.size(), 0.0);
    for (std::size_t k = 0; k < m.n.size(); ++k) trace[k] = m.n[k] / N;
    for (std::size_t o = 0; o < m.x.size(); ++o) {
        auto& s = stats[o];
        for (std::size_t k = 0; k < m.n.size(); ++k) {
            const double nbar = m.n[k] / N;
            if (nbar == 0.0) throw std::runtime_error("estimate: all-dead ensemble");
            const double r = m.x[o][k] / m.n[k];
            // Residuals e_i = x_i - r n_i have zero mean by construction.
            const double ss = m.xx[o][k] - 2.0 * r * m.xn[o][k] + r * r * m.nn[k];
            const double var = N > 1 ? std::max(0.0, ss) / (N - 1.0) : 0.0;
            s.mean.push_back(r);
            s.stderr_.push_back(std::sqrt(var / N) / std::abs(nbar));
        }
    }
}

}  // namespace

EstimateReport estimate(const RunConfig& config) {
    config.validate();
    const std::size_t M = config.steps();
    const std::size_t sub = config.substeps();
    EstimateReport rep;
    rep.names = config.observable_names;
    for (std::size_t k = 0; k <= M; ++k) rep.times.push_back(static_cast<double>(k) * config.dt);

    const HeisenbergPicture hp(config.model.hamiltonian());
    rep.ideal.assign(config.observables.size(), {});
    for (std::size_t k = 0; k <= M; ++k) {
        const Vector psi = hp.propagator(rep.times[k]) * config.psi0;
        for (std::size_t o = 0; o < config.observables.size(); ++o)
            rep.ideal[o].push_back(psi.dot(config.observables[o] * psi).real());
    }

    const NmsseEngine engine(config.model, config.bath, config.dt_f, M * sub, config.nmsse);
    rep.diagnostics = engine.noise().diagnostics();

    if (config.mode != RunMode::noisy_only) {
        const Generator gen(config.model, config.bath);
        rep.plans = compile_plans(gen, config.dt, M, config.plan);
        rep.gamma_tot = gamma_tot_series(rep.plans);
    } else {
        rep.gamma_tot.assign(M + 1, 1.0);
    }
    rep.bounds = bounds(config, config.mode != RunMode::noisy_only ? &rep.plans : nullptr);

    if (config.mode != RunMode::mitigated) {
        const Moments m = run_ensemble(config, engine, {});
        summarize(m, rep.noisy, rep.noisy_trace);
        rep.aborted += m.aborted;
        rep.samples = m.count;
    }
    if (config.mode != RunMode::noisy_only) {
        const Moments m = run_ensemble(config, engine, rep.plans);
        if (m.dead == m.count) throw std::runtime_error("estimate: all-dead ensemble");
        summarize(m, rep.mitigated, rep.mitigated_trace);
        rep.aborted += m.aborted;
        rep.dead = m.dead;
        rep.samples = m.count;
    }
    return rep;
}

std::vector<SweepRow> sweep_gamma_tot(const RunConfig& config, const std::vector<CutoffBath>& cutoffs) {
    const std::size_t M = config.steps();
    std::vector<SweepRow> rows;
    rows.reserve(cutoffs.size());
    for (const auto& c : cutoffs) {
        if (c.bath.empty()) {
            std::ostringstream os;
            os << "missing pole table for cutoff omega_c = " << c.omega_c;
            throw std::invalid_argument(os.str());
        }
        const Generator gen(config.model, c.bath);
        SweepRow row;
        row.omega_c = c.omega_c;
        row.g_env = env_params(c.bath).g_b1;
        row.gamma_tot = gamma_tot_series(compile_plans(gen, config.dt, M, config.plan));
        rows.push_back(std::move(row));
    }
    return rows;
}

BathSpec single_pole_cutoff(double omega_c, double scale) {
    if (!(omega_c > 0.0) || !(scale > 0.0)) throw std::invalid_argument("single_pole_cutoff: omega_c and scale must be positive");
    return BathSpec::single_channel({{cplx(std::sqrt(scale) * omega_c, 0.0), cplx(0.0, 1.0 / omega_c)}});
}

}  // namespace nmpec
