#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "nmpec/reference.hpp"

using namespace nmpec;
using testing::max_abs;

namespace {

const cplx I(0.0, 1.0);

Matrix plus_state() { return pure_state(testing::ket({std::sqrt(0.5), std::sqrt(0.5)})); }

/// Reference trace of O B_lM Phi_lM ... B_l1 Phi_1 rho0 for fixed indices, for the enumeration check.
double branch_value(const std::vector<Matrix>& seg, const std::vector<std::size_t>& idx, const BasisCoeffs& c,
                    const Matrix& O, const Matrix& rho0) {
    Matrix rho = rho0;
    const Eigen::Index d = rho0.rows();
    for (std::size_t k = 0; k < idx.size(); ++k) {
        Vector v = Eigen::Map<const Vector>(rho.data(), d * d);
        v = seg[k] * v;
        rho = Eigen::Map<const Matrix>(v.data(), d, d);
        const Matrix& B = c.basis()[idx[k]].op;
        rho = B * rho * B.adjoint();
    }
    return (O * rho).trace().real();
}

}  // namespace

TEST_SUITE("reference") {

TEST_CASE("density state predicate") {
    CHECK(is_density_state(plus_state()));
    Matrix bad = plus_state();
    bad(0, 0) = 0.7;
    CHECK_FALSE(is_density_state(bad));
    Matrix neg = Matrix::Zero(2, 2);
    neg(0, 0) = 1.1;
    neg(1, 1) = -0.1;
    CHECK_FALSE(is_density_state(neg));
}

TEST_CASE("ideal propagation") {
    const double delta = 2.0;
    const Matrix H = -0.5 * delta * ops::sigma_z();
    const Matrix rho0 = plus_state();
    CHECK(max_abs(propagate_ideal(H, rho0, 0.0).rho - rho0) == 0.0);
    for (double t : {0.3, 1.0, 2.5}) {
        const Matrix r = propagate_ideal(H, rho0, t).rho;
        CHECK(std::abs(r(0, 1) - 0.5 * std::exp(I * delta * t)) < 1e-14);
        CHECK((r * r).trace().real() == doctest::Approx(1.0).epsilon(1e-14));
    }
    const Vector psi = propagate_ideal(H, testing::tilted_state(), 0.7);
    CHECK(max_abs(pure_state(psi) - propagate_ideal(H, pure_state(testing::tilted_state()), 0.7).rho) < 1e-14);
}

TEST_CASE("noisy propagation without coupling is unitary") {
    const SystemModel m = testing::spin_boson_model(2.0, 0.0);
    const Matrix rho0 = pure_state(testing::tilted_state());
    const auto traj = propagate_noisy(m, testing::one_pole(1.0, cplx(0, 1)), rho0, 2.0, 1e-3, 100);
    REQUIRE(traj.size() == 21);
    for (const auto& s : traj) CHECK(max_abs(s.rho - propagate_ideal(m.hamiltonian(), rho0, s.t).rho) < 1e-10);
}

TEST_CASE("dephasing matches the closed-form decay") {
    const double lambda2 = 0.25;
    const cplx g(0.9, 0.2), omega(0.8, 1.3);
    const SystemModel m = testing::dephasing_model(std::sqrt(lambda2));
    const auto traj = propagate_noisy(m, testing::one_pole(g, omega), plus_state(), 5.0, 1e-3, 50);
    for (const auto& s : traj) {
        const double f = testing::dephasing_factor(lambda2, std::norm(g), omega, s.t);
        CHECK(std::abs(s.rho(0, 1) - 0.5 * f) < 1e-6);
        CHECK(std::abs(s.rho(0, 0) - 0.5) < 1e-12);
        CHECK(std::abs(s.rho.trace() - 1.0) < 1e-9);
    }
}

TEST_CASE("RK4 converges at fourth order") {
    const double lambda2 = 0.5;
    const cplx omega(1.0, 1.0);
    const SystemModel m = testing::dephasing_model(std::sqrt(lambda2));
    const BathSpec b = testing::one_pole(1.0, omega);
    const double T = 2.0, exact = 0.5 * testing::dephasing_factor(lambda2, 1.0, omega, T);
    std::vector<double> h{0.2, 0.1, 0.05, 0.025}, err;
    for (double dt : h) err.push_back(std::abs(propagate_noisy(m, b, plus_state(), T, dt).back().rho(0, 1) - exact));
    CHECK(testing::loglog_slope(h, err) == doctest::Approx(4.0).epsilon(0.3 / 4.0));
}

TEST_CASE("step grid must divide the horizon") {
    const SystemModel m = testing::spin_boson_model(2.0, 0.3);
    CHECK_THROWS_AS(propagate_noisy(m, testing::one_pole(1.0, cplx(0, 1)), plus_state(), 1.0, 0.3),
                    std::invalid_argument);
}

TEST_CASE("second-order state") {
    const cplx omega(1.0, 1.0);
    const BathSpec b = testing::one_pole(1.0, omega);
    const Matrix rho0 = pure_state(testing::tilted_state());

    const Generator g0(testing::spin_boson_model(2.0, 0.0), b);
    CHECK(max_abs(second_order_state(g0, rho0, 1.0).rho - propagate_ideal(g0.model().hamiltonian(), rho0, 1.0).rho) < 1e-14);

    // dephasing: first-order expansion of the closed form
    const Generator gd(testing::dephasing_model(0.1), b);
    const DensityState sd = second_order_state(gd, plus_state(), 1.0);
    const double f = testing::dephasing_factor(0.01, 1.0, omega, 1.0);
    CHECK(std::abs(sd.rho(0, 1) - 0.5 * (1.0 + std::log(f))) < 1e-4);

    // remainder against the master equation is fourth order in lambda
    std::vector<double> lam{0.05, 0.1, 0.2}, diff;
    for (double l : lam) {
        const Generator gen(testing::spin_boson_model(2.0, l), b);
        const Matrix qme = propagate_noisy(gen, rho0, 1.0, 1e-3).back().rho;
        diff.push_back(max_abs(second_order_state(gen, rho0, 1.0, 401).rho - qme));
    }
    CHECK(testing::loglog_slope(lam, diff) == doctest::Approx(4.0).epsilon(0.5 / 4.0));
}

TEST_CASE("segment propagators compose to the master equation solution") {
    const Generator gen(testing::spin_boson_model(2.0, 0.4), testing::one_pole(1.0, cplx(-1.0, 0.7)));
    const Matrix rho0 = pure_state(testing::tilted_state());
    const auto seg = segment_propagators(gen, 0.2, 5, 40);
    Vector v = Eigen::Map<const Vector>(rho0.data(), 4);
    for (const auto& s : seg) v = s * v;
    const Matrix direct = propagate_noisy(gen, rho0, 1.0, 0.005).back().rho;
    CHECK(max_abs(Eigen::Map<const Matrix>(v.data(), 2, 2) - direct) < 1e-12);
}

TEST_CASE("enumeration estimator") {
    const Generator gen(testing::spin_boson_model(2.0, 0.5), testing::one_pole(1.0, cplx(-1.0, 0.7)));
    const Matrix rho0 = pure_state(testing::tilted_state());
    const Matrix O = ops::sigma_z();
    const BasisCoeffs& c = basis_coeffs(1);
    const double dt = 0.1;
    const auto plans = compile_plans(gen, dt, 6);
    const auto seg = segment_propagators(gen, dt, 6, 20);

    CHECK(mitigated_expectation_exact(seg, {}, c, O, rho0) == doctest::Approx((O * rho0).trace().real()));

    // explicit double loop over all 16 x 16 branches for M = 2
    const std::vector<QuasiProbabilityPlan> two(plans.begin(), plans.begin() + 2);
    double brute = 0.0;
    for (std::size_t a = 0; a < 16; ++a)
        for (std::size_t b = 0; b < 16; ++b)
            brute += two[0].q(Eigen::Index(a)) * two[1].q(Eigen::Index(b)) * branch_value(seg, {a, b}, c, O, rho0);
    CHECK(mitigated_expectation_exact(seg, two, c, O, rho0) == doctest::Approx(brute).epsilon(1e-12));

    // the factorized product is the same sum
    const auto states = mitigated_state_exact(seg, plans, c, rho0);
    REQUIRE(states.size() == 7);
    for (std::size_t M : {1u, 3u, 6u}) {
        const std::vector<QuasiProbabilityPlan> sub(plans.begin(), plans.begin() + long(M));
        CHECK(mitigated_expectation_exact(seg, sub, c, O, rho0) == doctest::Approx((O * states[M]).trace().real()).epsilon(1e-11));
    }
    const auto more = compile_plans(gen, dt, 7);
    CHECK_THROWS_AS(mitigated_expectation_exact(segment_propagators(gen, dt, 7, 4), more, c, O, rho0), std::invalid_argument);

    // no coupling: identity plans give the ideal expectation
    const Generator g0(testing::spin_boson_model(2.0, 0.0), gen.bath());
    const auto p0 = compile_plans(g0, dt, 4);
    const double ideal = (O * propagate_ideal(g0.model().hamiltonian(), rho0, 0.4).rho).trace().real();
    CHECK(mitigated_expectation_exact(segment_propagators(g0, dt, 4, 20), p0, c, O, rho0) == doctest::Approx(ideal).epsilon(1e-10));
}

TEST_CASE("state csv export") {
    const std::string csv = states_to_csv({{0.0, plus_state()}, {0.5, plus_state()}});
    CHECK(csv.rfind("t,rho_0_0_re,rho_0_0_im,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

}  // TEST_SUITE
