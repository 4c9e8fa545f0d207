#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "nmpec/bath.hpp"

using namespace nmpec;
using testing::one_pole;

namespace {

cplx sample_mean(const std::vector<NoisePath>& paths, std::size_t k) {
    cplx s = 0;
    for (const auto& p : paths) s += p(0, k);
    return s / static_cast<double>(paths.size());
}

/// Empirical E[eta(t_k) conj(eta(t_0))], averaged over the stationary grid.
cplx sample_cov(const std::vector<NoisePath>& paths, std::size_t lag, bool conjugate_second = true) {
    cplx s = 0;
    std::size_t count = 0;
    for (const auto& p : paths)
        for (std::size_t k = 0; k + lag < p.points(); k += 4) {
            s += p(0, k + lag) * (conjugate_second ? std::conj(p(0, k)) : p(0, k));
            ++count;
        }
    return s / static_cast<double>(count);
}

}  // namespace

TEST_SUITE("bath") {

TEST_CASE("bcf_eval examples") {
    const BathSpec b = one_pole(1.0, cplx(0, 1));
    CHECK(std::abs(bcf_eval(b, 0.0)(0, 0) - 1.0) < 1e-15);
    CHECK(std::abs(bcf_eval(b, 1.0)(0, 0) - std::exp(-1.0)) < 1e-15);

    const BathSpec two = BathSpec::single_channel({{1.0, cplx(0, 1)}, {2.0, cplx(1, 2)}});
    for (int i = 0; i < 10; ++i) {
        const double t = 0.37 * i;
        const cplx direct = std::exp(cplx(0, 1) * cplx(0, 1) * t) + 4.0 * std::exp(cplx(0, 1) * cplx(1, 2) * t);
        CHECK(std::abs(bcf_eval(two, t)(0, 0) - direct) < 1e-13);
    }
}

TEST_CASE("bcf symmetry and decay") {
    const BathSpec b(2, {{{cplx(1, 0.5), cplx(0.3, -1)}, cplx(0.7, 0.4)}, {{cplx(0, 1), cplx(2, 0)}, cplx(-1.5, 1.2)}});
    const double theta = b.theta();
    CHECK(theta == doctest::Approx(0.4));
    for (double t : {0.1, 0.5, 1.3, 4.0}) {
        const Eigen::MatrixXcd c = bcf_eval(b, t), cm = bcf_eval(b, -t);
        CHECK(testing::max_abs(cm - c.adjoint()) < 1e-14);
        // entrywise bound |C_jk(t)| <= sum_mu |g_j||g_k| e^{-theta t}
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) {
                double bound = 0;
                for (const auto& p : b.poles()) bound += std::abs(p.amplitudes[j]) * std::abs(p.amplitudes[k]);
                CHECK(std::abs(c(j, k)) <= bound * std::exp(-theta * t) + 1e-14);
            }
    }
}

TEST_CASE("element-wise 1-norm decays as e^{-theta t} for a single pole") {
    const BathSpec b(2, {{{cplx(1, 0.5), cplx(0.3, -1)}, cplx(0.7, 0.4)}});
    const double c0 = bcf_eval(b, 0.0).cwiseAbs().sum();
    for (double t : {0.2, 1.0, 3.0}) CHECK(bcf_eval(b, t).cwiseAbs().sum() <= c0 * std::exp(-0.4 * t) * (1 + 1e-12));
}

TEST_CASE("invalid poles are rejected") {
    CHECK_THROWS_WITH_AS(one_pole(1.0, cplx(0, -1)), doctest::Contains("pole 0: non-decaying frequency"),
                         std::invalid_argument);
    CHECK_THROWS_AS(one_pole(1.0, cplx(2, 0)), std::invalid_argument);
    CHECK_THROWS_AS(BathSpec(2, {{{cplx(1, 0)}, cplx(0, 1)}}), std::invalid_argument);
}

TEST_CASE("env_params examples") {
    const EnvParams e = env_params(one_pole(1.0, cplx(0, 1)));
    CHECK(e.g_b1 == doctest::Approx(2.0));
    CHECK(e.g_b2 == doctest::Approx(0.5));
    CHECK(e.theta == doctest::Approx(1.0));

    const EnvParams e2 = env_params(BathSpec(2, {{{1.0, 1.0}, cplx(0, 2)}}));
    CHECK(e2.g_b1 == doctest::Approx(4.0));

    const BathSpec many = BathSpec::single_channel({{0.3, cplx(1, 0.2)}, {cplx(0.5, 0.5), cplx(-2, 0.9)}, {1.2, cplx(0, 3)}});
    const EnvParams em = env_params(many);
    CHECK(em.g_b1 <= 4.0 * em.g_b2 / em.theta);
    CHECK_THROWS_AS(env_params(BathSpec()), std::invalid_argument);
}

TEST_CASE("empty bath gives zero paths") {
    const auto paths = noise_paths(BathSpec(), {0.1, 20}, 3, 1);
    for (const auto& p : paths)
        for (std::size_t k = 0; k < p.points(); ++k) CHECK(p(0, k) == cplx(0, 0));
}

TEST_CASE("noise moments for a single pole") {
    const BathSpec b = one_pole(1.0, cplx(0, 1));
    const UniformGrid grid{0.05, 40};
    const std::size_t N = 10000;
    const auto paths = noise_paths(b, grid, N, 2024);
    for (std::size_t k = 0; k <= grid.steps; ++k) CHECK(std::abs(sample_mean(paths, k)) < 3.0 / std::sqrt(double(N)));
    for (double t : {0.0, 0.5, 1.0}) {
        const auto lag = static_cast<std::size_t>(std::lround(t / grid.dt));
        const cplx c = sample_cov(paths, lag);
        CHECK(std::abs(c - std::exp(-t)) < 0.05 * std::exp(-t));
        CHECK(std::abs(sample_cov(paths, lag, false)) < 0.03);
    }
}

TEST_CASE("covariance convention with an oscillating pole") {
    const BathSpec b = one_pole(1.0, cplx(2, 1));
    const UniformGrid grid{0.05, 40};
    for (NoiseMethod method : {NoiseMethod::circulant, NoiseMethod::pole_recursion}) {
        for (NoiseConvention conv : {NoiseConvention::conjugate_bcf, NoiseConvention::bcf}) {
            const NoiseGenerator gen(b, grid, method, conv);
            std::vector<NoisePath> paths;
            for (std::size_t i = 0; i < 6000; ++i) {
                RandomStream s(99, StreamDomain::user, i);
                paths.push_back(gen.sample(s));
            }
            for (double t : {0.0, 0.5, 1.0}) {
                const auto lag = static_cast<std::size_t>(std::lround(t / grid.dt));
                const cplx c = bcf_eval(b, t)(0, 0);
                const cplx expect = conv == NoiseConvention::conjugate_bcf ? std::conj(c) : c;
                CHECK(std::abs(gen.covariance(t)(0, 0) - expect) < 1e-12);
                CHECK(std::abs(sample_cov(paths, lag) - expect) < 0.05);
            }
        }
    }
}

TEST_CASE("two-channel cross covariance") {
    const BathSpec b(2, {{{cplx(1, 0), cplx(0, 0.5)}, cplx(1, 1)}, {{cplx(0.3, 0), cplx(1, 0)}, cplx(-0.5, 2)}});
    const UniformGrid grid{0.05, 30};
    const NoiseGenerator gen(b, grid);
    const std::size_t N = 8000, lag = 6;
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(2, 2);
    for (std::size_t i = 0; i < N; ++i) {
        RandomStream s(3, StreamDomain::user, i);
        const NoisePath p = gen.sample(s);
        for (int a = 0; a < 2; ++a)
            for (int c = 0; c < 2; ++c) acc(a, c) += p(a, 10 + lag) * std::conj(p(c, 10));
    }
    acc /= double(N);
    CHECK(testing::max_abs(acc - gen.covariance(lag * grid.dt)) < 0.06);
    CHECK(testing::max_abs(gen.covariance(0.3) - bcf_eval(b, 0.3).conjugate()) < 1e-12);
}

TEST_CASE("noise paths are reproducible") {
    const BathSpec b = one_pole(cplx(0.5, 0.2), cplx(1, 0.7));
    const auto a = noise_paths(b, {0.02, 100}, 5, 77);
    const auto c = noise_paths(b, {0.02, 100}, 5, 77);
    const auto d = noise_paths(b, {0.02, 100}, 5, 78);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].values == c[i].values);
        CHECK(a[i].values != d[i].values);
    }
    UniformGrid g{0.02, 100};
    NoiseGenerator gen(b, g);
    RandomStream s1(77, StreamDomain::user, 3);
    CHECK(gen.sample(s1).values == a[3].values);
}

TEST_CASE("linear interpolation between grid points") {
    NoisePath p;
    p.dt = 0.5;
    p.values = {{cplx(0, 0), cplx(1, 2), cplx(3, 0)}};
    CHECK(p.at(0, 0.25) == cplx(0.5, 1.0));
    CHECK(p.at(0, 0.75) == cplx(2.0, 1.0));
    CHECK(p.at(0, 1.0) == cplx(3, 0));
}

}  // TEST_SUITE
