#include "doctest.h"

#include <cmath>
#include <random>

#include "fadingmac/source_models.hpp"
#include "oracles.hpp"

using namespace fmac;

TEST_CASE("lossless demands") {
    const DiscreteSource ex(FiniteJointPmf({{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {1.0 / 3, 1.0 / 3, 0.0, 1.0 / 3}));
    const auto l = lossless_lhs(ex);
    CHECK(std::abs(l.r1_bound - 0.667) < 1e-3);
    CHECK(std::abs(l.r2_bound - 0.667) < 1e-3);
    CHECK(std::abs(l.sum_bound - 1.585) < 1e-3);

    const auto fair = lossless_lhs(DiscreteSource(product_pmf({0, 1}, {0.5, 0.5}, {0, 1}, {0.5, 0.5})));
    CHECK(fair.r1_bound == doctest::Approx(1).epsilon(1e-15));
    CHECK(fair.r2_bound == doctest::Approx(1).epsilon(1e-15));
    CHECK(fair.sum_bound == doctest::Approx(2).epsilon(1e-15));

    const auto same = lossless_lhs(DiscreteSource(FiniteJointPmf({{0, 0}, {1, 1}}, {0.5, 0.5})));
    CHECK(std::abs(same.r1_bound) < 1e-15);
    CHECK(std::abs(same.r2_bound) < 1e-15);
    CHECK(same.sum_bound == doctest::Approx(1).epsilon(1e-15));

    CHECK_THROWS(DiscreteSource(FiniteJointPmf({{0}, {1}}, {0.5, 0.5})));
}

TEST_CASE("independent sources need their marginal entropies") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.05, 1);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> p1{u(rng), u(rng), u(rng)}, p2{u(rng), u(rng)};
        double s1 = p1[0] + p1[1] + p1[2], s2 = p2[0] + p2[1];
        for (auto& x : p1) x /= s1;
        for (auto& x : p2) x /= s2;
        double h1 = 0, h2 = 0;
        for (double x : p1) h1 -= x * std::log2(x);
        for (double x : p2) h2 -= x * std::log2(x);
        const auto l = lossless_lhs(DiscreteSource(product_pmf({0, 1, 2}, p1, {0, 1}, p2)));
        CHECK(std::abs(l.r1_bound - h1) < 1e-12);
        CHECK(std::abs(l.r2_bound - h2) < 1e-12);
        CHECK(std::abs(l.sum_bound - (h1 + h2)) < 1e-12);
    }
}

TEST_CASE("Gaussian LT closed forms") {
    const auto ind = gaussian_lt({0.0, 1.0, 2.5});
    CHECK(ind.d1 == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(ind.d2 == doctest::Approx(std::pow(2.0, -5)).epsilon(1e-14));
    CHECK(ind.lhs.r1_bound == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ind.lhs.r2_bound == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(ind.lhs.sum_bound == doctest::Approx(3.5).epsilon(1e-14));

    const auto r2zero = gaussian_lt({0.8, 1.5, 0.0});
    CHECK(r2zero.a2 == 0.0);
    CHECK(r2zero.d1 == doctest::Approx(std::pow(2.0, -3)).epsilon(1e-14));
    CHECK(r2zero.d2 == doctest::Approx(1 - 0.64 * (1 - std::pow(2.0, -3))).epsilon(1e-14));

    const auto ex = gaussian_lt({0.5, 1.0, 1.0});
    CHECK(ex.a1 == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(ex.rho_w == doctest::Approx(0.375).epsilon(1e-15));
    const double d1 = 0.25 * (1 - 0.1875) / (1 - 0.140625);
    CHECK(ex.d1 == doctest::Approx(d1).epsilon(1e-14));
    CHECK(std::abs(ex.d1 - 0.23636) < 1e-5);

    CHECK_THROWS(gaussian_lt({1.0, 1, 1}));
    CHECK_THROWS(gaussian_lt({0.3, -1, 1}));
}

TEST_CASE("Gaussian LT against the covariance oracle") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> rho(-0.95, 0.95), rate(0.01, 4);
    for (int t = 0; t < 200; ++t) {
        const GaussianLtConfig cfg{rho(rng), rate(rng), rate(rng)};
        const auto g = gaussian_lt(cfg);
        const auto d = oracle::lt_distortion(cfg.rho, cfg.r1, cfg.r2);
        CHECK(std::abs(g.d1 - d[0]) < 1e-12);
        CHECK(std::abs(g.d2 - d[1]) < 1e-12);
        CHECK(std::abs(g.lhs.sum_bound - oracle::lt_sum_information(cfg.rho, cfg.r1, cfg.r2)) < 1e-10);
        CHECK(std::abs(g.lhs.sum_bound - (cfg.r1 + cfg.r2 + 0.5 * std::log2(1 - g.a1 * g.a2 * cfg.rho * cfg.rho))) <
              1e-12);
        CHECK(g.lhs.r1_bound >= 0);
        CHECK(g.lhs.r2_bound >= 0);
        CHECK(g.lhs.r1_bound <= cfg.r1 + 1e-15);
        CHECK(std::abs(g.rho_w) <= std::abs(cfg.rho));
        CHECK(g.d1 > 0);
        CHECK(g.d1 <= 1);

        const auto swapped = gaussian_lt({cfg.rho, cfg.r2, cfg.r1});
        CHECK(swapped.d1 == g.d2);
        CHECK(swapped.d2 == g.d1);
    }
}

TEST_CASE("distortion decreases in both rates") {
    for (double rho : {0.3, 0.9}) {
        double prev_own = 2, prev_other = 2;
        for (int i = 0; i <= 40; ++i) {
            const double r = 0.1 * i;
            const double own = gaussian_lt({rho, r, 1.0}).d1;
            const double other = gaussian_lt({rho, 1.0, r}).d1;
            CHECK(own < prev_own);
            CHECK(other < prev_other);
            prev_own = own, prev_other = other;
        }
        CHECK(gaussian_lt({rho, 30, 1}).d1 < 1e-15);
    }
}

TEST_CASE("Monte Carlo conditional variance") {
    const auto ind = mc_conditional_variance({0.0, 1, 1}, 200000, 1);
    CHECK(std::abs(ind.d1 - 0.25) <= 3 * ind.stderr1);
    CHECK(std::abs(ind.d2 - 0.25) <= 3 * ind.stderr2);

    const auto ex = mc_conditional_variance({0.5, 1, 1}, 200000, 2);
    const double d1 = 0.25 * (1 - 0.1875) / (1 - 0.140625);
    CHECK(std::abs(ex.d1 - d1) <= 3 * ex.stderr1);
    CHECK(std::abs(ex.d2 - d1) <= 3 * ex.stderr2);

    const auto none = mc_conditional_variance({0.7, 0, 0}, 10000, 3);
    CHECK(none.d1 == 1.0);
    CHECK(none.d2 == 1.0);

    const auto a = mc_conditional_variance({0.5, 1, 2}, 10000, 4);
    const auto b = mc_conditional_variance({0.5, 1, 2}, 10000, 4);
    CHECK(a.d1 == b.d1);
    CHECK(a.stderr2 == b.stderr2);
}
