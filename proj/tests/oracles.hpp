#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the library under test except for building its input types.

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "fadingmac/finite_prob.hpp"
#include "fadingmac/gmac_rates.hpp"
#include "fadingmac/source_models.hpp"

namespace oracle {

struct FadeState {
    double h1, h2, prob;
};

using PowerFn = std::function<std::array<double, 2>(double, double)>;

// Rates straight from a list of fade states; powers indexed by the fades
// themselves (perfect CSIT).
inline std::array<double, 3> rates(const std::vector<FadeState>& states, const PowerFn& power, double rho,
                                   double sigma2) {
    std::array<double, 3> r{0, 0, 0};
    for (const auto& s : states) {
        const auto [p1, p2] = power(s.h1, s.h2);
        const double g1 = s.h1 * s.h1, g2 = s.h2 * s.h2;
        r[0] += s.prob * 0.5 * std::log2(1 + g1 * p1 * (1 - rho * rho) / sigma2);
        r[1] += s.prob * 0.5 * std::log2(1 + g2 * p2 * (1 - rho * rho) / sigma2);
        r[2] += s.prob * 0.5 * std::log2(1 + (g1 * p1 + g2 * p2 + 2 * s.h1 * s.h2 * rho * std::sqrt(p1 * p2)) / sigma2);
    }
    return r;
}

// The fades used by the lossless example: {1, 0.5} on each side, uniform, iid.
inline std::vector<FadeState> example_fades() {
    return {{1, 1, 0.25}, {1, 0.5, 0.25}, {0.5, 1, 0.25}, {0.5, 0.5, 0.25}};
}

// Hand enumeration of UPA with P = 5, ρ̃ = 0.3, σ² = 1: the per-state sum
// arguments are 14, 8.75, 8.75 and 4.25.
inline double upa_example_sum() {
    return 0.5 * (std::log2(14.0) + 2 * std::log2(8.75) + std::log2(4.25)) / 4;
}

// Frozen from an independent SLSQP solve (scipy, ftol 1e-14) of the same
// sum-rate program on the example fades, P̄ = 5, ρ̃ = 0.3, for several BSC
// crossovers: p -> (sum optimum, r1 bound at optimum).
struct Frozen {
    double p, sum, r1;
};
inline constexpr std::array<Frozen, 3> kOptimum{{
    {0.0, 1.613379517328, 0.872870960822},
    {0.1, 1.584974537116, 0.864485810190},
    {0.25, 1.547686308736, 0.870379374791},
}};

// var[U_i | W1, W2] by an explicit Schur complement of the joint covariance
// of (U1, U2, W1, W2) with W_i = a_i U_i + √(a_i(1 − a_i)) Z_i.
inline std::array<double, 2> lt_distortion(double rho, double r1, double r2) {
    const double a1 = 1 - std::pow(2.0, -2 * r1);
    const double a2 = 1 - std::pow(2.0, -2 * r2);
    // cov(W) and cov(U_i, W)
    const double w11 = a1 * a1 + a1 * (1 - a1);
    const double w22 = a2 * a2 + a2 * (1 - a2);
    const double w12 = a1 * a2 * rho;
    const std::array<std::array<double, 2>, 2> cuw{{{a1, a2 * rho}, {a1 * rho, a2}}};
    std::array<double, 2> d{};
    for (int i = 0; i < 2; ++i) {
        const double c1 = cuw[i][0], c2 = cuw[i][1];
        const double det = w11 * w22 - w12 * w12;
        double explained = 0;
        if (a1 > 0 && a2 > 0)
            explained = (c1 * c1 * w22 - 2 * c1 * c2 * w12 + c2 * c2 * w11) / det;
        else if (a1 > 0)
            explained = c1 * c1 / w11;
        else if (a2 > 0)
            explained = c2 * c2 / w22;
        d[i] = 1 - explained;
    }
    return d;
}

// I(U1,U2;W1,W2) from log-determinants: ½ log2 det cov(W) / det cov(W | U).
inline double lt_sum_information(double rho, double r1, double r2) {
    const double a1 = 1 - std::pow(2.0, -2 * r1);
    const double a2 = 1 - std::pow(2.0, -2 * r2);
    const double det_w = a1 * a2 - a1 * a1 * a2 * a2 * rho * rho;
    const double det_noise = a1 * (1 - a1) * a2 * (1 - a2);
    return 0.5 * std::log2(det_w / det_noise);
}

inline double h2(double x) {
    if (x <= 0 || x >= 1) return 0;
    return -x * std::log2(x) - (1 - x) * std::log2(1 - x);
}

} // namespace oracle
