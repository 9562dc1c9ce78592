#include "fadingmac/source_models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace fmac {

DiscreteSource::DiscreteSource(FiniteJointPmf p) : pmf(std::move(p)) {
    if (pmf.arity() != 2)
        throw InvalidPmf("a discrete source pmf must be over pairs (u1, u2)");
}

RateTriple lossless_lhs(const DiscreteSource& src) {
    return {conditional_entropy(src.pmf, 1), conditional_entropy(src.pmf, 0), entropy(src.pmf)};
}

void GaussianLtConfig::validate() const {
    if (!(std::abs(rho) < 1.0))
        throw std::invalid_argument("source correlation must satisfy |rho| < 1");
    if (!(r1 >= 0.0) || !(r2 >= 0.0) || !std::isfinite(r1) || !std::isfinite(r2))
        throw std::invalid_argument("quantization rates must be finite and nonnegative");
}

GaussianLtDerived gaussian_lt(const GaussianLtConfig& cfg) {
    cfg.validate();
    GaussianLtDerived out;
    out.a1 = -std::expm1(-2.0 * cfg.r1 * std::log(2.0));
    out.a2 = -std::expm1(-2.0 * cfg.r2 * std::log(2.0));
    const double rho2 = cfg.rho * cfg.rho;
    out.rho_w = cfg.rho * std::sqrt(out.a1 * out.a2);
    const double joint = 1.0 - out.a1 * out.a2 * rho2;
    out.d1 = (1.0 - out.a1) * (1.0 - rho2 * out.a2) / joint;
    out.d2 = (1.0 - out.a2) * (1.0 - rho2 * out.a1) / joint;
    // I(U_i;W_i) = R_i and I(W1;W2) = −½ log2(1 − a1 a2 ρ²).
    const double shared = 0.5 * std::log2(joint);
    out.lhs = {cfg.r1 + shared, cfg.r2 + shared, cfg.r1 + cfg.r2 + shared};
    return out;
}

namespace {

// Sufficient statistics for regressing U1 and U2 on the informative W's.
struct RegressionSums {
    std::array<std::array<double, 2>, 2> ww{};
    std::array<std::array<double, 2>, 2> wu{}; // wu[j][i] = Σ W_j U_i
    std::array<double, 2> uu{};
    std::uint64_t n = 0;

    void add(const std::array<double, 2>& w, const std::array<double, 2>& u) {
        for (int j = 0; j < 2; ++j) {
            for (int k = 0; k < 2; ++k)
                ww[j][k] += w[j] * w[k];
            for (int i = 0; i < 2; ++i)
                wu[j][i] += w[j] * u[i];
        }
        for (int i = 0; i < 2; ++i)
            uu[i] += u[i] * u[i];
        ++n;
    }

    // Adjusted unexplained fraction for U_i given the regressors in `use`.
    double unexplained(int i, const std::array<bool, 2>& use) const {
        double explained = 0.0;
        int k = 0;
        if (use[0] && use[1]) {
            k = 2;
            const double det = ww[0][0] * ww[1][1] - ww[0][1] * ww[1][0];
            const double b0 = (ww[1][1] * wu[0][i] - ww[0][1] * wu[1][i]) / det;
            const double b1 = (ww[0][0] * wu[1][i] - ww[1][0] * wu[0][i]) / det;
            explained = b0 * wu[0][i] + b1 * wu[1][i];
        } else if (use[0] || use[1]) {
            k = 1;
            const int j = use[0] ? 0 : 1;
            explained = wu[j][i] * wu[j][i] / ww[j][j];
        }
        const double ssr = std::max(uu[i] - explained, 0.0);
        const double nn = static_cast<double>(n);
        return (ssr / (nn - k)) / (uu[i] / nn);
    }
};

} // namespace

McDistortionEstimate mc_conditional_variance(const GaussianLtConfig& cfg, std::uint64_t samples,
                                             std::uint64_t seed) {
    cfg.validate();
    if (samples < 10000)
        throw std::invalid_argument("Monte Carlo conditional variance needs at least 1e4 samples");
    const auto lt = gaussian_lt(cfg);
    const std::array<double, 2> gain{lt.a1, lt.a2};
    const std::array<double, 2> noise{std::sqrt(lt.a1 * (1.0 - lt.a1)), std::sqrt(lt.a2 * (1.0 - lt.a2))};
    const std::array<bool, 2> use{lt.a1 > 0.0, lt.a2 > 0.0};
    const double mix = std::sqrt(1.0 - cfg.rho * cfg.rho);

    constexpr std::uint64_t kBatches = 100;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    RegressionSums total;
    std::vector<std::array<double, 2>> batch_estimates;
    for (std::uint64_t b = 0; b < kBatches; ++b) {
        const std::uint64_t size = samples / kBatches + (b < samples % kBatches ? 1 : 0);
        RegressionSums batch;
        for (std::uint64_t s = 0; s < size; ++s) {
            const double z1 = normal(rng);
            const double z2 = normal(rng);
            const std::array<double, 2> u{z1, cfg.rho * z1 + mix * z2};
            std::array<double, 2> w{};
            for (int i = 0; i < 2; ++i)
                w[i] = gain[i] * u[i] + noise[i] * normal(rng);
            batch.add(w, u);
            total.add(w, u);
        }
        batch_estimates.push_back({batch.unexplained(0, use), batch.unexplained(1, use)});
    }

    McDistortionEstimate out;
    out.d1 = total.unexplained(0, use);
    out.d2 = total.unexplained(1, use);
    std::array<double, 2> mean{}, var{};
    for (const auto& e : batch_estimates)
        for (int i = 0; i < 2; ++i)
            mean[i] += e[i] / kBatches;
    for (const auto& e : batch_estimates)
        for (int i = 0; i < 2; ++i)
            var[i] += (e[i] - mean[i]) * (e[i] - mean[i]) / (kBatches - 1);
    out.stderr1 = std::sqrt(var[0] / kBatches);
    out.stderr2 = std::sqrt(var[1] / kBatches);
    return out;
}

} // namespace fmac
