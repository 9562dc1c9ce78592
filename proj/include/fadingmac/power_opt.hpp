#pragma once

// Sum-rate maximizing power control under average power constraints, plus
// the UPA and random-TDMA baselines.

#include <cstddef>
#include <optional>

#include "fadingmac/gmac_rates.hpp"

namespace fmac {

struct OptimizationResult {
    PowerPolicy policy;
    double objective = 0.0; // sum bound, bits per channel use
    double kkt_residual = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

struct SolverOptions {
    double tol = 1e-8;                   // on the KKT residual
    std::size_t max_iterations = 100000;
    double initial_step = 1.0;
    double armijo = 1e-4;
};

/// Maximizes the sum bound over policies with E[P_i(Ĥ)] ≤ P̄_i, P_i ≥ 0.
///
/// Projected gradient ascent in the probability-weighted metric on the CSIT
/// states: a step moves P_i(ĥ) along ∂sum/∂P_i(ĥ) / Pr(ĥ), and the projection
/// back onto the budget set is a water level, P_i = max(y_i − λ_i, 0). Step
/// lengths come from Armijo backtracking (halving), and a step that is
/// accepted without backtracking doubles the next trial step. Starts from
/// UPA unless `start` is given (infeasible starts are projected first).
/// Never throws on non-convergence; check `converged`.
OptimizationResult optimize_sum_rate(const ChannelStateModel& model, const GmacParams& params,
                                     const SolverOptions& options = {},
                                     const std::optional<PowerPolicy>& start = std::nullopt);

inline OptimizationResult optimize_sum_rate(const ChannelStateModel& model, const GmacParams& params, double tol) {
    SolverOptions options;
    options.tol = tol;
    return optimize_sum_rate(model, params, options);
}

/// P_i(ĥ) = P̄_i on every CSIT state.
PowerPolicy upa_policy(const ChannelStateModel& model, const GmacParams& params);

/// The user with the larger |h|² transmits; ties share the state. Each
/// user's powers are scaled so its average meets P̄_i. Needs perfect CSIT.
PowerPolicy random_tdma_policy(const ChannelStateModel& model, const GmacParams& params);

/// E[P_i(Ĥ)] under the CSIT marginal.
double average_power(const ChannelStateModel& model, const PowerPolicy& policy, int which);

/// First-order optimality violation of `policy` for the sum-bound program.
///
/// With ĝ = ∂sum/∂P_i(ĥ) / Pr(ĥ) and the budget tight, the multiplier μ_i is
/// the largest ĝ over states with positive power; the residual is the spread
/// of ĝ below μ_i on those states together with any excess of ĝ over μ_i on
/// zero-power states. A slack budget forces μ_i = 0. Budget violations add
/// their excess. Users with a zero budget are skipped.
double kkt_residual(const ChannelStateModel& model, const GmacParams& params, const PowerPolicy& policy);

} // namespace fmac
