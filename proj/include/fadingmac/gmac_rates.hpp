#pragma once

// Rate bounds of the fading Gaussian MAC with correlated Gaussian inputs.
//
// For a power policy P_i(ĥ1, ĥ2) and input correlation ρ̃ the three bounds are
//
//   r1  = ½ E log2(1 + |H1|² P1 (1 − ρ̃²) / σ²)
//   r2  = ½ E log2(1 + |H2|² P2 (1 − ρ̃²) / σ²)
//   sum = ½ E log2(1 + (|H1|² P1 + |H2|² P2 + 2 |H1||H2| ρ̃ √(P1 P2)) / σ²)
//
// with the expectation over the joint (fade, CSIT) support, evaluated exactly.

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "fadingmac/finite_prob.hpp"

namespace fmac {

struct CsitState {
    double h1 = 0.0;
    double h2 = 0.0;
    auto operator<=>(const CsitState&) const = default;
};

struct PowerPair {
    double p1 = 0.0;
    double p2 = 0.0;
};

/// Per-CSIT-state transmit powers for both encoders. States absent from the
/// table transmit nothing.
class PowerPolicy {
public:
    void set(CsitState state, PowerPair powers);
    PowerPair at(CsitState state) const;
    bool contains(CsitState state) const { return table_.count(state) != 0; }
    const std::map<CsitState, PowerPair>& table() const noexcept { return table_; }

private:
    std::map<CsitState, PowerPair> table_;
};

struct RateTriple {
    double r1_bound = 0.0;
    double r2_bound = 0.0;
    double sum_bound = 0.0;
};

struct GmacParams {
    double sigma2 = 1.0;
    double rho_tilde = 0.0;
    double pbar1 = 0.0;
    double pbar2 = 0.0;

    /// Throws std::invalid_argument on σ² ≤ 0, |ρ̃| > 1 or negative budgets.
    void validate() const;
};

/// Flattened view of a model for repeated evaluation.
///
/// Powers are handled as one stacked vector x of length 2n over the n CSIT
/// states with positive probability: x[k] = P1(state k), x[n + k] = P2(state k).
class RateEvaluator {
public:
    RateEvaluator(const ChannelStateModel& model, const GmacParams& params);

    std::size_t num_states() const noexcept { return states_.size(); }
    const std::vector<CsitState>& states() const noexcept { return states_; }
    const std::vector<double>& state_probs() const noexcept { return probs_; }
    const GmacParams& params() const noexcept { return params_; }

    RateTriple triple(std::span<const double> x) const;
    double sum_bound(std::span<const double> x) const;

    /// ∂ sum / ∂x. One-sided at zero power: a coordinate at 0 facing a
    /// positive partner power and ρ̃ ≠ 0 has an infinite derivative.
    void sum_gradient(std::span<const double> x, std::span<double> grad) const;
    /// −∂²sum/∂x_k², the diagonal of the negated Hessian. Infinite where the
    /// gradient is.
    void sum_curvature(std::span<const double> x, std::span<double> curv) const;

    /// Slopes of the sum bound at zero power in CSIT state k: the sum bound
    /// there is ≈ p1 P1 + p2 P2 + cross √(P1 P2) to first order.
    struct CornerSlopes {
        double p1 = 0.0, p2 = 0.0, cross = 0.0;
    };
    CornerSlopes corner_slopes(std::size_t k) const;
    /// Throws if a positive-probability CSIT state is missing from the policy.
    std::vector<double> stack(const PowerPolicy& policy) const;
    /// Zero-probability CSIT states are filled with zero power.
    PowerPolicy unstack(std::span<const double> x) const;

private:
    struct Term {
        std::size_t state;
        double gain1, gain2, cross; // |h1|², |h2|², 2|h1||h2|ρ̃
        double prob;
    };

    GmacParams params_;
    std::vector<CsitState> states_;
    std::vector<double> probs_;
    std::vector<CsitState> null_states_;
    std::vector<Term> terms_;
};

RateTriple rate_triple(const ChannelStateModel& model, const PowerPolicy& policy, const GmacParams& params);

/// Component `which` (1 or 2) of rate_triple.
double individual_bound(const ChannelStateModel& model, const PowerPolicy& policy, const GmacParams& params,
                        int which);

using PolicyGradient = std::map<CsitState, PowerPair>;

/// Partial derivatives of the sum bound with respect to each state's powers.
PolicyGradient sum_bound_gradient(const ChannelStateModel& model, const PowerPolicy& policy,
                                  const GmacParams& params);

struct McRateEstimate {
    RateTriple mean;
    RateTriple stderr_;
    std::uint64_t samples = 0;
};

/// Seeded Monte Carlo estimate of the rate triple: samples joint states and
/// averages the same per-state log terms.
McRateEstimate mc_rate_triple(const ChannelStateModel& model, const PowerPolicy& policy, const GmacParams& params,
                              std::uint64_t samples, std::uint64_t seed);

} // namespace fmac
