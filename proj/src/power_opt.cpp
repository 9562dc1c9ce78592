#include "fadingmac/power_opt.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fmac {

namespace {

constexpr double kBudgetSlack = 1e-12;

// Projects y onto {x ≥ 0, Σ w x ≤ budget} in the metric Σ w d (x − y)²; the
// solution is x = max(y − λ/d, 0) for the smallest admissible level λ ≥ 0,
// found exactly by walking the sorted breakpoints y d.
void project_budget(std::span<double> y, std::span<const double> w, std::span<const double> d, double budget) {
    if (budget <= 0.0) {
        std::fill(y.begin(), y.end(), 0.0);
        return;
    }
    double mass = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k)
        mass += w[k] * std::max(y[k], 0.0);
    if (mass <= budget) {
        for (double& v : y)
            v = std::max(v, 0.0);
        return;
    }
    std::vector<std::size_t> order(y.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return y[a] * d[a] > y[b] * d[b]; });
    double swd = 0.0, swy = 0.0, level = 0.0;
    for (std::size_t j = 0; j < order.size(); ++j) {
        const std::size_t k = order[j];
        swd += w[k] / d[k];
        swy += w[k] * y[k];
        level = (swy - budget) / swd;
        if (j + 1 == order.size() || y[order[j + 1]] * d[order[j + 1]] <= level)
            break;
    }
    for (std::size_t k = 0; k < y.size(); ++k)
        y[k] = std::max(y[k] - level / d[k], 0.0);
}

// First-order gain per unit of power (in the P1 + P2 sense) from leaving the
// zero-power corner of one state, given the multipliers: the maximum over
// directions t ∈ [0, 1] of a t + b (1 − t) + c √(t (1 − t)), with a and b the
// slope gaps of the two users and c ≥ 0 the cross slope.
double corner_gain(double a, double b, double c) {
    return 0.5 * (a + b) + 0.5 * std::hypot(a - b, c);
}

// Direction t (share of user 1) attaining corner_gain.
double corner_direction(double a, double b, double c) {
    const double r = std::hypot(a - b, c);
    return r > 0.0 ? 0.5 * (1.0 + (a - b) / r) : 0.5;
}

struct Multipliers {
    std::array<double, 2> mu{0.0, 0.0};
    std::array<bool, 2> used{false, false}; // budget > 0 and some state powered
    double excess = 0.0;                    // largest budget overshoot
};

// Per-user multiplier: when the budget is tight, the largest normalized slope
// over powered states (or, with `weighted`, their power-weighted mean, which
// tiny powers with huge slopes do not distort); zero for a slack budget.
Multipliers multipliers(const RateEvaluator& eval, std::span<const double> x, std::span<const double> g,
                        bool weighted) {
    const std::size_t n = eval.num_states();
    const auto& w = eval.state_probs();
    Multipliers m;
    for (std::size_t user = 0; user < 2; ++user) {
        const double budget = user == 0 ? eval.params().pbar1 : eval.params().pbar2;
        if (budget <= 0.0)
            continue;
        double mass = 0.0, top = -std::numeric_limits<double>::infinity(), wg = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double xk = x[user * n + k];
            mass += w[k] * xk;
            if (xk > 0.0) {
                top = std::max(top, g[user * n + k]);
                if (std::isfinite(g[user * n + k]))
                    wg += w[k] * xk * g[user * n + k];
            }
        }
        m.excess = std::max(m.excess, mass - budget);
        const bool tight = mass >= budget - kBudgetSlack * std::max(1.0, budget);
        if (tight && mass <= 0.0)
            continue;
        m.used[user] = true;
        m.mu[user] = tight ? (weighted ? wg / mass : top) : 0.0;
    }
    return m;
}

double kkt_stacked(const RateEvaluator& eval, std::span<const double> x, std::span<const double> g) {
    const std::size_t n = eval.num_states();
    const auto& w = eval.state_probs();
    const auto m = multipliers(eval, x, g, false);
    double residual = std::max(m.excess, 0.0);
    for (std::size_t user = 0; user < 2; ++user) {
        if (!m.used[user])
            continue;
        for (std::size_t k = 0; k < n; ++k) {
            const double gap = g[user * n + k] - m.mu[user];
            residual = std::max(residual, x[user * n + k] > 0.0 ? std::abs(gap) : std::max(gap, 0.0));
        }
    }
    // A state with both powers at zero can still gain along a joint
    // direction through the √(P1 P2) term.
    if (m.used[0] && m.used[1] && eval.params().rho_tilde != 0.0)
        for (std::size_t k = 0; k < n; ++k)
            if (x[k] == 0.0 && x[n + k] == 0.0) {
                const auto c = eval.corner_slopes(k);
                residual = std::max(residual, corner_gain(c.p1 / w[k] - m.mu[0], c.p2 / w[k] - m.mu[1], c.cross / w[k]));
            }
    return residual;
}

void scaled_gradient(const RateEvaluator& eval, std::span<const double> x, std::vector<double>& out) {
    const std::size_t n = eval.num_states();
    eval.sum_gradient(x, out);
    for (std::size_t k = 0; k < 2 * n; ++k)
        out[k] /= eval.state_probs()[k % n];
}

// Optimal distance r ≥ 0 from the current powers of state k along the
// nonnegative direction d, priced at the multipliers: the root of the
// directional slope minus ⟨μ, d⟩, which is decreasing in r by concavity.
// Capped where either budget would be used up by this state alone.
double ray_optimum(const RateEvaluator& eval, std::span<const double> x, std::size_t k, std::array<double, 2> d,
                   std::array<double, 2> mu) {
    const std::size_t n = eval.num_states();
    const double wk = eval.state_probs()[k];
    const GmacParams& params = eval.params();
    double r_max = std::numeric_limits<double>::infinity();
    if (d[0] > 0.0)
        r_max = std::min(r_max, params.pbar1 / (wk * d[0]));
    if (d[1] > 0.0)
        r_max = std::min(r_max, params.pbar2 / (wk * d[1]));
    std::vector<double> y(x.begin(), x.end()), g(x.size());
    const double base1 = x[k], base2 = x[n + k];
    const double price = mu[0] * d[0] + mu[1] * d[1];
    auto gains = [&](double r) {
        y[k] = base1 + r * d[0];
        y[n + k] = base2 + r * d[1];
        eval.sum_gradient(y, g);
        return (g[k] * d[0] + g[n + k] * d[1]) / wk > price;
    };
    if (gains(r_max))
        return r_max;
    // Bracket on a log scale, then bisect.
    double hi = r_max, lo = 0.5 * r_max;
    for (int i = 0; i < 2000 && lo > 0.0 && !gains(lo); ++i)
        hi = lo, lo *= 0.5;
    if (!(lo > 0.0))
        return 0.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (gains(mid) ? lo : hi) = mid;
    }
    return lo;
}

// Near the optimum f(trial) − f(x) drowns in rounding. Along the segment
// from x to trial the objective is concave, so a slope of at least `need` at
// the far end already implies f(trial) − f(x) ≥ need. When both ends sit on
// a user's budget, Σ w Δ is zero up to rounding; a representative gradient
// level (weighted by where the block actually moves) is taken out first so
// that rounding residue does not swamp the slope.
bool slope_accepts(const RateEvaluator& eval, std::span<const double> x, std::span<const double> trial,
                   double need) {
    const std::size_t n = eval.num_states();
    const auto& w = eval.state_probs();
    std::vector<double> g(x.size());
    eval.sum_gradient(trial, g);
    double slope = 0.0;
    for (std::size_t user = 0; user < 2; ++user) {
        const double budget = user == 0 ? eval.params().pbar1 : eval.params().pbar2;
        double mass_x = 0.0, mass_t = 0.0, sum_w = 0.0, sum_g = 0.0, block = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i = user * n + k;
            mass_x += w[k] * x[i];
            mass_t += w[k] * trial[i];
            if (trial[i] == x[i])
                continue;
            if (!std::isfinite(g[i]))
                return false;
            sum_w += w[k] * std::abs(trial[i] - x[i]);
            sum_g += g[i] * std::abs(trial[i] - x[i]);
            block += g[i] * (trial[i] - x[i]);
        }
        const double slack = kBudgetSlack * std::max(1.0, budget);
        if (sum_w > 0.0 && std::abs(mass_x - budget) <= slack && std::abs(mass_t - budget) <= slack) {
            const double level = sum_g / sum_w;
            block = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const std::size_t i = user * n + k;
                if (trial[i] != x[i])
                    block += (g[i] - level * w[k]) * (trial[i] - x[i]);
            }
        }
        slope += block;
    }
    return std::isfinite(slope) && slope >= need;
}

} // namespace

OptimizationResult optimize_sum_rate(const ChannelStateModel& model, const GmacParams& params,
                                     const SolverOptions& options, const std::optional<PowerPolicy>& start) {
    if (!(options.tol > 0.0))
        throw std::invalid_argument("solver tolerance must be positive");
    if (params.rho_tilde < 0.0)
        throw std::invalid_argument("the sum bound is concave only for rho_tilde >= 0; negate one input instead");
    const RateEvaluator eval(model, params);
    const std::size_t n = eval.num_states();
    const auto& w = eval.state_probs();
    const std::array<double, 2> budget{params.pbar1, params.pbar2};

    std::vector<double> x = eval.stack(start ? *start : upa_policy(model, params));
    std::vector<double> scale(2 * n, 1.0);
    auto project = [&](std::vector<double>& v) {
        for (std::size_t user = 0; user < 2; ++user)
            project_budget(std::span(v).subspan(user * n, n), w, std::span(scale).subspan(user * n, n),
                           budget[user]);
    };
    project(x);

    std::vector<double> grad(2 * n), curv(2 * n), probe(2 * n), pgrad(2 * n), pcurv(2 * n), trial(2 * n);
    std::vector<double> dir(2 * n);
    double f = eval.sum_bound(x);
    double step = options.initial_step;
    OptimizationResult result;
    double residual = std::numeric_limits<double>::infinity();

    for (; result.iterations < options.max_iterations; ++result.iterations) {
        scaled_gradient(eval, x, grad);
        residual = kkt_stacked(eval, x, grad);
        if (residual < options.tol) {
            result.converged = true;
            break;
        }
        // Zero powers next to the √(P1 P2) singularity. A zero power facing
        // a correlated partner is never optimal (its slope is infinite), and
        // a state whose two powers are both negligible either should sit at
        // the corner or should leave it along the best joint direction. Both
        // cases are resolved by jumping to the optimum along that ray at the
        // current multipliers, which the scaled steps could only approach
        // geometrically.
        bool moved = false;
        const std::vector<double> before = x;
        if (params.rho_tilde > 0.0) {
            const auto m = multipliers(eval, x, grad, true);
            const double negligible = 1e-9 * (1.0 + std::max(budget[0], budget[1]));
            for (std::size_t k = 0; k < n; ++k) {
                const double p1 = x[k], p2 = x[n + k];
                if (budget[0] > 0.0 && budget[1] > 0.0 && std::max(p1, p2) <= negligible) {
                    const auto c = eval.corner_slopes(k);
                    const double a = c.p1 / w[k] - m.mu[0], b = c.p2 / w[k] - m.mu[1], cross = c.cross / w[k];
                    if (corner_gain(a, b, cross) <= 0.0) {
                        moved = moved || p1 > 0.0 || p2 > 0.0;
                        x[k] = x[n + k] = 0.0;
                        continue;
                    }
                    if (!std::isfinite(grad[k]) || !std::isfinite(grad[n + k]) || (p1 == 0.0 && p2 == 0.0)) {
                        const double t = corner_direction(a, b, cross);
                        x[k] = x[n + k] = 0.0;
                        const double r = ray_optimum(eval, x, k, {t, 1.0 - t}, m.mu);
                        x[k] = r * t;
                        x[n + k] = r * (1.0 - t);
                        moved = true;
                        continue;
                    }
                }
                for (std::size_t user = 0; user < 2; ++user) {
                    const std::size_t i = user * n + k;
                    if (std::isfinite(grad[i]) || budget[user] <= 0.0)
                        continue;
                    x[i] = ray_optimum(eval, x, k, {user == 0 ? 1.0 : 0.0, user == 1 ? 1.0 : 0.0}, m.mu);
                    moved = true;
                }
            }
        }
        if (moved) {
            // Shrink rather than shift back onto the budget, so the new
            // values survive.
            for (std::size_t user = 0; user < 2; ++user) {
                double mass = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    mass += w[k] * x[user * n + k];
                if (mass > budget[user])
                    for (std::size_t k = 0; k < n; ++k)
                        x[user * n + k] *= budget[user] / mass;
            }
            // The jumps are priced at fixed multipliers, which overshoots
            // when the state holds much of a budget. Keep them only if they
            // pay off, and restart the step length from the Newton scale.
            const double fj = eval.sum_bound(x);
            if (fj >= f) {
                f = fj;
                scaled_gradient(eval, x, grad);
                step = std::min(step, options.initial_step);
            } else {
                x = before;
            }
        }
        eval.sum_curvature(x, curv);

        // A zero power facing a correlated partner has an infinite slope and
        // curvature. Its step is sized from a nearby positive probe instead,
        // which grows it geometrically over the next iterations.
        bool singular = false;
        probe = x;
        for (std::size_t k = 0; k < 2 * n; ++k)
            if (!std::isfinite(grad[k])) {
                probe[k] = 1e-12 * (1.0 + x[k < n ? k + n : k - n]);
                singular = true;
            }
        if (singular) {
            scaled_gradient(eval, probe, pgrad);
            eval.sum_curvature(probe, pcurv);
        }

        // Newton-like diagonal scaling, kept within a bounded ratio.
        double top = 0.0;
        for (std::size_t k = 0; k < 2 * n; ++k) {
            if (!std::isfinite(grad[k])) {
                grad[k] = pgrad[k];
                curv[k] = pcurv[k];
            }
            curv[k] /= w[k % n];
            top = std::max(top, curv[k]);
        }
        const double floor = std::max(top, 1e-300) * 1e-12;
        for (std::size_t k = 0; k < 2 * n; ++k) {
            scale[k] = std::max(curv[k], floor);
            dir[k] = budget[k / n] > 0.0 ? grad[k] / scale[k] : 0.0;
        }

        bool accepted = false;
        for (int halvings = 0; halvings < 100; ++halvings) {
            for (std::size_t k = 0; k < 2 * n; ++k)
                trial[k] = x[k] + step * dir[k];
            project(trial);
            // Armijo along the projection arc. ‖Δ‖²/step bounds ⟨∇f, Δ⟩ from
            // below (projection property) and, unlike the inner product
            // itself, stays accurate when Δ is tiny.
            double predicted = 0.0;
            for (std::size_t k = 0; k < 2 * n; ++k)
                predicted += w[k % n] * scale[k] * (trial[k] - x[k]) * (trial[k] - x[k]);
            predicted /= step;
            if (!(predicted > 0.0))
                break;
            const double ft = eval.sum_bound(trial);
            if (ft >= f + options.armijo * predicted || slope_accepts(eval, x, trial, options.armijo * predicted)) {
                accepted = true;
                x.swap(trial);
                f = ft;
                if (halvings == 0)
                    step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if (!accepted)
            break;
    }
    if (!result.converged) {
        scaled_gradient(eval, x, grad);
        residual = kkt_stacked(eval, x, grad);
        result.converged = residual < options.tol;
    }
    result.policy = eval.unstack(x);
    result.objective = eval.sum_bound(x);
    result.kkt_residual = residual;
    return result;
}

PowerPolicy upa_policy(const ChannelStateModel& model, const GmacParams& params) {
    params.validate();
    PowerPolicy policy;
    for (const auto& s : model.states())
        policy.set({s.csit1, s.csit2}, {params.pbar1, params.pbar2});
    return policy;
}

PowerPolicy random_tdma_policy(const ChannelStateModel& model, const GmacParams& params) {
    params.validate();
    if (!model.has_perfect_csit())
        throw std::invalid_argument("random TDMA needs perfect CSIT");
    const RateEvaluator eval(model, params);
    const std::size_t n = eval.num_states();
    std::vector<double> share1(n), share2(n);
    double mass1 = 0.0, mass2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto [h1, h2] = eval.states()[k];
        const double g1 = h1 * h1, g2 = h2 * h2;
        share1[k] = g1 > g2 ? 1.0 : (g1 == g2 ? 0.5 : 0.0);
        share2[k] = 1.0 - share1[k];
        mass1 += eval.state_probs()[k] * share1[k];
        mass2 += eval.state_probs()[k] * share2[k];
    }
    std::vector<double> x(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
        x[k] = mass1 > 0.0 ? params.pbar1 * share1[k] / mass1 : 0.0;
        x[n + k] = mass2 > 0.0 ? params.pbar2 * share2[k] / mass2 : 0.0;
    }
    return eval.unstack(x);
}

double average_power(const ChannelStateModel& model, const PowerPolicy& policy, int which) {
    if (which != 1 && which != 2)
        throw std::invalid_argument("user index must be 1 or 2");
    double avg = 0.0;
    for (const auto& s : model.states()) {
        if (s.prob <= 0.0)
            continue;
        const auto pw = policy.at({s.csit1, s.csit2});
        avg += s.prob * (which == 1 ? pw.p1 : pw.p2);
    }
    return avg;
}

double kkt_residual(const ChannelStateModel& model, const GmacParams& params, const PowerPolicy& policy) {
    const RateEvaluator eval(model, params);
    const auto x = eval.stack(policy);
    std::vector<double> grad(x.size());
    scaled_gradient(eval, x, grad);
    return kkt_stacked(eval, x, grad);
}

} // namespace fmac
