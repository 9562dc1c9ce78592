#include "fadingmac/gmac_rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace fmac {

namespace {

constexpr double kHalfOverLn2 = 0.5 / 0.69314718055994530942;

struct Welford {
    double mean = 0.0, m2 = 0.0;
    std::uint64_t n = 0;
    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double stderr_() const {
        return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    }
};

} // namespace

void PowerPolicy::set(CsitState state, PowerPair powers) {
    if (!(powers.p1 >= 0.0) || !(powers.p2 >= 0.0) || !std::isfinite(powers.p1) || !std::isfinite(powers.p2))
        throw std::invalid_argument("policy powers must be finite and nonnegative");
    table_[state] = powers;
}

PowerPair PowerPolicy::at(CsitState state) const {
    auto it = table_.find(state);
    return it == table_.end() ? PowerPair{} : it->second;
}

void GmacParams::validate() const {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
        throw std::invalid_argument("noise variance must be positive");
    if (!(std::abs(rho_tilde) <= 1.0))
        throw std::invalid_argument("input correlation must lie in [-1, 1]");
    if (!(pbar1 >= 0.0) || !(pbar2 >= 0.0) || !std::isfinite(pbar1) || !std::isfinite(pbar2))
        throw std::invalid_argument("power budgets must be finite and nonnegative");
}

RateEvaluator::RateEvaluator(const ChannelStateModel& model, const GmacParams& params) : params_(params) {
    params_.validate();
    std::map<CsitState, double> csit;
    for (const auto& s : model.states())
        csit[{s.csit1, s.csit2}] += s.prob;
    std::map<CsitState, std::size_t> index;
    for (const auto& [state, prob] : csit) {
        if (prob > 0.0) {
            index[state] = states_.size();
            states_.push_back(state);
            probs_.push_back(prob);
        } else {
            null_states_.push_back(state);
        }
    }
    const double rho = params_.rho_tilde;
    for (const auto& s : model.states()) {
        if (s.prob <= 0.0)
            continue;
        terms_.push_back({index.at({s.csit1, s.csit2}), s.h1 * s.h1, s.h2 * s.h2, 2.0 * s.h1 * s.h2 * rho, s.prob});
    }
}

RateTriple RateEvaluator::triple(std::span<const double> x) const {
    const std::size_t n = states_.size();
    const double inv = 1.0 / params_.sigma2;
    const double shrink = 1.0 - params_.rho_tilde * params_.rho_tilde;
    RateTriple r;
    for (const auto& t : terms_) {
        const double p1 = x[t.state];
        const double p2 = x[n + t.state];
        r.r1_bound += t.prob * std::log2(1.0 + t.gain1 * p1 * shrink * inv);
        r.r2_bound += t.prob * std::log2(1.0 + t.gain2 * p2 * shrink * inv);
        r.sum_bound += t.prob * std::log2(1.0 + (t.gain1 * p1 + t.gain2 * p2 + t.cross * std::sqrt(p1 * p2)) * inv);
    }
    r.r1_bound *= 0.5;
    r.r2_bound *= 0.5;
    r.sum_bound *= 0.5;
    return r;
}

double RateEvaluator::sum_bound(std::span<const double> x) const {
    const std::size_t n = states_.size();
    const double inv = 1.0 / params_.sigma2;
    double s = 0.0;
    for (const auto& t : terms_) {
        const double p1 = x[t.state];
        const double p2 = x[n + t.state];
        s += t.prob * std::log2(1.0 + (t.gain1 * p1 + t.gain2 * p2 + t.cross * std::sqrt(p1 * p2)) * inv);
    }
    return 0.5 * s;
}

void RateEvaluator::sum_gradient(std::span<const double> x, std::span<double> grad) const {
    const std::size_t n = states_.size();
    const double inv = 1.0 / params_.sigma2;
    const double inf = std::numeric_limits<double>::infinity();
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const auto& t : terms_) {
        const double p1 = x[t.state];
        const double p2 = x[n + t.state];
        const double arg = 1.0 + (t.gain1 * p1 + t.gain2 * p2 + t.cross * std::sqrt(p1 * p2)) * inv;
        const double w = t.prob * kHalfOverLn2 * inv / arg;
        // d√(p1 p2)/dp1 = ½√(p2/p1), one-sided at p1 = 0.
        auto cross_slope = [&](double own, double other) {
            if (t.cross == 0.0 || other == 0.0)
                return 0.0;
            if (own == 0.0)
                return t.cross > 0.0 ? inf : -inf;
            return 0.5 * t.cross * std::sqrt(other / own);
        };
        grad[t.state] += w * (t.gain1 + cross_slope(p1, p2));
        grad[n + t.state] += w * (t.gain2 + cross_slope(p2, p1));
    }
}

void RateEvaluator::sum_curvature(std::span<const double> x, std::span<double> curv) const {
    const std::size_t n = states_.size();
    const double inv = 1.0 / params_.sigma2;
    const double inf = std::numeric_limits<double>::infinity();
    std::fill(curv.begin(), curv.end(), 0.0);
    for (const auto& t : terms_) {
        const double p1 = x[t.state];
        const double p2 = x[n + t.state];
        const double arg = 1.0 + (t.gain1 * p1 + t.gain2 * p2 + t.cross * std::sqrt(p1 * p2)) * inv;
        const double w = t.prob * kHalfOverLn2;
        auto one = [&](double gain, double own, double other) {
            if (t.cross != 0.0 && other != 0.0 && own == 0.0)
                return t.cross > 0.0 ? inf : -inf;
            double slope = gain, bend = 0.0;
            if (t.cross != 0.0 && other != 0.0) {
                slope += 0.5 * t.cross * std::sqrt(other / own);
                bend = 0.25 * t.cross * std::sqrt(other) / (own * std::sqrt(own));
            }
            const double d = slope * inv / arg;
            return w * (d * d + bend * inv / arg);
        };
        curv[t.state] += one(t.gain1, p1, p2);
        curv[n + t.state] += one(t.gain2, p2, p1);
    }
}

RateEvaluator::CornerSlopes RateEvaluator::corner_slopes(std::size_t k) const {
    const double inv = 1.0 / params_.sigma2;
    CornerSlopes c;
    for (const auto& t : terms_)
        if (t.state == k) {
            const double w = t.prob * kHalfOverLn2 * inv;
            c.p1 += w * t.gain1;
            c.p2 += w * t.gain2;
            c.cross += w * t.cross;
        }
    return c;
}

std::vector<double> RateEvaluator::stack(const PowerPolicy& policy) const {
    const std::size_t n = states_.size();
    std::vector<double> x(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
        if (!policy.contains(states_[k]))
            throw std::invalid_argument("policy is undefined on a CSIT state of positive probability");
        const auto pw = policy.at(states_[k]);
        x[k] = pw.p1;
        x[n + k] = pw.p2;
    }
    return x;
}

PowerPolicy RateEvaluator::unstack(std::span<const double> x) const {
    const std::size_t n = states_.size();
    PowerPolicy policy;
    for (std::size_t k = 0; k < n; ++k)
        policy.set(states_[k], {x[k], x[n + k]});
    for (const auto& s : null_states_)
        policy.set(s, {});
    return policy;
}

RateTriple rate_triple(const ChannelStateModel& model, const PowerPolicy& policy, const GmacParams& params) {
    RateEvaluator eval(model, params);
    return eval.triple(eval.stack(policy));
}

double individual_bound(const ChannelStateModel& model, const PowerPolicy& policy, const GmacParams& params,
                        int which) {
    if (which != 1 && which != 2)
        throw std::invalid_argument("individual bound index must be 1 or 2");
    const auto r = rate_triple(model, policy, params);
    return which == 1 ? r.r1_bound : r.r2_bound;
}

PolicyGradient sum_bound_gradient(const ChannelStateModel& model, const PowerPolicy& policy,
                                  const GmacParams& params) {
    RateEvaluator eval(model, params);
    const auto x = eval.stack(policy);
    std::vector<double> g(x.size());
    eval.sum_gradient(x, g);
    const std::size_t n = eval.num_states();
    PolicyGradient out;
    for (std::size_t k = 0; k < n; ++k)
        out[eval.states()[k]] = {g[k], g[n + k]};
    return out;
}

McRateEstimate mc_rate_triple(const ChannelStateModel& model, const PowerPolicy& policy, const GmacParams& params,
                              std::uint64_t samples, std::uint64_t seed) {
    params.validate();
    const auto states = model.states();
    std::vector<double> weights;
    std::vector<PowerPair> powers;
    for (const auto& s : states) {
        weights.push_back(s.prob);
        powers.push_back(s.prob > 0.0 ? policy.at({s.csit1, s.csit2}) : PowerPair{});
    }
    std::mt19937_64 rng(seed);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    const double inv = 1.0 / params.sigma2;
    const double rho = params.rho_tilde;
    const double shrink = 1.0 - rho * rho;
    Welford a, b, c;
    for (std::uint64_t i = 0; i < samples; ++i) {
        const std::size_t k = pick(rng);
        const auto& s = states[k];
        const auto [p1, p2] = powers[k];
        const double g1 = s.h1 * s.h1, g2 = s.h2 * s.h2;
        a.add(0.5 * std::log2(1.0 + g1 * p1 * shrink * inv));
        b.add(0.5 * std::log2(1.0 + g2 * p2 * shrink * inv));
        c.add(0.5 * std::log2(1.0 + (g1 * p1 + g2 * p2 + 2.0 * s.h1 * s.h2 * rho * std::sqrt(p1 * p2)) * inv));
    }
    return {{a.mean, b.mean, c.mean}, {a.stderr_(), b.stderr_(), c.stderr_()}, samples};
}

} // namespace fmac
