#include "fadingmac/finite_prob.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace fmac {

namespace {

std::size_t index_of(const std::vector<double>& values, double v) {
    auto it = std::find(values.begin(), values.end(), v);
    return it == values.end() ? values.size() : static_cast<std::size_t>(it - values.begin());
}

} // namespace

FiniteJointPmf::FiniteJointPmf(std::vector<Outcome> labels, std::vector<double> probs)
    : labels_(std::move(labels)), probs_(std::move(probs)) {
    if (labels_.empty())
        throw InvalidPmf("pmf has no outcomes");
    if (labels_.size() != probs_.size())
        throw InvalidPmf("pmf labels and probabilities differ in length");
    arity_ = labels_.front().size();
    double total = 0.0;
    std::set<Outcome> seen;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i].size() != arity_)
            throw InvalidPmf("pmf outcomes have mixed arity");
        if (!seen.insert(labels_[i]).second)
            throw InvalidPmf("pmf outcomes are not distinct");
        if (!std::isfinite(probs_[i]) || probs_[i] < 0.0)
            throw InvalidPmf("pmf has a negative or non-finite probability");
        total += probs_[i];
    }
    if (std::abs(total - 1.0) > kPmfTolerance)
        throw InvalidPmf("pmf probabilities sum to " + std::to_string(total) + ", expected 1");
}

double FiniteJointPmf::prob_of(const Outcome& outcome) const {
    for (std::size_t i = 0; i < labels_.size(); ++i)
        if (labels_[i] == outcome)
            return probs_[i];
    return 0.0;
}

FiniteJointPmf FiniteJointPmf::marginal(const std::vector<std::size_t>& coords) const {
    for (auto c : coords)
        if (c >= arity_)
            throw std::out_of_range("marginal coordinate out of range");
    std::map<Outcome, std::size_t> slot;
    std::vector<Outcome> labels;
    std::vector<double> probs;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        Outcome key;
        key.reserve(coords.size());
        for (auto c : coords)
            key.push_back(labels_[i][c]);
        auto [it, inserted] = slot.try_emplace(key, labels.size());
        if (inserted) {
            labels.push_back(std::move(key));
            probs.push_back(0.0);
        }
        probs[it->second] += probs_[i];
    }
    return FiniteJointPmf(std::move(labels), std::move(probs));
}

std::vector<double> FiniteJointPmf::alphabet(std::size_t coord) const {
    if (coord >= arity_)
        throw std::out_of_range("alphabet coordinate out of range");
    std::vector<double> values;
    for (const auto& l : labels_)
        if (index_of(values, l[coord]) == values.size())
            values.push_back(l[coord]);
    return values;
}

bool FiniteJointPmf::approx_equal(const FiniteJointPmf& other, double tol) const {
    if (arity_ != other.arity_)
        return false;
    for (std::size_t i = 0; i < size(); ++i)
        if (std::abs(probs_[i] - other.prob_of(labels_[i])) > tol)
            return false;
    for (std::size_t i = 0; i < other.size(); ++i)
        if (std::abs(other.probs_[i] - prob_of(other.labels_[i])) > tol)
            return false;
    return true;
}

FiniteJointPmf product_pmf(const std::vector<double>& values1, const std::vector<double>& probs1,
                           const std::vector<double>& values2, const std::vector<double>& probs2) {
    if (values1.size() != probs1.size() || values2.size() != probs2.size())
        throw InvalidPmf("marginal values and probabilities differ in length");
    std::vector<Outcome> labels;
    std::vector<double> probs;
    for (std::size_t i = 0; i < values1.size(); ++i)
        for (std::size_t j = 0; j < values2.size(); ++j) {
            labels.push_back({values1[i], values2[j]});
            probs.push_back(probs1[i] * probs2[j]);
        }
    return FiniteJointPmf(std::move(labels), std::move(probs));
}

double entropy(const FiniteJointPmf& pmf) {
    double h = 0.0;
    for (double p : pmf.probs())
        if (p > 0.0)
            h -= p * std::log2(p);
    return std::max(h, 0.0);
}

double conditional_entropy(const FiniteJointPmf& pmf, std::size_t given) {
    if (pmf.arity() != 2)
        throw InvalidPmf("conditional entropy needs a pmf over pairs");
    if (given > 1)
        throw std::out_of_range("conditioning coordinate must be 0 or 1");
    return std::max(entropy(pmf) - entropy(pmf.marginal({given})), 0.0);
}

double binary_entropy(double x) {
    if (x <= 0.0 || x >= 1.0)
        return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

ChannelStateModel::ChannelStateModel(FiniteJointPmf fade, FiniteJointPmf joint, CsirMode csir_mode)
    : fade_(std::move(fade)), joint_(std::move(joint)), csir_mode_(csir_mode) {
    if (fade_.arity() != 2)
        throw InvalidPmf("fade pmf must be over pairs (h1, h2)");
    if (joint_.arity() != 6)
        throw InvalidPmf("channel state pmf must be over (h1, h2, csit1, csit2, csir1, csir2)");
    alphabet1_ = fade_.alphabet(0);
    alphabet2_ = fade_.alphabet(1);
    for (const auto& l : fade_.labels())
        if (l[0] < 0.0 || l[1] < 0.0 || !std::isfinite(l[0]) || !std::isfinite(l[1]))
            throw InvalidPmf("fade amplitudes must be finite and nonnegative");
    if (!joint_.marginal({0, 1}).approx_equal(fade_, kPmfTolerance))
        throw InvalidPmf("channel state pmf does not marginalize to the fade pmf");
    if (csir_mode_ == CsirMode::perfect) {
        for (std::size_t i = 0; i < joint_.size(); ++i) {
            const auto& l = joint_.label(i);
            if (joint_.prob(i) > 0.0 && (l[4] != l[0] || l[5] != l[1]))
                throw InvalidPmf("perfect CSIR requires csir = fade with probability one");
        }
    }
}

std::vector<JointState> ChannelStateModel::states() const {
    std::vector<JointState> out;
    out.reserve(joint_.size());
    for (std::size_t i = 0; i < joint_.size(); ++i) {
        const auto& l = joint_.label(i);
        out.push_back({l[0], l[1], l[2], l[3], l[4], l[5], joint_.prob(i)});
    }
    return out;
}

bool ChannelStateModel::has_perfect_csit() const {
    for (const auto& s : states())
        if (s.prob > 0.0 && (s.csit1 != s.h1 || s.csit2 != s.h2))
            return false;
    return true;
}

ChannelStateModel bsc_csit(const FiniteJointPmf& fade, double p) {
    if (!(p >= 0.0 && p <= 0.5))
        throw std::invalid_argument("BSC crossover must lie in [0, 0.5]");
    if (fade.arity() != 2)
        throw InvalidPmf("fade pmf must be over pairs (h1, h2)");
    const auto a1 = fade.alphabet(0);
    const auto a2 = fade.alphabet(1);
    if (a1.size() != 2 || a2.size() != 2)
        throw std::invalid_argument("BSC CSIT needs binary fade alphabets");

    auto flip = [p](double estimate, double truth) { return estimate == truth ? 1.0 - p : p; };
    std::vector<Outcome> labels;
    std::vector<double> probs;
    for (std::size_t i = 0; i < fade.size(); ++i) {
        const double h1 = fade.label(i)[0];
        const double h2 = fade.label(i)[1];
        for (double e1 : a1)
            for (double e2 : a2) {
                labels.push_back({h1, h2, e1, e2, h1, h2});
                probs.push_back(fade.prob(i) * flip(e1, h1) * flip(e2, h2));
            }
    }
    return ChannelStateModel(fade, FiniteJointPmf(std::move(labels), std::move(probs)), CsirMode::perfect);
}

ChannelStateModel perfect_csit(const FiniteJointPmf& fade) {
    if (fade.arity() != 2)
        throw InvalidPmf("fade pmf must be over pairs (h1, h2)");
    std::vector<Outcome> labels;
    for (const auto& l : fade.labels())
        labels.push_back({l[0], l[1], l[0], l[1], l[0], l[1]});
    return ChannelStateModel(fade, FiniteJointPmf(std::move(labels), fade.probs()), CsirMode::perfect);
}

} // namespace fmac
