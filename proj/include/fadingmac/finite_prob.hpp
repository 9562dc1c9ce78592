#pragma once

// Finite probability foundations: joint pmfs over labelled outcomes, entropy
// functionals, and the joint (fade, CSIT, CSIR) state models built on them.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fmac {

class InvalidPmf : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Absolute tolerance on the probability mass of a valid pmf.
inline constexpr double kPmfTolerance = 1e-12;

using Outcome = std::vector<double>;

/// A joint pmf on a finite set of distinct, equal-arity outcome tuples.
/// Zero-probability outcomes are allowed and kept, so an alphabet can be
/// carried along even where it has no mass.
class FiniteJointPmf {
public:
    FiniteJointPmf(std::vector<Outcome> labels, std::vector<double> probs);

    std::size_t size() const noexcept { return probs_.size(); }
    std::size_t arity() const noexcept { return arity_; }
    const Outcome& label(std::size_t i) const { return labels_.at(i); }
    double prob(std::size_t i) const { return probs_.at(i); }
    const std::vector<Outcome>& labels() const noexcept { return labels_; }
    const std::vector<double>& probs() const noexcept { return probs_; }

    /// Probability of an exact outcome, 0 if absent.
    double prob_of(const Outcome& outcome) const;

    /// Marginal over the listed coordinates (in the listed order). Outcomes
    /// keep first-appearance order.
    FiniteJointPmf marginal(const std::vector<std::size_t>& coords) const;

    /// Distinct values taken by one coordinate, in first-appearance order.
    std::vector<double> alphabet(std::size_t coord) const;

    /// Entrywise comparison up to tol, insensitive to outcome order.
    bool approx_equal(const FiniteJointPmf& other, double tol) const;

private:
    std::vector<Outcome> labels_;
    std::vector<double> probs_;
    std::size_t arity_ = 0;
};

/// Product pmf over pairs (v1, v2) from two marginals; row-major in v1.
FiniteJointPmf product_pmf(const std::vector<double>& values1, const std::vector<double>& probs1,
                           const std::vector<double>& values2, const std::vector<double>& probs2);

/// Shannon entropy in bits, with 0 log 0 = 0.
double entropy(const FiniteJointPmf& pmf);

/// H(other | given) for a pmf over pairs; `given` is 0 or 1.
double conditional_entropy(const FiniteJointPmf& pmf, std::size_t given);

/// h2(x) in bits.
double binary_entropy(double x);

enum class CsirMode { perfect, custom };

/// One support point of a channel state model.
struct JointState {
    double h1, h2;       // true fades (amplitudes)
    double csit1, csit2; // transmitter-side estimate
    double csir1, csir2; // receiver-side estimate
    double prob;
};

/// Joint law of (h1, h2, ĥ1, ĥ2, h̃1, h̃2). Fades are amplitudes; squaring
/// happens where the rates are evaluated.
class ChannelStateModel {
public:
    /// `fade` is the declared pmf over (h1, h2); `joint` has arity 6 and
    /// must marginalize to it within kPmfTolerance.
    ChannelStateModel(FiniteJointPmf fade, FiniteJointPmf joint, CsirMode csir_mode);

    const FiniteJointPmf& fade() const noexcept { return fade_; }
    const FiniteJointPmf& joint() const noexcept { return joint_; }
    CsirMode csir_mode() const noexcept { return csir_mode_; }
    const std::vector<double>& fade_alphabet_1() const noexcept { return alphabet1_; }
    const std::vector<double>& fade_alphabet_2() const noexcept { return alphabet2_; }

    /// Marginal over (ĥ1, ĥ2).
    FiniteJointPmf csit_marginal() const { return joint_.marginal({2, 3}); }

    std::vector<JointState> states() const;

    /// True when ĥ = h with probability one.
    bool has_perfect_csit() const;

private:
    FiniteJointPmf fade_;
    FiniteJointPmf joint_;
    CsirMode csir_mode_;
    std::vector<double> alphabet1_, alphabet2_;
};

/// CSIT as the output of independent per-transmitter BSCs with crossover p
/// fed by the true fade. CSIR is perfect. Both fade alphabets must be binary.
ChannelStateModel bsc_csit(const FiniteJointPmf& fade, double p);

/// CSIT = CSIR = true fade.
ChannelStateModel perfect_csit(const FiniteJointPmf& fade);

} // namespace fmac
