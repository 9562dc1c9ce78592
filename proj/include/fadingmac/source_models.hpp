#pragma once

// Required rates (left-hand sides of the transmissibility conditions) for
// discrete sources sent losslessly and for unit-variance Gaussian sources
// under the vector-quantize-and-correlate (LT) scheme.

#include <cstdint>

#include "fadingmac/finite_prob.hpp"
#include "fadingmac/gmac_rates.hpp"

namespace fmac {

/// Joint pmf over (u1, u2).
struct DiscreteSource {
    FiniteJointPmf pmf;

    explicit DiscreteSource(FiniteJointPmf p);
};

/// (H(U1|U2), H(U2|U1), H(U1,U2)) in bits.
RateTriple lossless_lhs(const DiscreteSource& src);

struct GaussianLtConfig {
    double rho = 0.0; // source correlation, |rho| < 1
    double r1 = 0.0;  // quantization rates, bits
    double r2 = 0.0;

    void validate() const;
};

struct GaussianLtDerived {
    double a1 = 0.0, a2 = 0.0; // quantizer gains 1 − 2^(−2R_i)
    double rho_w = 0.0;        // codeword correlation ρ√(a1 a2)
    double d1 = 1.0, d2 = 1.0; // var[U_i | W1, W2]
    RateTriple lhs;            // I(U1;W1|W2), I(U2;W2|W1), I(U1,U2;W1,W2)
};

/// Closed forms under the Gaussian forward test channel W_i = a_i (U_i + V_i),
/// var V_i = (1 − a_i)/a_i, which gives I(U_i; W_i) = R_i.
GaussianLtDerived gaussian_lt(const GaussianLtConfig& cfg);

struct McDistortionEstimate {
    double d1 = 0.0, d2 = 0.0;
    double stderr1 = 0.0, stderr2 = 0.0;
};

/// Monte Carlo oracle for var[U_i | W1, W2]. Draws (U1, U2, W1, W2) from the
/// same test channel and reports the unexplained variance fraction of the
/// least-squares regression of U_i on (W1, W2) (degrees-of-freedom adjusted),
/// which is the linear-MMSE residual and exact for jointly Gaussian draws.
/// Standard errors come from 100 batch means. Deterministic per seed.
McDistortionEstimate mc_conditional_variance(const GaussianLtConfig& cfg, std::uint64_t samples,
                                             std::uint64_t seed);

} // namespace fmac
