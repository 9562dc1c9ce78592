#pragma once

// Feasibility verdicts and design searches built on the rate evaluator,
// the power optimizer and the source models.

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "fadingmac/finite_prob.hpp"
#include "fadingmac/gmac_rates.hpp"
#include "fadingmac/power_opt.hpp"
#include "fadingmac/source_models.hpp"

namespace fmac {

inline constexpr double kDefaultFeasibilityEps = 1e-9;

/// The transmissibility conditions are strict inequalities; a margin inside
/// [−eps, eps] is reported as marginal rather than forced to either side.
enum class Verdict { feasible, marginal, infeasible };

std::string_view to_string(Verdict v);

struct FeasibilityReport {
    RateTriple lhs;
    RateTriple rhs;
    std::array<double, 3> margins{}; // rhs − lhs per inequality
    Verdict verdict = Verdict::infeasible;
    PowerPolicy policy;
    double rho_tilde = 0.0;

    double min_margin() const;
};

Verdict classify(const std::array<double, 3>& margins, double eps = kDefaultFeasibilityEps);

/// Evaluates `policy` at params.rho_tilde and compares against `lhs`.
FeasibilityReport assess(const RateTriple& lhs, const ChannelStateModel& model, const GmacParams& params,
                         const PowerPolicy& policy, double eps = kDefaultFeasibilityEps);

FeasibilityReport check_lossless(const DiscreteSource& src, const ChannelStateModel& model,
                                 const GmacParams& params, const PowerPolicy& policy,
                                 double eps = kDefaultFeasibilityEps);

struct TuneOptions {
    double tol = 1e-4; // bisection width on ρ̃
    double eps = kDefaultFeasibilityEps;
    SolverOptions solver;
};

struct TuneResult {
    double rho_tilde = 0.0;
    FeasibilityReport report;
    OptimizationResult optimization;
    /// False when the evaluated trial points contradict the assumed shape
    /// (individual inequalities pass on [0, ρ*], the sum inequality on
    /// [ρ_s, rho_max]).
    bool monotone = true;
    std::size_t evaluations = 0;
};

/// Largest ρ̃ in [0, rho_max] at which the sum-rate optimal policy satisfies
/// all three inequalities (none infeasible), located by bisection with the
/// policy re-optimized at every trial ρ̃. If no such ρ̃ exists the report at
/// the trial point with the largest minimum margin is returned, verdict
/// infeasible.
TuneResult tune_rho(const RateTriple& lhs, const ChannelStateModel& model, const GmacParams& params,
                    double rho_max, const TuneOptions& options = {});

struct RateGrid {
    double r_min = 0.0;
    double r_max = 4.0;
    double step = 0.01;
    bool symmetric = true; // R1 = R2 only; otherwise the full product grid

    std::vector<std::pair<double, double>> points() const;
};

struct DistortionResult {
    double r1 = 0.0, r2 = 0.0;
    double d1 = 1.0, d2 = 1.0, d_sum = 2.0;
    FeasibilityReport report;
    OptimizationResult optimization;
};

struct DistortionOptions {
    double eps = kDefaultFeasibilityEps;
    SolverOptions solver;
};

/// Minimum d1 + d2 over the rate grid for unit-variance Gaussian sources with
/// correlation `rho` under the LT scheme. Each grid point fixes ρ̃ = ρ√(a1 a2);
/// the policy is optimized at that ρ̃ and the point counts when no inequality
/// is infeasible. Ties break toward the lexicographically smaller (R1, R2).
/// Returns nullopt when every grid point is infeasible.
std::optional<DistortionResult> min_distortion_lt(double rho, const ChannelStateModel& model,
                                                  const GmacParams& params, const RateGrid& grid,
                                                  const DistortionOptions& options = {});

enum class PolicyKind { optimal, upa, tdma };
std::string_view to_string(PolicyKind k);

struct CsitSpec {
    enum class Kind { perfect, bsc } kind = Kind::perfect;
    double p = 0.0;
};

struct GaussianSource {
    double rho = 0.0;
};

using SourceSpec = std::variant<std::monostate, DiscreteSource, GaussianSource>;

/// Everything needed to evaluate one operating point.
struct Scenario {
    FiniteJointPmf fade;
    CsitSpec csit;
    GmacParams params;
    SourceSpec source;
    std::optional<double> rho_max; // when set, ρ̃ is tuned instead of fixed
    PolicyKind policy = PolicyKind::optimal;
    RateGrid grid;
    double eps = kDefaultFeasibilityEps;
    SolverOptions solver;

    ChannelStateModel model() const;
};

enum class SweepAxis { crossover_p, rho_tilde, source_rho };
std::string_view to_string(SweepAxis a);

struct SweepRow {
    double value = 0.0;
    double rho_tilde = 0.0;
    RateTriple rhs;
    double rate1 = 0.0, rate2 = 0.0; // quantization rates (Gaussian sources)
    double d1 = 0.0, d2 = 0.0;
    Verdict verdict = Verdict::infeasible;
    double kkt_residual = 0.0;
    bool converged = true;
};

/// One row for the scenario as given. Gaussian sources run the distortion
/// search (d = 1 and verdict infeasible when nothing on the grid works);
/// discrete sources are checked losslessly (d = 0); without a source the
/// demand is zero and the row reports the rates of the chosen policy.
SweepRow evaluate_point(const Scenario& scenario);

/// Evaluates each axis point independently, on up to `threads` workers
/// (0 = hardware concurrency). Rows come back in axis order.
std::vector<SweepRow> sweep(const Scenario& scenario, SweepAxis axis, std::span<const double> points,
                            unsigned threads = 0);

} // namespace fmac
