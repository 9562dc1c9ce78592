#pragma once

// Scenario files, CSV emission and the command-line entry point.
//
// Scenario files are flat UTF-8 key = value text grouped under [section]
// headers; '#' starts a comment. See README.md for the full schema.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fadingmac/planner.hpp"

namespace fmac {

/// A scenario file problem, tied to the first offending key.
class ScenarioError : public std::runtime_error {
public:
    enum class Kind { syntax, unknown_key, missing_key, malformed, not_normalized, out_of_range, negative_power };

    ScenarioError(Kind kind, std::string key, const std::string& detail);

    Kind kind() const noexcept { return kind_; }
    const std::string& key() const noexcept { return key_; }

private:
    Kind kind_;
    std::string key_;
};

enum class CsitMode { perfect, bsc, none };
enum class SourceType { none, discrete, gaussian };

/// The parsed text of a scenario file, kept close to what was written so it
/// serializes back losslessly.
struct ScenarioConfig {
    // [channel]
    std::vector<double> fade_values_1;
    std::vector<double> fade_values_2;
    std::vector<std::vector<double>> fade_probs; // one joint list or two marginals
    CsitMode csit = CsitMode::perfect;
    double crossover = 0.0;
    std::string csir = "perfect";
    double sigma2 = 1.0;
    double pbar1 = 0.0;
    double pbar2 = 0.0;
    // [source]
    SourceType source = SourceType::none;
    std::vector<double> alphabet_1;
    std::vector<double> alphabet_2;
    std::vector<double> pmf;
    double rho = 0.0;
    // [design]
    std::optional<double> rho_tilde;
    std::optional<double> rho_max;
    PolicyKind policy = PolicyKind::optimal;
    bool full_grid = false;
    double rate_min = 0.0;
    double rate_max = 4.0;
    double rate_step = 0.01;
    std::optional<double> rate_1;
    std::optional<double> rate_2;
    double eps = kDefaultFeasibilityEps;
    // [solver]
    double tol = 1e-8;
    std::uint64_t max_iterations = 100000;
    std::uint64_t seed = 1;

    bool operator==(const ScenarioConfig&) const = default;
};

/// Parses and validates; throws ScenarioError naming the first bad key.
ScenarioConfig parse_scenario(std::string_view text);
ScenarioConfig load_scenario(const std::string& path);

/// Canonical text form; parse_scenario(serialize_scenario(c)) == c.
std::string serialize_scenario(const ScenarioConfig& config);

Scenario to_scenario(const ScenarioConfig& config);

/// Fixed-format number for CSV cells: 6 significant digits, no negative zero.
std::string format_number(double v);

/// One sweep/summary row; the CSV columns follow the field order.
struct ResultRow {
    double axis_value = 0.0;
    double rho_tilde = 0.0;
    double r1_bound = 0.0;
    double r2_bound = 0.0;
    double sum_bound = 0.0;
    double rate_1 = 0.0;
    double rate_2 = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    Verdict verdict = Verdict::infeasible;
    double kkt_residual = 0.0;
    bool converged = true;
};

ResultRow to_result_row(const SweepRow& row);

/// Header row plus one line per row, '\n' terminated.
std::string sweep_csv(std::string_view axis_name, const std::vector<ResultRow>& rows);

/// Axis point lists: "a,b,c", "a,b,...,z" (step b − a) or "start:step:stop".
std::vector<double> parse_points(std::string_view text);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::string& path, std::string_view contents);

/// Exit codes for run_command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInfeasible = 1;
inline constexpr int kExitInputError = 2;

/// Entry point behind the `fadingmac` tool. args[0] is the program name.
/// CSV goes to `out` unless --out is given; diagnostics go to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace fmac
