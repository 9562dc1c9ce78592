#include "fadingmac/cli_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

namespace fmac {

ScenarioError::ScenarioError(Kind kind, std::string key, const std::string& detail)
    : std::runtime_error(key + ": " + detail), kind_(kind), key_(std::move(key)) {}

namespace {

using Kind = ScenarioError::Kind;

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return parts;
}

std::optional<double> to_double(std::string_view s) {
    s = trim(s);
    if (s.empty())
        return std::nullopt;
    if (s.front() == '+')
        s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

// Accepts plain decimals and simple fractions such as 1/3.
double number(const std::string& key, std::string_view token) {
    const auto slash = token.find('/');
    if (slash != std::string_view::npos) {
        const auto num = to_double(token.substr(0, slash));
        const auto den = to_double(token.substr(slash + 1));
        if (num && den && *den != 0.0)
            return *num / *den;
    } else if (auto v = to_double(token)) {
        return *v;
    }
    throw ScenarioError(Kind::malformed, key, "expected a number, got '" + std::string(token) + "'");
}

std::vector<double> number_list(const std::string& key, std::string_view value) {
    std::vector<double> out;
    for (auto tok : split(value, ','))
        out.push_back(number(key, tok));
    return out;
}

std::uint64_t integer(const std::string& key, std::string_view token) {
    token = trim(token);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty())
        throw ScenarioError(Kind::malformed, key, "expected a nonnegative integer, got '" + std::string(token) + "'");
    return v;
}

void check_normalized(const std::string& key, const std::vector<double>& probs) {
    double total = 0.0;
    for (double p : probs) {
        if (p < 0.0)
            throw ScenarioError(Kind::out_of_range, key, "probabilities must be nonnegative");
        total += p;
    }
    if (std::abs(total - 1.0) > kPmfTolerance)
        throw ScenarioError(Kind::not_normalized, key, fmt::format("probabilities sum to {}, expected 1", total));
}

void check_alphabet(const std::string& key, const std::vector<double>& values, bool nonnegative) {
    if (values.empty())
        throw ScenarioError(Kind::malformed, key, "needs at least one value");
    if (std::set<double>(values.begin(), values.end()).size() != values.size())
        throw ScenarioError(Kind::malformed, key, "values must be distinct");
    if (nonnegative)
        for (double v : values)
            if (v < 0.0)
                throw ScenarioError(Kind::out_of_range, key, "fade amplitudes must be nonnegative");
}

const std::map<std::string, std::vector<std::string>, std::less<>>& schema() {
    static const std::map<std::string, std::vector<std::string>, std::less<>> keys{
        {"channel", {"fade_values_1", "fade_values_2", "fade_probs", "csit", "csir", "sigma2", "pbar1", "pbar2"}},
        {"source", {"type", "alphabet_1", "alphabet_2", "pmf", "rho"}},
        {"design",
         {"rho_tilde", "rho_max", "policy", "grid", "rate_min", "rate_max", "rate_step", "rate_1", "rate_2", "eps"}},
        {"solver", {"tol", "max_iterations", "seed"}},
    };
    return keys;
}

PolicyKind policy_from(const std::string& key, std::string_view v) {
    if (v == "optimal")
        return PolicyKind::optimal;
    if (v == "upa")
        return PolicyKind::upa;
    if (v == "tdma")
        return PolicyKind::tdma;
    throw ScenarioError(Kind::malformed, key, "expected optimal, upa or tdma");
}

std::string num(double v) { return fmt::format("{}", v); }

std::string list(const std::vector<double>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i)
        s += (i ? ", " : "") + num(values[i]);
    return s;
}

} // namespace

ScenarioConfig parse_scenario(std::string_view text) {
    // section -> key -> raw value
    std::map<std::string, std::map<std::string, std::string>> raw;
    std::string section;
    std::size_t line_no = 0;
    for (auto line : split(text, '\n')) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = trim(line.substr(0, hash));
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ScenarioError(Kind::syntax, std::string(line), fmt::format("line {}: unterminated section", line_no));
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!schema().count(section))
                throw ScenarioError(Kind::unknown_key, "[" + section + "]", "unknown section");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ScenarioError(Kind::syntax, std::string(line), fmt::format("line {}: expected key = value", line_no));
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (section.empty())
            throw ScenarioError(Kind::syntax, key, fmt::format("line {}: key outside of a section", line_no));
        const auto& allowed = schema().at(section);
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ScenarioError(Kind::unknown_key, key, "unknown key in [" + section + "]");
        if (!raw[section].emplace(key, value).second)
            throw ScenarioError(Kind::syntax, key, "duplicate key");
    }

    auto get = [&](const std::string& sec, const std::string& key) -> std::optional<std::string> {
        auto s = raw.find(sec);
        if (s == raw.end())
            return std::nullopt;
        auto k = s->second.find(key);
        if (k == s->second.end())
            return std::nullopt;
        return k->second;
    };
    auto require = [&](const std::string& sec, const std::string& key) {
        auto v = get(sec, key);
        if (!v)
            throw ScenarioError(Kind::missing_key, key, "required in [" + sec + "]");
        return *v;
    };

    ScenarioConfig c;

    // [channel]
    c.fade_values_1 = number_list("fade_values_1", require("channel", "fade_values_1"));
    check_alphabet("fade_values_1", c.fade_values_1, true);
    c.fade_values_2 = number_list("fade_values_2", require("channel", "fade_values_2"));
    check_alphabet("fade_values_2", c.fade_values_2, true);
    {
        const std::string probs = require("channel", "fade_probs");
        const auto groups = split(probs, ';');
        for (auto g : groups)
            c.fade_probs.push_back(number_list("fade_probs", g));
        const std::size_t n1 = c.fade_values_1.size(), n2 = c.fade_values_2.size();
        if (c.fade_probs.size() == 1) {
            if (c.fade_probs[0].size() != n1 * n2)
                throw ScenarioError(Kind::malformed, "fade_probs",
                                    fmt::format("a joint list needs {} entries (row-major over fade_values_1)", n1 * n2));
            check_normalized("fade_probs", c.fade_probs[0]);
        } else if (c.fade_probs.size() == 2) {
            if (c.fade_probs[0].size() != n1 || c.fade_probs[1].size() != n2)
                throw ScenarioError(Kind::malformed, "fade_probs", "marginal lists must match the fade alphabets");
            check_normalized("fade_probs", c.fade_probs[0]);
            check_normalized("fade_probs", c.fade_probs[1]);
        } else {
            throw ScenarioError(Kind::malformed, "fade_probs", "expected one joint list or two marginals split by ';'");
        }
    }
    if (auto v = get("channel", "csit")) {
        const std::string_view s = *v;
        if (s == "perfect") {
            c.csit = CsitMode::perfect;
        } else if (s == "none") {
            c.csit = CsitMode::none;
        } else if (s.starts_with("bsc(") && s.ends_with(")")) {
            c.csit = CsitMode::bsc;
            c.crossover = number("csit", s.substr(4, s.size() - 5));
            if (!(c.crossover >= 0.0 && c.crossover <= 0.5))
                throw ScenarioError(Kind::out_of_range, "csit",
                                    fmt::format("BSC crossover {} must lie in [0, 0.5]", c.crossover));
        } else {
            throw ScenarioError(Kind::malformed, "csit", "expected perfect, none or bsc(p)");
        }
        if (c.csit != CsitMode::perfect && (c.fade_values_1.size() != 2 || c.fade_values_2.size() != 2))
            throw ScenarioError(Kind::out_of_range, "csit", "BSC CSIT needs two fade values per transmitter");
    }
    if (auto v = get("channel", "csir")) {
        if (*v != "perfect")
            throw ScenarioError(Kind::out_of_range, "csir", "only perfect CSIR is supported");
        c.csir = *v;
    }
    if (auto v = get("channel", "sigma2")) {
        c.sigma2 = number("sigma2", *v);
        if (!(c.sigma2 > 0.0))
            throw ScenarioError(Kind::out_of_range, "sigma2", "noise variance must be positive");
    }
    c.pbar1 = number("pbar1", require("channel", "pbar1"));
    if (c.pbar1 < 0.0)
        throw ScenarioError(Kind::negative_power, "pbar1", "power budget must be nonnegative");
    c.pbar2 = number("pbar2", require("channel", "pbar2"));
    if (c.pbar2 < 0.0)
        throw ScenarioError(Kind::negative_power, "pbar2", "power budget must be nonnegative");

    // [source]
    if (auto v = get("source", "type")) {
        if (*v == "none")
            c.source = SourceType::none;
        else if (*v == "discrete")
            c.source = SourceType::discrete;
        else if (*v == "gaussian")
            c.source = SourceType::gaussian;
        else
            throw ScenarioError(Kind::malformed, "type", "expected none, discrete or gaussian");
    }
    auto reject_unless = [&](const std::string& key, bool allowed) {
        if (!allowed && get("source", key))
            throw ScenarioError(Kind::unknown_key, key, "not valid for this source type");
    };
    reject_unless("alphabet_1", c.source == SourceType::discrete);
    reject_unless("alphabet_2", c.source == SourceType::discrete);
    reject_unless("pmf", c.source == SourceType::discrete);
    reject_unless("rho", c.source == SourceType::gaussian);
    if (c.source == SourceType::discrete) {
        c.alphabet_1 = number_list("alphabet_1", require("source", "alphabet_1"));
        check_alphabet("alphabet_1", c.alphabet_1, false);
        c.alphabet_2 = number_list("alphabet_2", require("source", "alphabet_2"));
        check_alphabet("alphabet_2", c.alphabet_2, false);
        c.pmf = number_list("pmf", require("source", "pmf"));
        if (c.pmf.size() != c.alphabet_1.size() * c.alphabet_2.size())
            throw ScenarioError(Kind::malformed, "pmf", "needs one entry per (u1, u2) pair, row-major over alphabet_1");
        check_normalized("pmf", c.pmf);
    } else if (c.source == SourceType::gaussian) {
        c.rho = number("rho", require("source", "rho"));
        if (!(std::abs(c.rho) < 1.0))
            throw ScenarioError(Kind::out_of_range, "rho", "source correlation must satisfy |rho| < 1");
    }

    // [design]
    if (auto v = get("design", "rho_tilde")) {
        c.rho_tilde = number("rho_tilde", *v);
        if (!(std::abs(*c.rho_tilde) <= 1.0))
            throw ScenarioError(Kind::out_of_range, "rho_tilde", "input correlation must lie in [-1, 1]");
    }
    if (auto v = get("design", "rho_max")) {
        c.rho_max = number("rho_max", *v);
        if (!(*c.rho_max >= 0.0 && *c.rho_max <= 1.0))
            throw ScenarioError(Kind::out_of_range, "rho_max", "must lie in [0, 1]");
    }
    if (auto v = get("design", "policy"))
        c.policy = policy_from("policy", *v);
    if (auto v = get("design", "grid")) {
        if (*v != "symmetric" && *v != "full")
            throw ScenarioError(Kind::malformed, "grid", "expected symmetric or full");
        c.full_grid = *v == "full";
    }
    if (auto v = get("design", "rate_min"))
        c.rate_min = number("rate_min", *v);
    if (c.rate_min < 0.0)
        throw ScenarioError(Kind::out_of_range, "rate_min", "rates must be nonnegative");
    if (auto v = get("design", "rate_max"))
        c.rate_max = number("rate_max", *v);
    if (c.rate_max < c.rate_min)
        throw ScenarioError(Kind::out_of_range, "rate_max", "must not be below rate_min");
    if (auto v = get("design", "rate_step"))
        c.rate_step = number("rate_step", *v);
    if (!(c.rate_step > 0.0))
        throw ScenarioError(Kind::out_of_range, "rate_step", "must be positive");
    for (const char* key : {"rate_1", "rate_2"}) {
        if (auto v = get("design", key)) {
            const double r = number(key, *v);
            if (r < 0.0)
                throw ScenarioError(Kind::out_of_range, key, "rates must be nonnegative");
            (std::string_view(key) == "rate_1" ? c.rate_1 : c.rate_2) = r;
        }
    }
    if (auto v = get("design", "eps")) {
        c.eps = number("eps", *v);
        if (c.eps < 0.0)
            throw ScenarioError(Kind::out_of_range, "eps", "must be nonnegative");
    }

    // [solver]
    if (auto v = get("solver", "tol")) {
        c.tol = number("tol", *v);
        if (!(c.tol > 0.0))
            throw ScenarioError(Kind::out_of_range, "tol", "must be positive");
    }
    if (auto v = get("solver", "max_iterations")) {
        c.max_iterations = integer("max_iterations", *v);
        if (c.max_iterations == 0)
            throw ScenarioError(Kind::out_of_range, "max_iterations", "must be positive");
    }
    if (auto v = get("solver", "seed"))
        c.seed = integer("seed", *v);
    return c;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ScenarioError(Kind::syntax, path, "cannot open scenario file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::string serialize_scenario(const ScenarioConfig& c) {
    std::string s = "[channel]\n";
    s += "fade_values_1 = " + list(c.fade_values_1) + "\n";
    s += "fade_values_2 = " + list(c.fade_values_2) + "\n";
    s += "fade_probs = ";
    for (std::size_t i = 0; i < c.fade_probs.size(); ++i)
        s += (i ? " ; " : "") + list(c.fade_probs[i]);
    s += "\n";
    switch (c.csit) {
    case CsitMode::perfect:
        s += "csit = perfect\n";
        break;
    case CsitMode::none:
        s += "csit = none\n";
        break;
    case CsitMode::bsc:
        s += "csit = bsc(" + num(c.crossover) + ")\n";
        break;
    }
    s += "csir = " + c.csir + "\n";
    s += "sigma2 = " + num(c.sigma2) + "\n";
    s += "pbar1 = " + num(c.pbar1) + "\n";
    s += "pbar2 = " + num(c.pbar2) + "\n";

    s += "\n[source]\n";
    switch (c.source) {
    case SourceType::none:
        s += "type = none\n";
        break;
    case SourceType::discrete:
        s += "type = discrete\n";
        s += "alphabet_1 = " + list(c.alphabet_1) + "\n";
        s += "alphabet_2 = " + list(c.alphabet_2) + "\n";
        s += "pmf = " + list(c.pmf) + "\n";
        break;
    case SourceType::gaussian:
        s += "type = gaussian\n";
        s += "rho = " + num(c.rho) + "\n";
        break;
    }

    s += "\n[design]\n";
    if (c.rho_tilde)
        s += "rho_tilde = " + num(*c.rho_tilde) + "\n";
    if (c.rho_max)
        s += "rho_max = " + num(*c.rho_max) + "\n";
    s += "policy = " + std::string(to_string(c.policy)) + "\n";
    s += std::string("grid = ") + (c.full_grid ? "full" : "symmetric") + "\n";
    s += "rate_min = " + num(c.rate_min) + "\n";
    s += "rate_max = " + num(c.rate_max) + "\n";
    s += "rate_step = " + num(c.rate_step) + "\n";
    if (c.rate_1)
        s += "rate_1 = " + num(*c.rate_1) + "\n";
    if (c.rate_2)
        s += "rate_2 = " + num(*c.rate_2) + "\n";
    s += "eps = " + num(c.eps) + "\n";

    s += "\n[solver]\n";
    s += "tol = " + num(c.tol) + "\n";
    s += "max_iterations = " + std::to_string(c.max_iterations) + "\n";
    s += "seed = " + std::to_string(c.seed) + "\n";
    return s;
}

Scenario to_scenario(const ScenarioConfig& c) {
    FiniteJointPmf fade = [&] {
        if (c.fade_probs.size() == 2)
            return product_pmf(c.fade_values_1, c.fade_probs[0], c.fade_values_2, c.fade_probs[1]);
        std::vector<Outcome> labels;
        for (double h1 : c.fade_values_1)
            for (double h2 : c.fade_values_2)
                labels.push_back({h1, h2});
        return FiniteJointPmf(std::move(labels), c.fade_probs.at(0));
    }();

    Scenario s{std::move(fade), {}, {}, {}, c.rho_max, c.policy, {}, c.eps, {}};
    switch (c.csit) {
    case CsitMode::perfect:
        s.csit = {CsitSpec::Kind::perfect, 0.0};
        break;
    case CsitMode::bsc:
        s.csit = {CsitSpec::Kind::bsc, c.crossover};
        break;
    case CsitMode::none:
        s.csit = {CsitSpec::Kind::bsc, 0.5};
        break;
    }
    s.params = {c.sigma2, c.rho_tilde.value_or(0.0), c.pbar1, c.pbar2};
    if (c.rho_tilde)
        s.rho_max.reset();
    if (c.source == SourceType::discrete) {
        std::vector<Outcome> labels;
        for (double u1 : c.alphabet_1)
            for (double u2 : c.alphabet_2)
                labels.push_back({u1, u2});
        s.source = DiscreteSource(FiniteJointPmf(std::move(labels), c.pmf));
    } else if (c.source == SourceType::gaussian) {
        s.source = GaussianSource{c.rho};
    }
    s.grid = {c.rate_min, c.rate_max, c.rate_step, !c.full_grid};
    s.solver.tol = c.tol;
    s.solver.max_iterations = c.max_iterations;
    return s;
}

std::string format_number(double v) {
    if (v == 0.0)
        v = 0.0; // drops the sign of -0
    return fmt::format("{:.6g}", v);
}

ResultRow to_result_row(const SweepRow& r) {
    return {r.value, r.rho_tilde, r.rhs.r1_bound, r.rhs.r2_bound, r.rhs.sum_bound, r.rate1, r.rate2,
            r.d1,    r.d2,        r.verdict,      r.kkt_residual,   r.converged};
}

std::string sweep_csv(std::string_view axis_name, const std::vector<ResultRow>& rows) {
    std::string s = fmt::format(
        "{},rho_tilde,r1_bound,r2_bound,sum_bound,rate_1,rate_2,d1,d2,verdict,kkt_residual,converged\n", axis_name);
    for (const auto& r : rows) {
        s += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", format_number(r.axis_value),
                         format_number(r.rho_tilde), format_number(r.r1_bound), format_number(r.r2_bound),
                         format_number(r.sum_bound), format_number(r.rate_1), format_number(r.rate_2),
                         format_number(r.d1), format_number(r.d2), to_string(r.verdict),
                         format_number(r.kkt_residual), r.converged ? "true" : "false");
    }
    return s;
}

std::vector<double> parse_points(std::string_view text) {
    text = trim(text);
    if (text.empty())
        return {};
    auto value = [](std::string_view tok) {
        auto v = to_double(tok);
        if (!v)
            throw std::invalid_argument("bad axis point '" + std::string(tok) + "'");
        return *v;
    };
    auto progression = [](double start, double step, double stop) {
        if (!(step > 0.0) || stop < start)
            throw std::invalid_argument("axis progression needs a positive step and stop >= start");
        std::vector<double> out;
        const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
        for (std::size_t k = 0; k <= n; ++k)
            out.push_back(start + static_cast<double>(k) * step);
        return out;
    };
    if (text.find(':') != std::string_view::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3)
            throw std::invalid_argument("expected start:step:stop");
        return progression(value(parts[0]), value(parts[1]), value(parts[2]));
    }
    const auto parts = split(text, ',');
    if (parts.size() == 4 && parts[2] == "...") {
        const double a = value(parts[0]), b = value(parts[1]);
        return progression(a, b - a, value(parts[3]));
    }
    std::vector<double> out;
    for (auto p : parts)
        out.push_back(value(p));
    if (!std::is_sorted(out.begin(), out.end()))
        throw std::invalid_argument("axis points must be sorted");
    return out;
}

void write_file_atomic(const std::string& path, std::string_view contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f)
            throw std::runtime_error("cannot write " + tmp);
        f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!f)
            throw std::runtime_error("write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Commands

namespace {

struct CommonArgs {
    std::string scenario;
    std::string out;
    std::string policy;
    bool fail_on_infeasible = false;
};

struct Design {
    GmacParams params;
    PowerPolicy policy;
    std::optional<OptimizationResult> optimization;
};

RateTriple demand(const Scenario& s) {
    if (const auto* d = std::get_if<DiscreteSource>(&s.source))
        return lossless_lhs(*d);
    return {};
}

// Fixes ρ̃ (tuning it when only rho_max is given) and builds the policy.
Design resolve_design(const Scenario& s, const ChannelStateModel& model) {
    Design d;
    d.params = s.params;
    if (s.policy == PolicyKind::optimal) {
        if (s.rho_max) {
            TuneOptions opts;
            opts.eps = s.eps;
            opts.solver = s.solver;
            auto tuned = tune_rho(demand(s), model, s.params, *s.rho_max, opts);
            d.params.rho_tilde = tuned.rho_tilde;
            d.optimization = std::move(tuned.optimization);
        } else {
            d.optimization = optimize_sum_rate(model, s.params, s.solver);
        }
        d.policy = d.optimization->policy;
    } else if (s.policy == PolicyKind::upa) {
        d.policy = upa_policy(model, s.params);
    } else {
        d.policy = random_tdma_policy(model, s.params);
    }
    return d;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

int emit(const CommonArgs& args, const std::string& csv, std::ostream& out) {
    if (args.out.empty())
        out << csv;
    else
        write_file_atomic(args.out, csv);
    return kExitOk;
}

Scenario load(const CommonArgs& args) {
    auto cfg = load_scenario(args.scenario);
    if (!args.policy.empty())
        cfg.policy = policy_from("--policy", args.policy);
    return to_scenario(cfg);
}

int cmd_rates(const CommonArgs& args, std::ostream& out) {
    const auto s = load(args);
    const auto model = s.model();
    const auto d = resolve_design(s, model);
    const auto r = rate_triple(model, d.policy, d.params);
    return emit(args,
                fmt::format("policy,rho_tilde,r1_bound,r2_bound,sum_bound\n{},{},{},{},{}\n", to_string(s.policy),
                            format_number(d.params.rho_tilde), format_number(r.r1_bound), format_number(r.r2_bound),
                            format_number(r.sum_bound)),
                out);
}

int cmd_optimize(const CommonArgs& args, std::ostream& out) {
    auto s = load(args);
    s.policy = PolicyKind::optimal;
    const auto model = s.model();
    const auto d = resolve_design(s, model);
    const auto& opt = *d.optimization;
    const auto csit = model.csit_marginal();
    std::string csv = "csit_1,csit_2,prob,p1,p2,rho_tilde,objective,kkt_residual,iterations,converged\n";
    for (const auto& [state, pw] : opt.policy.table())
        csv += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", format_number(state.h1), format_number(state.h2),
                           format_number(csit.prob_of({state.h1, state.h2})), format_number(pw.p1),
                           format_number(pw.p2), format_number(d.params.rho_tilde), format_number(opt.objective),
                           format_number(opt.kkt_residual), opt.iterations, bool_str(opt.converged));
    emit(args, csv, out);
    return opt.converged ? kExitOk : kExitInfeasible;
}

int cmd_feasibility(const CommonArgs& args, std::ostream& out) {
    const auto s = load(args);
    const auto model = s.model();
    const auto d = resolve_design(s, model);
    const auto rep = assess(demand(s), model, d.params, d.policy, s.eps);
    emit(args,
         fmt::format("policy,rho_tilde,lhs_1,lhs_2,lhs_sum,rhs_1,rhs_2,rhs_sum,margin_1,margin_2,margin_sum,verdict\n"
                     "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                     to_string(s.policy), format_number(rep.rho_tilde), format_number(rep.lhs.r1_bound),
                     format_number(rep.lhs.r2_bound), format_number(rep.lhs.sum_bound),
                     format_number(rep.rhs.r1_bound), format_number(rep.rhs.r2_bound),
                     format_number(rep.rhs.sum_bound), format_number(rep.margins[0]), format_number(rep.margins[1]),
                     format_number(rep.margins[2]), to_string(rep.verdict)),
         out);
    return args.fail_on_infeasible && rep.verdict == Verdict::infeasible ? kExitInfeasible : kExitOk;
}

int cmd_distortion(const CommonArgs& args, std::ostream& out) {
    const auto s = load(args);
    const auto* g = std::get_if<GaussianSource>(&s.source);
    if (!g)
        throw std::invalid_argument("distortion needs a Gaussian source ([source] type = gaussian)");
    const auto model = s.model();
    const auto best = min_distortion_lt(g->rho, model, s.params, s.grid, {s.eps, s.solver});
    std::string csv =
        "rho,rho_tilde,rate_1,rate_2,d1,d2,d_sum,lhs_1,lhs_2,lhs_sum,rhs_1,rhs_2,rhs_sum,verdict,kkt_residual,converged\n";
    if (best) {
        const auto& r = best->report;
        csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", format_number(g->rho),
                           format_number(r.rho_tilde), format_number(best->r1), format_number(best->r2),
                           format_number(best->d1), format_number(best->d2), format_number(best->d_sum),
                           format_number(r.lhs.r1_bound), format_number(r.lhs.r2_bound),
                           format_number(r.lhs.sum_bound), format_number(r.rhs.r1_bound),
                           format_number(r.rhs.r2_bound), format_number(r.rhs.sum_bound), to_string(r.verdict),
                           format_number(best->optimization.kkt_residual), bool_str(best->optimization.converged));
    } else {
        csv += fmt::format("{},0,0,0,1,1,2,0,0,0,0,0,0,infeasible,0,true\n", format_number(g->rho));
    }
    emit(args, csv, out);
    return args.fail_on_infeasible && !best ? kExitInfeasible : kExitOk;
}

SweepAxis axis_from(const std::string& name) {
    if (name == "p" || name == "crossover_p")
        return SweepAxis::crossover_p;
    if (name == "rho_tilde")
        return SweepAxis::rho_tilde;
    if (name == "rho" || name == "source_rho")
        return SweepAxis::source_rho;
    throw std::invalid_argument("unknown sweep axis '" + name + "'");
}

int cmd_sweep(const CommonArgs& args, const std::string& axis_name, const std::string& points_text,
              unsigned threads, std::ostream& out) {
    const auto s = load(args);
    const auto axis = axis_from(axis_name);
    const auto points = parse_points(points_text);
    const auto rows = sweep(s, axis, points, threads);
    std::vector<ResultRow> out_rows;
    bool any_infeasible = false;
    for (const auto& r : rows) {
        out_rows.push_back(to_result_row(r));
        any_infeasible |= r.verdict == Verdict::infeasible;
    }
    emit(args, sweep_csv(to_string(axis), out_rows), out);
    return args.fail_on_infeasible && any_infeasible ? kExitInfeasible : kExitOk;
}

int cmd_validate(const CommonArgs& args, std::uint64_t samples, std::optional<std::uint64_t> seed_arg,
                 std::ostream& out) {
    auto cfg = load_scenario(args.scenario);
    if (!args.policy.empty())
        cfg.policy = policy_from("--policy", args.policy);
    const auto s = to_scenario(cfg);
    const std::uint64_t seed = seed_arg.value_or(cfg.seed);
    const auto model = s.model();
    const auto d = resolve_design(s, model);

    std::string csv = "quantity,closed_form,monte_carlo,stderr,z,pass\n";
    bool all_pass = true;
    auto row = [&](std::string_view name, double exact, double mc, double se) {
        const double diff = std::abs(mc - exact);
        const bool pass = diff <= 3.0 * se + 1e-12 * (1.0 + std::abs(exact));
        const double z = se > 0.0 ? (mc - exact) / se : 0.0;
        all_pass &= pass;
        csv += fmt::format("{},{},{},{},{},{}\n", name, format_number(exact), format_number(mc), format_number(se),
                           format_number(z), bool_str(pass));
    };

    const auto exact = rate_triple(model, d.policy, d.params);
    const auto mc = mc_rate_triple(model, d.policy, d.params, samples, seed);
    row("r1_bound", exact.r1_bound, mc.mean.r1_bound, mc.stderr_.r1_bound);
    row("r2_bound", exact.r2_bound, mc.mean.r2_bound, mc.stderr_.r2_bound);
    row("sum_bound", exact.sum_bound, mc.mean.sum_bound, mc.stderr_.sum_bound);

    if (const auto* g = std::get_if<GaussianSource>(&s.source)) {
        GaussianLtConfig lt_cfg{g->rho, cfg.rate_1.value_or(1.0), cfg.rate_2.value_or(1.0)};
        const auto lt = gaussian_lt(lt_cfg);
        const auto est = mc_conditional_variance(lt_cfg, samples, seed + 1);
        row("d1", lt.d1, est.d1, est.stderr1);
        row("d2", lt.d2, est.d2, est.stderr2);
    }
    emit(args, csv, out);
    return all_pass ? kExitOk : kExitInfeasible;
}

} // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Rate regions, power allocation and feasibility for correlated sources over a fading MAC",
                 "fadingmac"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string axis, points;
    unsigned threads = 0;
    std::uint64_t samples = 1000000;
    std::optional<std::uint64_t> seed;

    auto add_common = [&](CLI::App* sub, bool with_policy, bool with_fail) {
        sub->add_option("scenario", common.scenario, "Scenario file")->required();
        sub->add_option("-o,--out", common.out, "Write the CSV here (atomically) instead of stdout");
        if (with_policy)
            sub->add_option("--policy", common.policy, "Override the policy: optimal, upa or tdma");
        if (with_fail)
            sub->add_flag("--fail-on-infeasible", common.fail_on_infeasible, "Exit 1 on an infeasible verdict");
    };

    auto* rates = app.add_subcommand("rates", "Evaluate the three rate bounds");
    add_common(rates, true, false);
    auto* optimize = app.add_subcommand("optimize", "Sum-rate optimal power policy");
    add_common(optimize, false, false);
    auto* feasibility = app.add_subcommand("feasibility", "Compare source demand with the rate bounds");
    add_common(feasibility, true, true);
    auto* distortion = app.add_subcommand("distortion", "Minimum sum distortion for Gaussian sources (LT scheme)");
    add_common(distortion, false, true);
    auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one axis and emit a CSV table");
    add_common(sweep_cmd, true, true);
    sweep_cmd->add_option("--axis", axis, "p (crossover_p), rho_tilde or rho (source_rho)")->required();
    sweep_cmd->add_option("--points", points, "a,b,c | a,b,...,z | start:step:stop")->required();
    sweep_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
    auto* validate = app.add_subcommand("validate", "Monte Carlo check of the closed forms");
    add_common(validate, true, false);
    validate->add_option("--samples", samples, "Monte Carlo samples")->check(CLI::Range(10000ull, 1000000000ull));
    validate->add_option("--seed", seed, "RNG seed (defaults to the scenario's)");

    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    }

    try {
        if (rates->parsed())
            return cmd_rates(common, out);
        if (optimize->parsed())
            return cmd_optimize(common, out);
        if (feasibility->parsed())
            return cmd_feasibility(common, out);
        if (distortion->parsed())
            return cmd_distortion(common, out);
        if (sweep_cmd->parsed())
            return cmd_sweep(common, axis, points, threads, out);
        if (validate->parsed())
            return cmd_validate(common, samples, seed, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    return kExitInputError;
}

} // namespace fmac
