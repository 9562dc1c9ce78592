#include "fadingmac/planner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace fmac {

std::string_view to_string(Verdict v) {
    switch (v) {
    case Verdict::feasible:
        return "feasible";
    case Verdict::marginal:
        return "marginal";
    case Verdict::infeasible:
        return "infeasible";
    }
    return "?";
}

std::string_view to_string(PolicyKind k) {
    switch (k) {
    case PolicyKind::optimal:
        return "optimal";
    case PolicyKind::upa:
        return "upa";
    case PolicyKind::tdma:
        return "tdma";
    }
    return "?";
}

std::string_view to_string(SweepAxis a) {
    switch (a) {
    case SweepAxis::crossover_p:
        return "crossover_p";
    case SweepAxis::rho_tilde:
        return "rho_tilde";
    case SweepAxis::source_rho:
        return "source_rho";
    }
    return "?";
}

double FeasibilityReport::min_margin() const { return *std::min_element(margins.begin(), margins.end()); }

Verdict classify(const std::array<double, 3>& margins, double eps) {
    const double lo = *std::min_element(margins.begin(), margins.end());
    if (lo > eps)
        return Verdict::feasible;
    if (lo >= -eps)
        return Verdict::marginal;
    return Verdict::infeasible;
}

FeasibilityReport assess(const RateTriple& lhs, const ChannelStateModel& model, const GmacParams& params,
                         const PowerPolicy& policy, double eps) {
    FeasibilityReport r;
    r.lhs = lhs;
    r.rhs = rate_triple(model, policy, params);
    r.margins = {r.rhs.r1_bound - lhs.r1_bound, r.rhs.r2_bound - lhs.r2_bound, r.rhs.sum_bound - lhs.sum_bound};
    r.verdict = classify(r.margins, eps);
    r.policy = policy;
    r.rho_tilde = params.rho_tilde;
    return r;
}

FeasibilityReport check_lossless(const DiscreteSource& src, const ChannelStateModel& model,
                                 const GmacParams& params, const PowerPolicy& policy, double eps) {
    return assess(lossless_lhs(src), model, params, policy, eps);
}

TuneResult tune_rho(const RateTriple& lhs, const ChannelStateModel& model, const GmacParams& params,
                    double rho_max, const TuneOptions& options) {
    if (!(rho_max >= 0.0 && rho_max <= 1.0))
        throw std::invalid_argument("rho_max must lie in [0, 1]");
    if (!(options.tol > 0.0))
        throw std::invalid_argument("bisection tolerance must be positive");

    struct Trial {
        double rho;
        bool individual_ok, sum_ok;
        TuneResult result;
    };
    std::vector<Trial> trials;
    struct Outcome {
        bool individual_ok, sum_ok;
    };
    auto run = [&](double rho) -> Outcome {
        GmacParams p = params;
        p.rho_tilde = rho;
        TuneResult t;
        t.rho_tilde = rho;
        t.optimization = optimize_sum_rate(model, p, options.solver);
        t.report = assess(lhs, model, p, t.optimization.policy, options.eps);
        const auto& m = t.report.margins;
        const Outcome o{m[0] >= -options.eps && m[1] >= -options.eps, m[2] >= -options.eps};
        trials.push_back({rho, o.individual_ok, o.sum_ok, std::move(t)});
        return o;
    };
    auto finish = [&](std::optional<std::size_t> chosen) {
        if (!chosen) {
            chosen = 0;
            for (std::size_t i = 1; i < trials.size(); ++i)
                if (trials[i].result.report.min_margin() > trials[*chosen].result.report.min_margin())
                    chosen = i;
        }
        TuneResult out = trials[*chosen].result;
        if (out.report.verdict != Verdict::infeasible && !(trials[*chosen].individual_ok && trials[*chosen].sum_ok))
            out.report.verdict = Verdict::infeasible;
        out.evaluations = trials.size();
        std::vector<std::size_t> order(trials.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return trials[a].rho < trials[b].rho; });
        for (std::size_t i = 1; i < order.size(); ++i) {
            const auto& lo = trials[order[i - 1]];
            const auto& hi = trials[order[i]];
            if ((!lo.individual_ok && hi.individual_ok) || (lo.sum_ok && !hi.sum_ok))
                out.monotone = false;
        }
        return out;
    };

    const Outcome top = run(rho_max);
    if (top.individual_ok && top.sum_ok)
        return finish(trials.size() - 1);
    if (!top.sum_ok)
        return finish(std::nullopt);

    const Outcome bottom = run(0.0);
    if (!bottom.individual_ok)
        return finish(std::nullopt);

    double lo = 0.0, hi = rho_max;
    std::size_t lo_index = trials.size() - 1;
    while (hi - lo > options.tol) {
        const double mid = 0.5 * (lo + hi);
        if (run(mid).individual_ok) {
            lo = mid;
            lo_index = trials.size() - 1;
        } else {
            hi = mid;
        }
    }
    if (trials[lo_index].sum_ok)
        return finish(lo_index);
    return finish(std::nullopt);
}

std::vector<std::pair<double, double>> RateGrid::points() const {
    if (!(r_min >= 0.0) || !(r_max >= r_min) || !(step > 0.0))
        throw std::invalid_argument("rate grid needs 0 <= r_min <= r_max and step > 0");
    const auto count = static_cast<std::size_t>(std::floor((r_max - r_min) / step + 1e-9)) + 1;
    std::vector<double> axis(count);
    for (std::size_t k = 0; k < count; ++k)
        axis[k] = r_min + static_cast<double>(k) * step;
    std::vector<std::pair<double, double>> out;
    if (symmetric) {
        for (double r : axis)
            out.emplace_back(r, r);
    } else {
        for (double r1 : axis)
            for (double r2 : axis)
                out.emplace_back(r1, r2);
    }
    return out;
}

std::optional<DistortionResult> min_distortion_lt(double rho, const ChannelStateModel& model,
                                                  const GmacParams& params, const RateGrid& grid,
                                                  const DistortionOptions& options) {
    const auto points = grid.points();
    if (points.empty())
        throw std::invalid_argument("rate grid is empty");

    struct Candidate {
        double r1, r2;
        GaussianLtDerived lt;
        double d_sum;
    };
    std::vector<Candidate> cands;
    cands.reserve(points.size());
    for (auto [r1, r2] : points) {
        const auto lt = gaussian_lt({rho, r1, r2});
        cands.push_back({r1, r2, lt, lt.d1 + lt.d2});
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.d_sum != b.d_sum)
            return a.d_sum < b.d_sum;
        if (a.r1 != b.r1)
            return a.r1 < b.r1;
        return a.r2 < b.r2;
    });

    // The sum bound is nondecreasing in ρ̃ ≥ 0 for every policy and dominates
    // its value at −ρ̃, so its optimum at ρ̃ = 1 caps every grid point's RHS.
    // Only trusted when the solver certifies it.
    GmacParams top = params;
    top.rho_tilde = 1.0;
    const auto capped = optimize_sum_rate(model, top, options.solver);
    const double sum_cap = capped.converged ? capped.objective : std::numeric_limits<double>::infinity();

    // Grid points are visited best-first, so the first admissible one wins.
    std::optional<PowerPolicy> warm;
    for (const auto& c : cands) {
        if (c.lt.lhs.sum_bound - sum_cap > options.eps + 1e-9)
            continue;
        GmacParams p = params;
        // Negating one encoder's input flips the sign of ρ̃ and leaves every
        // distortion and demand unchanged, so only |ρ̃| matters.
        p.rho_tilde = std::abs(c.lt.rho_w);
        auto opt = optimize_sum_rate(model, p, options.solver, warm);
        warm = opt.policy;
        auto report = assess(c.lt.lhs, model, p, opt.policy, options.eps);
        if (report.verdict == Verdict::infeasible)
            continue;
        DistortionResult out;
        out.r1 = c.r1;
        out.r2 = c.r2;
        out.d1 = c.lt.d1;
        out.d2 = c.lt.d2;
        out.d_sum = c.d_sum;
        out.report = std::move(report);
        out.optimization = std::move(opt);
        return out;
    }
    return std::nullopt;
}

ChannelStateModel Scenario::model() const {
    if (csit.kind == CsitSpec::Kind::perfect)
        return perfect_csit(fade);
    return bsc_csit(fade, csit.p);
}

namespace {

PowerPolicy fixed_policy(PolicyKind kind, const ChannelStateModel& model, const GmacParams& params) {
    return kind == PolicyKind::tdma ? random_tdma_policy(model, params) : upa_policy(model, params);
}

} // namespace

SweepRow evaluate_point(const Scenario& scenario) {
    const auto model = scenario.model();
    SweepRow row;

    if (const auto* gauss = std::get_if<GaussianSource>(&scenario.source)) {
        DistortionOptions opts{scenario.eps, scenario.solver};
        const auto best = min_distortion_lt(gauss->rho, model, scenario.params, scenario.grid, opts);
        if (best) {
            row.rho_tilde = best->report.rho_tilde;
            row.rhs = best->report.rhs;
            row.rate1 = best->r1;
            row.rate2 = best->r2;
            row.d1 = best->d1;
            row.d2 = best->d2;
            row.verdict = best->report.verdict;
            row.kkt_residual = best->optimization.kkt_residual;
            row.converged = best->optimization.converged;
        } else {
            GmacParams p = scenario.params;
            p.rho_tilde = 0.0;
            const auto opt = optimize_sum_rate(model, p, scenario.solver);
            row.rhs = rate_triple(model, opt.policy, p);
            row.d1 = row.d2 = 1.0;
            row.verdict = Verdict::infeasible;
            row.kkt_residual = opt.kkt_residual;
            row.converged = opt.converged;
        }
        return row;
    }

    RateTriple lhs;
    if (const auto* disc = std::get_if<DiscreteSource>(&scenario.source))
        lhs = lossless_lhs(*disc);

    if (scenario.policy == PolicyKind::optimal && scenario.rho_max) {
        TuneOptions opts;
        opts.eps = scenario.eps;
        opts.solver = scenario.solver;
        const auto tuned = tune_rho(lhs, model, scenario.params, *scenario.rho_max, opts);
        row.rho_tilde = tuned.rho_tilde;
        row.rhs = tuned.report.rhs;
        row.verdict = tuned.report.verdict;
        row.kkt_residual = tuned.optimization.kkt_residual;
        row.converged = tuned.optimization.converged;
        return row;
    }

    PowerPolicy policy;
    if (scenario.policy == PolicyKind::optimal) {
        const auto opt = optimize_sum_rate(model, scenario.params, scenario.solver);
        policy = opt.policy;
        row.converged = opt.converged;
    } else {
        policy = fixed_policy(scenario.policy, model, scenario.params);
    }
    const auto report = assess(lhs, model, scenario.params, policy, scenario.eps);
    row.rho_tilde = scenario.params.rho_tilde;
    row.rhs = report.rhs;
    row.verdict = report.verdict;
    row.kkt_residual = kkt_residual(model, scenario.params, policy);
    return row;
}

std::vector<SweepRow> sweep(const Scenario& scenario, SweepAxis axis, std::span<const double> points,
                            unsigned threads) {
    if (axis == SweepAxis::rho_tilde && std::holds_alternative<GaussianSource>(scenario.source))
        throw std::invalid_argument("a rho_tilde sweep is not defined for Gaussian sources (the LT scheme fixes it)");
    if (axis == SweepAxis::source_rho && !std::holds_alternative<GaussianSource>(scenario.source))
        throw std::invalid_argument("a source_rho sweep needs a Gaussian source");

    std::vector<Scenario> per_point;
    per_point.reserve(points.size());
    for (double v : points) {
        Scenario s = scenario;
        switch (axis) {
        case SweepAxis::crossover_p:
            s.csit = {CsitSpec::Kind::bsc, v};
            break;
        case SweepAxis::rho_tilde:
            s.params.rho_tilde = v;
            s.rho_max.reset();
            break;
        case SweepAxis::source_rho:
            std::get<GaussianSource>(s.source).rho = v;
            break;
        }
        per_point.push_back(std::move(s));
    }

    std::vector<SweepRow> rows(points.size());
    std::vector<std::exception_ptr> errors(points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < per_point.size();) {
            try {
                rows[i] = evaluate_point(per_point[i]);
                rows[i].value = points[i];
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, points.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return rows;
}

} // namespace fmac
