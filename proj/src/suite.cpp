#include <algorithm>
#include <chrono>
#include <cstdio>
#include <set>
#include <sstream>

#include "otqap/bench.hpp"
#include "otqap/linear_ot.hpp"

namespace otqap {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string short_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

struct CellOutcome {
    std::optional<Coupling> coupling;
    std::optional<AssignmentMatrix> x;
    std::optional<double> relaxed;
    std::optional<double> binary;
    bool feasible = false;
    long long iterations = 0;
    std::string status = status::ok;
};

constexpr std::uint64_t kGaStream = 0x6761;

CellOutcome from_coupling(const CqapInstance& inst, GwSolution sol)
{
    CellOutcome out;
    out.relaxed = coupling_objective(inst, sol.coupling);
    AssignmentMatrix x = round_coupling(inst, sol.coupling);
    out.binary = cqap_objective(inst, x);
    out.feasible = check_feasible(inst, x).ok;
    out.x = std::move(x);
    out.iterations = sol.iterations;
    out.status = sol.converged ? status::ok : status::nonconverged;
    out.coupling = std::move(sol.coupling);
    return out;
}

CellOutcome run_method(const CqapInstance& inst, const MethodConfig& method, const OracleCell* oracle,
                       long long node_cap, double* oracle_runtime)
{
    switch (method.kind) {
    case MethodKind::Exact: {
        OracleCell local;
        if (oracle == nullptr) {
            local = run_oracle(inst, node_cap);
            oracle = &local;
        }
        *oracle_runtime = oracle->runtime_s;
        CellOutcome out;
        out.status = oracle->status;
        if (oracle->result) {
            out.binary = oracle->result->objective;
            out.relaxed = out.binary;
            out.feasible = check_feasible(inst, oracle->result->x).ok;
            out.x = oracle->result->x;
            out.iterations = oracle->result->nodes;
        }
        return out;
    }
    case MethodKind::GwDefault:
        return from_coupling(inst, solve_gw(to_gw_problem(inst), std::nullopt, method.max_iter, method.tol));
    case MethodKind::GwMultiInit: {
        MultiInitConfig cfg;
        cfg.trials = method.trials;
        cfg.seed = SeedPolicy{inst.seed.mix(), 0};
        return from_coupling(inst, solve_gw_multi_init(to_gw_problem(inst), cfg, method.max_iter, method.tol));
    }
    case MethodKind::Egw: {
        EntropicOptions o = method.entropic;
        o.epsilon = method.epsilon;
        return from_coupling(inst, solve_entropic_gw(to_gw_problem(inst), o));
    }
    case MethodKind::Fgw:
        return from_coupling(inst, solve_fgw(to_fgw_problem(inst, method.alpha), std::nullopt, method.max_iter, method.tol));
    case MethodKind::Ga: {
        GaConfig ga = method.ga;
        ga.seed = SeedPolicy{inst.seed.mix(), kGaStream};
        GaResult res = solve_ga(inst, ga);
        CellOutcome out;
        out.binary = res.objective;
        out.relaxed = res.objective;
        out.feasible = res.unassigned == 0 && check_feasible(inst, res.x).ok;
        out.x = std::move(res.x);
        out.iterations = static_cast<long long>(res.history.size()) - 1;
        return out;
    }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown method");
}

std::map<std::string, std::string> method_params(const CqapInstance& inst, const MethodConfig& m)
{
    std::map<std::string, std::string> p;
    p["scale"] = short_number(coupling_scale(inst));
    switch (m.kind) {
    case MethodKind::Exact:
        p["relaxed"] = "binary";
        break;
    case MethodKind::GwDefault:
        p["init"] = "product";
        break;
    case MethodKind::GwMultiInit:
        p["trials"] = std::to_string(m.trials);
        break;
    case MethodKind::Egw:
        p["epsilon"] = short_number(m.epsilon);
        p["loss"] = "unregularized";
        break;
    case MethodKind::Fgw:
        p["alpha"] = short_number(m.alpha);
        break;
    case MethodKind::Ga:
        p["relaxed"] = "binary";
        p["population"] = std::to_string(m.ga.population);
        p["generations"] = std::to_string(m.ga.generations);
        break;
    }
    return p;
}

SolveReport solve_cell_impl(const CqapInstance& inst, const MethodConfig& method, const OracleCell* oracle,
                            const RunOptions& options, std::optional<Coupling>* coupling_out)
{
    SolveReport r;
    r.instance_id = inst.test_id;
    r.method = method.label();
    r.seed = inst.seed.master_seed;
    r.params = method_params(inst, method);

    CellOutcome out;
    try {
        double oracle_runtime = -1.0;
        const auto t0 = Clock::now();
        out = run_method(inst, method, oracle, options.node_cap, &oracle_runtime);
        double elapsed = seconds_since(t0);
        if (oracle_runtime >= 0.0) {
            elapsed = oracle_runtime;
        } else if (options.time_cells && elapsed < options.repeat_below_s) {
            std::vector<double> times{elapsed};
            for (int rep = 0; rep < 2; ++rep) {
                const auto t1 = Clock::now();
                run_method(inst, method, oracle, options.node_cap, &oracle_runtime);
                times.push_back(seconds_since(t1));
            }
            std::sort(times.begin(), times.end());
            elapsed = times[1];
        }
        r.runtime_s = elapsed;
    } catch (const Error& e) {
        r.status = std::string("error:") + to_string(e.code());
        return r;
    }

    r.objective_relaxed = out.relaxed;
    r.objective_binary = out.binary;
    r.feasible = out.feasible;
    r.iterations = out.iterations;
    r.status = out.status;
    if (oracle != nullptr && oracle->result && oracle->result->proven && out.binary && oracle->result->objective > 0.0) {
        r.gap_pct = gap_percent(*out.binary, oracle->result->objective);
        if (*r.gap_pct < 0.0 && r.status == status::ok)
            r.status = status::negative_gap;
    }
    if (coupling_out != nullptr)
        *coupling_out = std::move(out.coupling);
    return r;
}

void check_grid(const std::vector<double>& grid, const char* what)
{
    if (grid.empty())
        throw Error(ErrorCode::NonEmptyRequired, std::string(what) + " grid is empty");
    std::set<double> seen;
    for (double v : grid) {
        if (!seen.insert(v).second)
            throw Error(ErrorCode::InvalidArgument, std::string("duplicate ") + what + " value " + short_number(v));
    }
}

SweepTable sweep(const CqapInstance& inst, const std::vector<double>& grid, const char* parameter,
                 const RunOptions& options, MethodConfig (*make)(double))
{
    SweepTable t;
    t.parameter = parameter;
    t.grid = grid;
    const OracleCell oracle = run_oracle(inst, options.node_cap);
    SweepTable::Row obj{inst.test_id, "objective_binary", {}};
    SweepTable::Row gap{inst.test_id, "gap_pct", {}};
    SweepTable::Row time{inst.test_id, "runtime_s", {}};
    std::vector<SolveReport> cells(grid.size());
    const unsigned workers = options.serial_timing ? 1u : options.workers;
    parallel_for(grid.size(), workers, [&](std::size_t k) {
        cells[k] = solve_cell(inst, make(grid[k]), &oracle, options);
    });
    for (const auto& c : cells) {
        obj.values.push_back(c.objective_binary);
        gap.values.push_back(c.gap_pct);
        time.values.push_back(options.time_cells ? std::optional<double>(c.runtime_s) : std::nullopt);
    }
    t.rows = {std::move(obj), std::move(gap), std::move(time)};
    return t;
}

}  // namespace

MethodConfig MethodConfig::gw_multi(int trials)
{
    MethodConfig m{MethodKind::GwMultiInit};
    m.trials = trials;
    return m;
}

MethodConfig MethodConfig::egw(double epsilon)
{
    MethodConfig m{MethodKind::Egw};
    m.epsilon = epsilon;
    return m;
}

MethodConfig MethodConfig::fgw(double alpha)
{
    MethodConfig m{MethodKind::Fgw};
    m.alpha = alpha;
    return m;
}

MethodConfig MethodConfig::genetic(const GaConfig& ga)
{
    MethodConfig m{MethodKind::Ga};
    m.ga = ga;
    return m;
}

MethodConfig MethodConfig::parse(const std::string& token)
{
    const auto colon = token.find(':');
    const std::string name = token.substr(0, colon);
    const std::string arg = colon == std::string::npos ? std::string() : token.substr(colon + 1);
    auto number = [&](double fallback) {
        if (arg.empty())
            return fallback;
        try {
            std::size_t used = 0;
            const double v = std::stod(arg, &used);
            if (used != arg.size())
                throw std::invalid_argument(arg);
            return v;
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, "bad method parameter in '" + token + "'");
        }
    };
    if (name == "exact")
        return exact();
    if (name == "gw")
        return gw();
    if (name == "gw-multi")
        return gw_multi(static_cast<int>(number(20)));
    if (name == "egw")
        return egw(number(0.8));
    if (name == "fgw") {
        const double a = number(0.7);
        if (!(a >= 0.0 && a <= 1.0))
            throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in [0, 1]");
        return fgw(a);
    }
    if (name == "ga")
        return genetic();
    throw Error(ErrorCode::InvalidArgument, "unknown method '" + token + "'");
}

std::string MethodConfig::label() const
{
    switch (kind) {
    case MethodKind::Exact: return "Exact";
    case MethodKind::GwDefault: return "GW_Default";
    case MethodKind::GwMultiInit: return "GW_MultiInit";
    case MethodKind::Egw: return "EGW(" + short_number(epsilon) + ")";
    case MethodKind::Fgw: return "FGW(" + short_number(alpha) + ")";
    case MethodKind::Ga: return "GA";
    }
    return "?";
}

OracleCell run_oracle(const CqapInstance& inst, long long node_cap)
{
    OracleCell cell;
    if (inst.agents() > kOracleMaxAgents || oracle_search_estimate(inst) > static_cast<double>(node_cap)) {
        cell.status = status::skipped_too_large;
        return cell;
    }
    const auto t0 = Clock::now();
    try {
        cell.result = solve_exact_enum(inst, node_cap);
        if (!cell.result->proven)
            cell.status = status::nonconverged;
    } catch (const Error& e) {
        cell.status = e.code() == ErrorCode::Infeasible ? status::infeasible : std::string("error:") + to_string(e.code());
    }
    cell.runtime_s = seconds_since(t0);
    return cell;
}

SolveReport solve_cell(const CqapInstance& inst, const MethodConfig& method, const OracleCell* oracle,
                       const RunOptions& options)
{
    std::optional<Coupling> coupling;
    SolveReport r = solve_cell_impl(inst, method, oracle, options, &coupling);
    if (coupling && options.on_coupling)
        options.on_coupling(r.instance_id, r.method, *coupling);
    return r;
}

std::vector<SolveReport> run_suite(const std::vector<InstanceSpec>& specs, const std::vector<MethodConfig>& methods,
                                   const RunOptions& options)
{
    if (specs.empty() || methods.empty())
        throw Error(ErrorCode::NonEmptyRequired, "run_suite needs at least one instance and one method");
    const unsigned workers = options.serial_timing ? 1u : options.workers;
    std::vector<std::optional<CqapInstance>> instances(specs.size());
    std::vector<std::string> generation_error(specs.size());
    std::vector<OracleCell> oracles(specs.size());
    parallel_for(specs.size(), workers, [&](std::size_t k) {
        try {
            instances[k] = generate_instance(specs[k]);
        } catch (const Error& e) {
            generation_error[k] = std::string("error:") + to_string(e.code());
            return;
        }
        oracles[k] = run_oracle(*instances[k], options.node_cap);
    });

    const std::size_t cells = specs.size() * methods.size();
    std::vector<SolveReport> reports(cells);
    std::vector<std::optional<Coupling>> couplings(cells);
    parallel_for(cells, workers, [&](std::size_t c) {
        const std::size_t k = c / methods.size();
        const std::size_t m = c % methods.size();
        if (!instances[k]) {
            reports[c].instance_id = specs[k].test_id;
            reports[c].method = methods[m].label();
            reports[c].seed = specs[k].seed.master_seed;
            reports[c].status = generation_error[k];
            return;
        }
        reports[c] = solve_cell_impl(*instances[k], methods[m], &oracles[k], options,
                                     options.on_coupling ? &couplings[c] : nullptr);
    });
    if (options.on_coupling) {
        for (std::size_t c = 0; c < cells; ++c) {
            if (couplings[c])
                options.on_coupling(reports[c].instance_id, reports[c].method, *couplings[c]);
        }
    }
    return reports;
}

SweepTable epsilon_sweep(const CqapInstance& inst, const std::vector<double>& epsilons, const RunOptions& options)
{
    check_grid(epsilons, "epsilon");
    for (double e : epsilons) {
        if (!(e > 0.0))
            throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
    }
    return sweep(inst, epsilons, "epsilon", options, &MethodConfig::egw);
}

SweepTable epsilon_sweep(const InstanceSpec& spec, const std::vector<double>& epsilons, const RunOptions& options)
{
    check_grid(epsilons, "epsilon");
    return epsilon_sweep(generate_instance(spec), epsilons, options);
}

SweepTable alpha_sweep(const CqapInstance& inst, const std::vector<double>& alphas, const RunOptions& options)
{
    check_grid(alphas, "alpha");
    for (double a : alphas) {
        if (!(a >= 0.0 && a <= 1.0))
            throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in [0, 1], got " + short_number(a));
    }
    return sweep(inst, alphas, "alpha", options, &MethodConfig::fgw);
}

SweepTable alpha_sweep(const InstanceSpec& spec, const std::vector<double>& alphas, const RunOptions& options)
{
    check_grid(alphas, "alpha");
    return alpha_sweep(generate_instance(spec), alphas, options);
}

std::string SweepTable::to_csv() const
{
    std::ostringstream os;
    os << "instance_id,metric";
    for (double v : grid)
        os << ',' << csv_field(parameter + "=" + format_double(v));
    os << '\n';
    for (const auto& row : rows) {
        os << csv_field(row.instance_id) << ',' << row.metric;
        for (const auto& v : row.values)
            os << ',' << (v ? format_double(*v) : std::string());
        os << '\n';
    }
    return os.str();
}

}  // namespace otqap
