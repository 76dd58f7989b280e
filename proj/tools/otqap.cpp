#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "otqap/bench.hpp"

using namespace otqap;

namespace {

enum Exit { kOk = 0, kValidation = 2, kNoConvergence = 3, kInfeasible = 4 };

int exit_code(ErrorCode code)
{
    switch (code) {
    case ErrorCode::NoConvergence: return kNoConvergence;
    case ErrorCode::Infeasible: return kInfeasible;
    default: return kValidation;
    }
}

void write_output(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
    out << text;
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

std::vector<double> parse_grid(const std::string& s)
{
    std::vector<double> out;
    for (const auto& tok : split(s, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size())
                throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, "bad grid value '" + tok + "'");
        }
    }
    return out;
}

int status_exit(const std::string& st)
{
    if (st == status::nonconverged)
        return kNoConvergence;
    if (st == status::infeasible)
        return kInfeasible;
    return kOk;
}

struct GenArgs {
    std::string spec = "custom";
    int agents = 0;
    int tasks = 0;
    std::uint64_t seed = 0;
    std::string out;
};

int run_gen(const GenArgs& a)
{
    InstanceSpec spec;
    if (a.spec == "custom") {
        spec.n_agents = a.agents;
        spec.n_tasks = a.tasks;
        spec.seed = SeedPolicy{a.seed, 0};
    } else {
        spec = named_spec(a.spec, a.seed);
        if ((a.agents && a.agents != spec.n_agents) || (a.tasks && a.tasks != spec.n_tasks))
            throw Error(ErrorCode::InvalidArgument, a.spec + " has a fixed size");
    }
    GenerationInfo info;
    const CqapInstance inst = generate_instance(spec, &info);
    write_output(a.out, instance_to_json(inst, &info));
    return kOk;
}

struct SolveArgs {
    std::string inst;
    std::string method = "gw";
    int trials = 20;
    double epsilon = 0.8;
    double alpha = 0.7;
    int ga_pop = 100;
    int ga_gens = 200;
    std::optional<std::uint64_t> seed;
    long long node_cap = kDefaultNodeCap;
    std::string format = "json";
    std::string out;
};

int run_solve(const SolveArgs& a)
{
    CqapInstance inst = read_instance(a.inst);
    if (a.seed)
        inst.seed.master_seed = *a.seed;
    MethodConfig m;
    if (a.method == "exact")
        m = MethodConfig::exact();
    else if (a.method == "gw")
        m = MethodConfig::gw();
    else if (a.method == "gw-multi")
        m = MethodConfig::gw_multi(a.trials);
    else if (a.method == "egw")
        m = MethodConfig::egw(a.epsilon);
    else if (a.method == "fgw") {
        if (!(a.alpha >= 0.0 && a.alpha <= 1.0))
            throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in [0, 1]");
        m = MethodConfig::fgw(a.alpha);
    }
    else if (a.method == "ga") {
        GaConfig ga;
        ga.population = a.ga_pop;
        ga.generations = a.ga_gens;
        ga.validate();
        m = MethodConfig::genetic(ga);
    } else
        throw Error(ErrorCode::InvalidArgument, "unknown method '" + a.method + "'");
    if (m.kind == MethodKind::GwMultiInit && a.trials < 0)
        throw Error(ErrorCode::InvalidArgument, "trials must be >= 0");
    if (m.kind == MethodKind::Egw && !(a.epsilon > 0.0))
        throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");

    RunOptions opts;
    opts.node_cap = a.node_cap;
    const OracleCell oracle = run_oracle(inst, a.node_cap);
    const SolveReport r = solve_cell(inst, m, &oracle, opts);
    write_output(a.out, emit_report({r}, parse_format(a.format)));
    if (r.status.rfind("error:", 0) == 0)
        std::cerr << "otqap: " << r.status << '\n';
    if (r.status == "error:NoConvergence")
        return kNoConvergence;
    if (r.status.rfind("error:", 0) == 0)
        return kValidation;
    return status_exit(r.status);
}

struct BenchArgs {
    std::string specs = "S1,S2";
    std::string methods = "exact,gw,gw-multi,egw,fgw,ga";
    std::uint64_t seed = 0;
    std::string format = "csv";
    std::string out;
    unsigned workers = 1;
    long long node_cap = kDefaultNodeCap;
    bool no_runtime = false;
    bool serial_timing = false;
};

int run_bench(const BenchArgs& a)
{
    const ReportFormat format = parse_format(a.format);
    std::vector<InstanceSpec> specs;
    for (const auto& id : split(a.specs, ','))
        specs.push_back(named_spec(id, a.seed));
    std::vector<MethodConfig> methods;
    for (const auto& tok : split(a.methods, ','))
        methods.push_back(MethodConfig::parse(tok));
    RunOptions opts;
    opts.workers = a.workers;
    opts.node_cap = a.node_cap;
    opts.time_cells = !a.no_runtime;
    opts.serial_timing = a.serial_timing;
    const auto reports = run_suite(specs, methods, opts);
    EmitOptions emit;
    emit.include_runtime = !a.no_runtime;
    write_output(a.out, emit_report(reports, format, emit));
    return kOk;
}

struct SweepArgs {
    std::string kind;
    std::string inst;
    std::string spec;
    std::uint64_t seed = 0;
    std::string grid;
    std::string out;
    unsigned workers = 1;
    long long node_cap = kDefaultNodeCap;
};

int run_sweep(const SweepArgs& a)
{
    if (a.inst.empty() == a.spec.empty())
        throw Error(ErrorCode::InvalidArgument, "give exactly one of --inst or --spec");
    const CqapInstance inst = a.inst.empty() ? generate_instance(named_spec(a.spec, a.seed)) : read_instance(a.inst);
    const std::vector<double> grid = parse_grid(a.grid);
    RunOptions opts;
    opts.workers = a.workers;
    opts.node_cap = a.node_cap;
    SweepTable t;
    if (a.kind == "epsilon")
        t = epsilon_sweep(inst, grid, opts);
    else if (a.kind == "alpha")
        t = alpha_sweep(inst, grid, opts);
    else
        throw Error(ErrorCode::InvalidArgument, "--kind must be epsilon or alpha");
    write_output(a.out, t.to_csv());
    return kOk;
}

struct OracleArgs {
    std::string inst;
    long long node_cap = kDefaultNodeCap;
    std::string out;
};

int run_oracle_cmd(const OracleArgs& a)
{
    const CqapInstance inst = read_instance(a.inst);
    const OracleResult r = solve_exact_enum(inst, a.node_cap);
    std::ostringstream os;
    os << "{\"instance_id\":\"" << inst.test_id << "\",\"objective\":" << format_double(r.objective)
       << ",\"proven\":" << (r.proven ? "true" : "false") << ",\"nodes\":" << r.nodes << ",\"x\":[";
    for (Eigen::Index i = 0; i < r.x.x.rows(); ++i) {
        os << (i ? "," : "") << '[';
        for (Eigen::Index j = 0; j < r.x.x.cols(); ++j)
            os << (j ? "," : "") << r.x.x(i, j);
        os << ']';
    }
    os << "]}\n";
    write_output(a.out, os.str());
    return r.proven ? kOk : kNoConvergence;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Transport-based heuristics for the capacitated quadratic assignment problem"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate a seeded instance");
    g->add_option("--spec", gen.spec, "S1..S4, M1..M4, L1..L5 or custom");
    g->add_option("--agents", gen.agents);
    g->add_option("--tasks", gen.tasks);
    g->add_option("--seed", gen.seed);
    g->add_option("--out", gen.out);

    SolveArgs solve;
    std::uint64_t solve_seed = 0;
    auto* s = app.add_subcommand("solve", "Solve one instance with one method");
    s->add_option("--inst", solve.inst)->required();
    s->add_option("--method", solve.method)->check(CLI::IsMember({"exact", "gw", "gw-multi", "egw", "fgw", "ga"}));
    s->add_option("--trials", solve.trials);
    s->add_option("--epsilon", solve.epsilon);
    s->add_option("--alpha", solve.alpha);
    s->add_option("--ga-pop", solve.ga_pop);
    s->add_option("--ga-gens", solve.ga_gens);
    auto* seed_opt = s->add_option("--seed", solve_seed);
    s->add_option("--node-cap", solve.node_cap);
    s->add_option("--format", solve.format);
    s->add_option("--out", solve.out);

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "Run every method on every named instance");
    b->add_option("--specs", bench.specs);
    b->add_option("--methods", bench.methods, "e.g. exact,gw,gw-multi:20,egw:0.8,fgw:0.7,ga");
    b->add_option("--seed", bench.seed);
    b->add_option("--format", bench.format);
    b->add_option("--out", bench.out);
    b->add_option("--workers", bench.workers);
    b->add_option("--node-cap", bench.node_cap);
    b->add_flag("--no-runtime", bench.no_runtime, "Leave runtimes out so output is reproducible");
    b->add_flag("--serial-timing", bench.serial_timing);

    SweepArgs sweep;
    auto* w = app.add_subcommand("sweep", "EGW epsilon or FGW alpha sweep");
    w->add_option("--kind", sweep.kind)->required();
    w->add_option("--inst", sweep.inst);
    w->add_option("--spec", sweep.spec);
    w->add_option("--seed", sweep.seed);
    w->add_option("--grid", sweep.grid)->required();
    w->add_option("--out", sweep.out);
    w->add_option("--workers", sweep.workers);
    w->add_option("--node-cap", sweep.node_cap);

    OracleArgs oracle;
    auto* o = app.add_subcommand("oracle", "Exact optimum by pruned enumeration");
    o->add_option("--inst", oracle.inst)->required();
    o->add_option("--node-cap", oracle.node_cap);
    o->add_option("--out", oracle.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kValidation;
    }

    try {
        if (*g)
            return run_gen(gen);
        if (*s) {
            if (*seed_opt)
                solve.seed = solve_seed;
            return run_solve(solve);
        }
        if (*b)
            return run_bench(bench);
        if (*w)
            return run_sweep(sweep);
        if (*o)
            return run_oracle_cmd(oracle);
    } catch (const Error& e) {
        std::cerr << "otqap: " << to_string(e.code()) << ": " << e.what() << '\n';
        return exit_code(e.code());
    }
    return kValidation;
}
