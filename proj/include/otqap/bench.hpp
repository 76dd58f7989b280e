#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "otqap/core.hpp"
#include "otqap/cqap.hpp"
#include "otqap/ga.hpp"
#include "otqap/gw.hpp"

namespace otqap {

// ---------------------------------------------------------------------------
// Instances

struct InstanceSpec {
    std::string test_id = "custom";
    int n_agents = 1;
    int n_tasks = 1;
    SeedPolicy seed{};

    void validate() const;
};

/// Named sizes S1..S4, M1..M4, L1..L5. The stream id is derived from the id so an
/// instance does not depend on its position in a list.
InstanceSpec named_spec(const std::string& test_id, std::uint64_t master_seed);
const std::vector<std::string>& named_spec_ids();

inline constexpr int kMinUnits = 1;
inline constexpr int kMaxUnits = 6;
inline constexpr int kMaxRegenerations = 100;

struct GenerationInfo {
    int demand_draws = 1;
    long total_capacity = 0;
    long total_demand = 0;
};

/// Positions ~ U([0,10]^2), capacities and demands ~ U{1..6}; demands are redrawn
/// from the same stream until a packing exists. F, D, C are Euclidean distances.
CqapInstance generate_instance(const InstanceSpec& spec, GenerationInfo* info = nullptr);

/// Schema "cqap/1"; floats with 17 significant digits.
std::string instance_to_json(const CqapInstance& inst, const GenerationInfo* info = nullptr);
CqapInstance instance_from_json(const std::string& text);
void write_instance(const std::string& path, const CqapInstance& inst, const GenerationInfo* info = nullptr);
CqapInstance read_instance(const std::string& path);

// ---------------------------------------------------------------------------
// Methods and reports

enum class MethodKind { Exact, GwDefault, GwMultiInit, Egw, Fgw, Ga };

struct MethodConfig {
    MethodKind kind = MethodKind::GwDefault;
    int trials = 20;
    double epsilon = 0.8;
    double alpha = 0.7;
    GaConfig ga{};
    int max_iter = kDefaultMaxIter;
    double tol = kDefaultTol;
    EntropicOptions entropic{};

    static MethodConfig exact() { return {MethodKind::Exact}; }
    static MethodConfig gw() { return {MethodKind::GwDefault}; }
    static MethodConfig gw_multi(int trials);
    static MethodConfig egw(double epsilon);
    static MethodConfig fgw(double alpha);
    static MethodConfig genetic(const GaConfig& ga = {});

    /// "exact", "gw", "gw-multi[:T]", "egw[:eps]", "fgw[:alpha]", "ga".
    static MethodConfig parse(const std::string& token);

    /// Report label: Exact, GW_Default, GW_MultiInit, EGW(eps), FGW(alpha), GA.
    std::string label() const;
};

struct SolveReport {
    std::string instance_id;
    std::string method;
    std::optional<double> objective_relaxed;
    std::optional<double> objective_binary;
    bool feasible = false;
    std::optional<double> gap_pct;
    double runtime_s = 0.0;
    long long iterations = 0;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> params;
    std::string status = "ok";

    friend bool operator==(const SolveReport&, const SolveReport&) = default;
};

namespace status {
inline const std::string ok = "ok";
inline const std::string nonconverged = "nonconverged";
inline const std::string skipped_too_large = "skipped_too_large";
inline const std::string infeasible = "infeasible";
inline const std::string negative_gap = "negative_gap";
}  // namespace status

struct RunOptions {
    unsigned workers = 1;
    long long node_cap = kDefaultNodeCap;
    /// Cells faster than this are timed as the median of three runs.
    double repeat_below_s = 1.0;
    bool time_cells = true;
    /// Run every cell on the calling thread even when workers > 1.
    bool serial_timing = false;
    /// Called for every coupling a GW-family solver returns.
    std::function<void(const std::string& instance_id, const std::string& method, const Coupling&)> on_coupling;
};

struct OracleCell {
    std::optional<OracleResult> result;
    double runtime_s = 0.0;
    std::string status = status::ok;
};

/// Runs the oracle unless its search estimate exceeds the node cap.
OracleCell run_oracle(const CqapInstance& inst, long long node_cap);

/// One (instance, method) cell. `oracle` supplies the gap reference when proven.
SolveReport solve_cell(const CqapInstance& inst, const MethodConfig& method, const OracleCell* oracle,
                       const RunOptions& options);

/// Every (instance, method) pair, in the given spec order then method order.
std::vector<SolveReport> run_suite(const std::vector<InstanceSpec>& specs, const std::vector<MethodConfig>& methods,
                                   const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Parameter sweeps

struct SweepTable {
    std::string parameter;  // "epsilon" or "alpha"
    std::vector<double> grid;
    struct Row {
        std::string instance_id;
        std::string metric;  // objective_binary, gap_pct, runtime_s
        std::vector<std::optional<double>> values;
    };
    std::vector<Row> rows;

    std::string to_csv() const;
};

SweepTable epsilon_sweep(const CqapInstance& inst, const std::vector<double>& epsilons, const RunOptions& options = {});
SweepTable epsilon_sweep(const InstanceSpec& spec, const std::vector<double>& epsilons, const RunOptions& options = {});
SweepTable alpha_sweep(const CqapInstance& inst, const std::vector<double>& alphas, const RunOptions& options = {});
SweepTable alpha_sweep(const InstanceSpec& spec, const std::vector<double>& alphas, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Report emission

enum class ReportFormat { Csv, Json, Markdown };

ReportFormat parse_format(const std::string& name);

struct EmitOptions {
    /// Leave runtime_s empty (CSV/markdown) or null (JSON) so output is reproducible byte for byte.
    bool include_runtime = true;
};

inline const char* kCsvHeader =
    "instance_id,method,params,objective_relaxed,objective_binary,feasible,gap_pct,runtime_s,iterations,seed,status";
inline const char* kReportSchema = "cqap-report/1";

std::string emit_report(const std::vector<SolveReport>& reports, ReportFormat format, const EmitOptions& options = {});
std::vector<SolveReport> parse_report_json(const std::string& text);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double v);
/// RFC 4180 field quoting.
std::string csv_field(const std::string& s);

}  // namespace otqap
