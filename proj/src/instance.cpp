#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "otqap/bench.hpp"
#include "otqap/linear_ot.hpp"

namespace otqap {

namespace {

struct NamedSize {
    const char* id;
    int agents;
    int tasks;
};

constexpr NamedSize kNamedSizes[] = {
    {"S1", 3, 3},    {"S2", 4, 4},    {"S3", 5, 6},    {"S4", 6, 5},    {"M1", 10, 10},
    {"M2", 12, 14},  {"M3", 15, 12},  {"M4", 20, 20},  {"L1", 30, 30},  {"L2", 40, 50},
    {"L3", 50, 40},  {"L4", 60, 60},  {"L5", 100, 100},
};

std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

bool packing_exists(const CqapInstance& inst)
{
    if (has_greedy_packing(inst))
        return true;
    if (inst.agents() * inst.tasks() > 36 || inst.agents() > kOracleMaxAgents)
        return false;
    try {
        solve_exact_enum(inst, 1'000'000);
        return true;
    } catch (const Error&) {
        return false;
    }
}

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_matrix(std::ostringstream& os, const Matrix& m)
{
    os << '[';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        os << (i ? "," : "") << '[';
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            os << (j ? "," : "") << num(m(i, j));
        os << ']';
    }
    os << ']';
}

void write_ints(std::ostringstream& os, const std::vector<int>& v)
{
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i)
        os << (i ? "," : "") << v[i];
    os << ']';
}

Matrix read_matrix(const nlohmann::json& j, const char* name)
{
    if (!j.is_array())
        throw Error(ErrorCode::ParseError, std::string(name) + " must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw Error(ErrorCode::ParseError, std::string(name) + " has ragged rows");
        for (Eigen::Index k = 0; k < cols; ++k)
            m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
    return m;
}

}  // namespace

void InstanceSpec::validate() const
{
    if (n_agents < 1 || n_tasks < 1)
        throw Error(ErrorCode::InvalidArgument, "an instance needs at least one agent and one task");
    for (const auto& s : kNamedSizes) {
        if (test_id == s.id && (n_agents != s.agents || n_tasks != s.tasks))
            throw Error(ErrorCode::InvalidArgument, test_id + " is " + std::to_string(s.agents) + "x" +
                                                        std::to_string(s.tasks));
    }
}

InstanceSpec named_spec(const std::string& test_id, std::uint64_t master_seed)
{
    for (const auto& s : kNamedSizes) {
        if (test_id == s.id)
            return {s.id, s.agents, s.tasks, SeedPolicy{master_seed, fnv1a(test_id)}};
    }
    throw Error(ErrorCode::InvalidArgument, "unknown test id '" + test_id + "'");
}

const std::vector<std::string>& named_spec_ids()
{
    static const std::vector<std::string> ids = [] {
        std::vector<std::string> v;
        for (const auto& s : kNamedSizes)
            v.emplace_back(s.id);
        return v;
    }();
    return ids;
}

CqapInstance generate_instance(const InstanceSpec& spec, GenerationInfo* info)
{
    spec.validate();
    Rng rng(spec.seed);
    CqapInstance inst;
    inst.test_id = spec.test_id;
    inst.seed = spec.seed;
    inst.agent_pos.resize(spec.n_agents, 2);
    inst.task_pos.resize(spec.n_tasks, 2);
    for (int i = 0; i < spec.n_agents; ++i) {
        inst.agent_pos(i, 0) = rng.uniform(0.0, 10.0);
        inst.agent_pos(i, 1) = rng.uniform(0.0, 10.0);
    }
    for (int j = 0; j < spec.n_tasks; ++j) {
        inst.task_pos(j, 0) = rng.uniform(0.0, 10.0);
        inst.task_pos(j, 1) = rng.uniform(0.0, 10.0);
    }
    inst.capacity.resize(static_cast<std::size_t>(spec.n_agents));
    for (auto& u : inst.capacity)
        u = static_cast<int>(rng.uniform_int(kMinUnits, kMaxUnits));
    inst.flow = SymCostMatrix::euclidean(inst.agent_pos).entries();
    inst.distance = SymCostMatrix::euclidean(inst.task_pos).entries();
    inst.linear_cost = ground_cost(inst.agent_pos, inst.task_pos, 1);

    inst.demand.resize(static_cast<std::size_t>(spec.n_tasks));
    int draws = 0;
    for (;;) {
        if (draws == kMaxRegenerations)
            throw Error(ErrorCode::GenerationFailed,
                        "no packable demand vector after " + std::to_string(kMaxRegenerations) + " draws");
        ++draws;
        for (auto& d : inst.demand)
            d = static_cast<int>(rng.uniform_int(kMinUnits, kMaxUnits));
        if (packing_exists(inst))
            break;
    }
    if (info != nullptr) {
        info->demand_draws = draws;
        info->total_capacity = 0;
        info->total_demand = 0;
        for (int u : inst.capacity)
            info->total_capacity += u;
        for (int d : inst.demand)
            info->total_demand += d;
    }
    return inst;
}

std::string instance_to_json(const CqapInstance& inst, const GenerationInfo* info)
{
    std::ostringstream os;
    os << "{\"schema\":\"cqap/1\",\"test_id\":" << nlohmann::json(inst.test_id).dump();
    os << ",\"agent_pos\":";
    write_matrix(os, inst.agent_pos);
    os << ",\"task_pos\":";
    write_matrix(os, inst.task_pos);
    os << ",\"capacity\":";
    write_ints(os, inst.capacity);
    os << ",\"demand\":";
    write_ints(os, inst.demand);
    os << ",\"flow\":";
    write_matrix(os, inst.flow);
    os << ",\"distance\":";
    write_matrix(os, inst.distance);
    os << ",\"linear_cost\":";
    write_matrix(os, inst.linear_cost);
    os << ",\"seed\":{\"master\":" << inst.seed.master_seed << ",\"stream\":" << inst.seed.stream_id << '}';
    if (info != nullptr) {
        os << ",\"generator\":{\"capacity_range\":[" << kMinUnits << ',' << kMaxUnits << "],\"demand_range\":["
           << kMinUnits << ',' << kMaxUnits << "],\"demand_draws\":" << info->demand_draws
           << ",\"total_capacity\":" << info->total_capacity << ",\"total_demand\":" << info->total_demand
           << ",\"total_mass\":" << info->total_capacity + info->total_demand << '}';
    }
    os << "}\n";
    return os.str();
}

CqapInstance instance_from_json(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
    try {
        if (j.value("schema", std::string()) != "cqap/1")
            throw Error(ErrorCode::ParseError, "expected schema cqap/1");
        CqapInstance inst;
        inst.test_id = j.at("test_id").get<std::string>();
        inst.agent_pos = read_matrix(j.at("agent_pos"), "agent_pos");
        inst.task_pos = read_matrix(j.at("task_pos"), "task_pos");
        inst.capacity = j.at("capacity").get<std::vector<int>>();
        inst.demand = j.at("demand").get<std::vector<int>>();
        inst.flow = read_matrix(j.at("flow"), "flow");
        inst.distance = read_matrix(j.at("distance"), "distance");
        inst.linear_cost = read_matrix(j.at("linear_cost"), "linear_cost");
        const auto& seed = j.at("seed");
        if (seed.is_object()) {
            inst.seed.master_seed = seed.at("master").get<std::uint64_t>();
            inst.seed.stream_id = seed.value("stream", std::uint64_t{0});
        } else {
            inst.seed.master_seed = seed.get<std::uint64_t>();
        }
        inst.validate();
        return inst;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

void write_instance(const std::string& path, const CqapInstance& inst, const GenerationInfo* info)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
    out << instance_to_json(inst, info);
}

CqapInstance read_instance(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::InvalidArgument, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return instance_from_json(ss.str());
}

}  // namespace otqap
