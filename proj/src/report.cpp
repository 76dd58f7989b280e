#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "otqap/bench.hpp"

namespace otqap {

namespace {

std::string join_params(const std::map<std::string, std::string>& params)
{
    std::string s;
    for (const auto& [k, v] : params) {
        if (!s.empty())
            s += ';';
        s += k + '=' + v;
    }
    return s;
}

std::string opt(const std::optional<double>& v)
{
    return v ? format_double(*v) : std::string();
}

std::string fixed(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string emit_csv(const std::vector<SolveReport>& reports, const EmitOptions& options)
{
    std::ostringstream os;
    os << kCsvHeader << '\n';
    for (const auto& r : reports) {
        os << csv_field(r.instance_id) << ',' << csv_field(r.method) << ',' << csv_field(join_params(r.params)) << ','
           << opt(r.objective_relaxed) << ',' << opt(r.objective_binary) << ',' << (r.feasible ? "true" : "false")
           << ',' << opt(r.gap_pct) << ',' << (options.include_runtime ? format_double(r.runtime_s) : std::string())
           << ',' << r.iterations << ',' << r.seed << ',' << csv_field(r.status) << '\n';
    }
    return os.str();
}

nlohmann::json opt_json(const std::optional<double>& v)
{
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string emit_json(const std::vector<SolveReport>& reports, const EmitOptions& options)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) {
        nlohmann::json o;
        o["instance_id"] = r.instance_id;
        o["method"] = r.method;
        o["params"] = r.params;
        o["objective_relaxed"] = opt_json(r.objective_relaxed);
        o["objective_binary"] = opt_json(r.objective_binary);
        o["feasible"] = r.feasible;
        o["gap_pct"] = opt_json(r.gap_pct);
        o["runtime_s"] = options.include_runtime ? nlohmann::json(r.runtime_s) : nlohmann::json(nullptr);
        o["iterations"] = r.iterations;
        o["seed"] = r.seed;
        o["status"] = r.status;
        arr.push_back(std::move(o));
    }
    nlohmann::json doc;
    doc["schema"] = kReportSchema;
    doc["reports"] = std::move(arr);
    return doc.dump(2) + "\n";
}

// Rows grouped by instance in first-seen order; the lowest feasible binary
// objective of each instance is bolded.
std::string emit_markdown(const std::vector<SolveReport>& reports, const EmitOptions& options)
{
    std::vector<std::string> order;
    std::map<std::string, double> best;
    for (const auto& r : reports) {
        if (!best.count(r.instance_id)) {
            order.push_back(r.instance_id);
            best[r.instance_id] = std::numeric_limits<double>::infinity();
        }
        if (r.feasible && r.objective_binary && *r.objective_binary < best[r.instance_id])
            best[r.instance_id] = *r.objective_binary;
    }

    std::ostringstream os;
    os << "| Instance | Method | Objective | Gap (%) | Time (s) | Status |\n";
    os << "|---|---|---:|---:|---:|---|\n";
    for (const auto& id : order) {
        for (const auto& r : reports) {
            if (r.instance_id != id)
                continue;
            std::string obj = "-";
            if (r.objective_binary) {
                obj = fixed(*r.objective_binary, 2);
                if (r.feasible && *r.objective_binary == best[id])
                    obj = "**" + obj + "**";
            }
            os << "| " << r.instance_id << " | " << r.method << " | " << obj << " | "
               << (r.gap_pct ? fixed(*r.gap_pct, 2) : "-") << " | "
               << (options.include_runtime ? fixed(r.runtime_s, 4) : "-") << " | " << r.status << " |\n";
        }
    }
    return os.str();
}

std::optional<double> opt_from(const nlohmann::json& o, const char* key)
{
    const auto& v = o.at(key);
    if (v.is_null())
        return std::nullopt;
    return v.get<double>();
}

}  // namespace

std::string format_double(double v)
{
    char buf[32];
    for (int digits = 1; digits <= 17; ++digits) {
        std::snprintf(buf, sizeof buf, "%.*g", digits, v);
        if (std::strtod(buf, nullptr) == v)
            break;
    }
    return buf;
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + '"';
}

ReportFormat parse_format(const std::string& name)
{
    if (name == "csv")
        return ReportFormat::Csv;
    if (name == "json")
        return ReportFormat::Json;
    if (name == "markdown" || name == "md")
        return ReportFormat::Markdown;
    throw Error(ErrorCode::UnknownFormat, "unknown report format '" + name + "'");
}

std::string emit_report(const std::vector<SolveReport>& reports, ReportFormat format, const EmitOptions& options)
{
    if (reports.empty())
        throw Error(ErrorCode::NonEmptyRequired, "no reports to emit");
    switch (format) {
    case ReportFormat::Csv: return emit_csv(reports, options);
    case ReportFormat::Json: return emit_json(reports, options);
    case ReportFormat::Markdown: return emit_markdown(reports, options);
    }
    throw Error(ErrorCode::UnknownFormat, "unknown report format");
}

std::vector<SolveReport> parse_report_json(const std::string& text)
{
    try {
        const auto doc = nlohmann::json::parse(text);
        if (doc.value("schema", std::string()) != kReportSchema)
            throw Error(ErrorCode::ParseError, std::string("expected schema ") + kReportSchema);
        std::vector<SolveReport> out;
        for (const auto& o : doc.at("reports")) {
            SolveReport r;
            r.instance_id = o.at("instance_id").get<std::string>();
            r.method = o.at("method").get<std::string>();
            r.params = o.at("params").get<std::map<std::string, std::string>>();
            r.objective_relaxed = opt_from(o, "objective_relaxed");
            r.objective_binary = opt_from(o, "objective_binary");
            r.feasible = o.at("feasible").get<bool>();
            r.gap_pct = opt_from(o, "gap_pct");
            r.runtime_s = o.at("runtime_s").is_null() ? 0.0 : o.at("runtime_s").get<double>();
            r.iterations = o.at("iterations").get<long long>();
            r.seed = o.at("seed").get<std::uint64_t>();
            r.status = o.at("status").get<std::string>();
            out.push_back(std::move(r));
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

}  // namespace otqap
