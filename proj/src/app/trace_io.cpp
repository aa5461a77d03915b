#include "npgmo/trace_io.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

namespace npgmo {
namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, std::size_t line) {
    // strtod accepts nan/inf spellings, which the writer may emit on failure rows.
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw InputError("trace csv line " + std::to_string(line) + ": bad number '" + s + "'");
    return v;
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trace_csv(std::ostream& out, const SolveTrace& trace) {
    const std::size_t m = trace.records.empty() ? 0 : static_cast<std::size_t>(trace.records.front().f.size());
    const std::size_t n = trace.records.empty() ? 0 : static_cast<std::size_t>(trace.records.front().x.size());
    out << "k,t,theta,dnorm,gap";
    for (std::size_t i = 1; i <= m; ++i) out << ",F_" << i;
    for (std::size_t j = 1; j <= n; ++j) out << ",x_" << j;
    out << '\n';
    for (const auto& r : trace.records) {
        out << r.k << ',' << format_double(r.t) << ',' << format_double(r.theta) << ','
            << format_double(r.dnorm) << ',' << format_double(r.gap);
        for (Eigen::Index i = 0; i < r.f.size(); ++i) out << ',' << format_double(r.f[i]);
        for (Eigen::Index j = 0; j < r.x.size(); ++j) out << ',' << format_double(r.x[j]);
        out << '\n';
    }
}

TraceTable read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("trace csv: missing header");
    const auto header = split(line);
    if (header.size() < 5 || header[0] != "k" || header[1] != "t" || header[2] != "theta" ||
        header[3] != "dnorm" || header[4] != "gap")
        throw InputError("trace csv: header must start with k,t,theta,dnorm,gap");
    TraceTable table;
    std::size_t col = 5;
    for (; col < header.size() && header[col] == "F_" + std::to_string(table.m + 1); ++col) ++table.m;
    for (; col < header.size() && header[col] == "x_" + std::to_string(table.n + 1); ++col) ++table.n;
    if (col != header.size() || table.m == 0 || table.n == 0)
        throw InputError("trace csv: expected F_1..F_m then x_1..x_n columns");

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw InputError("trace csv line " + std::to_string(lineno) + ": wrong column count");
        IterationRecord r;
        std::size_t k = 0;
        const auto [p, ec] = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), k);
        if (ec != std::errc() || p != cells[0].data() + cells[0].size())
            throw InputError("trace csv line " + std::to_string(lineno) + ": bad iteration index");
        r.k = k;
        r.t = parse_double(cells[1], lineno);
        r.theta = parse_double(cells[2], lineno);
        r.dnorm = parse_double(cells[3], lineno);
        r.gap = parse_double(cells[4], lineno);
        r.f.resize(static_cast<Eigen::Index>(table.m));
        r.x.resize(static_cast<Eigen::Index>(table.n));
        for (std::size_t i = 0; i < table.m; ++i) r.f[static_cast<Eigen::Index>(i)] = parse_double(cells[5 + i], lineno);
        for (std::size_t j = 0; j < table.n; ++j)
            r.x[static_cast<Eigen::Index>(j)] = parse_double(cells[5 + table.m + j], lineno);
        table.rows.push_back(std::move(r));
    }
    return table;
}

CheckVerdict verify_sufficient_decrease(const TraceTable& table, double sigma) {
    SolveTrace trace;
    trace.records = table.rows;
    return check_sufficient_decrease(trace, sigma);
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << "family,cond,seed,solver,iters,final_dnorm,wall_ms\n";
    for (const auto& r : rows)
        out << r.family << ',' << format_double(r.cond) << ',' << r.seed << ',' << r.solver << ',' << r.iters << ','
            << format_double(r.final_dnorm) << ',' << format_double(r.wall_ms) << '\n';
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
    out << "seed,check,verdict,passed,margin,detail\n";
    for (const auto& r : rows)
        out << r.seed << ',' << r.check << ',' << r.verdict.name << ',' << (r.verdict.passed ? 1 : 0) << ','
            << format_double(r.verdict.margin) << ',' << quote(r.verdict.detail) << '\n';
}

}  // namespace npgmo
