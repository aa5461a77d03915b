#pragma once

// CSV schemas. Floats are written with 17 significant digits so that a trace
// read back gives the same doubles.

#include "npgmo/analysis.hpp"
#include "npgmo/driver.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace npgmo {

std::string format_double(double v);

/// Header k,t,theta,dnorm,gap,F_1..F_m,x_1..x_n.
void write_trace_csv(std::ostream& out, const SolveTrace& trace);

/// A trace as read back from CSV (no lambda, no status).
struct TraceTable {
    std::size_t m = 0;
    std::size_t n = 0;
    std::vector<IterationRecord> rows;
};

/// Throws InputError on a malformed header or row.
TraceTable read_trace_csv(std::istream& in);

/// Offline sufficient-decrease re-check of consecutive rows:
/// F_i(row k+1) - F_i(row k) <= t_k sigma theta_k, with the solver's rounding allowance.
CheckVerdict verify_sufficient_decrease(const TraceTable& table, double sigma);

struct BenchRow {
    std::string family;
    double cond = 1.0;
    std::uint64_t seed = 0;
    std::string solver;
    std::size_t iters = 0;
    double final_dnorm = 0.0;
    double wall_ms = 0.0;
};

/// Header family,cond,seed,solver,iters,final_dnorm,wall_ms.
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

struct ReportRow {
    std::uint64_t seed = 0;
    std::string check;
    CheckVerdict verdict;
};

/// Header seed,check,verdict,passed,margin,detail.
void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);

}  // namespace npgmo
