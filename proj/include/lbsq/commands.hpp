#pragma once

#include <iosfwd>
#include <vector>

#include "lbsq/config.hpp"
#include "lbsq/desim.hpp"
#include "lbsq/table.hpp"

namespace lbsq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitBoundsExceeded = 2;
inline constexpr int kExitConfigError = 3;
inline constexpr int kExitIoError = 4;

/// z0, the head of P_n and the analytic metric reports
/// (columns quantity,index,layer,value,note).
Table analyze_table(const RunConfig& cfg);

struct SimulateOutput {
    Table table;  // metric,replication,value,half_width
    std::vector<desim::TraceEvent> trace;
};

SimulateOutput simulate_table(const RunConfig& cfg);

struct ValidateOutput {
    Table table;  // comparison,metric,value,reference,relative_error,bound,status
    int exit_code = kExitOk;
};

/// Simulation against the CTMC (bounded on L and W), the distribution and
/// closed-form layers, plus the closed-form vs distribution divergence.
ValidateOutput validate_table(const RunConfig& cfg);

/// variable,value,layer,metric,result,stable,note
Table sweep_table(const RunConfig& cfg);

/// estimator,value,standard_error,samples,note
Table prob_table(const RunConfig& cfg);

/// Full command-line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lbsq::cli
