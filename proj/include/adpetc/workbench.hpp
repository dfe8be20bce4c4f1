#pragma once

// Command implementations behind the adpetc executable. Each returns a
// process exit code and writes human-readable output to `out` / `err`.

#include <iosfwd>
#include <optional>
#include <string>

#include "adpetc/lmidesign.hpp"

namespace adpetc::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kParse = 2,
    kAssumption = 3,
    kInfeasible = 4,
    kEnclosure = 5,
    kMismatch = 6,
};

/// Exit code for a failed verification, from its first failing check.
int exit_code_for(const design::VerificationReport& rep);

int cmd_design(const std::string& config_path, const std::string& cert_path, std::ostream& out,
               std::ostream& err);

int cmd_verify(const std::string& cert_path, const std::string& config_path, std::ostream& out,
               std::ostream& err);

struct SimulateArgs {
    std::string config_path;
    std::string cert_path;
    std::optional<std::string> trace_path;
    std::optional<std::string> report_path;
    std::optional<std::string> histogram_path;
    std::optional<double> duration;
};

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);

int cmd_bounds(const std::string& cert_path, double w_inf, double w0, std::ostream& out,
               std::ostream& err);

/// Runs the simulation and prints the statistics table without writing files
/// unless `args` asks for them.
int cmd_report(const SimulateArgs& args, std::ostream& out, std::ostream& err);

}  // namespace adpetc::cli
