#pragma once

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "dmaprobe/input_source.hpp"

namespace dmaprobe::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitExpectationFailed = 1;
inline constexpr int kExitBadInput = 2;
inline constexpr int kExitInputExhausted = 3;

/// `zeros` or `file:PATH`, plus the exhaustion policy for file input.
struct InputSpec {
    bool zeros = true;
    std::string path;
    Exhaustion exhaustion = Exhaustion::ZeroPad;
};

/// Throws std::invalid_argument on an unrecognised spec or policy.
InputSpec parse_input_spec(std::string_view spec, std::string_view on_exhaustion = "zeropad");

/// Throws std::runtime_error if the input file cannot be read.
std::unique_ptr<InputProvider> make_provider(const InputSpec& spec);

struct ReplayOptions {
    std::string trace_path;
    std::string profile = "generic-armv7m-512mb";
    InputSpec input;
    std::optional<std::string> report_path;  // stdout when empty or "-"
};

struct SimulateOptions {
    std::string scenario;  // built-in name or JSON path
    InputSpec input;
    std::optional<std::string> report_path;
};

int cmd_replay(const ReplayOptions& opts, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_export(const std::string& scenario, const std::string& trace_path, std::ostream& err);
int cmd_profiles_list(std::ostream& out);
int cmd_scenarios_list(std::ostream& out);

/// Full command line, including argv[0].
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dmaprobe::cli
