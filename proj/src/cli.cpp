#include "dmaprobe/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <iterator>
#include <stdexcept>

#include "dmaprobe/engine.hpp"
#include "dmaprobe/hex.hpp"
#include "dmaprobe/memory_map.hpp"
#include "dmaprobe/report.hpp"
#include "dmaprobe/scenario.hpp"
#include "dmaprobe/trace.hpp"

namespace dmaprobe::cli {

InputSpec parse_input_spec(std::string_view spec, std::string_view on_exhaustion) {
    InputSpec out;
    if (spec == "zeros") {
        out.zeros = true;
    } else if (spec.substr(0, 5) == "file:" && spec.size() > 5) {
        out.zeros = false;
        out.path = std::string(spec.substr(5));
    } else {
        throw std::invalid_argument("--input must be 'zeros' or 'file:PATH', got '" + std::string(spec) + "'");
    }
    if (on_exhaustion == "zeropad")
        out.exhaustion = Exhaustion::ZeroPad;
    else if (on_exhaustion == "halt")
        out.exhaustion = Exhaustion::Halt;
    else
        throw std::invalid_argument("--on-exhaustion must be 'zeropad' or 'halt'");
    return out;
}

std::unique_ptr<InputProvider> make_provider(const InputSpec& spec) {
    if (spec.zeros)
        return zero_provider();
    std::ifstream in(spec.path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read input file '" + spec.path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return stream_provider(std::move(bytes), spec.exhaustion);
}

namespace {

void print_summary(const Engine& engine, std::ostream& out) {
    const auto channels = engine.snapshot();
    out << "profile " << engine.profile().name() << ", " << engine.event_count() << " events\n";
    for (const auto& ch : channels) {
        out << "  #" << ch.id << " " << format_hex32(ch.stream_key) << " " << to_string(ch.direction) << " "
            << to_string(ch.state);
        if (ch.termination)
            out << "(" << to_string(*ch.termination) << ")";
        out << " pointers=" << ch.pointers.size() << " buffers=" << ch.buffers.size()
            << " perceived=" << ch.perceived_size() << " injections=" << ch.injections << "\n";
    }
    const auto t = compute_totals(channels);
    out << "totals: configs=" << t.configs_detected << " input=" << t.input_channels
        << " output=" << t.output_channels << " sized=" << t.buffers_sized << " injections=" << t.injections
        << "\n";
}

bool to_stdout(const std::optional<std::string>& path) { return !path || path->empty() || *path == "-"; }

bool write_report(const nlohmann::ordered_json& report, const std::optional<std::string>& path,
                  std::ostream& out, std::ostream& err) {
    const std::string text = dump_report(report);
    if (to_stdout(path)) {
        out << text;
        return true;
    }
    std::ofstream f(*path, std::ios::binary);
    f << text;
    if (!f) {
        err << "error: cannot write report '" << *path << "'\n";
        return false;
    }
    return true;
}

}  // namespace

int cmd_replay(const ReplayOptions& opts, std::ostream& out, std::ostream& err) {
    std::optional<MemoryMapProfile> profile;
    std::unique_ptr<InputProvider> provider;
    try {
        profile = resolve_profile(opts.profile);
        provider = make_provider(opts.input);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitBadInput;
    }
    std::ifstream in(opts.trace_path);
    if (!in) {
        err << "error: cannot read trace '" << opts.trace_path << "'\n";
        return kExitBadInput;
    }

    Engine engine(std::move(*profile), std::move(provider));
    TraceReader reader(in);
    int status = kExitOk;
    try {
        while (auto ev = reader.next())
            engine.on_event(*ev);
    } catch (const TraceError& e) {
        err << opts.trace_path << ": " << e.what() << "\n";
        return kExitBadInput;
    } catch (const ContractError& e) {
        err << opts.trace_path << ": line " << reader.line() << ": " << e.what() << "\n";
        return kExitBadInput;
    } catch (const InputExhausted&) {
        err << "input exhausted at line " << reader.line() << "; ending session\n";
        status = kExitInputExhausted;
    }
    engine.finish();

    if (!to_stdout(opts.report_path))
        print_summary(engine, out);
    if (!write_report(channel_report(engine), opts.report_path, out, err))
        return kExitBadInput;
    return status;
}

int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err) {
    std::optional<Scenario> scenario;
    std::optional<MemoryMapProfile> profile;
    std::unique_ptr<InputProvider> provider;
    try {
        scenario = resolve_scenario(opts.scenario);
        profile = resolve_profile(scenario->profile);
        provider = make_provider(opts.input);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitBadInput;
    }

    Engine engine(std::move(*profile), std::move(provider));
    ScenarioReport report;
    int status = kExitOk;
    try {
        report = run_scenario(*scenario, engine);
        status = report.passed() ? kExitOk : kExitExpectationFailed;
    } catch (const InputExhausted&) {
        err << "input exhausted after " << engine.event_count() << " events; ending session\n";
        engine.finish();
        report.scenario = scenario->name;
        report.channel_report = channel_report(engine);
        status = kExitInputExhausted;
    }

    if (!to_stdout(opts.report_path)) {
        print_summary(engine, out);
        for (const auto& v : report.verdicts) {
            if (v.outcome == Verdict::Outcome::Fail)
                out << "  FAIL " << v.check << ": expected " << v.expected.dump() << ", got " << v.actual.dump()
                    << "\n";
            else if (v.outcome == Verdict::Outcome::KnownMiss)
                out << "  known miss: " << v.check << "\n";
        }
        out << scenario->name << ": " << (status == kExitOk ? "pass" : "FAIL") << "\n";
    }
    if (!write_report(scenario_report_json(report), opts.report_path, out, err))
        return kExitBadInput;
    return status;
}

int cmd_export(const std::string& name, const std::string& trace_path, std::ostream& err) {
    std::optional<Scenario> scenario;
    try {
        scenario = resolve_scenario(name);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitBadInput;
    }
    std::ofstream f(trace_path, std::ios::binary);
    for (const auto& ev : scenario_events(*scenario))
        f << format_trace_record(ev) << "\n";
    if (!f) {
        err << "error: cannot write trace '" << trace_path << "'\n";
        return kExitBadInput;
    }
    return kExitOk;
}

int cmd_profiles_list(std::ostream& out) {
    for (const auto& p : builtin_profiles()) {
        out << p.name() << "  mmio " << format_range(p.mmio());
        for (const auto& r : p.ram())
            out << "  ram " << format_range(r);
        for (const auto& r : p.flash())
            out << "  flash " << format_range(r);
        out << "\n";
    }
    return kExitOk;
}

int cmd_scenarios_list(std::ostream& out) {
    for (const auto& s : builtin_scenarios())
        out << s.name << " [" << s.profile << "] " << s.description << "\n";
    return kExitOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Detect DMA input channels in firmware memory-access traces and feed them input"};
    app.require_subcommand(1);

    std::string input = "zeros";
    std::string exhaustion = "zeropad";
    std::string report;

    ReplayOptions replay;
    auto* replay_cmd = app.add_subcommand("replay", "Replay a JSONL access trace through the engine");
    replay_cmd->add_option("--trace", replay.trace_path, "JSONL trace file")->required();
    replay_cmd->add_option("--profile", replay.profile, "Memory-map profile name or file")
        ->capture_default_str();
    replay_cmd->add_option("--input", input, "zeros | file:PATH")->capture_default_str();
    replay_cmd->add_option("--on-exhaustion", exhaustion, "zeropad | halt")->capture_default_str();
    replay_cmd->add_option("--report", report, "Report JSON path (default: stdout)");

    SimulateOptions simulate;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a built-in or file scenario and check its expectations");
    sim_cmd->add_option("scenario", simulate.scenario, "Scenario name or JSON path")->required();
    sim_cmd->add_option("--input", input, "zeros | file:PATH")->capture_default_str();
    sim_cmd->add_option("--on-exhaustion", exhaustion, "zeropad | halt")->capture_default_str();
    sim_cmd->add_option("--report", report, "Report JSON path (default: stdout)");

    std::string export_name, export_trace;
    auto* export_cmd = app.add_subcommand("export", "Write a scenario's accesses as a JSONL trace");
    export_cmd->add_option("scenario", export_name, "Scenario name or JSON path")->required();
    export_cmd->add_option("--trace", export_trace, "Output JSONL path")->required();

    auto* profiles_cmd = app.add_subcommand("profiles", "Memory-map profiles");
    profiles_cmd->require_subcommand(1);
    auto* profiles_list = profiles_cmd->add_subcommand("list", "List built-in profiles");

    auto* scenarios_cmd = app.add_subcommand("scenarios", "Scenarios");
    scenarios_cmd->require_subcommand(1);
    auto* scenarios_list = scenarios_cmd->add_subcommand("list", "List built-in scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitBadInput;
    }

    InputSpec spec;
    if (*replay_cmd || *sim_cmd) {
        try {
            spec = parse_input_spec(input, exhaustion);
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return kExitBadInput;
        }
    }
    std::optional<std::string> report_path;
    if (!report.empty())
        report_path = report;

    if (*replay_cmd) {
        replay.input = spec;
        replay.report_path = report_path;
        return cmd_replay(replay, out, err);
    }
    if (*sim_cmd) {
        simulate.input = spec;
        simulate.report_path = report_path;
        return cmd_simulate(simulate, out, err);
    }
    if (*export_cmd)
        return cmd_export(export_name, export_trace, err);
    if (*profiles_list)
        return cmd_profiles_list(out);
    if (*scenarios_list)
        return cmd_scenarios_list(out);
    return kExitBadInput;
}

}  // namespace dmaprobe::cli
