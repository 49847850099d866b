#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dmaprobe/channel_tracker.hpp"
#include "dmaprobe/engine.hpp"
#include "dmaprobe/event.hpp"
#include "dmaprobe/input_source.hpp"

namespace dmaprobe {

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ScenarioStep {
    enum class Kind : std::uint8_t { MmioWrite, RamRead, RamWrite, Label };

    Kind kind = Kind::Label;
    Address addr = 0;
    std::uint8_t width = 4;
    std::uint32_t value = 0;
    std::string label;

    bool is_access() const { return kind != Kind::Label; }
};

/// Every field is optional; only present ones are checked.
struct ChannelExpectation {
    std::optional<Address> stream_key;
    std::optional<Direction> direction;
    std::optional<ChannelState> state;
    std::optional<TerminationReason> termination;
    std::optional<std::uint64_t> perceived_size;
    std::optional<std::uint64_t> buffers;
    std::optional<std::uint64_t> pointers;
    std::optional<std::uint64_t> injections;
    std::optional<std::uint64_t> bytes_injected;
    std::optional<AddressClass> source_class;
};

/// Checked when the run reaches the step labelled `label`.
struct Checkpoint {
    std::string label;
    std::optional<std::uint64_t> configs_detected;
    std::optional<std::uint64_t> live_channels;
    std::optional<std::uint64_t> injections;
    std::optional<Address> stream_key;           // selects the newest channel with this key
    std::optional<std::uint64_t> perceived_size;  // of that channel
};

struct Expectations {
    std::optional<std::uint64_t> configs_detected;
    std::optional<std::uint64_t> input_channels;
    std::optional<std::uint64_t> output_channels;
    std::optional<std::uint64_t> buffers_sized;
    std::optional<std::uint64_t> injections;
    std::optional<std::uint64_t> bytes_injected;
    std::optional<std::vector<ChannelExpectation>> channels;  // all channels, creation order
    std::vector<Checkpoint> checkpoints;
    bool known_miss = false;  // the engine is expected not to detect this configuration
};

struct Scenario {
    std::string name;
    std::string description;
    std::string profile;
    std::vector<ScenarioStep> steps;
    Expectations expect;

    std::size_t access_count() const;
};

struct Verdict {
    enum class Outcome : std::uint8_t { Pass, Fail, KnownMiss };

    std::string check;
    nlohmann::ordered_json expected;
    nlohmann::ordered_json actual;
    Outcome outcome = Outcome::Pass;
};

struct ScenarioReport {
    std::string scenario;
    nlohmann::ordered_json channel_report;
    std::vector<Verdict> verdicts;

    bool passed() const;
};

/// Scenario JSON:
///   {"name": "...", "description": "...", "profile": "stm32f103",
///    "steps": [{"op":"w","addr":"0x..","width":4,"value":"0x.."},
///              {"op":"r","addr":"0x..","width":1}, {"label":"..."}],
///    "expect": {...}}
/// Step kinds follow from the address class under the named profile.
Scenario load_scenario(std::string_view json_text);
nlohmann::ordered_json scenario_to_json(const Scenario& scenario);

/// Access steps as events numbered from seq 1.
std::vector<MemoryAccessEvent> scenario_events(const Scenario& scenario);

/// Feeds every step, then ends the session. The engine must be fresh and use
/// the scenario's profile. InputExhausted propagates with the engine left
/// unfinished.
ScenarioReport run_scenario(const Scenario& scenario, Engine& engine);
ScenarioReport run_scenario(const Scenario& scenario, std::unique_ptr<InputProvider> provider);

const std::vector<Scenario>& builtin_scenarios();
const Scenario* find_builtin_scenario(std::string_view name);

/// Built-in name, else a path to a scenario JSON file.
Scenario resolve_scenario(std::string_view name_or_path);

nlohmann::ordered_json verdicts_to_json(const std::vector<Verdict>& verdicts);

/// channel_report plus "scenario", "expectations" and "passed".
nlohmann::ordered_json scenario_report_json(const ScenarioReport& report);

}  // namespace dmaprobe
