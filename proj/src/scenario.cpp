#include "dmaprobe/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "dmaprobe/hex.hpp"
#include "dmaprobe/report.hpp"

namespace dmaprobe {

using nlohmann::json;
using nlohmann::ordered_json;

std::size_t Scenario::access_count() const {
    return static_cast<std::size_t>(
        std::count_if(steps.begin(), steps.end(), [](const ScenarioStep& s) { return s.is_access(); }));
}

bool ScenarioReport::passed() const {
    return std::none_of(verdicts.begin(), verdicts.end(),
                        [](const Verdict& v) { return v.outcome == Verdict::Outcome::Fail; });
}

// ---------------------------------------------------------------------------
// JSON <-> Scenario

namespace {

template <typename Enum, std::size_t N>
Enum enum_from(const json& v, const char* what, const std::array<Enum, N>& values) {
    if (!v.is_string())
        throw ScenarioError(std::string(what) + " must be a string");
    const auto& s = v.get_ref<const std::string&>();
    for (Enum e : values) {
        if (to_string(e) == s)
            return e;
    }
    throw ScenarioError(std::string("unknown ") + what + " '" + s + "'");
}

Direction direction_from(const json& v) {
    return enum_from(v, "direction",
                     std::array{Direction::Undetermined, Direction::Input, Direction::Output});
}
ChannelState state_from(const json& v) {
    return enum_from(v, "state",
                     std::array{ChannelState::Candidate, ChannelState::Active, ChannelState::Terminated});
}
TerminationReason termination_from(const json& v) {
    return enum_from(v, "termination",
                     std::array{TerminationReason::Reconfigured, TerminationReason::FirmwareWrite,
                                TerminationReason::SessionEnd});
}
AddressClass class_from(const json& v) {
    return enum_from(v, "class",
                     std::array{AddressClass::Mmio, AddressClass::Ram, AddressClass::Flash,
                                AddressClass::Other});
}

Address address_from(const json& v, const char* what) {
    if (!v.is_string())
        throw ScenarioError(std::string(what) + " must be a hex string");
    auto parsed = parse_hex(v.get_ref<const std::string&>());
    if (!parsed || *parsed > 0xFFFFFFFFull)
        throw ScenarioError(std::string(what) + " is not a 32-bit 0x-prefixed hex value");
    return static_cast<Address>(*parsed);
}

std::uint64_t count_from(const json& v, const char* what) {
    if (!v.is_number_unsigned())
        throw ScenarioError(std::string(what) + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

template <typename T, typename F>
void read_opt(const json& obj, const char* key, std::optional<T>& out, F conv) {
    if (obj.contains(key))
        out = conv(obj.at(key), key);
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const char* where) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ScenarioError(std::string("unknown key '") + key + "' in " + where);
    }
}

auto as_count = [](const json& v, const char* k) { return count_from(v, k); };
auto as_address = [](const json& v, const char* k) { return address_from(v, k); };

ChannelExpectation channel_expectation_from(const json& obj) {
    if (!obj.is_object())
        throw ScenarioError("channel expectation must be an object");
    check_keys(obj,
               {"stream_key", "direction", "state", "termination", "perceived_size", "buffers",
                "pointers", "injections", "bytes_injected", "source_class"},
               "channel expectation");
    ChannelExpectation c;
    read_opt(obj, "stream_key", c.stream_key, as_address);
    read_opt(obj, "direction", c.direction, [](const json& v, const char*) { return direction_from(v); });
    read_opt(obj, "state", c.state, [](const json& v, const char*) { return state_from(v); });
    read_opt(obj, "termination", c.termination,
             [](const json& v, const char*) { return termination_from(v); });
    read_opt(obj, "perceived_size", c.perceived_size, as_count);
    read_opt(obj, "buffers", c.buffers, as_count);
    read_opt(obj, "pointers", c.pointers, as_count);
    read_opt(obj, "injections", c.injections, as_count);
    read_opt(obj, "bytes_injected", c.bytes_injected, as_count);
    read_opt(obj, "source_class", c.source_class, [](const json& v, const char*) { return class_from(v); });
    return c;
}

Checkpoint checkpoint_from(const json& obj) {
    if (!obj.is_object() || !obj.contains("label") || !obj.at("label").is_string())
        throw ScenarioError("checkpoint needs a string 'label'");
    check_keys(obj, {"label", "configs_detected", "live_channels", "injections", "stream_key", "perceived_size"},
               "checkpoint");
    Checkpoint c;
    c.label = obj.at("label").get<std::string>();
    read_opt(obj, "configs_detected", c.configs_detected, as_count);
    read_opt(obj, "live_channels", c.live_channels, as_count);
    read_opt(obj, "injections", c.injections, as_count);
    read_opt(obj, "stream_key", c.stream_key, as_address);
    read_opt(obj, "perceived_size", c.perceived_size, as_count);
    if (c.perceived_size && !c.stream_key)
        throw ScenarioError("checkpoint '" + c.label + "': perceived_size needs stream_key");
    return c;
}

Expectations expectations_from(const json& obj) {
    if (!obj.is_object())
        throw ScenarioError("'expect' must be an object");
    check_keys(obj,
               {"configs_detected", "input_channels", "output_channels", "buffers_sized", "injections",
                "bytes_injected", "channels", "checkpoints", "known_miss"},
               "expect");
    Expectations e;
    read_opt(obj, "configs_detected", e.configs_detected, as_count);
    read_opt(obj, "input_channels", e.input_channels, as_count);
    read_opt(obj, "output_channels", e.output_channels, as_count);
    read_opt(obj, "buffers_sized", e.buffers_sized, as_count);
    read_opt(obj, "injections", e.injections, as_count);
    read_opt(obj, "bytes_injected", e.bytes_injected, as_count);
    if (obj.contains("channels")) {
        if (!obj.at("channels").is_array())
            throw ScenarioError("'channels' must be an array");
        e.channels.emplace();
        for (const auto& c : obj.at("channels"))
            e.channels->push_back(channel_expectation_from(c));
    }
    if (obj.contains("checkpoints")) {
        if (!obj.at("checkpoints").is_array())
            throw ScenarioError("'checkpoints' must be an array");
        for (const auto& c : obj.at("checkpoints"))
            e.checkpoints.push_back(checkpoint_from(c));
    }
    if (obj.contains("known_miss")) {
        if (!obj.at("known_miss").is_boolean())
            throw ScenarioError("'known_miss' must be a boolean");
        e.known_miss = obj.at("known_miss").get<bool>();
    }
    return e;
}

ScenarioStep step_from(const json& obj, const MemoryMapProfile& profile, std::size_t index) {
    const std::string where = "step " + std::to_string(index);
    if (!obj.is_object())
        throw ScenarioError(where + ": must be an object");
    ScenarioStep s;
    if (obj.contains("label")) {
        check_keys(obj, {"label"}, where.c_str());
        if (!obj.at("label").is_string())
            throw ScenarioError(where + ": label must be a string");
        s.kind = ScenarioStep::Kind::Label;
        s.label = obj.at("label").get<std::string>();
        return s;
    }
    check_keys(obj, {"op", "addr", "width", "value"}, where.c_str());
    if (!obj.contains("op") || !obj.contains("addr") || !obj.contains("width"))
        throw ScenarioError(where + ": needs op, addr and width");
    s.addr = address_from(obj.at("addr"), "addr");
    auto width = count_from(obj.at("width"), "width");
    if (!valid_width(static_cast<unsigned>(width)) || width > 4)
        throw ScenarioError(where + ": width must be 1, 2 or 4");
    s.width = static_cast<std::uint8_t>(width);

    const auto& op = obj.at("op");
    const AddressClass cls = profile.classify(s.addr);
    if (op == "w") {
        if (!obj.contains("value"))
            throw ScenarioError(where + ": write needs a value");
        s.value = address_from(obj.at("value"), "value");
        if (!value_fits(s.value, s.width))
            throw ScenarioError(where + ": value wider than width");
        if (cls == AddressClass::Mmio)
            s.kind = ScenarioStep::Kind::MmioWrite;
        else if (cls == AddressClass::Ram)
            s.kind = ScenarioStep::Kind::RamWrite;
        else
            throw ScenarioError(where + ": write to " + format_hex32(s.addr) + " is neither MMIO nor RAM in " +
                                profile.name());
    } else if (op == "r") {
        if (obj.contains("value"))
            throw ScenarioError(where + ": read must not carry a value");
        if (cls != AddressClass::Ram)
            throw ScenarioError(where + ": read of " + format_hex32(s.addr) + " is not RAM in " + profile.name());
        s.kind = ScenarioStep::Kind::RamRead;
    } else {
        throw ScenarioError(where + ": op must be \"r\" or \"w\"");
    }
    return s;
}

}  // namespace

Scenario load_scenario(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ScenarioError(std::string("invalid scenario JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw ScenarioError("scenario must be a JSON object");
    check_keys(doc, {"name", "description", "profile", "steps", "expect"}, "scenario");
    for (const char* key : {"name", "profile", "steps"}) {
        if (!doc.contains(key))
            throw ScenarioError(std::string("scenario is missing '") + key + "'");
    }
    Scenario s;
    s.name = doc.at("name").get<std::string>();
    s.description = doc.value("description", "");
    s.profile = doc.at("profile").get<std::string>();

    MemoryMapProfile profile = [&] {
        try {
            return resolve_profile(s.profile);
        } catch (const ProfileError& e) {
            throw ScenarioError("scenario '" + s.name + "': " + e.what());
        }
    }();

    if (!doc.at("steps").is_array())
        throw ScenarioError("'steps' must be an array");
    std::size_t index = 0;
    for (const auto& step : doc.at("steps"))
        s.steps.push_back(step_from(step, profile, index++));
    if (doc.contains("expect"))
        s.expect = expectations_from(doc.at("expect"));

    std::set<std::string> labels;
    for (const auto& step : s.steps) {
        if (step.kind == ScenarioStep::Kind::Label)
            labels.insert(step.label);
    }
    for (const auto& c : s.expect.checkpoints) {
        if (!labels.count(c.label))
            throw ScenarioError("scenario '" + s.name + "': expectation references missing label '" + c.label + "'");
    }
    return s;
}

ordered_json scenario_to_json(const Scenario& s) {
    ordered_json doc;
    doc["name"] = s.name;
    doc["description"] = s.description;
    doc["profile"] = s.profile;
    doc["steps"] = ordered_json::array();
    for (const auto& step : s.steps) {
        ordered_json j;
        switch (step.kind) {
        case ScenarioStep::Kind::Label:
            j["label"] = step.label;
            break;
        case ScenarioStep::Kind::RamRead:
            j["op"] = "r";
            j["addr"] = format_hex32(step.addr);
            j["width"] = step.width;
            break;
        case ScenarioStep::Kind::MmioWrite:
        case ScenarioStep::Kind::RamWrite:
            j["op"] = "w";
            j["addr"] = format_hex32(step.addr);
            j["width"] = step.width;
            j["value"] = format_hex32(step.value);
            break;
        }
        doc["steps"].push_back(std::move(j));
    }

    const auto& e = s.expect;
    ordered_json ej = ordered_json::object();
    auto put = [](ordered_json& j, const char* key, const auto& opt) {
        if (opt)
            j[key] = *opt;
    };
    auto put_hex = [](ordered_json& j, const char* key, const std::optional<Address>& opt) {
        if (opt)
            j[key] = format_hex32(*opt);
    };
    auto put_name = [](ordered_json& j, const char* key, const auto& opt) {
        if (opt)
            j[key] = std::string(to_string(*opt));
    };
    put(ej, "configs_detected", e.configs_detected);
    put(ej, "input_channels", e.input_channels);
    put(ej, "output_channels", e.output_channels);
    put(ej, "buffers_sized", e.buffers_sized);
    put(ej, "injections", e.injections);
    put(ej, "bytes_injected", e.bytes_injected);
    if (e.channels) {
        ej["channels"] = ordered_json::array();
        for (const auto& c : *e.channels) {
            ordered_json cj = ordered_json::object();
            put_hex(cj, "stream_key", c.stream_key);
            put_name(cj, "direction", c.direction);
            put_name(cj, "state", c.state);
            put_name(cj, "termination", c.termination);
            put(cj, "perceived_size", c.perceived_size);
            put(cj, "buffers", c.buffers);
            put(cj, "pointers", c.pointers);
            put(cj, "injections", c.injections);
            put(cj, "bytes_injected", c.bytes_injected);
            put_name(cj, "source_class", c.source_class);
            ej["channels"].push_back(std::move(cj));
        }
    }
    if (!e.checkpoints.empty()) {
        ej["checkpoints"] = ordered_json::array();
        for (const auto& c : e.checkpoints) {
            ordered_json cj;
            cj["label"] = c.label;
            put(cj, "configs_detected", c.configs_detected);
            put(cj, "live_channels", c.live_channels);
            put(cj, "injections", c.injections);
            put_hex(cj, "stream_key", c.stream_key);
            put(cj, "perceived_size", c.perceived_size);
            ej["checkpoints"].push_back(std::move(cj));
        }
    }
    if (e.known_miss)
        ej["known_miss"] = true;
    doc["expect"] = std::move(ej);
    return doc;
}

std::vector<MemoryAccessEvent> scenario_events(const Scenario& s) {
    std::vector<MemoryAccessEvent> events;
    std::uint64_t seq = 0;
    for (const auto& step : s.steps) {
        if (!step.is_access())
            continue;
        MemoryAccessEvent ev;
        ev.seq = ++seq;
        ev.kind = step.kind == ScenarioStep::Kind::RamRead ? AccessKind::Read : AccessKind::Write;
        ev.addr = step.addr;
        ev.width = step.width;
        ev.value = ev.kind == AccessKind::Write ? step.value : 0;
        events.push_back(ev);
    }
    return events;
}

// ---------------------------------------------------------------------------
// Running

namespace {

class VerdictSink {
public:
    template <typename T>
    void check(std::string name, const T& expected, const T& actual) {
        Verdict v;
        v.check = std::move(name);
        v.expected = expected;
        v.actual = actual;
        v.outcome = expected == actual ? Verdict::Outcome::Pass : Verdict::Outcome::Fail;
        out.push_back(std::move(v));
    }

    template <typename T>
    void check_opt(const std::string& name, const std::optional<T>& expected, const T& actual) {
        if (expected)
            check(name, *expected, actual);
    }

    template <typename E>
    void check_name(const std::string& name, const std::optional<E>& expected, std::string_view actual) {
        if (expected)
            check(name, std::string(to_string(*expected)), std::string(actual));
    }

    std::vector<Verdict> out;
};

void evaluate_checkpoint(const Checkpoint& c, const Engine& engine, VerdictSink& sink) {
    const std::string prefix = "checkpoint[" + c.label + "].";
    sink.check_opt(prefix + "configs_detected", c.configs_detected,
                   std::uint64_t{engine.configurations().size()});
    sink.check_opt(prefix + "live_channels", c.live_channels, std::uint64_t{engine.tracker().live_count()});
    sink.check_opt(prefix + "injections", c.injections, engine.tracker().counters().injections);
    if (c.perceived_size) {
        auto channels = engine.snapshot();
        std::uint64_t actual = 0;
        for (auto it = channels.rbegin(); it != channels.rend(); ++it) {
            if (it->stream_key == *c.stream_key) {
                actual = it->perceived_size();
                break;
            }
        }
        sink.check(prefix + "perceived_size", *c.perceived_size, actual);
    }
}

}  // namespace

ScenarioReport run_scenario(const Scenario& s, Engine& engine) {
    if (engine.profile().name() != s.profile)
        throw ScenarioError("engine profile '" + engine.profile().name() + "' does not match scenario profile '" +
                            s.profile + "'");
    if (engine.event_count() != 0 || engine.finished())
        throw ScenarioError("run_scenario needs a fresh engine");

    VerdictSink sink;
    std::uint64_t seq = 0;
    for (const auto& step : s.steps) {
        if (step.kind == ScenarioStep::Kind::Label) {
            for (const auto& c : s.expect.checkpoints) {
                if (c.label == step.label)
                    evaluate_checkpoint(c, engine, sink);
            }
            continue;
        }
        MemoryAccessEvent ev;
        ev.seq = ++seq;
        ev.kind = step.kind == ScenarioStep::Kind::RamRead ? AccessKind::Read : AccessKind::Write;
        ev.addr = step.addr;
        ev.width = step.width;
        ev.value = ev.kind == AccessKind::Write ? step.value : 0;
        engine.on_event(ev);
    }
    engine.finish();

    const auto channels = engine.snapshot();
    const auto totals = compute_totals(channels);
    const auto& e = s.expect;
    sink.check_opt("configs_detected", e.configs_detected, totals.configs_detected);
    sink.check_opt("input_channels", e.input_channels, totals.input_channels);
    sink.check_opt("output_channels", e.output_channels, totals.output_channels);
    sink.check_opt("buffers_sized", e.buffers_sized, totals.buffers_sized);
    sink.check_opt("injections", e.injections, totals.injections);
    sink.check_opt("bytes_injected", e.bytes_injected, totals.bytes_injected);
    if (e.channels) {
        sink.check("channels.count", std::uint64_t{e.channels->size()}, std::uint64_t{channels.size()});
        const std::size_t n = std::min(e.channels->size(), channels.size());
        for (std::size_t i = 0; i < n; ++i) {
            const auto& want = (*e.channels)[i];
            const auto& got = channels[i];
            const std::string p = "channels[" + std::to_string(i) + "].";
            if (want.stream_key)
                sink.check(p + "stream_key", format_hex32(*want.stream_key), format_hex32(got.stream_key));
            sink.check_name(p + "direction", want.direction, to_string(got.direction));
            sink.check_name(p + "state", want.state, to_string(got.state));
            if (want.termination)
                sink.check(p + "termination", std::string(to_string(*want.termination)),
                           got.termination ? std::string(to_string(*got.termination)) : std::string("none"));
            sink.check_opt(p + "perceived_size", want.perceived_size, got.perceived_size());
            sink.check_opt(p + "buffers", want.buffers, std::uint64_t{got.buffers.size()});
            sink.check_opt(p + "pointers", want.pointers, std::uint64_t{got.pointers.size()});
            sink.check_opt(p + "injections", want.injections, got.injections);
            sink.check_opt(p + "bytes_injected", want.bytes_injected, got.bytes_injected);
            if (want.source_class)
                sink.check(p + "source_class", std::string(to_string(*want.source_class)),
                           got.source ? std::string(to_string(got.source->cls)) : std::string("none"));
        }
    }
    if (e.known_miss) {
        Verdict v;
        v.check = "known_miss";
        v.expected = 0;
        v.actual = totals.configs_detected;
        v.outcome = totals.configs_detected == 0 ? Verdict::Outcome::KnownMiss : Verdict::Outcome::Fail;
        sink.out.push_back(std::move(v));
    }

    ScenarioReport report;
    report.scenario = s.name;
    report.channel_report = channel_report(engine);
    report.verdicts = std::move(sink.out);
    return report;
}

ScenarioReport run_scenario(const Scenario& s, std::unique_ptr<InputProvider> provider) {
    MemoryMapProfile profile = [&] {
        try {
            return resolve_profile(s.profile);
        } catch (const ProfileError& e) {
            throw ScenarioError(std::string("unknown profile: ") + e.what());
        }
    }();
    Engine engine(std::move(profile), std::move(provider));
    return run_scenario(s, engine);
}

const Scenario* find_builtin_scenario(std::string_view name) {
    for (const auto& s : builtin_scenarios()) {
        if (s.name == name)
            return &s;
    }
    return nullptr;
}

Scenario resolve_scenario(std::string_view name_or_path) {
    if (const auto* s = find_builtin_scenario(name_or_path))
        return *s;
    std::ifstream in{std::string(name_or_path)};
    if (!in)
        throw ScenarioError("unknown scenario '" + std::string(name_or_path) + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return load_scenario(buf.str());
}

ordered_json verdicts_to_json(const std::vector<Verdict>& verdicts) {
    ordered_json arr = ordered_json::array();
    for (const auto& v : verdicts) {
        ordered_json j;
        j["check"] = v.check;
        j["expected"] = v.expected;
        j["actual"] = v.actual;
        switch (v.outcome) {
        case Verdict::Outcome::Pass: j["verdict"] = "pass"; break;
        case Verdict::Outcome::Fail: j["verdict"] = "fail"; break;
        case Verdict::Outcome::KnownMiss: j["verdict"] = "known_miss"; break;
        }
        arr.push_back(std::move(j));
    }
    return arr;
}

ordered_json scenario_report_json(const ScenarioReport& report) {
    ordered_json j = report.channel_report;
    j["scenario"] = report.scenario;
    j["expectations"] = verdicts_to_json(report.verdicts);
    j["passed"] = report.passed();
    return j;
}

}  // namespace dmaprobe
