#include "dmaprobe/report.hpp"

#include "dmaprobe/hex.hpp"

namespace dmaprobe {

using nlohmann::ordered_json;

namespace {

ordered_json pointer_json(const PointerSlot& p) {
    ordered_json j;
    j["register"] = format_hex32(p.reg);
    j["value"] = format_hex32(p.value);
    j["class"] = std::string(to_string(p.cls));
    return j;
}

}  // namespace

ReportTotals compute_totals(const std::vector<DmaChannel>& channels) {
    ReportTotals t;
    for (const auto& ch : channels) {
        ++t.configs_detected;
        if (ch.direction == Direction::Input)
            ++t.input_channels;
        if (ch.direction == Direction::Output)
            ++t.output_channels;
        for (const auto& b : ch.buffers)
            t.buffers_sized += b.perceived_size > 0 ? 1 : 0;
        t.injections += ch.injections;
        t.bytes_injected += ch.bytes_injected;
    }
    return t;
}

ordered_json channel_to_json(const DmaChannel& ch) {
    ordered_json j;
    j["id"] = ch.id;
    j["stream_key"] = format_hex32(ch.stream_key);
    j["pointers"] = ordered_json::array();
    for (const auto& p : ch.pointers)
        j["pointers"].push_back(pointer_json(p));
    j["source"] = ch.source ? pointer_json(*ch.source) : ordered_json(nullptr);
    j["direction"] = std::string(to_string(ch.direction));
    j["state"] = std::string(to_string(ch.state));
    j["termination"] = ch.termination ? ordered_json(std::string(to_string(*ch.termination)))
                                      : ordered_json(nullptr);
    j["created_at"] = ch.created_at;
    j["terminated_at"] = ch.terminated_at ? ordered_json(*ch.terminated_at) : ordered_json(nullptr);
    j["dest_count"] = ch.buffers.size();
    j["buffers"] = ordered_json::array();
    for (const auto& b : ch.buffers) {
        ordered_json bj;
        bj["base"] = format_hex32(b.base);
        bj["perceived_size"] = b.perceived_size;
        j["buffers"].push_back(std::move(bj));
    }
    j["perceived_size"] = ch.perceived_size();
    j["injections"] = ch.injections;
    j["bytes_injected"] = ch.bytes_injected;
    return j;
}

ordered_json channel_report(const Engine& engine) {
    auto channels = engine.snapshot();
    ordered_json j;
    j["profile"] = engine.profile().name();
    j["events"] = engine.event_count();
    j["channels"] = ordered_json::array();
    for (const auto& ch : channels)
        j["channels"].push_back(channel_to_json(ch));
    auto t = compute_totals(channels);
    ordered_json tj;
    tj["configs_detected"] = t.configs_detected;
    tj["input_channels"] = t.input_channels;
    tj["output_channels"] = t.output_channels;
    tj["buffers_sized"] = t.buffers_sized;
    tj["injections"] = t.injections;
    tj["bytes_injected"] = t.bytes_injected;
    j["totals"] = std::move(tj);
    return j;
}

std::string dump_report(const ordered_json& report) { return report.dump(2) + "\n"; }

}  // namespace dmaprobe
