#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dmaprobe/channel_tracker.hpp"
#include "dmaprobe/engine.hpp"

namespace dmaprobe {

/// Session totals; each is a sum over the per-channel records.
struct ReportTotals {
    std::uint64_t configs_detected = 0;
    std::uint64_t input_channels = 0;
    std::uint64_t output_channels = 0;
    std::uint64_t buffers_sized = 0;  // input buffers with perceived_size > 0
    std::uint64_t injections = 0;
    std::uint64_t bytes_injected = 0;

    friend bool operator==(const ReportTotals&, const ReportTotals&) = default;
};

ReportTotals compute_totals(const std::vector<DmaChannel>& channels);

nlohmann::ordered_json channel_to_json(const DmaChannel& channel);

/// {"profile", "events", "channels": [...], "totals": {...}} with a fixed key
/// order so equal sessions serialize to equal bytes.
nlohmann::ordered_json channel_report(const Engine& engine);

std::string dump_report(const nlohmann::ordered_json& report);

}  // namespace dmaprobe
