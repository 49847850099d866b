#include <array>
#include <string_view>

#include "dmaprobe/scenario.hpp"

namespace dmaprobe {

namespace detail {
extern const std::array<std::string_view, DMAPROBE_BUILTIN_SCENARIO_COUNT> kBuiltinScenarioJson;
}

const std::vector<Scenario>& builtin_scenarios() {
    static const std::vector<Scenario> scenarios = [] {
        std::vector<Scenario> out;
        for (auto text : detail::kBuiltinScenarioJson)
            out.push_back(load_scenario(text));
        return out;
    }();
    return scenarios;
}

}  // namespace dmaprobe
