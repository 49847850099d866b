#include "dmaprobe/engine.hpp"

#include <string>

namespace dmaprobe {

Engine::Engine(MemoryMapProfile profile, std::unique_ptr<InputProvider> provider)
    : profile_(std::make_unique<MemoryMapProfile>(std::move(profile))),
      provider_(provider ? std::move(provider) : zero_provider()),
      detector_(*profile_),
      tracker_(*profile_, *provider_) {}

StepResult Engine::on_event(const MemoryAccessEvent& event) {
    if (finished_)
        throw ContractError("event after session end");
    if (any_event_ && event.seq <= last_seq_)
        throw ContractError("seq " + std::to_string(event.seq) + " does not increase past " +
                            std::to_string(last_seq_));
    if (!valid_width(event.width))
        throw ContractError("width must be 1, 2 or 4");
    if (event.kind == AccessKind::Write && !value_fits(event.value, event.width))
        throw ContractError("value wider than access width");
    any_event_ = true;
    last_seq_ = event.seq;
    ++events_;

    StepResult result;
    switch (profile_->classify(event.addr)) {
    case AddressClass::Mmio:
        if (event.kind == AccessKind::Write) {
            result.config = detector_.observe_mmio_write(event);
            if (result.config) {
                configs_.push_back(*result.config);
                tracker_.on_stream_config(*result.config);
            }
        }
        break;
    case AddressClass::Ram:
        result.injection = tracker_.on_ram_access(event);
        break;
    case AddressClass::Flash:
    case AddressClass::Other:
        break;
    }
    return result;
}

void Engine::finish() {
    if (finished_)
        return;
    finished_ = true;
    tracker_.end_session(last_seq_);
}

}  // namespace dmaprobe
