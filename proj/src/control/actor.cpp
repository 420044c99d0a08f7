#include "aescope/control/actor.hpp"

namespace aescope::control {

InstrumentActor::InstrumentActor(std::shared_ptr<ControlApi> api) : api_(std::move(api)) {
    worker_ = std::thread([this] { run(); });
}

InstrumentActor::~InstrumentActor() {
    {
        std::lock_guard lock(qmu_);
        stop_ = true;
    }
    cv_.notify_all();
    worker_.join();
}

std::size_t InstrumentActor::pending() const {
    std::lock_guard lock(qmu_);
    return queue_.size();
}

void InstrumentActor::run() {
    while (true) {
        std::function<void()> job;
        {
            std::unique_lock lock(qmu_);
            cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
            // Drain everything already queued before honouring stop.
            if (queue_.empty()) return;
            job = std::move(queue_.front());
            queue_.pop_front();
        }
        std::unique_lock exclusive(rw_);
        job();
    }
}

}  // namespace aescope::control
