#pragma once

#include "aescope/control/control.hpp"

#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <thread>
#include <type_traits>

namespace aescope::control {

/// Serializes all work on one ControlApi through a FIFO worker thread.
/// Jobs submitted with submit() run one at a time in submission order and hold
/// the exclusive side of a reader/writer lock; read() runs on the caller's thread
/// under the shared side, so reads proceed concurrently with each other but never
/// while a job is running.
class InstrumentActor {
public:
    explicit InstrumentActor(std::shared_ptr<ControlApi> api);
    ~InstrumentActor();
    InstrumentActor(const InstrumentActor&) = delete;
    InstrumentActor& operator=(const InstrumentActor&) = delete;

    template <typename F>
    auto submit(F&& f) -> std::future<std::invoke_result_t<F, ControlApi&>> {
        using R = std::invoke_result_t<F, ControlApi&>;
        auto task = std::make_shared<std::packaged_task<R()>>(
            [this, fn = std::forward<F>(f)]() mutable { return fn(*api_); });
        auto fut = task->get_future();
        {
            std::lock_guard lock(qmu_);
            queue_.emplace_back([task] { (*task)(); });
        }
        cv_.notify_one();
        return fut;
    }

    template <typename F>
    auto read(F&& f) const -> std::invoke_result_t<F, const ControlApi&> {
        std::shared_lock lock(rw_);
        return std::forward<F>(f)(static_cast<const ControlApi&>(*api_));
    }

    /// Lock-free: flags the running acquisition to stop after the current pixel.
    void cancel() { api_->request_cancel(); }

    std::size_t pending() const;

private:
    void run();

    std::shared_ptr<ControlApi> api_;
    mutable std::shared_mutex rw_;
    mutable std::mutex qmu_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> queue_;
    bool stop_ = false;
    std::thread worker_;
};

}  // namespace aescope::control
