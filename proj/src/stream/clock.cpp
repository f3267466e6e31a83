#include "cardiocep/stream.hpp"

#include <chrono>
#include <thread>

namespace cardiocep {

namespace {

std::int64_t steady_us()
{
    using namespace std::chrono;
    return duration_cast<microseconds>(steady_clock::now().time_since_epoch()).count();
}

std::int64_t floor_div(std::int64_t a, std::int64_t b)
{
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        --q;
    }
    return q;
}

} // namespace

RealClock::RealClock()
    : base_us_(std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::system_clock::now().time_since_epoch()).count()),
      steady_base_us_(steady_us())
{
}

std::int64_t RealClock::now_us() const
{
    return base_us_ + (steady_us() - steady_base_us_);
}

void RealClock::sleep_until(std::int64_t us)
{
    const std::int64_t wait = us - now_us();
    if (wait > 0) {
        std::this_thread::sleep_for(std::chrono::microseconds(wait));
    }
}

void SimulatedClock::advance(std::int64_t us)
{
    if (us > 0) {
        now_.fetch_add(us, std::memory_order_acq_rel);
    }
}

void SimulatedClock::advance_to(std::int64_t us)
{
    std::int64_t cur = now_.load(std::memory_order_acquire);
    while (cur < us && !now_.compare_exchange_weak(cur, us, std::memory_order_acq_rel)) {
    }
}

std::int64_t assign_window(std::int64_t timestamp_ms, const WindowSpec& spec)
{
    if (spec.length_ms <= 0) {
        throw Error("window length must be positive");
    }
    return floor_div(timestamp_ms - spec.epoch_ms, spec.length_ms);
}

std::int64_t window_start_ms(std::int64_t window_id, const WindowSpec& spec) noexcept
{
    return spec.epoch_ms + window_id * spec.length_ms;
}

} // namespace cardiocep
