#ifndef RFVAR_COMMON_HPP
#define RFVAR_COMMON_HPP

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

namespace rfvar {

inline constexpr const char* kVersion = "0.1.0";

/// Invalid user input: bad flags, malformed files, incompatible
/// configuration, violated preconditions. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure while reading or writing files after validation passed.
/// The CLI maps this to exit code 2.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Neumaier-compensated accumulator. Sums stay accurate to a few ulps even
/// over millions of terms, which the variance estimators rely on.
class KahanSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }

    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Shortest decimal representation that parses back to the same bits.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, bool& ok) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto res = std::from_chars(first, last, value);
    ok = res.ec == std::errc() && res.ptr == last && !text.empty();
    return value;
}

/// Runs body(i) for i in [0, count). Worker threads pull indices from a
/// shared counter; outputs must be written to per-index slots so the result
/// is independent of scheduling. The first exception thrown by any worker is
/// rethrown on the calling thread.
inline void parallel_for(std::size_t count, unsigned threads,
                         const std::function<void(std::size_t)>& body) {
    if (count == 0) {
        return;
    }
    std::size_t workers = threads == 0 ? 1 : threads;
    workers = std::min<std::size_t>(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto run = [&] {
        for (;;) {
            if (stop.load(std::memory_order_relaxed)) {
                return;
            }
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) {
                return;
            }
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                stop.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back(run);
    }
    for (auto& th : pool) {
        th.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

}  // namespace rfvar

#endif  // RFVAR_COMMON_HPP
