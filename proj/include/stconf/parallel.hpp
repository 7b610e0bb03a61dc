#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace stconf {

/// Worker budget threaded through the heavy kernels. Results never depend on it.
struct Exec {
    unsigned workers = 1;
};

/// Runs fn(i) for i in [begin, end) over contiguous static chunks.
/// The first exception thrown by any worker is rethrown on the caller.
template <typename Fn>
void parallel_for(int begin, int end, Exec exec, Fn&& fn)
{
    const int n = end - begin;
    if (n <= 0)
        return;
    const unsigned workers = std::max(1u, std::min<unsigned>(exec.workers, static_cast<unsigned>(n)));
    if (workers == 1) {
        for (int i = begin; i < end; ++i)
            fn(i);
        return;
    }

    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        const int lo = begin + static_cast<int>(static_cast<long long>(n) * w / workers);
        const int hi = begin + static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
        pool.emplace_back([&, lo, hi] {
            try {
                for (int i = lo; i < hi; ++i)
                    fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace stconf
