#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gbsvie {

/// Worker count: GBSVIE_THREADS when set, else hardware concurrency.
inline int worker_count() {
    if (const char* env = std::getenv("GBSVIE_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

/// Chunked parallel loop over [0, n). Bodies must write disjoint state;
/// results are bitwise independent of the worker count.
template <class Fn>
void parallel_for(int n, Fn&& fn) {
    int workers = worker_count();
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    if (workers > n) workers = n;
    std::exception_ptr error;
    std::mutex error_mu;
    auto run = [&](int w) {
        try {
            for (int i = w; i < n; i += workers) fn(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mu);
            if (!error) error = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(run, w);
    run(0);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace gbsvie
