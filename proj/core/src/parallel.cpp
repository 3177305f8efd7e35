// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include "gscodec/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace gscodec {

namespace {

std::atomic<unsigned> g_override{0};

unsigned env_threads() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("GSCODEC_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap >= 1) hw = std::min(hw, static_cast<unsigned>(cap));
        } catch (...) {
        }
    }
    return hw;
}

}  // namespace

unsigned thread_count() {
    const unsigned forced = g_override.load();
    return forced != 0 ? forced : env_threads();
}

void set_thread_count(unsigned threads) { g_override.store(threads); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    const std::size_t workers = std::min<std::size_t>(thread_count(), (n + 255) / 256);
    if (workers <= 1) {
        body(0, n);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> threads;
    threads.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin < end) threads.emplace_back([&body, begin, end] { body(begin, end); });
    }
    body(0, std::min(n, chunk));
    for (auto& t : threads) t.join();
}

}  // namespace gscodec
