#include "fno/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace fno {

namespace {
std::atomic<int> g_worker_override{0};
}

void set_worker_override(int workers) { g_worker_override.store(workers); }

int worker_count() {
    const int override_value = g_worker_override.load();
    if (override_value >= 1) return override_value;
    static const int count = [] {
        if (const char* env = std::getenv("FNO_THREADS")) {
            const long v = std::strtol(env, nullptr, 10);
            if (v >= 1) return static_cast<int>(v);
        }
        const unsigned hc = std::thread::hardware_concurrency();
        return hc > 0 ? static_cast<int>(hc) : 1;
    }();
    return count;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    const int workers = worker_count();
    if (n == 0) return;
    if (workers <= 1 || n < 2) {
        fn(0, n);
        return;
    }
    const std::size_t parts = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    const std::size_t chunk = (n + parts - 1) / parts;
    std::vector<std::thread> threads;
    threads.reserve(parts - 1);
    for (std::size_t p = 1; p < parts; ++p) {
        const std::size_t begin = p * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        threads.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    fn(0, std::min(n, chunk));
    for (auto& t : threads) t.join();
}

}  // namespace fno
