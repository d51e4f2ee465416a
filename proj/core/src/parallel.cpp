#include "transferda/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace tda {

int worker_count() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("TRANSFER_DA_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) n = std::min(n, cap);
    }
    return n;
}

void parallel_for(long long n, const std::function<void(long long, long long)>& chunk_fn) {
    if (n <= 0) return;
    const int workers = std::min<long long>(worker_count(), n);
    if (workers <= 1) {
        chunk_fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const long long base = n / workers, extra = n % workers;
    long long begin = 0;
    for (int w = 0; w < workers; ++w) {
        const long long len = base + (w < extra ? 1 : 0);
        pool.emplace_back(chunk_fn, begin, begin + len);
        begin += len;
    }
    for (auto& t : pool) t.join();
}

}  // namespace tda
