#include "dfa2/util.hpp"

#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dfa2 {

int max_threads() {
    const char* env = std::getenv("DFA2_THREADS");
    if (env == nullptr)
        return 1;
    const int v = std::atoi(env);
    return v >= 1 ? v : 1;
}

void parallel_for(int64_t n, const std::function<void(int64_t)>& fn) {
    const int threads = max_threads();
    if (threads <= 1 || n <= 1) {
        for (int64_t i = 0; i < n; ++i)
            fn(i);
        return;
    }

    const int workers = static_cast<int>(std::min<int64_t>(threads, n));
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        const int64_t begin = n * w / workers;
        const int64_t end = n * (w + 1) / workers;
        pool.emplace_back([&, begin, end] {
            try {
                for (int64_t i = begin; i < end; ++i)
                    fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error)
                    first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

} // namespace dfa2
