#pragma once

#include <cstdint>
#include <functional>

namespace dfa2 {

// Thread cap from DFA2_THREADS (re-read on every call so tests can toggle
// it); unset or invalid means 1.
int max_threads();

// Runs fn(i) for every i in [0, n). With max_threads() == 1 this is a plain
// loop; otherwise the index range is split into contiguous chunks, one
// thread each. Callers guarantee disjoint writes per index, so the result
// never depends on the split.
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

} // namespace dfa2
