#pragma once

#include <cstdint>
#include <map>
#include <utility>

#include "dfa2/tensor.hpp"

namespace dfa2 {

// Head-wise attention-output cache across denoising timesteps. One slot per
// (layer, head); entries are only written by computed (non-Cached)
// executions, so a fetch always returns the head's most recent computed
// output.
class HeadCache {
public:
    void store(int64_t layer, int64_t head, Tensor output, int64_t t);
    const Tensor& fetch(int64_t layer, int64_t head) const; // CacheMissError
    bool has(int64_t layer, int64_t head) const;
    int64_t produced_at(int64_t layer, int64_t head) const; // CacheMissError
    int64_t staleness(int64_t layer, int64_t head, int64_t t) const;
    void clear();
    int64_t size() const { return static_cast<int64_t>(entries_.size()); }

private:
    struct Entry {
        Tensor output;
        int64_t produced_at = 0;
    };
    const Entry& entry(int64_t layer, int64_t head) const;
    std::map<std::pair<int64_t, int64_t>, Entry> entries_;
};

} // namespace dfa2
