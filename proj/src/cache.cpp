#include "dfa2/cache.hpp"

#include <string>

namespace dfa2 {

void HeadCache::store(int64_t layer, int64_t head, Tensor output, int64_t t) {
    if (output.ndim() != 2)
        throw ShapeError("cache entries are per-head [N, d] tensors");
    Entry& e = entries_[{layer, head}];
    e.output = std::move(output);
    e.produced_at = t;
}

const HeadCache::Entry& HeadCache::entry(int64_t layer, int64_t head) const {
    const auto it = entries_.find({layer, head});
    if (it == entries_.end())
        throw CacheMissError("no cached output for layer " + std::to_string(layer) +
                             ", head " + std::to_string(head));
    return it->second;
}

const Tensor& HeadCache::fetch(int64_t layer, int64_t head) const {
    return entry(layer, head).output;
}

bool HeadCache::has(int64_t layer, int64_t head) const {
    return entries_.count({layer, head}) != 0;
}

int64_t HeadCache::produced_at(int64_t layer, int64_t head) const {
    return entry(layer, head).produced_at;
}

int64_t HeadCache::staleness(int64_t layer, int64_t head, int64_t t) const {
    return t - entry(layer, head).produced_at;
}

void HeadCache::clear() {
    entries_.clear();
}

} // namespace dfa2
