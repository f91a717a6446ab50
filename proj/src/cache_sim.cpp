#include "gmap/cache_sim.hpp"

#include "gmap/common.hpp"

namespace gmap {

CacheSim::CacheSim(std::uint64_t capacity_bytes, std::uint32_t line_bytes)
    : capacity_bytes_(capacity_bytes), line_bytes_(line_bytes) {
    if (line_bytes_ == 0 || capacity_bytes_ < line_bytes_) {
        throw ConfigError("cache capacity must hold at least one line");
    }
    max_lines_ = capacity_bytes_ / line_bytes_;
}

void CacheSim::access(std::uint64_t address, std::uint32_t bytes) {
    if (bytes == 0) throw ConfigError("cache access of zero bytes");
    std::uint64_t first = address / line_bytes_;
    std::uint64_t last = (address + bytes - 1) / line_bytes_;
    for (std::uint64_t line = first; line <= last; ++line) {
        auto it = where_.find(line);
        if (it != where_.end()) {
            ++hits_;
            lru_.splice(lru_.begin(), lru_, it->second);
        } else {
            ++misses_;
            if (lru_.size() == max_lines_) {
                where_.erase(lru_.back());
                lru_.pop_back();
            }
            lru_.push_front(line);
            where_[line] = lru_.begin();
        }
    }
}

void CacheSim::reset() {
    hits_ = 0;
    misses_ = 0;
    lru_.clear();
    where_.clear();
}

}  // namespace gmap
