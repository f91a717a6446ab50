#ifndef GMAP_CACHE_SIM_HPP
#define GMAP_CACHE_SIM_HPP

#include <cstdint>
#include <list>
#include <unordered_map>

#include "gmap/rtree.hpp"

namespace gmap {

// Fully-associative LRU cache over a synthetic address space. An access
// touches every line in [address, address + bytes); each line touch is one
// hit or one miss, and a miss fetches the whole line from backing.
class CacheSim {
public:
    explicit CacheSim(std::uint64_t capacity_bytes = 45056, std::uint32_t line_bytes = 64);

    void access(std::uint64_t address, std::uint32_t bytes);
    void access(const NodeAccess& a) { access(a.address, a.bytes); }

    std::uint64_t hits() const { return hits_; }
    std::uint64_t misses() const { return misses_; }
    std::uint64_t accesses() const { return hits_ + misses_; }
    std::uint64_t bytes_from_backing() const { return misses_ * line_bytes_; }
    std::uint64_t capacity_bytes() const { return capacity_bytes_; }
    std::uint32_t line_bytes() const { return line_bytes_; }
    std::uint64_t resident_bytes() const { return lru_.size() * line_bytes_; }

    double hit_rate() const {
        return accesses() == 0 ? 0.0 : static_cast<double>(hits_) / static_cast<double>(accesses());
    }

    void reset();

private:
    std::uint64_t capacity_bytes_;
    std::uint32_t line_bytes_;
    std::uint64_t max_lines_;
    std::uint64_t hits_ = 0;
    std::uint64_t misses_ = 0;
    std::list<std::uint64_t> lru_;  // front = most recent
    std::unordered_map<std::uint64_t, std::list<std::uint64_t>::iterator> where_;
};

}  // namespace gmap

#endif
