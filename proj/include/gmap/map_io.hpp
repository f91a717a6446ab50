#ifndef GMAP_MAP_IO_HPP
#define GMAP_MAP_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gmap/gaussian_map.hpp"

namespace gmap {

// Binary map file, little-endian:
//   header (32 bytes): magic "GMM1", version u16, flags u16 (bit 0 =
//   quantized), gaussian count u64, bbox scale k binary32, 12 reserved bytes
//   full-precision record (44 bytes): kind u8, 3 pad, weight f32, mean 3*f32,
//   cov upper triangle 6*f32
//   quantized record (34 bytes): kind 1 bit then weight/mean x/y/z as 19-bit
//   fields, MSB-first, padded to 10 bytes; cov 6*f32
//   trailer: CRC-32 of all preceding bytes (u32)
inline constexpr std::uint16_t kMapFormatVersion = 1;
inline constexpr std::size_t kMapHeaderBytes = 32;
inline constexpr std::size_t kFullRecordBytes = 44;
inline constexpr std::size_t kQuantRecordBytes = 34;

std::vector<std::uint8_t> serialize_map(const GaussianMap& map);
void save_map(const std::string& path, const GaussianMap& map);

// Rebuilds the index by re-insertion in ascending id order. Distinct parse
// errors for bad magic, version mismatch, truncation, checksum failure.
GaussianMap load_map_bytes(const std::vector<std::uint8_t>& bytes, const std::string& origin);
GaussianMap load_map(const std::string& path);

// Exact size of serialize_map's output, computed without serializing.
std::uint64_t serialized_map_bytes(const GaussianMap& map);

}  // namespace gmap

#endif
