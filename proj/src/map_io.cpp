#include "gmap/map_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "gmap/common.hpp"
#include "gmap/quantize.hpp"

namespace gmap {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, double v) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

double get_f32(const std::uint8_t* p) {
    return static_cast<double>(std::bit_cast<float>(get_u32(p)));
}

// MSB-first bit packing for the quantized record.
struct BitWriter {
    std::vector<std::uint8_t>& out;
    std::uint32_t acc = 0;
    int nbits = 0;

    void put(std::uint32_t value, int bits) {
        for (int i = bits - 1; i >= 0; --i) {
            acc = (acc << 1) | ((value >> i) & 1u);
            if (++nbits == 8) {
                out.push_back(static_cast<std::uint8_t>(acc & 0xff));
                acc = 0;
                nbits = 0;
            }
        }
    }

    void pad_to_byte() {
        if (nbits > 0) {
            acc <<= (8 - nbits);
            out.push_back(static_cast<std::uint8_t>(acc & 0xff));
            acc = 0;
            nbits = 0;
        }
    }
};

struct BitReader {
    const std::uint8_t* p;
    int bit = 0;  // next bit within *p, MSB first

    std::uint32_t get(int bits) {
        std::uint32_t v = 0;
        for (int i = 0; i < bits; ++i) {
            v = (v << 1) | ((*p >> (7 - bit)) & 1u);
            if (++bit == 8) {
                bit = 0;
                ++p;
            }
        }
        return v;
    }
};

void put_cov(std::vector<std::uint8_t>& out, const SymMat3& cov) {
    put_f32(out, cov.xx);
    put_f32(out, cov.xy);
    put_f32(out, cov.xz);
    put_f32(out, cov.yy);
    put_f32(out, cov.yz);
    put_f32(out, cov.zz);
}

SymMat3 get_cov(const std::uint8_t* p) {
    return SymMat3(get_f32(p), get_f32(p + 4), get_f32(p + 8), get_f32(p + 12), get_f32(p + 16),
                   get_f32(p + 20));
}

}  // namespace

std::uint64_t serialized_map_bytes(const GaussianMap& map) {
    std::uint64_t record = map.params().quant.enabled ? kQuantRecordBytes : kFullRecordBytes;
    return kMapHeaderBytes + record * map.size() + 4;
}

std::vector<std::uint8_t> serialize_map(const GaussianMap& map) {
    std::vector<std::uint8_t> out;
    out.reserve(serialized_map_bytes(map));

    bool quantized = map.params().quant.enabled;
    out.push_back('G');
    out.push_back('M');
    out.push_back('M');
    out.push_back('1');
    put_u16(out, kMapFormatVersion);
    put_u16(out, quantized ? 1 : 0);
    put_u64(out, map.size());
    put_f32(out, map.params().bbox_k);
    for (int i = 0; i < 12; ++i) out.push_back(0);

    for (const auto& g : map.store()) {
        if (quantized) {
            BitWriter bw{out};
            bw.put(static_cast<std::uint32_t>(g.kind), 1);
            bw.put(encode19(g.weight), 19);
            bw.put(encode19(g.mean.x()), 19);
            bw.put(encode19(g.mean.y()), 19);
            bw.put(encode19(g.mean.z()), 19);
            bw.pad_to_byte();  // 77 bits -> 10 bytes
            put_cov(out, g.cov);
        } else {
            out.push_back(static_cast<std::uint8_t>(g.kind));
            out.push_back(0);
            out.push_back(0);
            out.push_back(0);
            put_f32(out, g.weight);
            put_f32(out, g.mean.x());
            put_f32(out, g.mean.y());
            put_f32(out, g.mean.z());
            put_cov(out, g.cov);
        }
    }

    put_u32(out, crc32(out.data(), out.size()));
    return out;
}

void save_map(const std::string& path, const GaussianMap& map) {
    std::vector<std::uint8_t> bytes = serialize_map(map);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("map: cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ParseError("map: write failed for " + path);
}

GaussianMap load_map_bytes(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
    if (bytes.size() < kMapHeaderBytes + 4) {
        throw ParseError("map: truncated header in " + origin + " (" +
                         std::to_string(bytes.size()) + " bytes)");
    }
    if (std::memcmp(bytes.data(), "GMM1", 4) != 0) {
        throw ParseError("map: bad magic in " + origin);
    }
    std::uint16_t version = get_u16(bytes.data() + 4);
    if (version != kMapFormatVersion) {
        throw ParseError("map: unsupported format version " + std::to_string(version) + " in " +
                         origin);
    }
    std::uint16_t flags = get_u16(bytes.data() + 6);
    bool quantized = (flags & 1u) != 0;
    std::uint64_t count = get_u64(bytes.data() + 8);
    double bbox_k = get_f32(bytes.data() + 16);

    std::uint64_t record = quantized ? kQuantRecordBytes : kFullRecordBytes;
    std::uint64_t expect = kMapHeaderBytes + record * count + 4;
    if (bytes.size() != expect) {
        throw ParseError("map: truncated or oversized payload in " + origin + " (" +
                         std::to_string(bytes.size()) + " bytes, expected " +
                         std::to_string(expect) + ")");
    }

    std::uint32_t stored_crc = get_u32(bytes.data() + bytes.size() - 4);
    std::uint32_t actual_crc = crc32(bytes.data(), bytes.size() - 4);
    if (stored_crc != actual_crc) {
        throw ParseError("map: checksum failure in " + origin);
    }

    MapParams params;
    params.bbox_k = bbox_k;
    params.quant.enabled = quantized;
    GaussianMap map(params);

    const std::uint8_t* p = bytes.data() + kMapHeaderBytes;
    for (std::uint64_t i = 0; i < count; ++i, p += record) {
        Gaussian3 g;
        if (quantized) {
            BitReader br{p};
            std::uint32_t kind = br.get(1);
            g.kind = kind ? GaussianKind::free : GaussianKind::occupied;
            g.weight = decode19(br.get(19));
            // Sequenced reads: argument evaluation order is unspecified.
            double mx = decode19(br.get(19));
            double my = decode19(br.get(19));
            double mz = decode19(br.get(19));
            g.mean = Vec3(mx, my, mz);
            g.cov = get_cov(p + 10);
        } else {
            std::uint8_t kind = p[0];
            if (kind > 1) {
                throw ParseError("map: bad record kind at record " + std::to_string(i) + " in " +
                                 origin);
            }
            g.kind = kind ? GaussianKind::free : GaussianKind::occupied;
            g.weight = get_f32(p + 4);
            g.mean = Vec3(get_f32(p + 8), get_f32(p + 12), get_f32(p + 16));
            g.cov = get_cov(p + 20);
        }
        map.add(g);
    }
    return map;
}

GaussianMap load_map(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("map: cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return load_map_bytes(bytes, path);
}

}  // namespace gmap
