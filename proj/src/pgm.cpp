#include "gmap/pgm.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "gmap/common.hpp"

namespace gmap {

namespace {

class ByteReader {
public:
    explicit ByteReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw ParseError("pgm: cannot open " + path);
    }

    int get() {
        int c = in_.get();
        if (c != EOF) ++offset_;
        return c;
    }

    long offset() const { return offset_; }

    // Skips whitespace and '#' comments, then reads one unsigned decimal.
    long read_int(const char* what) {
        int c = get();
        while (c != EOF && (std::isspace(c) || c == '#')) {
            if (c == '#') {
                while (c != EOF && c != '\n') c = get();
            }
            c = get();
        }
        if (c == EOF || !std::isdigit(c)) {
            throw ParseError("pgm: expected " + std::string(what) + " at byte offset " +
                             std::to_string(offset_ - 1) + " in " + path_);
        }
        long v = 0;
        while (c != EOF && std::isdigit(c)) {
            v = v * 10 + (c - '0');
            c = get();
        }
        // The digit loop consumed the single whitespace terminator.
        return v;
    }

    void read_payload(std::vector<unsigned char>& buf) {
        in_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        long got = static_cast<long>(in_.gcount());
        if (got != static_cast<long>(buf.size())) {
            throw ParseError("pgm: truncated payload at byte offset " +
                             std::to_string(offset_ + got) + " in " + path_ + " (expected " +
                             std::to_string(buf.size()) + " payload bytes)");
        }
        offset_ += got;
    }

private:
    std::string path_;
    std::ifstream in_;
    long offset_ = 0;
};

}  // namespace

DepthFrame load_depth_pgm(const std::string& path, const CameraIntrinsics& intr) {
    ByteReader r(path);
    int m0 = r.get();
    int m1 = r.get();
    if (m0 != 'P' || m1 != '5') {
        throw ParseError("pgm: bad magic at byte offset 0 in " + path + " (expected \"P5\")");
    }
    long w = r.read_int("width");
    long h = r.read_int("height");
    long maxval = r.read_int("maxval");
    if (maxval != 65535) {
        throw ParseError("pgm: unsupported maxval " + std::to_string(maxval) + " in " + path +
                         " (expected 65535)");
    }
    if (w != intr.width || h != intr.height) {
        throw ParseError("pgm: dimension mismatch in " + path + ": file is " + std::to_string(w) +
                         "x" + std::to_string(h) + ", intrinsics expect " +
                         std::to_string(intr.width) + "x" + std::to_string(intr.height));
    }

    std::vector<unsigned char> raw(static_cast<size_t>(w) * h * 2);
    r.read_payload(raw);

    DepthFrame frame;
    frame.width = static_cast<int>(w);
    frame.height = static_cast<int>(h);
    frame.depths.resize(static_cast<size_t>(w) * h);
    for (size_t i = 0; i < frame.depths.size(); ++i) {
        unsigned raw16 = (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
        frame.depths[i] = static_cast<double>(raw16) / intr.depth_scale;
    }
    return frame;
}

void save_depth_pgm(const std::string& path, const DepthFrame& frame,
                    const CameraIntrinsics& intr) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("pgm: cannot write " + path);
    out << "P5\n" << frame.width << " " << frame.height << "\n65535\n";
    std::vector<unsigned char> raw(frame.depths.size() * 2);
    for (size_t i = 0; i < frame.depths.size(); ++i) {
        double v = std::round(frame.depths[i] * intr.depth_scale);
        if (v < 0) v = 0;
        if (v > 65535) v = 65535;
        auto raw16 = static_cast<unsigned>(v);
        raw[2 * i] = static_cast<unsigned char>(raw16 >> 8);
        raw[2 * i + 1] = static_cast<unsigned char>(raw16 & 0xffu);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw ParseError("pgm: write failed for " + path);
}

}  // namespace gmap
