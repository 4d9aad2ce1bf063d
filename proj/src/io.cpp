#include "tlconv/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace tlconv {

FormatError::FormatError(const std::string& what, std::uint64_t offset)
    : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

namespace {

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

template <class T>
void put_le(std::vector<unsigned char>& out, T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    const U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

template <class T>
T get_le(const std::vector<unsigned char>& in, std::size_t pos) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(in[pos + i]) << (8 * i);
    return std::bit_cast<T>(bits);
}

class PgmTokens {
public:
    explicit PgmTokens(const std::vector<unsigned char>& b) : b_(b) {}

    std::size_t pos() const { return pos_; }

    long next_int(const char* what) {
        skip_space();
        const std::size_t start = pos_;
        long v = 0;
        while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
            v = v * 10 + (b_[pos_] - '0');
            if (v > 1'000'000'000) throw FormatError(std::string("PGM ") + what + " is too large", start);
            ++pos_;
        }
        if (pos_ == start) throw FormatError(std::string("expected PGM ") + what, start);
        return v;
    }

    /// The single whitespace byte that ends a binary header.
    void end_header() {
        if (pos_ >= b_.size() || !std::isspace(b_[pos_])) throw FormatError("expected whitespace after PGM header", pos_);
        ++pos_;
    }

private:
    void skip_space() {
        while (pos_ < b_.size()) {
            if (b_[pos_] == '#') {
                while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
            } else if (std::isspace(b_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    const std::vector<unsigned char>& b_;
    std::size_t pos_ = 2;
};

}  // namespace

GridImage read_pgm(const std::filesystem::path& path, double h) {
    const auto bytes = slurp(path);
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
        throw FormatError("not a P2 or P5 PGM file", 0);
    const bool binary = bytes[1] == '5';
    PgmTokens tok(bytes);
    const long width = tok.next_int("width");
    const long height = tok.next_int("height");
    const long maxval = tok.next_int("maxval");
    if (width != height) throw FormatError("PGM image must be square", tok.pos());
    if (width < 1) throw FormatError("PGM image is empty", tok.pos());
    if (maxval < 1 || maxval > 65535) throw FormatError("PGM maxval out of range", tok.pos());
    const int n = static_cast<int>(width);
    GridImage im{Plane(n), h};
    if (binary) {
        tok.end_header();
        const std::size_t sample = maxval < 256 ? 1 : 2;
        const std::size_t need = static_cast<std::size_t>(n) * n * sample;
        const std::size_t start = tok.pos();
        if (bytes.size() - start < need)
            throw FormatError("truncated PGM raster: expected " + std::to_string(need) + " bytes, found " +
                                  std::to_string(bytes.size() - start),
                              bytes.size());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const std::size_t at = start + (static_cast<std::size_t>(i) * n + j) * sample;
                const unsigned v = sample == 1 ? bytes[at] : (bytes[at] << 8) | bytes[at + 1];
                im.data(i, j) = static_cast<double>(v) / maxval;
            }
    } else {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const long v = tok.next_int("sample");
                if (v > maxval) throw FormatError("PGM sample exceeds maxval", tok.pos());
                im.data(i, j) = static_cast<double>(v) / maxval;
            }
    }
    return im;
}

void write_pgm(const GridImage& image, const std::filesystem::path& path) {
    const int n = image.n();
    const std::string header = "P5\n" + std::to_string(n) + " " + std::to_string(n) + "\n255\n";
    std::vector<unsigned char> bytes(header.begin(), header.end());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double v = std::clamp(image.data(i, j), 0.0, 1.0);
            bytes.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
        }
    spit(path, bytes);
}

namespace {

void write_raw(const std::vector<const Plane*>& slices, double h, const std::filesystem::path& path) {
    const int n = slices.front()->size();
    const auto t = static_cast<std::uint32_t>(slices.size());
    std::vector<unsigned char> bytes{'T', 'L', 'G', '1'};
    put_le(bytes, static_cast<std::uint32_t>(n));
    put_le(bytes, t);
    put_le(bytes, std::uint32_t{0});
    put_le(bytes, h);
    bytes.reserve(kRawHeaderBytes + static_cast<std::size_t>(n) * n * t * 8);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (const Plane* p : slices) put_le(bytes, (*p)(i, j));
    spit(path, bytes);
}

}  // namespace

void write_raw_grid(const GridImage& image, const std::filesystem::path& path) {
    write_raw({&image.data}, image.h, path);
}

void write_raw_grid(const GroupFeatureMap& features, const std::filesystem::path& path) {
    if (features.t() < 1) throw std::invalid_argument("feature map has no slices");
    std::vector<const Plane*> slices;
    for (const Plane& p : features.slices) slices.push_back(&p);
    write_raw(slices, features.h, path);
}

GroupFeatureMap read_raw_grid(const std::filesystem::path& path) {
    const auto bytes = slurp(path);
    if (bytes.size() < kRawHeaderBytes)
        throw FormatError("truncated raw grid header: expected " + std::to_string(kRawHeaderBytes) +
                              " bytes, found " + std::to_string(bytes.size()),
                          bytes.size());
    if (std::memcmp(bytes.data(), "TLG1", 4) != 0) throw FormatError("bad raw grid magic", 0);
    const auto n = get_le<std::uint32_t>(bytes, 4);
    const auto t = get_le<std::uint32_t>(bytes, 8);
    if (get_le<std::uint32_t>(bytes, 12) != 0) throw FormatError("reserved header field must be zero", 12);
    const double h = get_le<double>(bytes, 16);
    if (n == 0 || n > 65536) throw FormatError("raw grid size out of range", 4);
    if (t == 0 || t > 4096) throw FormatError("raw grid group order out of range", 8);
    if (!(h > 0.0) || !std::isfinite(h)) throw FormatError("raw grid mesh must be positive", 16);
    const std::size_t expected = kRawHeaderBytes + static_cast<std::size_t>(n) * n * t * 8;
    if (bytes.size() != expected)
        throw FormatError("raw grid length mismatch: expected " + std::to_string(expected) + " bytes, found " +
                              std::to_string(bytes.size()),
                          std::min(bytes.size(), expected));
    GroupFeatureMap f(static_cast<int>(n), static_cast<int>(t), h);
    std::size_t pos = kRawHeaderBytes;
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < n; ++j)
            for (std::uint32_t k = 0; k < t; ++k, pos += 8) f.slices[k](i, j) = get_le<double>(bytes, pos);
    return f;
}

GridImage read_raw_image(const std::filesystem::path& path) {
    GroupFeatureMap f = read_raw_grid(path);
    if (f.t() != 1) throw FormatError("raw grid holds a feature map, not an image", 8);
    return {std::move(f.slices.front()), f.h};
}

}  // namespace tlconv
