#pragma once

#include "tlconv/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace tlconv {

/// Malformed or truncated input. `offset` is the byte position where reading failed.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::uint64_t offset);
    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_;
};

/// P2 (ASCII) or P5 (binary, 8 or 16 bit) grayscale. Values are mapped to [0, 1]
/// by dividing by maxval. The image must be square.
GridImage read_pgm(const std::filesystem::path& path, double h = 1.0);
/// Binary P5 with maxval 255; values are clamped to [0, 1] before quantizing.
void write_pgm(const GridImage& image, const std::filesystem::path& path);

/// Raw grid: 24-byte little-endian header "TLG1", u32 n, u32 t (1 for an image),
/// u32 reserved (0), f64 h, then n * n * t little-endian f64 values in [i][j][k] order.
inline constexpr std::size_t kRawHeaderBytes = 24;

void write_raw_grid(const GridImage& image, const std::filesystem::path& path);
void write_raw_grid(const GroupFeatureMap& features, const std::filesystem::path& path);
/// Reads either kind; an image comes back as a feature map with t = 1.
GroupFeatureMap read_raw_grid(const std::filesystem::path& path);
GridImage read_raw_image(const std::filesystem::path& path);

}  // namespace tlconv
