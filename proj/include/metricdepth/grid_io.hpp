#pragma once

#include <filesystem>

#include "metricdepth/grid.hpp"
#include "metricdepth/identify.hpp"

namespace metricdepth {

// PFM files are little-endian float32 ("Pf" grayscale, "PF" RGB) with the
// scale line set to -1.0 and rows stored bottom-to-top, as the format
// requires. Values are narrowed to float on write.
//
// A Grid3 with C == 1 or C == 3 maps onto Pf/PF directly. Any other channel
// count is written as a Pf image of height C * H with the channel planes
// stacked top to bottom; read it back with the channel count supplied.

void write_pfm(const std::filesystem::path& path, const Grid3& grid);
Grid3 read_pfm(const std::filesystem::path& path, std::size_t stacked_channels = 0);

/// Depth values go to `path`, validity to `path` + ".mask" as H*W bytes of
/// '0'/'1' in row-major order. Invalid pixels are written as 0.
void write_depth_pfm(const std::filesystem::path& path, const Grid1& depth);
Grid1 read_depth_pfm(const std::filesystem::path& path);

/// Binary 8-bit PGM: Positive = 0, Negative(j) = j, Ignored = 255.
void write_ident_pgm(const std::filesystem::path& path, const IdentMap& map);

}  // namespace metricdepth
