#include "metricdepth/grid_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "metricdepth/error.hpp"

namespace metricdepth {

namespace {

static_assert(sizeof(float) == 4);

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

void put_f32_le(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  const unsigned char bytes[4] = {
      static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
      static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

float f32_from(const unsigned char* b, bool little_endian) {
  std::uint32_t bits = 0;
  if (little_endian) {
    bits = std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
           std::uint32_t(b[3]) << 24;
  } else {
    bits = std::uint32_t(b[3]) | std::uint32_t(b[2]) << 8 | std::uint32_t(b[1]) << 16 |
           std::uint32_t(b[0]) << 24;
  }
  return std::bit_cast<float>(bits);
}

// Writes planes of (rows x width x bands) floats, bottom row first.
void write_pfm_raw(const std::filesystem::path& path, bool color, std::size_t width,
                   std::size_t rows, const std::vector<double>& row_major) {
  auto out = open_out(path);
  out << (color ? "PF" : "Pf") << '\n' << width << ' ' << rows << '\n' << "-1.0\n";
  const std::size_t bands = color ? 3 : 1;
  for (std::size_t r = rows; r-- > 0;) {
    for (std::size_t k = 0; k < width * bands; ++k) put_f32_le(out, row_major[r * width * bands + k]);
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

struct PfmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t bands = 0;
  std::vector<double> data;  // top row first
};

PfmImage read_pfm_raw(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string magic;
  PfmImage img;
  double scale = 0.0;
  in >> magic >> img.width >> img.height >> scale;
  if (!in || (magic != "Pf" && magic != "PF") || img.width == 0 || img.height == 0 || scale == 0.0) {
    throw Error(ErrorCode::ParseError, "malformed PFM header in " + path.string());
  }
  in.get();  // single whitespace byte before the raster
  img.bands = magic == "PF" ? 3 : 1;
  const bool little = scale < 0.0;
  const std::size_t row_len = img.width * img.bands;
  std::vector<unsigned char> raw(row_len * img.height * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw Error(ErrorCode::ParseError, "truncated PFM raster in " + path.string());
  }
  img.data.resize(row_len * img.height);
  for (std::size_t r = 0; r < img.height; ++r) {
    const std::size_t file_row = img.height - 1 - r;
    for (std::size_t k = 0; k < row_len; ++k) {
      img.data[r * row_len + k] = f32_from(&raw[(file_row * row_len + k) * 4], little);
    }
  }
  return img;
}

std::filesystem::path mask_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".mask");
}

}  // namespace

void write_pfm(const std::filesystem::path& path, const Grid3& grid) {
  const std::size_t h = grid.height();
  const std::size_t w = grid.width();
  const std::size_t c = grid.channels();
  const auto data = grid.data();
  if (c == 1 || c == 3) {
    write_pfm_raw(path, c == 3, w, h, std::vector<double>(data.begin(), data.end()));
    return;
  }
  std::vector<double> planes(h * w * c);
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t p = 0; p < h * w; ++p) planes[k * h * w + p] = data[p * c + k];
  write_pfm_raw(path, false, w, h * c, planes);
}

Grid3 read_pfm(const std::filesystem::path& path, std::size_t stacked_channels) {
  PfmImage img = read_pfm_raw(path);
  if (img.bands == 3 || stacked_channels <= 1) {
    return Grid3(img.height, img.width, img.bands, std::move(img.data));
  }
  if (img.height % stacked_channels != 0) {
    throw Error(ErrorCode::ShapeError, "PFM height is not a multiple of the channel count");
  }
  const std::size_t c = stacked_channels;
  const std::size_t h = img.height / c;
  const std::size_t w = img.width;
  std::vector<double> data(h * w * c);
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t p = 0; p < h * w; ++p) data[p * c + k] = img.data[k * h * w + p];
  return Grid3(h, w, c, std::move(data));
}

void write_depth_pfm(const std::filesystem::path& path, const Grid1& depth) {
  std::vector<double> values(depth.pixels());
  std::string mask(depth.pixels(), '0');
  for (std::size_t p = 0; p < depth.pixels(); ++p) {
    if (depth.valid(p)) {
      values[p] = depth.value(p);
      mask[p] = '1';
    }
  }
  write_pfm_raw(path, false, depth.width(), depth.height(), values);
  auto out = open_out(mask_path(path));
  out.write(mask.data(), static_cast<std::streamsize>(mask.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + mask_path(path).string());
}

Grid1 read_depth_pfm(const std::filesystem::path& path) {
  PfmImage img = read_pfm_raw(path);
  if (img.bands != 1) throw Error(ErrorCode::ShapeError, "depth PFM must be single-channel");
  const std::size_t n = img.width * img.height;
  std::vector<std::uint8_t> valid(n, 1);
  if (std::filesystem::exists(mask_path(path))) {
    auto in = open_in(mask_path(path));
    std::string mask((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (mask.size() != n) throw Error(ErrorCode::ShapeError, "mask length does not match depth map");
    for (std::size_t p = 0; p < n; ++p) {
      if (mask[p] != '0' && mask[p] != '1') {
        throw Error(ErrorCode::ParseError, "mask bytes must be '0' or '1'");
      }
      valid[p] = mask[p] == '1';
    }
  }
  return Grid1(img.height, img.width, std::move(img.data), std::move(valid));
}

void write_ident_pgm(const std::filesystem::path& path, const IdentMap& map) {
  auto out = open_out(path);
  out << "P5\n" << map.width() << ' ' << map.height() << "\n255\n";
  std::string bytes(map.pixels(), '\0');
  for (std::size_t p = 0; p < map.pixels(); ++p) {
    const SampleLabel l = map[p];
    unsigned v = 255;
    if (l.is_positive()) v = 0;
    else if (l.is_negative()) v = static_cast<unsigned>(std::min(l.subgroup(), 254));
    bytes[p] = static_cast<char>(v);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

}  // namespace metricdepth
