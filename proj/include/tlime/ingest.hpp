#ifndef TLIME_INGEST_HPP
#define TLIME_INGEST_HPP

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "tlime/errors.hpp"
#include "tlime/representation.hpp"

namespace tlime {

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError(IngestCode::io, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IngestError(IngestCode::io, "read failed: " + path);
  return bytes;
}

inline void write_file(const std::string& path,
                       std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestError(IngestCode::io, "cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IngestError(IngestCode::io, "write failed: " + path);
}

inline bool has_gzip_magic(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

inline std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK)
    throw IngestError(IngestCode::bad_gzip, "inflateInit2 failed");
  std::vector<std::uint8_t> out;
  std::uint8_t buffer[1 << 15];
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  int rc = Z_OK;
  do {
    zs.next_out = buffer;
    zs.avail_out = sizeof(buffer);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw IngestError(IngestCode::bad_gzip,
                        "gzip stream corrupt (zlib rc " + std::to_string(rc) +
                            ")");
    }
    out.insert(out.end(), buffer, buffer + (sizeof(buffer) - zs.avail_out));
  } while (rc != Z_STREAM_END);
  inflateEnd(&zs);
  return out;
}

/// Produces a gzip stream; used by tests and the dataset generator.
inline std::vector<std::uint8_t> gzip_compress(
    std::span<const std::uint8_t> bytes) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK)
    throw Error("deflateInit2 failed");
  std::vector<std::uint8_t> out;
  std::uint8_t buffer[1 << 15];
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  int rc = Z_OK;
  do {
    zs.next_out = buffer;
    zs.avail_out = sizeof(buffer);
    rc = deflate(&zs, Z_FINISH);
    out.insert(out.end(), buffer, buffer + (sizeof(buffer) - zs.avail_out));
  } while (rc != Z_STREAM_END);
  deflateEnd(&zs);
  return out;
}

// ---------------------------------------------------------------------------
// IDX (MNIST container format)
// ---------------------------------------------------------------------------

/// Parsed IDX file: unsigned-byte tensor plus its dimensions. kind is fixed
/// by the dimension count (3 = images, 1 = labels).
struct IdxDataset {
  enum class Kind { images, labels };
  Kind kind = Kind::labels;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> payload;

  std::size_t count() const { return dims.empty() ? 0 : dims[0]; }
};

/// Parses an IDX byte stream: big-endian header [0, 0, dtype, ndims], then
/// ndims 4-byte big-endian sizes, then the payload. Only dtype 0x08
/// (unsigned byte) is supported; gzip input is inflated transparently.
inline IdxDataset parse_idx(std::span<const std::uint8_t> raw) {
  std::vector<std::uint8_t> inflated;
  if (has_gzip_magic(raw)) {
    inflated = gunzip(raw);
    raw = inflated;
  }
  if (raw.size() < 4)
    throw IngestError(IngestCode::truncated,
                      "IDX header truncated: " + std::to_string(raw.size()) +
                          " bytes");
  if (raw[0] != 0 || raw[1] != 0)
    throw IngestError(IngestCode::bad_magic, "IDX magic bytes are not 0,0");
  if (raw[2] != 0x08)
    throw IngestError(IngestCode::unsupported_dtype,
                      "IDX dtype 0x" + std::to_string(raw[2]) +
                          " unsupported (only unsigned byte 0x08)");
  const int ndims = raw[3];
  if (ndims != 1 && ndims != 3)
    throw IngestError(IngestCode::bad_dims,
                      "IDX dimensionality " + std::to_string(ndims) +
                          " unsupported (labels=1, images=3)");
  const std::size_t header = 4 + 4 * static_cast<std::size_t>(ndims);
  if (raw.size() < header)
    throw IngestError(IngestCode::truncated, "IDX size fields truncated");

  IdxDataset ds;
  ds.kind = ndims == 3 ? IdxDataset::Kind::images : IdxDataset::Kind::labels;
  std::uint64_t total = 1;
  for (int i = 0; i < ndims; ++i) {
    const std::size_t off = 4 + 4 * static_cast<std::size_t>(i);
    const std::uint32_t v = (std::uint32_t(raw[off]) << 24) |
                            (std::uint32_t(raw[off + 1]) << 16) |
                            (std::uint32_t(raw[off + 2]) << 8) |
                            std::uint32_t(raw[off + 3]);
    if (v == 0)
      throw IngestError(IngestCode::bad_dims, "IDX dimension is zero");
    ds.dims.push_back(v);
    total *= v;
    if (total > (1ULL << 40))
      throw IngestError(IngestCode::bad_dims, "IDX dimensions implausible");
  }
  const std::size_t available = raw.size() - header;
  if (available < total)
    throw IngestError(IngestCode::truncated,
                      "IDX payload truncated: expected " +
                          std::to_string(total) + " bytes, found " +
                          std::to_string(available));
  if (available > total)
    throw IngestError(IngestCode::payload_mismatch,
                      "IDX payload has " + std::to_string(available - total) +
                          " trailing bytes");
  ds.payload.assign(raw.begin() + header, raw.end());
  return ds;
}

inline IdxDataset load_idx(const std::string& path) {
  return parse_idx(read_file(path));
}

/// Expands an images dataset into normalized grayscale Images (byte / 255).
inline std::vector<Image> idx_to_images(const IdxDataset& ds) {
  if (ds.kind != IdxDataset::Kind::images)
    throw std::invalid_argument("idx_to_images: dataset holds labels");
  const std::size_t n = ds.dims[0];
  const int rows = static_cast<int>(ds.dims[1]);
  const int cols = static_cast<int>(ds.dims[2]);
  const std::size_t stride = static_cast<std::size_t>(rows) * cols;
  std::vector<Image> images;
  images.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> px(stride);
    for (std::size_t p = 0; p < stride; ++p)
      px[p] = ds.payload[i * stride + p] / 255.0;
    images.emplace_back(cols, rows, 1, std::move(px));
  }
  return images;
}

inline std::vector<int> idx_to_labels(const IdxDataset& ds) {
  if (ds.kind != IdxDataset::Kind::labels)
    throw std::invalid_argument("idx_to_labels: dataset holds images");
  return std::vector<int>(ds.payload.begin(), ds.payload.end());
}

// ---------------------------------------------------------------------------
// Netpbm (binary PGM P5 / PPM P6, maxval 255)
// ---------------------------------------------------------------------------

namespace detail {

// Header token scanner. '#' comments run to end of line and are allowed
// wherever whitespace is, up to and including before the maxval token.
struct PnmScanner {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  bool is_space(std::uint8_t c) const {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' ||
           c == '\f';
  }

  void skip_space_and_comments() {
    while (pos < bytes.size()) {
      if (is_space(bytes[pos])) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  }

  long next_int() {
    skip_space_and_comments();
    if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9')
      throw IngestError(IngestCode::bad_header,
                        "PNM header: expected integer at byte " +
                            std::to_string(pos));
    long v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1'000'000'000L)
        throw IngestError(IngestCode::bad_header, "PNM header: value overflow");
      ++pos;
    }
    return v;
  }
};

}  // namespace detail

/// Parses binary PGM (P5) or PPM (P6) with maxval 255, bit-exact: each byte
/// b becomes intensity b/255.
inline Image parse_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2)
    throw IngestError(IngestCode::unsupported_magic, "PNM: input too short");
  if (bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw IngestError(IngestCode::unsupported_magic,
                      "PNM: magic is not P5 or P6");
  const int channels = bytes[1] == '5' ? 1 : 3;

  detail::PnmScanner scan{bytes, 2};
  const long width = scan.next_int();
  const long height = scan.next_int();
  const long maxval = scan.next_int();
  if (width <= 0 || height <= 0 || width > 1 << 20 || height > 1 << 20)
    throw IngestError(IngestCode::bad_header, "PNM: bad dimensions");
  if (maxval != 255)
    throw IngestError(IngestCode::unsupported_maxval,
                      "PNM: maxval " + std::to_string(maxval) +
                          " unsupported (only 255)");
  // Exactly one whitespace byte separates the header from the raster.
  if (scan.pos >= bytes.size() || !scan.is_space(bytes[scan.pos]))
    throw IngestError(IngestCode::bad_header,
                      "PNM: missing separator before raster");
  ++scan.pos;

  const std::size_t expected =
      static_cast<std::size_t>(width) * height * channels;
  const std::size_t available = bytes.size() - scan.pos;
  if (available < expected)
    throw IngestError(IngestCode::truncated,
                      "PNM raster truncated: expected " +
                          std::to_string(expected) + " bytes, found " +
                          std::to_string(available));
  if (available > expected)
    throw IngestError(IngestCode::payload_mismatch,
                      "PNM raster has trailing bytes");

  std::vector<double> px(expected);
  for (std::size_t i = 0; i < expected; ++i)
    px[i] = bytes[scan.pos + i] / 255.0;
  return Image(static_cast<int>(width), static_cast<int>(height), channels,
               std::move(px));
}

inline Image load_pnm(const std::string& path) {
  return parse_pnm(read_file(path));
}

inline std::uint8_t quantize_byte(double v) {
  double q = std::nearbyint(v * 255.0);
  if (q < 0) q = 0;
  if (q > 255) q = 255;
  return static_cast<std::uint8_t>(q);
}

/// Serializes an image as binary PGM/PPM with maxval 255. Intensities are
/// quantized as round(v * 255). Optional comment lines ("# ...") land
/// between the magic and the dimensions, which parse_pnm accepts.
inline std::vector<std::uint8_t> write_pnm(
    const Image& img, const std::vector<std::string>& comments = {}) {
  std::string header = img.channels == 1 ? "P5\n" : "P6\n";
  for (const auto& c : comments) header += "# " + c + "\n";
  header += std::to_string(img.width) + " " + std::to_string(img.height) +
            "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.data.size());
  for (double v : img.data) out.push_back(quantize_byte(v));
  return out;
}

inline void save_pnm(const std::string& path, const Image& img,
                     const std::vector<std::string>& comments = {}) {
  write_file(path, write_pnm(img, comments));
}

/// Renders a segment map as grayscale for visual inspection: label k maps to
/// round(k * 255 / (d' - 1)) (0 when d' == 1). Lossy beyond 256 segments.
inline Image segment_map_to_image(const SegmentMap& seg) {
  std::vector<double> px(seg.labels.size());
  const int d_prime = seg.num_segments;
  for (std::size_t i = 0; i < px.size(); ++i) {
    const std::uint8_t g =
        d_prime > 1 ? static_cast<std::uint8_t>(std::nearbyint(
                          seg.labels[i] * 255.0 / (d_prime - 1)))
                    : 0;
    px[i] = g / 255.0;
  }
  return Image(seg.width, seg.height, 1, std::move(px));
}

}  // namespace tlime

#endif  // TLIME_INGEST_HPP
