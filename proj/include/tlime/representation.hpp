#ifndef TLIME_REPRESENTATION_HPP
#define TLIME_REPRESENTATION_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tlime/errors.hpp"

namespace tlime {

/// Raw pixel instance in original representation: row-major intensities in
/// [0, 1], one or three channels. Immutable by convention after construction.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;  // (y * width + x) * channels + c

  Image() = default;

  Image(int w, int h, int c, std::vector<double> values)
      : width(w), height(h), channels(c), data(std::move(values)) {
    if (w <= 0 || h <= 0 || (c != 1 && c != 3))
      throw std::invalid_argument("Image: bad shape " + shape_string());
    if (data.size() != static_cast<std::size_t>(w) * h * c)
      throw std::invalid_argument("Image: data length " +
                                  std::to_string(data.size()) +
                                  " does not match shape " + shape_string());
    for (double v : data)
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("Image: intensity " + std::to_string(v) +
                                    " outside [0, 1]");
  }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
  std::size_t value_count() const { return data.size(); }

  double at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height &&
           channels == other.channels;
  }

  std::string shape_string() const {
    return std::to_string(width) + "x" + std::to_string(height) + "x" +
           std::to_string(channels);
  }
};

/// Per-pixel superpixel labels. Defines the d' interpretable features: the
/// binary feature k means "superpixel k is present".
struct SegmentMap {
  int width = 0;
  int height = 0;
  int num_segments = 0;  // d'
  std::vector<int> labels;  // row-major, values in [0, num_segments)

  SegmentMap() = default;

  /// Validates cover (every id in [0, d') appears), label range, and
  /// 4-connectivity of every segment.
  SegmentMap(int w, int h, int d_prime, std::vector<int> label_values)
      : width(w), height(h), num_segments(d_prime),
        labels(std::move(label_values)) {
    if (w <= 0 || h <= 0)
      throw std::invalid_argument("SegmentMap: bad dimensions");
    if (num_segments < 1)
      throw std::invalid_argument("SegmentMap: num_segments must be >= 1");
    if (labels.size() != static_cast<std::size_t>(w) * h)
      throw std::invalid_argument("SegmentMap: label array length mismatch");
    std::vector<char> seen(num_segments, 0);
    for (int v : labels) {
      if (v < 0 || v >= num_segments)
        throw InvariantError("SegmentMap: label " + std::to_string(v) +
                             " outside [0, " + std::to_string(num_segments) +
                             ")");
      seen[v] = 1;
    }
    for (int k = 0; k < num_segments; ++k)
      if (!seen[k])
        throw InvariantError("SegmentMap: segment id " + std::to_string(k) +
                             " has no pixels");
    check_connectivity();
  }

  int label_at(int x, int y) const {
    return labels[static_cast<std::size_t>(y) * width + x];
  }

  bool matches(const Image& img) const {
    return width == img.width && height == img.height;
  }

 private:
  // Flood-fills from the first pixel of each label; a second component of
  // the same label violates the 4-connectivity invariant.
  void check_connectivity() const {
    std::vector<char> visited(labels.size(), 0);
    std::vector<char> label_done(num_segments, 0);
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < labels.size(); ++start) {
      if (visited[start]) continue;
      const int lab = labels[start];
      if (label_done[lab])
        throw InvariantError("SegmentMap: segment " + std::to_string(lab) +
                             " is not 4-connected");
      label_done[lab] = 1;
      stack.assign(1, start);
      visited[start] = 1;
      while (!stack.empty()) {
        const std::size_t p = stack.back();
        stack.pop_back();
        const int x = static_cast<int>(p % width);
        const int y = static_cast<int>(p / width);
        const int dx[4] = {1, -1, 0, 0};
        const int dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int nx = x + dx[k], ny = y + dy[k];
          if (nx < 0 || nx >= width || ny < 0 || ny >= height) continue;
          const std::size_t q = static_cast<std::size_t>(ny) * width + nx;
          if (!visited[q] && labels[q] == lab) {
            visited[q] = 1;
            stack.push_back(q);
          }
        }
      }
    }
  }
};

/// Interpretable representation: one bit per superpixel, 1 = present.
struct BinaryInstance {
  std::vector<std::uint8_t> bits;

  BinaryInstance() = default;
  explicit BinaryInstance(std::vector<std::uint8_t> b) : bits(std::move(b)) {
    for (auto v : bits)
      if (v > 1)
        throw std::invalid_argument("BinaryInstance: bits must be 0 or 1");
  }

  std::size_t size() const { return bits.size(); }
  bool is_set(std::size_t k) const { return bits[k] != 0; }
  bool all_ones() const {
    for (auto v : bits)
      if (v == 0) return false;
    return true;
  }
};

/// The instance's own interpretable representation: all superpixels present.
inline BinaryInstance full_instance(const SegmentMap& seg) {
  return BinaryInstance(
      std::vector<std::uint8_t>(static_cast<std::size_t>(seg.num_segments), 1));
}

/// Replacement color for absent superpixels.
enum class MaskMode {
  segment_mean,  // per-segment per-channel mean of the original image
  fixed_gray,    // constant 0.5
};

/// Recovers the original-representation sample z from a binary vector z':
/// pixels in present segments are copied from x, pixels in absent segments
/// take the segment's replacement color. A uniform segment's mean is taken
/// as that exact value, which makes re-masking an already-masked image a
/// bit-exact no-op.
inline Image recover(const BinaryInstance& zprime, const Image& x,
                     const SegmentMap& seg,
                     MaskMode mode = MaskMode::segment_mean) {
  if (!seg.matches(x))
    throw std::invalid_argument("recover: segment map is " +
                                std::to_string(seg.width) + "x" +
                                std::to_string(seg.height) +
                                " but image is " + x.shape_string());
  if (zprime.size() != static_cast<std::size_t>(seg.num_segments))
    throw std::invalid_argument(
        "recover: binary instance has " + std::to_string(zprime.size()) +
        " bits but segment map has " + std::to_string(seg.num_segments) +
        " segments");

  std::vector<double> out = x.data;
  if (zprime.all_ones()) return Image(x.width, x.height, x.channels, out);

  const int d_prime = seg.num_segments;
  const int ch = x.channels;
  std::vector<double> mean(static_cast<std::size_t>(d_prime) * ch, 0.5);
  if (mode == MaskMode::segment_mean) {
    std::vector<double> sum(static_cast<std::size_t>(d_prime) * ch, 0.0);
    std::vector<double> lo(static_cast<std::size_t>(d_prime) * ch, 2.0);
    std::vector<double> hi(static_cast<std::size_t>(d_prime) * ch, -1.0);
    std::vector<std::size_t> count(d_prime, 0);
    for (std::size_t p = 0; p < x.pixel_count(); ++p) {
      const int lab = seg.labels[p];
      ++count[lab];
      for (int c = 0; c < ch; ++c) {
        const double v = x.data[p * ch + c];
        sum[static_cast<std::size_t>(lab) * ch + c] += v;
        auto& l = lo[static_cast<std::size_t>(lab) * ch + c];
        auto& h = hi[static_cast<std::size_t>(lab) * ch + c];
        if (v < l) l = v;
        if (v > h) h = v;
      }
    }
    for (int k = 0; k < d_prime; ++k)
      for (int c = 0; c < ch; ++c) {
        const std::size_t i = static_cast<std::size_t>(k) * ch + c;
        mean[i] = lo[i] == hi[i] ? lo[i]
                                 : sum[i] / static_cast<double>(count[k]);
      }
  }

  for (std::size_t p = 0; p < x.pixel_count(); ++p) {
    const int lab = seg.labels[p];
    if (zprime.is_set(lab)) continue;
    for (int c = 0; c < ch; ++c)
      out[p * ch + c] = mean[static_cast<std::size_t>(lab) * ch + c];
  }
  return Image(x.width, x.height, x.channels, std::move(out));
}

/// Euclidean norm of the elementwise difference over all intensity values.
inline double l2_distance(const Image& a, const Image& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument("l2_distance: shape mismatch " +
                                a.shape_string() + " vs " + b.shape_string());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace tlime

#endif  // TLIME_REPRESENTATION_HPP
