#ifndef TLIME_SEGMENTATION_HPP
#define TLIME_SEGMENTATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "tlime/representation.hpp"

namespace tlime {

enum class SegmentationMethod { grid, slic };

struct SegmentationConfig {
  SegmentationMethod method = SegmentationMethod::grid;
  int target_segments = 16;   // d'
  double compactness = 10.0;  // slic only
  int iterations = 10;        // slic only
  std::uint64_t seed = 0;     // reserved; both methods are deterministic

  void validate(const Image& img) const {
    if (target_segments < 1)
      throw std::invalid_argument("segmentation: target_segments must be >= 1");
    if (static_cast<std::size_t>(target_segments) > img.pixel_count())
      throw std::invalid_argument(
          "segmentation: target_segments " + std::to_string(target_segments) +
          " exceeds pixel count " + std::to_string(img.pixel_count()));
    if (compactness < 0)
      throw std::invalid_argument("segmentation: compactness must be >= 0");
    if (iterations < 1)
      throw std::invalid_argument("segmentation: iterations must be >= 1");
  }
};

namespace detail {

// Nearest factor pair for a target block count: rows biased by the aspect
// ratio so blocks come out near-square.
struct GridShape {
  int rows;
  int cols;
};

inline GridShape grid_shape(int width, int height, int target, bool cols_floor) {
  int r = static_cast<int>(
      std::llround(std::sqrt(static_cast<double>(target) * height / width)));
  r = std::clamp(r, 1, std::min(height, target));
  int c = cols_floor ? target / r : (target + r - 1) / r;
  c = std::clamp(c, 1, width);
  return {r, c};
}

// Block boundaries: base size floor(extent / blocks); the last block absorbs
// the remainder.
inline std::vector<int> block_starts(int extent, int blocks) {
  std::vector<int> starts(blocks + 1);
  const int base = extent / blocks;
  for (int i = 0; i < blocks; ++i) starts[i] = i * base;
  starts[blocks] = extent;
  return starts;
}

}  // namespace detail

/// Deterministic rectangular tiling with approximately target_segments
/// blocks (exactly rows*cols after the nearest-factor-pair choice), labeled
/// row-major.
inline SegmentMap segment_grid(const Image& img, int target_segments) {
  if (target_segments < 1)
    throw std::invalid_argument("segment_grid: target_segments must be >= 1");
  if (static_cast<std::size_t>(target_segments) > img.pixel_count())
    throw std::invalid_argument("segment_grid: more segments than pixels");
  const auto [rows, cols] =
      detail::grid_shape(img.width, img.height, target_segments, false);
  const auto ys = detail::block_starts(img.height, rows);
  const auto xs = detail::block_starts(img.width, cols);

  std::vector<int> labels(img.pixel_count());
  for (int br = 0; br < rows; ++br)
    for (int bc = 0; bc < cols; ++bc)
      for (int y = ys[br]; y < ys[br + 1]; ++y)
        for (int x = xs[bc]; x < xs[bc + 1]; ++x)
          labels[static_cast<std::size_t>(y) * img.width + x] = br * cols + bc;
  return SegmentMap(img.width, img.height, rows * cols, std::move(labels));
}

namespace detail {

struct SlicCenter {
  double x, y;
  std::vector<double> color;  // scaled by kColorScale
};

// Intensities live in [0, 1]; scaling to [0, 100] approximates the L range
// of CIELAB so the conventional compactness m = 10 behaves as in SLIC.
inline constexpr double kColorScale = 100.0;

inline std::vector<SlicCenter> slic_initial_centers(const Image& img, int k) {
  const auto [rows, cols] = grid_shape(img.width, img.height, k, true);
  const auto ys = block_starts(img.height, rows);
  const auto xs = block_starts(img.width, cols);
  std::vector<SlicCenter> centers;
  centers.reserve(static_cast<std::size_t>(rows) * cols);
  for (int br = 0; br < rows; ++br)
    for (int bc = 0; bc < cols; ++bc) {
      SlicCenter c;
      c.x = (xs[bc] + xs[bc + 1] - 1) / 2.0;
      c.y = (ys[br] + ys[br + 1] - 1) / 2.0;
      const int px = std::clamp(static_cast<int>(std::llround(c.x)), 0,
                                img.width - 1);
      const int py = std::clamp(static_cast<int>(std::llround(c.y)), 0,
                                img.height - 1);
      c.color.resize(img.channels);
      for (int ch = 0; ch < img.channels; ++ch)
        c.color[ch] = img.at(px, py, ch) * kColorScale;
      centers.push_back(std::move(c));
    }
  return centers;
}

// Component bookkeeping for the connectivity-enforcement pass. Union-find
// with the minimum component id as representative keeps every tie-break
// deterministic.
struct ComponentForest {
  std::vector<int> parent;
  std::vector<std::size_t> size;

  explicit ComponentForest(const std::vector<std::size_t>& sizes)
      : parent(sizes.size()), size(sizes) {
    std::iota(parent.begin(), parent.end(), 0);
  }

  int find(int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }

  void merge(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
  }
};

}  // namespace detail

/// SLIC-style superpixels: k-means over (scaled color, position) with
/// compactness weight m, started from grid centers, followed by a
/// connectivity-enforcement pass. Deterministic: ties always resolve to the
/// lowest candidate id. num_segments may come out below target_segments
/// (empty clusters are dropped and ids compacted).
inline SegmentMap segment_slic(const Image& img, const SegmentationConfig& cfg) {
  cfg.validate(img);
  const int W = img.width, H = img.height, C = img.channels;
  const std::size_t N = img.pixel_count();

  auto centers = detail::slic_initial_centers(img, cfg.target_segments);
  const int k = static_cast<int>(centers.size());
  const double spacing = std::sqrt(static_cast<double>(N) / k);
  const double m = cfg.compactness;

  std::vector<double> scaled(N * C);
  for (std::size_t i = 0; i < scaled.size(); ++i)
    scaled[i] = img.data[i] * detail::kColorScale;

  std::vector<int> assign(N, -1);
  std::vector<double> best(N, 0.0);

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    std::fill(assign.begin(), assign.end(), -1);
    for (int ci = 0; ci < k; ++ci) {
      const auto& c = centers[ci];
      const int x0 = std::max(0, static_cast<int>(std::floor(c.x - spacing)));
      const int x1 = std::min(W - 1, static_cast<int>(std::ceil(c.x + spacing)));
      const int y0 = std::max(0, static_cast<int>(std::floor(c.y - spacing)));
      const int y1 = std::min(H - 1, static_cast<int>(std::ceil(c.y + spacing)));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * W + x;
          double dc2 = 0.0;
          for (int ch = 0; ch < C; ++ch) {
            const double d = scaled[p * C + ch] - c.color[ch];
            dc2 += d * d;
          }
          const double dx = x - c.x, dy = y - c.y;
          const double dist =
              dc2 + (dx * dx + dy * dy) / (spacing * spacing) * (m * m);
          if (assign[p] == -1 || dist < best[p]) {
            assign[p] = ci;
            best[p] = dist;
          }
        }
    }
    // Pixels outside every search window: assign by full scan.
    for (std::size_t p = 0; p < N; ++p) {
      if (assign[p] != -1) continue;
      const int x = static_cast<int>(p % W), y = static_cast<int>(p / W);
      for (int ci = 0; ci < k; ++ci) {
        const auto& c = centers[ci];
        double dc2 = 0.0;
        for (int ch = 0; ch < C; ++ch) {
          const double d = scaled[p * C + ch] - c.color[ch];
          dc2 += d * d;
        }
        const double dx = x - c.x, dy = y - c.y;
        const double dist =
            dc2 + (dx * dx + dy * dy) / (spacing * spacing) * (m * m);
        if (assign[p] == -1 || dist < best[p]) {
          assign[p] = ci;
          best[p] = dist;
        }
      }
    }
    // Update step: centers move to the mean of their members.
    std::vector<double> sx(k, 0.0), sy(k, 0.0);
    std::vector<double> scolor(static_cast<std::size_t>(k) * C, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t p = 0; p < N; ++p) {
      const int ci = assign[p];
      ++count[ci];
      sx[ci] += static_cast<double>(p % W);
      sy[ci] += static_cast<double>(p / W);
      for (int ch = 0; ch < C; ++ch)
        scolor[static_cast<std::size_t>(ci) * C + ch] += scaled[p * C + ch];
    }
    for (int ci = 0; ci < k; ++ci) {
      if (count[ci] == 0) continue;  // empty cluster keeps its center
      centers[ci].x = sx[ci] / count[ci];
      centers[ci].y = sy[ci] / count[ci];
      for (int ch = 0; ch < C; ++ch)
        centers[ci].color[ch] =
            scolor[static_cast<std::size_t>(ci) * C + ch] / count[ci];
    }
  }

  // --- connectivity enforcement ---------------------------------------
  // 1. Connected components of the raw assignment, ids in row-major order
  //    of each component's first pixel.
  std::vector<int> comp(N, -1);
  std::vector<std::size_t> comp_size;
  std::vector<int> comp_label;
  std::vector<std::size_t> comp_first;
  {
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < N; ++start) {
      if (comp[start] != -1) continue;
      const int id = static_cast<int>(comp_size.size());
      comp_size.push_back(0);
      comp_label.push_back(assign[start]);
      comp_first.push_back(start);
      stack.assign(1, start);
      comp[start] = id;
      while (!stack.empty()) {
        const std::size_t p = stack.back();
        stack.pop_back();
        ++comp_size[id];
        const int x = static_cast<int>(p % W), y = static_cast<int>(p / W);
        const int dx[4] = {1, -1, 0, 0};
        const int dy[4] = {0, 0, 1, -1};
        for (int t = 0; t < 4; ++t) {
          const int nx = x + dx[t], ny = y + dy[t];
          if (nx < 0 || nx >= W || ny < 0 || ny >= H) continue;
          const std::size_t q = static_cast<std::size_t>(ny) * W + nx;
          if (comp[q] == -1 && assign[q] == assign[p]) {
            comp[q] = id;
            stack.push_back(q);
          }
        }
      }
    }
  }
  const int num_comps = static_cast<int>(comp_size.size());

  // 2. Orphans: every component that is not its cluster's largest one.
  std::vector<int> main_comp(k, -1);
  for (int id = 0; id < num_comps; ++id) {
    int& best_id = main_comp[comp_label[id]];
    if (best_id == -1 || comp_size[id] > comp_size[best_id]) best_id = id;
  }

  detail::ComponentForest forest(comp_size);
  std::vector<std::vector<std::size_t>> members(num_comps);
  for (std::size_t p = 0; p < N; ++p) members[comp[p]].push_back(p);

  // largest adjacent set of a given set; ties resolve to the lower root id
  auto largest_adjacent = [&](int root) {
    int best_root = -1;
    for (int id = 0; id < num_comps; ++id) {
      if (forest.find(id) != root) continue;
      for (std::size_t p : members[id]) {
        const int x = static_cast<int>(p % W), y = static_cast<int>(p / W);
        const int dx[4] = {1, -1, 0, 0};
        const int dy[4] = {0, 0, 1, -1};
        for (int t = 0; t < 4; ++t) {
          const int nx = x + dx[t], ny = y + dy[t];
          if (nx < 0 || nx >= W || ny < 0 || ny >= H) continue;
          const int r = forest.find(comp[static_cast<std::size_t>(ny) * W + nx]);
          if (r == root) continue;
          if (best_root == -1 || forest.size[r] > forest.size[best_root] ||
              (forest.size[r] == forest.size[best_root] && r < best_root))
            best_root = r;
        }
      }
    }
    return best_root;
  };

  const double orphan_threshold = static_cast<double>(N) / k / 4.0;
  {
    // Absorb small orphans, smallest first; ties by component id.
    std::vector<int> order;
    for (int id = 0; id < num_comps; ++id)
      if (id != main_comp[comp_label[id]] &&
          static_cast<double>(comp_size[id]) < orphan_threshold)
        order.push_back(id);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (comp_size[a] != comp_size[b]) return comp_size[a] < comp_size[b];
      return a < b;
    });
    for (int id : order) {
      const int root = forest.find(id);
      const int target = largest_adjacent(root);
      if (target != -1) forest.merge(root, target);
    }
  }

  // 3. Guard: never exceed the requested segment count.
  auto live_roots = [&] {
    std::vector<int> roots;
    for (int id = 0; id < num_comps; ++id)
      if (forest.find(id) == id) roots.push_back(id);
    return roots;
  };
  auto roots = live_roots();
  while (static_cast<int>(roots.size()) > cfg.target_segments) {
    int smallest = roots[0];
    for (int r : roots)
      if (forest.size[r] < forest.size[smallest] ||
          (forest.size[r] == forest.size[smallest] && r < smallest))
        smallest = r;
    const int target = largest_adjacent(smallest);
    forest.merge(smallest, target);
    roots = live_roots();
  }

  // 4. Compact ids in row-major first-occurrence order.
  std::vector<int> final_label(num_comps, -1);
  std::vector<int> labels(N);
  int next_label = 0;
  for (std::size_t p = 0; p < N; ++p) {
    const int root = forest.find(comp[p]);
    if (final_label[root] == -1) final_label[root] = next_label++;
    labels[p] = final_label[root];
  }
  return SegmentMap(W, H, next_label, std::move(labels));
}

inline SegmentMap segment(const Image& img, const SegmentationConfig& cfg) {
  cfg.validate(img);
  return cfg.method == SegmentationMethod::grid
             ? segment_grid(img, cfg.target_segments)
             : segment_slic(img, cfg);
}

}  // namespace tlime

#endif  // TLIME_SEGMENTATION_HPP
