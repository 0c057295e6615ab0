#ifndef TLIME_MODELS_HPP
#define TLIME_MODELS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tlime/errors.hpp"
#include "tlime/parallel.hpp"
#include "tlime/representation.hpp"
#include "tlime/rng.hpp"
#include "tlime/version.hpp"

namespace tlime {

/// Black-box classifier contract. Implementations must be stateless:
/// identical inputs give identical outputs and concurrent calls are safe.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual int num_classes() const = 0;

  /// One probability vector per input image; each has num_classes()
  /// nonnegative entries summing to 1 (tolerance 1e-6, checked at the
  /// explainer boundary).
  virtual std::vector<std::vector<double>> predict_proba(
      std::span<const Image> batch) const = 0;

  std::vector<double> predict_one(const Image& x) const {
    return predict_proba(std::span<const Image>(&x, 1)).front();
  }
};

/// Boundary check for the Predictor contract (normalization to 1e-6).
inline void validate_probabilities(std::span<const double> probs,
                                   int num_classes,
                                   const std::string& context) {
  if (static_cast<int>(probs.size()) != num_classes)
    throw InvariantError(context + ": probability vector has " +
                         std::to_string(probs.size()) + " entries, expected " +
                         std::to_string(num_classes));
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || std::isnan(p))
      throw InvariantError(context + ": negative or NaN probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw InvariantError(context + ": probabilities sum to " +
                         std::to_string(sum) + ", expected 1 +- 1e-6");
}

// ---------------------------------------------------------------------------
// Random forest (classification CART on pixel intensities, Gini criterion)
// ---------------------------------------------------------------------------

struct RfNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> counts;  // leaves: per-class sample counts, total > 0
};

struct RfTree {
  std::vector<RfNode> nodes;  // root at index 0

  const std::vector<double>& leaf_counts(const Image& x) const {
    int i = 0;
    while (nodes[i].feature >= 0)
      i = x.data[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left
                                                         : nodes[i].right;
    return nodes[i].counts;
  }
};

struct RandomForestConfig {
  int num_trees = 50;
  int max_depth = 12;
  int feature_subsample = 0;  // 0 = ceil(sqrt(d))
  std::uint64_t seed = 0;
  bool bootstrap = true;  // false = plain CART mode for tests
  unsigned num_threads = 0;

  void validate() const {
    if (num_trees < 1) throw std::invalid_argument("rf: num_trees must be >= 1");
    if (max_depth < 1) throw std::invalid_argument("rf: max_depth must be >= 1");
    if (feature_subsample < 0)
      throw std::invalid_argument("rf: feature_subsample must be >= 0");
  }
};

class RandomForestModel final : public Predictor {
 public:
  RandomForestModel() = default;
  RandomForestModel(std::vector<RfTree> trees, int num_classes, int width,
                    int height, int channels, RandomForestConfig cfg)
      : trees_(std::move(trees)), num_classes_(num_classes), width_(width),
        height_(height), channels_(channels), config_(std::move(cfg)) {
    for (const auto& tree : trees_)
      for (const auto& node : tree.nodes)
        if (node.feature < 0) {
          double total = 0.0;
          for (double c : node.counts) {
            if (c < 0) throw InvariantError("rf: negative leaf count");
            total += c;
          }
          if (!(total > 0)) throw InvariantError("rf: empty leaf");
        }
  }

  int num_classes() const override { return num_classes_; }
  const std::vector<RfTree>& trees() const { return trees_; }
  const RandomForestConfig& config() const { return config_; }
  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }

  /// Soft voting: mean of per-tree leaf class frequencies, so the output is
  /// a smooth probability rather than a step function of the votes.
  std::vector<std::vector<double>> predict_proba(
      std::span<const Image> batch) const override {
    std::vector<std::vector<double>> out(batch.size());
    parallel_for(batch.size(), config_.num_threads, [&](std::size_t i) {
      const Image& x = batch[i];
      if (x.width != width_ || x.height != height_ || x.channels != channels_)
        throw std::invalid_argument("rf: input shape " + x.shape_string() +
                                    " does not match training shape");
      std::vector<double> probs(num_classes_, 0.0);
      for (const auto& tree : trees_) {
        const auto& counts = tree.leaf_counts(x);
        const double total =
            std::accumulate(counts.begin(), counts.end(), 0.0);
        for (int c = 0; c < num_classes_; ++c) probs[c] += counts[c] / total;
      }
      for (double& p : probs) p /= static_cast<double>(trees_.size());
      out[i] = std::move(probs);
    });
    return out;
  }

 private:
  std::vector<RfTree> trees_;
  int num_classes_ = 0;
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  RandomForestConfig config_;
};

namespace detail {

inline double gini(const std::vector<double>& counts, double total) {
  double g = 1.0;
  for (double c : counts) {
    const double f = c / total;
    g -= f * f;
  }
  return g;
}

struct RfTrainer {
  const std::vector<std::vector<double>>& features;  // n x d
  const std::vector<int>& labels;
  int num_classes;
  int max_depth;
  int mtry;
  RfTree tree;
  std::vector<int> feature_pool;

  int build(std::vector<int>& idx, int depth, Rng& rng) {
    std::vector<double> counts(num_classes, 0.0);
    for (int i : idx) counts[labels[i]] += 1.0;
    const double total = static_cast<double>(idx.size());
    const bool pure =
        *std::max_element(counts.begin(), counts.end()) == total;

    int best_feature = -1;
    double best_threshold = 0.0, best_gain = 1e-12;
    if (depth < max_depth && !pure && idx.size() >= 2) {
      // Random feature subset, evaluated in ascending id order so the
      // lowest-feature/lowest-threshold tie rule is deterministic.
      const int d = static_cast<int>(feature_pool.size());
      for (int j = 0; j < mtry; ++j) {
        const int swap_with =
            j + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(d - j)));
        std::swap(feature_pool[j], feature_pool[swap_with]);
      }
      std::vector<int> candidates(feature_pool.begin(),
                                  feature_pool.begin() + mtry);
      std::sort(candidates.begin(), candidates.end());

      const double parent_gini = gini(counts, total);
      std::vector<std::pair<double, int>> order(idx.size());
      std::vector<double> left_counts(num_classes);
      for (int f : candidates) {
        for (std::size_t i = 0; i < idx.size(); ++i)
          order[i] = {features[idx[i]][f], labels[idx[i]]};
        std::sort(order.begin(), order.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (order.front().first == order.back().first) continue;
        std::fill(left_counts.begin(), left_counts.end(), 0.0);
        double n_left = 0.0;
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
          left_counts[order[i].second] += 1.0;
          n_left += 1.0;
          if (order[i].first == order[i + 1].first) continue;
          const double n_right = total - n_left;
          double gl = 1.0, gr = 1.0;
          for (int c = 0; c < num_classes; ++c) {
            const double fl = left_counts[c] / n_left;
            const double fr = (counts[c] - left_counts[c]) / n_right;
            gl -= fl * fl;
            gr -= fr * fr;
          }
          const double gain =
              parent_gini - (n_left * gl + n_right * gr) / total;
          if (gain > best_gain) {
            best_gain = gain;
            best_feature = f;
            best_threshold = (order[i].first + order[i + 1].first) / 2.0;
          }
        }
      }
    }

    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (best_feature < 0) {
      tree.nodes[node_id].counts = std::move(counts);
      return node_id;
    }
    std::vector<int> left_idx, right_idx;
    for (int i : idx) {
      if (features[i][best_feature] <= best_threshold)
        left_idx.push_back(i);
      else
        right_idx.push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    tree.nodes[node_id].feature = best_feature;
    tree.nodes[node_id].threshold = best_threshold;
    const int left = build(left_idx, depth + 1, rng);
    tree.nodes[node_id].left = left;
    const int right = build(right_idx, depth + 1, rng);
    tree.nodes[node_id].right = right;
    return node_id;
  }
};

}  // namespace detail

/// Trains a random forest: one CART per bootstrap resample with a random
/// feature subset per split. Fully deterministic given the seed; trees draw
/// from independent substreams so parallel training changes nothing.
inline RandomForestModel train_random_forest(const std::vector<Image>& images,
                                             const std::vector<int>& labels,
                                             RandomForestConfig cfg) {
  cfg.validate();
  if (images.empty()) throw std::invalid_argument("rf: no training images");
  if (images.size() != labels.size())
    throw std::invalid_argument("rf: image/label count mismatch");
  for (const auto& img : images)
    if (!img.same_shape(images.front()))
      throw std::invalid_argument("rf: inconsistent image shapes");

  const int num_classes = 1 + *std::max_element(labels.begin(), labels.end());
  for (int lab : labels)
    if (lab < 0) throw std::invalid_argument("rf: negative label");

  const std::size_t n = images.size();
  const int d = static_cast<int>(images.front().value_count());
  std::vector<std::vector<double>> features(n);
  for (std::size_t i = 0; i < n; ++i) features[i] = images[i].data;

  int mtry = cfg.feature_subsample;
  if (mtry == 0) mtry = static_cast<int>(std::ceil(std::sqrt(double(d))));
  mtry = std::min(mtry, d);
  RandomForestConfig resolved = cfg;
  resolved.feature_subsample = mtry;

  std::vector<RfTree> trees(cfg.num_trees);
  parallel_for(trees.size(), cfg.num_threads, [&](std::size_t t) {
    Rng rng = substream(cfg.seed, t);
    std::vector<int> idx(n);
    if (cfg.bootstrap) {
      for (std::size_t i = 0; i < n; ++i)
        idx[i] = static_cast<int>(rng.next_below(n));
    } else {
      std::iota(idx.begin(), idx.end(), 0);
    }
    detail::RfTrainer trainer{features, labels, num_classes, cfg.max_depth,
                              mtry, RfTree{}, std::vector<int>(d)};
    std::iota(trainer.feature_pool.begin(), trainer.feature_pool.end(), 0);
    trainer.build(idx, 0, rng);
    trees[t] = std::move(trainer.tree);
  });

  return RandomForestModel(std::move(trees), num_classes,
                           images.front().width, images.front().height,
                           images.front().channels, resolved);
}

// ---------------------------------------------------------------------------
// Model file (versioned JSON)
// ---------------------------------------------------------------------------

inline nlohmann::json rf_to_json(const RandomForestModel& model) {
  nlohmann::json doc;
  doc["format_version"] = kSchemaVersion;
  doc["kind"] = "random_forest";
  doc["num_classes"] = model.num_classes();
  doc["image_shape"] = {{"width", model.width()},
                        {"height", model.height()},
                        {"channels", model.channels()}};
  const auto& cfg = model.config();
  doc["params"] = {{"trees", cfg.num_trees},
                   {"max_depth", cfg.max_depth},
                   {"feature_subsample", cfg.feature_subsample},
                   {"seed", cfg.seed},
                   {"bootstrap", cfg.bootstrap}};
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : model.trees()) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes) {
      if (n.feature < 0)
        nodes.push_back({{"counts", n.counts}});
      else
        nodes.push_back({{"f", n.feature},
                         {"t", n.threshold},
                         {"l", n.left},
                         {"r", n.right}});
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  doc["trees"] = std::move(trees);
  return doc;
}

inline RandomForestModel rf_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("kind", "") != "random_forest")
    throw IngestError(IngestCode::bad_header, "model file: not a random_forest");
  if (doc.value("format_version", -1) != kSchemaVersion)
    throw IngestError(IngestCode::bad_header,
                      "model file: unsupported format_version");
  RandomForestConfig cfg;
  const auto& params = doc.at("params");
  cfg.num_trees = params.at("trees").get<int>();
  cfg.max_depth = params.at("max_depth").get<int>();
  cfg.feature_subsample = params.at("feature_subsample").get<int>();
  cfg.seed = params.at("seed").get<std::uint64_t>();
  cfg.bootstrap = params.at("bootstrap").get<bool>();
  std::vector<RfTree> trees;
  for (const auto& tj : doc.at("trees")) {
    RfTree tree;
    for (const auto& nj : tj.at("nodes")) {
      RfNode node;
      if (nj.contains("counts")) {
        node.counts = nj.at("counts").get<std::vector<double>>();
      } else {
        node.feature = nj.at("f").get<int>();
        node.threshold = nj.at("t").get<double>();
        node.left = nj.at("l").get<int>();
        node.right = nj.at("r").get<int>();
      }
      tree.nodes.push_back(std::move(node));
    }
    trees.push_back(std::move(tree));
  }
  const auto& shape = doc.at("image_shape");
  return RandomForestModel(std::move(trees), doc.at("num_classes").get<int>(),
                           shape.at("width").get<int>(),
                           shape.at("height").get<int>(),
                           shape.at("channels").get<int>(), cfg);
}

// ---------------------------------------------------------------------------
// Classification metrics (Table-style report)
// ---------------------------------------------------------------------------

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  std::vector<ClassMetrics> per_class;
  ClassMetrics weighted;  // support-weighted averages
  double accuracy = 0.0;
};

inline EvalReport evaluate_classifier(const std::vector<int>& predicted,
                                      const std::vector<int>& actual,
                                      int num_classes) {
  if (predicted.size() != actual.size() || predicted.empty())
    throw std::invalid_argument("evaluate_classifier: bad label vectors");
  std::vector<std::size_t> tp(num_classes, 0), fp(num_classes, 0),
      fn(num_classes, 0), support(num_classes, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    ++support[actual[i]];
    if (predicted[i] == actual[i]) {
      ++tp[actual[i]];
      ++correct;
    } else {
      ++fp[predicted[i]];
      ++fn[actual[i]];
    }
  }
  EvalReport report;
  report.accuracy = static_cast<double>(correct) / predicted.size();
  report.per_class.resize(num_classes);
  double wp = 0.0, wr = 0.0, wf = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    auto& m = report.per_class[c];
    m.support = support[c];
    const double denom_p = static_cast<double>(tp[c] + fp[c]);
    const double denom_r = static_cast<double>(tp[c] + fn[c]);
    m.precision = denom_p > 0 ? tp[c] / denom_p : 0.0;
    m.recall = denom_r > 0 ? tp[c] / denom_r : 0.0;
    m.f1 = m.precision + m.recall > 0
               ? 2 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    wp += m.precision * m.support;
    wr += m.recall * m.support;
    wf += m.f1 * m.support;
  }
  report.weighted.support = predicted.size();
  report.weighted.precision = wp / predicted.size();
  report.weighted.recall = wr / predicted.size();
  report.weighted.f1 = wf / predicted.size();
  return report;
}

}  // namespace tlime

#endif  // TLIME_MODELS_HPP
