#pragma once

// Linear dual encoder over hashed n-gram features.
//
// Both sides share one projection W (B x d):  phi(text) = W^T f(text), and
// the matching score is g(x, y) = phi(x) . phi(y). Training minimises the
// symmetric in-batch loss
//
//   p(x_i, y_i) = e^{g(x_i,y_i)} /
//                 (sum_j e^{g(x_i,y_j)} + sum_j e^{g(x_j,y_i)} - e^{g(x_i,y_i)})
//
// with plain SGD and a linearly decaying step.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "simsr/binary_io.hpp"
#include "simsr/features.hpp"

namespace simsr {

inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;

template <class Real>
class BasicEncoderModel {
 public:
  using value_type = Real;

  BasicEncoderModel() = default;

  /// Zero-initialised projection.
  BasicEncoderModel(std::uint64_t buckets, std::uint32_t dim,
                    std::uint64_t hash_seed = kDefaultHashSeed)
      : buckets_(buckets), dim_(dim), hash_seed_(hash_seed) {
    if (buckets < 2) throw std::invalid_argument("bucket count must be >= 2");
    if (buckets > (std::uint64_t{1} << 32))
      throw std::invalid_argument("bucket count must fit in 32 bits");
    if (dim == 0) throw std::invalid_argument("embedding dimension must be > 0");
    weights_.assign(buckets * dim, Real{0});
  }

  /// Uniform(-scale, scale) initialisation from a counter-based generator, so
  /// a given (seed, shape) yields the same weights on every platform:
  ///   w[k] = scale * (2u - 1),  u = (mix64(seed + golden * (k + 1)) >> 11) / 2^53
  static BasicEncoderModel random(std::uint64_t buckets, std::uint32_t dim,
                                  std::uint64_t init_seed, double scale,
                                  std::uint64_t hash_seed = kDefaultHashSeed) {
    BasicEncoderModel model(buckets, dim, hash_seed);
    constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
    constexpr double kInv53 = 1.0 / 9007199254740992.0;
    for (std::size_t k = 0; k < model.weights_.size(); ++k) {
      const double u =
          static_cast<double>(mix64(init_seed + kGolden * (k + 1)) >> 11) * kInv53;
      model.weights_[k] = static_cast<Real>(scale * (2.0 * u - 1.0));
    }
    return model;
  }

  std::uint64_t buckets() const { return buckets_; }
  std::uint32_t dim() const { return dim_; }
  std::uint64_t hash_seed() const { return hash_seed_; }

  std::span<Real> row(std::uint64_t bucket) {
    return {weights_.data() + bucket * dim_, dim_};
  }
  std::span<const Real> row(std::uint64_t bucket) const {
    return {weights_.data() + bucket * dim_, dim_};
  }
  Real& at(std::uint64_t bucket, std::uint32_t col) {
    return weights_[bucket * dim_ + col];
  }
  Real at(std::uint64_t bucket, std::uint32_t col) const {
    return weights_[bucket * dim_ + col];
  }
  std::span<Real> weights() { return weights_; }
  std::span<const Real> weights() const { return weights_; }

  FeatureVector features(std::string_view text) const {
    return featurize(text, buckets_, hash_seed_);
  }

  bool all_finite() const {
    return std::all_of(weights_.begin(), weights_.end(),
                       [](Real w) { return std::isfinite(static_cast<double>(w)); });
  }

  /// Content hash over shape, hash seed and weights.
  std::uint64_t fingerprint() const {
    std::uint64_t h = mix64(buckets_ ^ (std::uint64_t{dim_} << 40) ^ hash_seed_);
    for (Real w : weights_) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(w));
      h = mix64(h ^ bits) + 0x9e3779b97f4a7c15ULL;
    }
    return h;
  }

  bool operator==(const BasicEncoderModel&) const = default;

 private:
  std::uint64_t buckets_ = 0;
  std::uint32_t dim_ = 0;
  std::uint64_t hash_seed_ = kDefaultHashSeed;
  std::vector<Real> weights_;
};

using EncoderModel = BasicEncoderModel<float>;
using Embedding = std::vector<float>;

/// Anything that maps text to a fixed-width embedding. The hashed linear
/// model is one implementation; pools can also be built from vectors
/// produced elsewhere.
template <class E>
concept TextEncoder = requires(const E& enc, std::string_view text) {
  { enc.dim() } -> std::convertible_to<std::size_t>;
  { encode(enc, text) } -> std::convertible_to<std::vector<float>>;
};

/// W^T f, accumulated in double.
template <class Real>
std::vector<double> embed_features(const BasicEncoderModel<Real>& model,
                                   const FeatureVector& features) {
  std::vector<double> out(model.dim(), 0.0);
  for (const auto& [bucket, weight] : features.entries) {
    if (bucket >= model.buckets())
      throw std::invalid_argument("feature bucket exceeds model bucket count");
    auto row = model.row(bucket);
    for (std::uint32_t j = 0; j < model.dim(); ++j)
      out[j] += static_cast<double>(weight) * static_cast<double>(row[j]);
  }
  return out;
}

template <class Real>
std::vector<Real> encode(const BasicEncoderModel<Real>& model,
                         std::string_view text) {
  auto acc = embed_features(model, model.features(text));
  return std::vector<Real>(acc.begin(), acc.end());
}

template <class A, class B>
double score_from_embeddings(std::span<const A> x, std::span<const B> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("embedding dimension mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j)
    s += static_cast<double>(x[j]) * static_cast<double>(y[j]);
  return s;
}

template <class Real>
double score(const BasicEncoderModel<Real>& model, std::string_view x,
             std::string_view y) {
  const auto ex = encode(model, x);
  const auto ey = encode(model, y);
  return score_from_embeddings(std::span<const Real>(ex), std::span<const Real>(ey));
}

struct FeaturePair {
  FeatureVector message;
  FeatureVector reply;
};

/// Loss plus the gradient w.r.t. the projection. Only rows touched by the
/// batch can be non-zero, so the gradient is stored row-sparse.
struct LossAndGradient {
  double loss = 0.0;
  std::uint32_t dim = 0;
  std::vector<std::uint32_t> rows;  // sorted bucket ids
  std::vector<double> values;       // rows.size() x dim

  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * dim, dim};
  }

  /// dL/dW[bucket][col]; zero for rows outside the batch.
  double at(std::uint32_t bucket, std::uint32_t col) const {
    auto it = std::lower_bound(rows.begin(), rows.end(), bucket);
    if (it == rows.end() || *it != bucket) return 0.0;
    return values[static_cast<std::size_t>(it - rows.begin()) * dim + col];
  }
};

template <class Real>
LossAndGradient symmetric_loss(const BasicEncoderModel<Real>& model,
                               std::span<const FeaturePair> batch) {
  const std::size_t n = batch.size();
  if (n == 0) throw std::invalid_argument("batch must contain at least one pair");
  const std::uint32_t d = model.dim();

  std::vector<std::vector<double>> xs, ys;
  xs.reserve(n);
  ys.reserve(n);
  for (const auto& pair : batch) {
    xs.push_back(embed_features(model, pair.message));
    ys.push_back(embed_features(model, pair.reply));
  }

  std::vector<double> s(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      const double v = score_from_embeddings(std::span<const double>(xs[a]),
                                             std::span<const double>(ys[b]));
      if (!std::isfinite(v))
        throw std::runtime_error("non-finite matching score; training diverged");
      s[a * n + b] = v;
    }

  // Per-pair shift m_i and shifted denominator, without the subtraction:
  // den_i = sum_j e^{s_ij - m_i} + sum_{j != i} e^{s_ji - m_i}
  std::vector<double> shift(n), den(n);
  LossAndGradient result;
  result.dim = d;
  for (std::size_t i = 0; i < n; ++i) {
    double m = s[i * n + i];
    for (std::size_t j = 0; j < n; ++j)
      m = std::max({m, s[i * n + j], s[j * n + i]});
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      acc += std::exp(s[i * n + j] - m);
      if (j != i) acc += std::exp(s[j * n + i] - m);
    }
    shift[i] = m;
    den[i] = acc;
    result.loss -= (s[i * n + i] - m) - std::log(acc);
  }
  result.loss /= static_cast<double>(n);

  // dL/ds_ab = (e^{s_ab-m_a}/den_a + e^{s_ab-m_b}/den_b - [a=b](1 + e^{s_aa-m_a}/den_a)) / n
  std::vector<double> gs(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      const double v = s[a * n + b];
      double g = std::exp(v - shift[a]) / den[a] + std::exp(v - shift[b]) / den[b];
      if (a == b) g -= 1.0 + std::exp(v - shift[a]) / den[a];
      gs[a * n + b] = g / static_cast<double>(n);
    }

  // dL/dx_a = sum_b G_ab y_b ; dL/dy_b = sum_a G_ab x_a
  std::vector<std::vector<double>> gx(n, std::vector<double>(d, 0.0));
  std::vector<std::vector<double>> gy(n, std::vector<double>(d, 0.0));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      const double g = gs[a * n + b];
      for (std::uint32_t j = 0; j < d; ++j) {
        gx[a][j] += g * ys[b][j];
        gy[b][j] += g * xs[a][j];
      }
    }

  std::map<std::uint32_t, std::vector<double>> acc_rows;
  auto scatter = [&](const FeatureVector& fv, const std::vector<double>& g) {
    for (const auto& [bucket, weight] : fv.entries) {
      auto& row = acc_rows[bucket];
      if (row.empty()) row.assign(d, 0.0);
      for (std::uint32_t j = 0; j < d; ++j) row[j] += weight * g[j];
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    scatter(batch[i].message, gx[i]);
    scatter(batch[i].reply, gy[i]);
  }
  result.rows.reserve(acc_rows.size());
  result.values.reserve(acc_rows.size() * d);
  for (auto& [bucket, row] : acc_rows) {
    result.rows.push_back(bucket);
    result.values.insert(result.values.end(), row.begin(), row.end());
  }
  return result;
}

template <class Real>
LossAndGradient symmetric_loss(
    const BasicEncoderModel<Real>& model,
    std::span<const std::pair<std::string, std::string>> batch) {
  std::vector<FeaturePair> features;
  features.reserve(batch.size());
  for (const auto& [x, y] : batch)
    features.push_back({model.features(x), model.features(y)});
  return symmetric_loss(model, std::span<const FeaturePair>(features));
}

struct TrainConfig {
  std::size_t epochs = 3;
  std::size_t batch_size = 8;
  std::uint32_t dim = 256;
  std::uint64_t buckets = std::uint64_t{1} << 18;
  double learning_rate = 0.05;
  double init_scale = 0.05;
  std::uint64_t seed = 0;
  std::uint64_t hash_seed = kDefaultHashSeed;
};

/// Fixed partition of `count` items into shuffled batches.
inline std::vector<std::vector<std::size_t>> make_batches(std::size_t count,
                                                          std::size_t batch_size,
                                                          std::uint64_t seed) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be > 0");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < count; i += batch_size)
    batches.emplace_back(order.begin() + i,
                         order.begin() + std::min(count, i + batch_size));
  return batches;
}

template <class Real>
std::vector<FeaturePair> featurize_pairs(
    const BasicEncoderModel<Real>& model,
    std::span<const std::pair<std::string, std::string>> data) {
  std::vector<FeaturePair> out;
  out.reserve(data.size());
  for (const auto& [x, y] : data)
    out.push_back({model.features(x), model.features(y)});
  return out;
}

/// Mean symmetric loss over a fixed seeded batching of the data.
template <class Real>
double mean_batch_loss(const BasicEncoderModel<Real>& model,
                       std::span<const FeaturePair> data,
                       std::size_t batch_size, std::uint64_t seed) {
  double total = 0.0;
  const auto batches = make_batches(data.size(), batch_size, seed);
  std::vector<FeaturePair> scratch;
  for (const auto& idx : batches) {
    scratch.clear();
    for (auto i : idx) scratch.push_back(data[i]);
    total += symmetric_loss(model, std::span<const FeaturePair>(scratch)).loss;
  }
  return batches.empty() ? 0.0 : total / static_cast<double>(batches.size());
}

/// SGD on the symmetric loss from `model`, step decaying linearly to zero.
template <class Real>
void train_in_place(BasicEncoderModel<Real>& model,
                    std::span<const FeaturePair> data, const TrainConfig& config) {
  if (data.empty()) throw std::invalid_argument("training dataset is empty");
  if (config.learning_rate <= 0.0 || !std::isfinite(config.learning_rate))
    throw std::invalid_argument("learning rate must be positive");
  const std::size_t steps_per_epoch =
      (data.size() + config.batch_size - 1) / std::max<std::size_t>(1, config.batch_size);
  const double total_steps = static_cast<double>(steps_per_epoch * config.epochs);
  std::size_t step = 0;
  std::vector<FeaturePair> scratch;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto batches =
        make_batches(data.size(), config.batch_size, mix64(config.seed + epoch + 1));
    for (const auto& idx : batches) {
      scratch.clear();
      for (auto i : idx) scratch.push_back(data[i]);
      const auto lg = symmetric_loss(model, std::span<const FeaturePair>(scratch));
      const double lr = config.learning_rate * (1.0 - step / total_steps);
      for (std::size_t r = 0; r < lg.rows.size(); ++r) {
        auto w = model.row(lg.rows[r]);
        auto g = lg.row(r);
        for (std::uint32_t j = 0; j < model.dim(); ++j)
          w[j] = static_cast<Real>(w[j] - lr * g[j]);
      }
      ++step;
    }
  }
}

inline EncoderModel initial_model(const TrainConfig& config) {
  return EncoderModel::random(config.buckets, config.dim, config.seed,
                              config.init_scale, config.hash_seed);
}

inline EncoderModel train(std::span<const std::pair<std::string, std::string>> dataset,
                          const TrainConfig& config) {
  if (dataset.empty()) throw std::invalid_argument("training dataset is empty");
  EncoderModel model = initial_model(config);
  const auto features = featurize_pairs(model, dataset);
  train_in_place(model, std::span<const FeaturePair>(features), config);
  return model;
}

// Model file, little-endian:
//   "SMSR" | version u32 | B u64 | d u32 | hash seed u64 | B*d f32 row-major
inline void save_model(const EncoderModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  io::write_magic(out, "SMSR");
  io::write_le<std::uint32_t>(out, kModelFormatVersion);
  io::write_le<std::uint64_t>(out, model.buckets());
  io::write_le<std::uint32_t>(out, model.dim());
  io::write_le<std::uint64_t>(out, model.hash_seed());
  for (float w : model.weights()) io::write_f32(out, w);
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline EncoderModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  io::expect_magic(in, "SMSR", path);
  const auto version = io::read_le<std::uint32_t>(in);
  if (version != kModelFormatVersion)
    throw std::runtime_error(path + ": unsupported model version " +
                             std::to_string(version));
  const auto buckets = io::read_le<std::uint64_t>(in);
  const auto dim = io::read_le<std::uint32_t>(in);
  const auto seed = io::read_le<std::uint64_t>(in);
  EncoderModel model(buckets, dim, seed);
  for (float& w : model.weights()) w = io::read_f32(in);
  if (!model.all_finite()) throw std::runtime_error(path + ": non-finite weights");
  return model;
}

/// Row-major R x d matrix of 32-bit floats.
struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::uint32_t dim = 0;
  std::vector<float> values;

  std::span<const float> row(std::size_t i) const {
    return {values.data() + i * dim, dim};
  }
  std::span<float> row(std::size_t i) { return {values.data() + i * dim, dim}; }
};

// Embedding cache, little-endian:
//   "SEMB" | version u32 | rows u64 | d u32 | rows*d f32
// plus a UTF-8 sidecar with one candidate text per line in row order.
inline void save_embedding_cache(const EmbeddingMatrix& matrix,
                                 std::span<const std::string> texts,
                                 const std::string& bin_path,
                                 const std::string& text_path) {
  if (texts.size() != matrix.rows)
    throw std::invalid_argument("text count does not match embedding rows");
  std::ofstream out(bin_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + bin_path);
  io::write_magic(out, "SEMB");
  io::write_le<std::uint32_t>(out, kEmbeddingFormatVersion);
  io::write_le<std::uint64_t>(out, matrix.rows);
  io::write_le<std::uint32_t>(out, matrix.dim);
  for (float v : matrix.values) io::write_f32(out, v);
  if (!out) throw std::runtime_error("write failed: " + bin_path);

  std::ofstream side(text_path, std::ios::binary);
  if (!side) throw std::runtime_error("cannot open for writing: " + text_path);
  for (const auto& t : texts) {
    if (t.find('\n') != std::string::npos)
      throw std::invalid_argument("candidate text contains a newline");
    side << t << '\n';
  }
}

inline std::pair<EmbeddingMatrix, std::vector<std::string>> load_embedding_cache(
    const std::string& bin_path, const std::string& text_path) {
  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open embedding cache: " + bin_path);
  io::expect_magic(in, "SEMB", bin_path);
  const auto version = io::read_le<std::uint32_t>(in);
  if (version != kEmbeddingFormatVersion)
    throw std::runtime_error(bin_path + ": unsupported embedding cache version " +
                             std::to_string(version));
  EmbeddingMatrix matrix;
  matrix.rows = io::read_le<std::uint64_t>(in);
  matrix.dim = io::read_le<std::uint32_t>(in);
  matrix.values.resize(matrix.rows * matrix.dim);
  for (float& v : matrix.values) v = io::read_f32(in);

  std::ifstream side(text_path, std::ios::binary);
  if (!side) throw std::runtime_error("cannot open text sidecar: " + text_path);
  std::vector<std::string> texts;
  for (std::string line; std::getline(side, line);) texts.push_back(line);
  if (texts.size() != matrix.rows)
    throw std::runtime_error(text_path + ": line count " + std::to_string(texts.size()) +
                             " does not match " + std::to_string(matrix.rows) +
                             " embedding rows");
  return {std::move(matrix), std::move(texts)};
}

}  // namespace simsr
