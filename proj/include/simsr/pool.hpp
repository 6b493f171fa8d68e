#pragma once

// Candidate pool and single-query retrieval of the shortlist (top-N) and the
// simulation set (top-M with temperature-softmax probabilities).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "simsr/encoder.hpp"
#include "simsr/textmetrics.hpp"

namespace simsr {

struct ReplyCandidate {
  std::uint32_t id = 0;
  std::string text;
  TokenSequence tokens;
};

class CandidatePool {
 public:
  CandidatePool() = default;

  /// `matrix.row(i)` must be the embedding of `texts[i]`.
  CandidatePool(std::vector<std::string> texts, EmbeddingMatrix matrix,
                std::uint64_t model_fingerprint)
      : matrix_(std::move(matrix)), fingerprint_(model_fingerprint) {
    if (texts.empty()) throw std::invalid_argument("candidate pool is empty");
    if (texts.size() != matrix_.rows)
      throw std::invalid_argument("candidate count does not match embedding rows");
    candidates_.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
      auto tokens = tokenize(texts[i]);
      candidates_.push_back(
          {static_cast<std::uint32_t>(i), std::move(texts[i]), std::move(tokens)});
    }
  }

  std::size_t size() const { return candidates_.size(); }
  std::uint32_t dim() const { return matrix_.dim; }
  const ReplyCandidate& candidate(std::size_t i) const { return candidates_.at(i); }
  const std::vector<ReplyCandidate>& candidates() const { return candidates_; }
  std::span<const float> embedding(std::size_t i) const { return matrix_.row(i); }
  const EmbeddingMatrix& matrix() const { return matrix_; }
  std::uint64_t model_fingerprint() const { return fingerprint_; }

 private:
  std::vector<ReplyCandidate> candidates_;
  EmbeddingMatrix matrix_;
  std::uint64_t fingerprint_ = 0;
};

template <class E>
std::uint64_t encoder_fingerprint(const E& enc) {
  if constexpr (requires { enc.fingerprint(); })
    return enc.fingerprint();
  else
    return 0;
}

/// Pool texts are single-line; CR/LF become spaces.
inline std::string normalize_candidate_text(std::string_view text) {
  std::string out(text);
  std::replace_if(out.begin(), out.end(), [](char c) { return c == '\n' || c == '\r'; }, ' ');
  return out;
}

/// Collapses exact duplicates (first occurrence wins) and embeds every
/// remaining reply once.
template <TextEncoder E>
CandidatePool build_pool(std::span<const std::string> replies, const E& model) {
  if (replies.empty()) throw std::invalid_argument("reply list is empty");
  std::vector<std::string> unique;
  std::unordered_set<std::string> seen;
  for (const auto& r : replies) {
    auto text = normalize_candidate_text(r);
    if (seen.insert(text).second) unique.push_back(std::move(text));
  }
  EmbeddingMatrix matrix;
  matrix.rows = unique.size();
  matrix.dim = static_cast<std::uint32_t>(model.dim());
  matrix.values.reserve(matrix.rows * matrix.dim);
  for (const auto& text : unique) {
    const std::vector<float> e = encode(model, text);
    if (e.size() != matrix.dim) throw std::runtime_error("encoder returned wrong dimension");
    matrix.values.insert(matrix.values.end(), e.begin(), e.end());
  }
  return CandidatePool(std::move(unique), std::move(matrix), encoder_fingerprint(model));
}

struct ScoredCandidate {
  std::uint32_t id = 0;
  double score = 0.0;
};

/// Top-N by matching score, best first.
struct Shortlist {
  std::vector<ScoredCandidate> entries;
  std::size_t size() const { return entries.size(); }
};

struct SimulatedReply {
  std::uint32_t id = 0;
  double score = 0.0;
  double probability = 0.0;
};

/// Top-M by matching score with p = softmax(score / temperature) over the M.
struct SimulationSet {
  std::vector<SimulatedReply> entries;
  double temperature = 10.0;
  std::size_t size() const { return entries.size(); }
  std::vector<double> probabilities() const {
    std::vector<double> p;
    p.reserve(entries.size());
    for (const auto& e : entries) p.push_back(e.probability);
    return p;
  }
};

struct Retrieval {
  Shortlist shortlist;
  SimulationSet simulation;
};

/// softmax(scores / temperature), max-shifted.
inline std::vector<double> softmax_with_temperature(std::span<const double> scores,
                                                    double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw std::invalid_argument("temperature must be positive and finite");
  std::vector<double> p(scores.size());
  if (scores.empty()) return p;
  const double top = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp((scores[i] - top) / temperature);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

/// Exact scan of the pool against a query embedding. Ties go to the lower id.
inline Retrieval retrieve_by_embedding(const CandidatePool& pool,
                                       std::span<const float> query, std::size_t n,
                                       std::size_t m, double temperature) {
  const std::size_t r = pool.size();
  if (n > r) throw std::invalid_argument("N exceeds pool size");
  if (m > r) throw std::invalid_argument("M exceeds pool size");
  if (n == 0 || m == 0) throw std::invalid_argument("N and M must be positive");
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw std::invalid_argument("temperature must be positive and finite");
  if (query.size() != pool.dim())
    throw std::invalid_argument("query embedding dimension mismatch");

  std::vector<double> scores(r);
  for (std::size_t i = 0; i < r; ++i) {
    const float* row = pool.matrix().values.data() + i * pool.dim();
    double s = 0.0;
    for (std::uint32_t j = 0; j < pool.dim(); ++j)
      s += static_cast<double>(query[j]) * static_cast<double>(row[j]);
    scores[i] = s;
  }

  const std::size_t top = std::max(n, m);
  std::vector<std::uint32_t> order(r);
  std::iota(order.begin(), order.end(), 0u);
  std::partial_sort(order.begin(), order.begin() + top, order.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
                    });

  Retrieval out;
  out.shortlist.entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.shortlist.entries.push_back({order[i], scores[order[i]]});

  std::vector<double> sim_scores(m);
  for (std::size_t i = 0; i < m; ++i) sim_scores[i] = scores[order[i]];
  const auto p = softmax_with_temperature(sim_scores, temperature);
  out.simulation.temperature = temperature;
  out.simulation.entries.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    out.simulation.entries.push_back({order[i], sim_scores[i], p[i]});
  return out;
}

/// Encodes the message once and serves both the shortlist and the
/// simulation set from the same score vector.
template <TextEncoder E>
Retrieval retrieve(const CandidatePool& pool, std::string_view message, const E& model,
                   std::size_t n, std::size_t m, double temperature) {
  const std::vector<float> query = encode(model, message);
  return retrieve_by_embedding(pool, query, n, m, temperature);
}

inline std::string fingerprint_hex(std::uint64_t fp) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, fp >>= 4) s[static_cast<std::size_t>(i)] = kHex[fp & 0xf];
  return s;
}

inline std::uint64_t parse_fingerprint_hex(const std::string& s) {
  return std::stoull(s, nullptr, 16);
}

inline std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace pool_files {
inline constexpr const char* kEmbeddings = "embeddings.semb";
inline constexpr const char* kTexts = "replies.txt";
inline constexpr const char* kManifest = "manifest.json";
}  // namespace pool_files

/// Writes <dir>/embeddings.semb, <dir>/replies.txt and <dir>/manifest.json.
inline void save_pool(const CandidatePool& pool, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> texts;
  texts.reserve(pool.size());
  for (const auto& c : pool.candidates()) texts.push_back(c.text);
  save_embedding_cache(pool.matrix(), texts, (dir / pool_files::kEmbeddings).string(),
                       (dir / pool_files::kTexts).string());
  nlohmann::json manifest = {
      {"format", "simsr-pool"},
      {"version", 1},
      {"R", pool.size()},
      {"d", pool.dim()},
      {"model_fingerprint", fingerprint_hex(pool.model_fingerprint())},
      {"build_timestamp", utc_timestamp()},
  };
  std::ofstream out(dir / pool_files::kManifest);
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

inline CandidatePool load_pool(const std::filesystem::path& dir) {
  const auto manifest_path = dir / pool_files::kManifest;
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open pool manifest: " + manifest_path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(manifest_path.string() + ": " + e.what());
  }
  auto [matrix, texts] = load_embedding_cache((dir / pool_files::kEmbeddings).string(),
                                              (dir / pool_files::kTexts).string());
  if (manifest.at("R").get<std::size_t>() != matrix.rows ||
      manifest.at("d").get<std::uint32_t>() != matrix.dim)
    throw std::runtime_error(manifest_path.string() + ": shape disagrees with embedding cache");
  const auto fp = parse_fingerprint_hex(manifest.at("model_fingerprint").get<std::string>());
  return CandidatePool(std::move(texts), std::move(matrix), fp);
}

}  // namespace simsr
