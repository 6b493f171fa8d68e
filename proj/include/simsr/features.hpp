#pragma once

// Hashed bag-of-n-gram features feeding the linear dual encoder.
//
// Hash (fixed by the model file format):
//   h = FNV-1a-64(feature bytes)            offset 0xcbf29ce484222325,
//                                           prime  0x100000001b3
//   h = mix64(h ^ seed)                     splitmix64 finalizer
//   bucket = h mod B
// Feature strings are the unigram tokens and "left_right" for bigrams.
// Tokens never contain '_', so the bigram key is unambiguous.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "simsr/textmetrics.hpp"

namespace simsr {

inline constexpr std::size_t kMaxInputTokens = 64;
inline constexpr std::uint64_t kDefaultHashSeed = 0x5157'5352'0000'0001ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

inline constexpr std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline constexpr std::uint64_t feature_hash(std::string_view feature,
                                            std::uint64_t seed) {
  return mix64(fnv1a64(feature) ^ seed);
}

/// Sparse vector of (bucket, weight), sorted by bucket, no duplicates.
struct FeatureVector {
  std::vector<std::pair<std::uint32_t, float>> entries;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
  bool operator==(const FeatureVector&) const = default;
};

/// Unigram + bigram counts over the last 64 tokens, hashed into B buckets.
inline FeatureVector featurize(std::string_view text, std::uint64_t buckets,
                               std::uint64_t seed = kDefaultHashSeed) {
  if (buckets < 2) throw std::invalid_argument("bucket count must be >= 2");
  if (buckets > (std::uint64_t{1} << 32))
    throw std::invalid_argument("bucket count must fit in 32 bits");
  TokenSequence tokens = tokenize(text);
  if (tokens.size() > kMaxInputTokens)
    tokens.erase(tokens.begin(), tokens.end() - kMaxInputTokens);

  std::vector<std::uint32_t> ids;
  ids.reserve(tokens.size() * 2);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    ids.push_back(static_cast<std::uint32_t>(feature_hash(tokens[i], seed) % buckets));
    if (i + 1 < tokens.size()) {
      std::string bigram = tokens[i] + "_" + tokens[i + 1];
      ids.push_back(static_cast<std::uint32_t>(feature_hash(bigram, seed) % buckets));
    }
  }
  std::sort(ids.begin(), ids.end());

  FeatureVector fv;
  for (std::uint32_t id : ids) {
    if (!fv.entries.empty() && fv.entries.back().first == id)
      fv.entries.back().second += 1.0f;
    else
      fv.entries.emplace_back(id, 1.0f);
  }
  return fv;
}

}  // namespace simsr
