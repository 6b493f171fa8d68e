#pragma once

// Comparison selectors: plain top-K matching, MMR, topic-filtered top-K and
// the individual-expectation ablation of the simulation.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "simsr/features.hpp"
#include "simsr/pool.hpp"
#include "simsr/simulation.hpp"
#include "simsr/textmetrics.hpp"

namespace simsr {

/// Deterministic text -> topic label.
using TopicLabeler = std::function<std::string(std::string_view)>;

namespace detail {

inline void check_k(std::size_t k, std::size_t n) {
  if (k == 0) throw std::invalid_argument("K must be positive");
  if (k > n) throw std::invalid_argument("K exceeds shortlist size N");
}

inline const std::unordered_set<std::string_view>& stopwords() {
  static const std::unordered_set<std::string_view> words = {
      "a",    "an",   "and",  "are",  "as",   "at",   "be",   "but",  "by",
      "do",   "for",  "have", "he",   "her",  "his",  "i",    "if",   "in",
      "is",   "it",   "its",  "m",    "me",   "my",   "no",   "not",  "of",
      "on",   "or",   "s",    "she",  "so",   "that", "the",  "they", "this",
      "to",   "t",    "was",  "we",   "what", "with", "you",  "your", "yes",
      "ll",   "re",   "ve",   "d",    "just", "am",   "too",  "all",  "can"};
  return words;
}

}  // namespace detail

/// Stand-in for a trained topic classifier: the most frequent non-stopword
/// token (earliest on ties), hashed into 16 buckets. Texts without content
/// tokens share one label.
inline std::string default_topic_label(std::string_view text) {
  const auto tokens = tokenize(text);
  std::map<std::string_view, std::size_t> counts;
  std::string_view best;
  std::size_t best_count = 0;
  for (const auto& t : tokens) {
    if (detail::stopwords().count(t)) continue;
    const std::size_t c = ++counts[t];
    if (c > best_count) {
      best_count = c;
      best = t;
    }
  }
  if (best_count == 0) return "topic-none";
  const auto bucket = mix64(fnv1a64(best)) % 16;
  return "topic-" + std::to_string(bucket);
}

inline TopicLabeler default_topic_labeler() { return &default_topic_label; }

/// The first K shortlist entries.
inline ReplySet topk_select(const Shortlist& shortlist, std::size_t k) {
  detail::check_k(k, shortlist.size());
  ReplySet out;
  out.indices.resize(k);
  std::iota(out.indices.begin(), out.indices.end(), std::size_t{0});
  return out;
}

/// Incremental maximal marginal relevance. Starts from the top entry, then
/// adds argmax  lambda * g_norm(i) - (1 - lambda) * max_{s in S} term_f1(i, s)
/// where g_norm is the min-max normalised matching score over the shortlist
/// (all ones when every score is equal). Ties go to the lower index.
inline ReplySet mmr_select(const Shortlist& shortlist,
                           std::span<const TokenSequence> tokens, std::size_t k,
                           double lambda) {
  const std::size_t n = shortlist.size();
  detail::check_k(k, n);
  if (tokens.size() != n)
    throw std::invalid_argument("token view must match shortlist length");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("MMR lambda must lie in [0, 1]");

  double lo = shortlist.entries.front().score, hi = lo;
  for (const auto& e : shortlist.entries) {
    lo = std::min(lo, e.score);
    hi = std::max(hi, e.score);
  }
  std::vector<double> relevance(n, 1.0);
  if (hi > lo)
    for (std::size_t i = 0; i < n; ++i)
      relevance[i] = (shortlist.entries[i].score - lo) / (hi - lo);

  std::vector<bool> taken(n, false);
  std::vector<double> max_sim(n, 0.0);
  std::vector<std::size_t> chosen;
  std::size_t next = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (relevance[i] > relevance[next]) next = i;
  while (true) {
    taken[next] = true;
    chosen.push_back(next);
    if (chosen.size() == k) break;
    for (std::size_t i = 0; i < n; ++i)
      if (!taken[i]) max_sim[i] = std::max(max_sim[i], term_f1(tokens[i], tokens[next]));
    double best = 0.0;
    bool found = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double v = lambda * relevance[i] - (1.0 - lambda) * max_sim[i];
      if (!found || v > best) {
        best = v;
        next = i;
        found = true;
      }
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return ReplySet{chosen, 0.0, 0};
}

/// Scans labels in shortlist order keeping the first entry of each label.
/// If fewer than K labels exist, the highest-ranked skipped entries fill the
/// remaining slots.
inline ReplySet topic_select_by_labels(std::span<const std::string> labels, std::size_t k) {
  detail::check_k(k, labels.size());
  std::unordered_set<std::string_view> used;
  std::vector<std::size_t> chosen, skipped;
  for (std::size_t i = 0; i < labels.size() && chosen.size() < k; ++i) {
    if (used.insert(labels[i]).second)
      chosen.push_back(i);
    else
      skipped.push_back(i);
  }
  for (std::size_t i = 0; chosen.size() < k; ++i) chosen.push_back(skipped[i]);
  std::sort(chosen.begin(), chosen.end());
  return ReplySet{chosen, 0.0, 0};
}

inline ReplySet topic_select(std::span<const std::string> shortlist_texts,
                             const TopicLabeler& labeler, std::size_t k) {
  std::vector<std::string> labels;
  labels.reserve(shortlist_texts.size());
  for (const auto& t : shortlist_texts) labels.push_back(labeler(t));
  return topic_select_by_labels(labels, k);
}

/// Top-K rows by their individual expectation sum_m P[m] C[n][m], ignoring
/// interactions within the set. Ties go to the lower index.
inline ReplySet individual_sim_select(const SimilarityMatrix& c, std::span<const double> p,
                                      std::size_t k) {
  detail::check_k(k, c.rows());
  if (p.size() != c.cols())
    throw std::invalid_argument("probability vector length must equal simulation count");
  std::vector<double> value(c.rows(), 0.0);
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t m = 0; m < c.cols(); ++m) value[i] += p[m] * c(i, m);
  std::vector<std::size_t> order(c.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return value[a] > value[b]; });
  order.resize(k);
  std::sort(order.begin(), order.end());
  ReplySet out{order, 0.0, c.rows()};
  out.expected_score = detail::tuple_value(c, p, out.indices);
  return out;
}

}  // namespace simsr
