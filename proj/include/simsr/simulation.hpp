#pragma once

// Model-based simulation over the shortlist.
//
// A K-tuple of shortlist rows is valued against the simulated replies by
//
//   E[h] = sum_m P[m] * max_{k in tuple} C[k][m]
//
// where C[i][m] is the term-level F1 between shortlist reply i and simulated
// reply m, and P is the world model's distribution over the simulation set.
// Four search strategies pick the tuple. Every strategy breaks ties towards
// the lexicographically smallest index tuple.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "simsr/textmetrics.hpp"

namespace simsr {

/// Dense rows x cols matrix of similarities in [0, 1].
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  SimilarityMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols)
      throw std::invalid_argument("similarity matrix size mismatch");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t i, std::size_t m) const { return values_[i * cols_ + m]; }
  double& operator()(std::size_t i, std::size_t m) { return values_[i * cols_ + m]; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// C[i][m] = term_f1(shortlist[i], simulated[m]), each pair computed once.
inline SimilarityMatrix similarity_matrix(std::span<const TokenSequence> shortlist,
                                          std::span<const TokenSequence> simulated) {
  if (shortlist.empty() || simulated.empty())
    throw std::invalid_argument("similarity matrix needs at least one row and column");
  auto sorted = [](std::span<const TokenSequence> seqs) {
    std::vector<TokenSequence> out(seqs.begin(), seqs.end());
    for (auto& s : out) std::sort(s.begin(), s.end());
    return out;
  };
  const auto rows = sorted(shortlist);
  const auto cols = sorted(simulated);
  SimilarityMatrix c(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t m = 0; m < cols.size(); ++m)
      c(i, m) = overlap_f1(
          sorted_overlap(rows[i].begin(), rows[i].end(), cols[m].begin(), cols[m].end()),
          rows[i].size(), cols[m].size());
  return c;
}

struct ReplySet {
  std::vector<std::size_t> indices;  // ascending shortlist rows
  double expected_score = 0.0;
  std::uint64_t tuples_evaluated = 0;
};

namespace detail {

// Unchecked valuation used inside the search loops.
template <class Indices>
double tuple_value(const SimilarityMatrix& c, std::span<const double> p,
                   const Indices& indices) {
  double total = 0.0;
  for (std::size_t m = 0; m < c.cols(); ++m) {
    double best = 0.0;
    for (std::size_t k : indices) best = std::max(best, c(k, m));
    total += p[m] * best;
  }
  return total;
}

inline void check_inputs(const SimilarityMatrix& c, std::span<const double> p,
                         std::size_t k) {
  if (p.size() != c.cols())
    throw std::invalid_argument("probability vector length must equal simulation count");
  if (c.rows() == 0) throw std::invalid_argument("empty shortlist");
  if (k == 0) throw std::invalid_argument("K must be positive");
  if (k > c.rows()) throw std::invalid_argument("K exceeds shortlist size N");
}

}  // namespace detail

/// sum_m P[m] * max over the chosen rows of C[row][m].
inline double expected_score(const SimilarityMatrix& c, std::span<const double> p,
                             std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("index set is empty");
  if (p.size() != c.cols())
    throw std::invalid_argument("probability vector length must equal simulation count");
  std::vector<std::size_t> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("indices must be distinct");
  if (sorted.back() >= c.rows()) throw std::out_of_range("row index out of range");
  return detail::tuple_value(c, p, sorted);
}

/// n choose k, saturating at uint64 max.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > std::numeric_limits<std::uint64_t>::max())
      return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(r);
}

/// Every K-subset in lexicographic order; C(N, K) evaluations.
inline ReplySet exhaustive_search(const SimilarityMatrix& c, std::span<const double> p,
                                  std::size_t k) {
  detail::check_inputs(c, p, k);
  const std::size_t n = c.rows();
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  ReplySet best;
  best.expected_score = -1.0;
  while (true) {
    const double v = detail::tuple_value(c, p, idx);
    ++best.tuples_evaluated;
    if (v > best.expected_score) {
      best.expected_score = v;
      best.indices = idx;
    }
    // Advance to the next combination.
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return best;
}

/// Starts from all N rows and repeatedly drops the row whose removal leaves
/// the highest-valued subset, until K remain. Evaluates sum_{L=K+1..N} L
/// subsets.
inline ReplySet ablative_search(const SimilarityMatrix& c, std::span<const double> p,
                                std::size_t k) {
  detail::check_inputs(c, p, k);
  std::vector<std::size_t> current(c.rows());
  std::iota(current.begin(), current.end(), std::size_t{0});
  ReplySet out;
  std::vector<std::size_t> without;
  double last = -1.0;
  while (current.size() > k) {
    double best = -1.0;
    std::size_t best_pos = 0;
    for (std::size_t l = 0; l < current.size(); ++l) {
      without.assign(current.begin(), current.end());
      without.erase(without.begin() + static_cast<std::ptrdiff_t>(l));
      const double v = detail::tuple_value(c, p, without);
      ++out.tuples_evaluated;
      // >= : among equal subsets, dropping the later row keeps the
      // lexicographically smaller remainder.
      if (v >= best) {
        best = v;
        best_pos = l;
      }
    }
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(best_pos));
    last = best;
  }
  out.indices = current;
  out.expected_score = last >= 0.0 ? last : detail::tuple_value(c, p, current);
  return out;
}

/// Grows the set from empty, each step adding the row that maximises the
/// value of the union. Evaluates sum_{i=0..K-1} (N - i) subsets.
inline ReplySet greedy_search(const SimilarityMatrix& c, std::span<const double> p,
                              std::size_t k) {
  detail::check_inputs(c, p, k);
  const std::size_t n = c.rows();
  std::vector<bool> taken(n, false);
  std::vector<std::size_t> chosen, trial;
  ReplySet out;
  double best = 0.0;
  for (std::size_t step = 0; step < k; ++step) {
    best = -1.0;
    std::size_t best_row = 0;
    for (std::size_t r = 0; r < n; ++r) {
      if (taken[r]) continue;
      trial = chosen;
      trial.push_back(r);
      const double v = detail::tuple_value(c, p, trial);
      ++out.tuples_evaluated;
      if (v > best) {
        best = v;
        best_row = r;
      }
    }
    taken[best_row] = true;
    chosen.push_back(best_row);
  }
  std::sort(chosen.begin(), chosen.end());
  out.indices = chosen;
  out.expected_score = best;
  return out;
}

/// Best of `samples` distinct K-subsets drawn uniformly without replacement.
/// When samples >= C(N, K) this is exhaustive search.
inline ReplySet sample_rank_search(const SimilarityMatrix& c, std::span<const double> p,
                                   std::size_t k, std::size_t samples, std::uint64_t seed) {
  detail::check_inputs(c, p, k);
  if (samples == 0) throw std::invalid_argument("samples must be >= 1");
  const std::size_t n = c.rows();
  if (samples >= binomial(n, k)) return exhaustive_search(c, p, k);

  std::mt19937_64 rng(seed);
  std::set<std::vector<std::size_t>> drawn;
  std::vector<std::size_t> pool(n);
  while (drawn.size() < samples) {
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    // Partial Fisher-Yates: the first k slots are a uniform k-subset.
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    std::vector<std::size_t> tuple(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(tuple.begin(), tuple.end());
    drawn.insert(std::move(tuple));
  }

  ReplySet best;
  best.expected_score = -1.0;
  for (const auto& tuple : drawn) {  // lexicographic order
    const double v = detail::tuple_value(c, p, tuple);
    ++best.tuples_evaluated;
    if (v > best.expected_score) {
      best.expected_score = v;
      best.indices = tuple;
    }
  }
  return best;
}

enum class SearchStrategy { exhaustive, ablative, greedy, sample_rank };

struct SearchOptions {
  std::size_t samples = 25;
  std::uint64_t seed = 0;
};

inline ReplySet search(SearchStrategy strategy, const SimilarityMatrix& c,
                       std::span<const double> p, std::size_t k,
                       const SearchOptions& options = {}) {
  switch (strategy) {
    case SearchStrategy::exhaustive:
      return exhaustive_search(c, p, k);
    case SearchStrategy::ablative:
      return ablative_search(c, p, k);
    case SearchStrategy::greedy:
      return greedy_search(c, p, k);
    case SearchStrategy::sample_rank:
      return sample_rank_search(c, p, k, options.samples, options.seed);
  }
  throw std::invalid_argument("unknown search strategy");
}

}  // namespace simsr
