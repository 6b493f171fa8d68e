#pragma once

// Independent reference computations used only by the tests. None of these
// call into the search, retrieval or gradient code they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

struct Instance {
  std::size_t n = 0, m = 0;
  std::vector<std::vector<double>> c;  // n x m
  std::vector<double> p;               // m, sums to 1
};

inline Instance random_instance(std::mt19937_64& rng, std::size_t n, std::size_t m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Instance inst{n, m, std::vector<std::vector<double>>(n, std::vector<double>(m)), {}};
  for (auto& row : inst.c)
    for (auto& v : row) {
      v = u(rng);
      // Exact zeros and ones as produced by term F1 on short texts.
      if (v < 0.15) v = 0.0;
      else if (v > 0.95) v = 1.0;
    }
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    inst.p.push_back(u(rng) + 1e-3);
    total += inst.p.back();
  }
  for (auto& v : inst.p) v /= total;
  return inst;
}

/// sum_m p[m] * max_{r in rows} c[r][m], columns in order.
inline double value(const Instance& inst, const std::vector<std::size_t>& rows) {
  double total = 0.0;
  for (std::size_t j = 0; j < inst.m; ++j) {
    double best = 0.0;
    for (auto r : rows) best = std::max(best, inst.c[r][j]);
    total += inst.p[j] * best;
  }
  return total;
}

struct Best {
  std::vector<std::size_t> rows;
  double value = -1.0;
  std::uint64_t count = 0;
};

/// Enumerates all k-subsets through bitmasks and keeps the best, ties going
/// to the lexicographically smallest sorted index tuple.
inline Best brute_force(const Instance& inst, std::size_t k) {
  Best best;
  const std::uint32_t limit = 1u << inst.n;
  for (std::uint32_t mask = 0; mask < limit; ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < inst.n; ++i)
      if (mask & (1u << i)) rows.push_back(i);
    const double v = value(inst, rows);
    ++best.count;
    if (v > best.value || (v == best.value && rows < best.rows)) {
      best.value = v;
      best.rows = rows;
    }
  }
  return best;
}

/// Central differences of f around each coordinate of x.
inline std::vector<double> central_differences(const std::function<double(std::vector<double>&)>& f,
                                               std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f(x);
    x[i] = orig - h;
    const double down = f(x);
    x[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Direct evaluation of the symmetric loss from a score matrix s (n x n).
inline double symmetric_loss_from_scores(const std::vector<std::vector<double>>& s) {
  const std::size_t n = s.size();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double den = 0.0;
    for (std::size_t j = 0; j < n; ++j) den += std::exp(s[i][j]) + std::exp(s[j][i]);
    den -= std::exp(s[i][i]);
    loss -= std::log(std::exp(s[i][i]) / den);
  }
  return loss / static_cast<double>(n);
}

}  // namespace oracle
