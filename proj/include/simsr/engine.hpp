#pragma once

// End-to-end suggestion: retrieve -> similarity matrix -> search, plus the
// baseline selectors behind the same entry point.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "simsr/baselines.hpp"
#include "simsr/encoder.hpp"
#include "simsr/pool.hpp"
#include "simsr/simulation.hpp"

namespace simsr {

enum class Strategy {
  matching,
  mmr,
  topic,
  simsr_individual,
  exhaustive,
  ablative,
  greedy,
  sample_rank,
};

inline std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::matching: return "matching";
    case Strategy::mmr: return "mmr";
    case Strategy::topic: return "topic";
    case Strategy::simsr_individual: return "simsr-individual";
    case Strategy::exhaustive: return "exhaustive";
    case Strategy::ablative: return "ablative";
    case Strategy::greedy: return "greedy";
    case Strategy::sample_rank: return "sample_rank";
  }
  return "unknown";
}

/// Accepts the system names (matching, mmr, topic, simsr, simsr-individual)
/// and the search names. "simsr" is ablative search.
inline std::optional<Strategy> parse_strategy(std::string_view name) {
  if (name == "matching") return Strategy::matching;
  if (name == "mmr") return Strategy::mmr;
  if (name == "topic") return Strategy::topic;
  if (name == "simsr-individual" || name == "simsr_individual")
    return Strategy::simsr_individual;
  if (name == "simsr" || name == "ablative") return Strategy::ablative;
  if (name == "exhaustive") return Strategy::exhaustive;
  if (name == "greedy") return Strategy::greedy;
  if (name == "sample_rank" || name == "sample-rank" || name == "sample-and-rank")
    return Strategy::sample_rank;
  return std::nullopt;
}

inline std::optional<SearchStrategy> search_strategy(Strategy s) {
  switch (s) {
    case Strategy::exhaustive: return SearchStrategy::exhaustive;
    case Strategy::ablative: return SearchStrategy::ablative;
    case Strategy::greedy: return SearchStrategy::greedy;
    case Strategy::sample_rank: return SearchStrategy::sample_rank;
    default: return std::nullopt;
  }
}

inline bool needs_simulation(Strategy s) {
  return search_strategy(s).has_value() || s == Strategy::simsr_individual;
}

struct SuggestConfig {
  std::size_t k = 3;
  std::size_t n = 15;   // clamped to the pool size
  std::size_t m = 25;   // clamped to the pool size
  double tau = 10.0;
  Strategy strategy = Strategy::ablative;
  std::size_t samples = 25;
  std::uint64_t seed = 0;
  double mmr_lambda = 0.5;
  // Also value baseline selections under the simulation (costs one
  // similarity matrix for strategies that do not need it).
  bool value_selection = true;
};

struct StageTimings {
  double retrieve_ms = 0.0;
  double simulate_ms = 0.0;
  double total_ms = 0.0;
};

struct Suggestion {
  SuggestConfig config;  // effective values after clamping
  ReplySet selection;    // indices into the shortlist
  std::vector<std::uint32_t> reply_ids;
  std::vector<std::string> replies;
  Retrieval retrieval;
  bool valued = false;  // selection.expected_score is meaningful
  StageTimings timings;
};

/// Clamps N and M to the pool and checks the remaining ranges.
inline SuggestConfig effective_config(SuggestConfig config, std::size_t pool_size) {
  if (config.k == 0) throw std::invalid_argument("K must be positive");
  if (config.k > pool_size) throw std::invalid_argument("K exceeds pool");
  if (config.n == 0 || config.m == 0) throw std::invalid_argument("N and M must be positive");
  config.n = std::min(config.n, pool_size);
  config.m = std::min(config.m, pool_size);
  if (config.k > config.n) throw std::invalid_argument("K exceeds N");
  if (!(config.tau > 0.0) || !std::isfinite(config.tau))
    throw std::invalid_argument("temperature must be positive and finite");
  if (config.samples == 0) throw std::invalid_argument("samples must be >= 1");
  return config;
}

/// Verifies once, at load time, that the pool was embedded by `model`.
template <TextEncoder E>
void check_compatible(const E& model, const CandidatePool& pool) {
  if (model.dim() != pool.dim())
    throw std::invalid_argument("model dimension does not match pool");
  const auto fp = encoder_fingerprint(model);
  if (fp != 0 && pool.model_fingerprint() != 0 && fp != pool.model_fingerprint())
    throw std::invalid_argument("pool was built with a different model");
}

template <TextEncoder E>
Suggestion suggest(const E& model, const CandidatePool& pool, std::string_view message,
                   const SuggestConfig& requested,
                   const TopicLabeler& labeler = default_topic_labeler()) {
  using clock = std::chrono::steady_clock;
  auto ms = [](clock::duration d) {
    return std::chrono::duration<double, std::milli>(d).count();
  };
  const auto t0 = clock::now();

  Suggestion out;
  out.config = effective_config(requested, pool.size());
  const auto& cfg = out.config;
  if (model.dim() != pool.dim())
    throw std::invalid_argument("model dimension does not match pool");

  out.retrieval = retrieve(pool, message, model, cfg.n, cfg.m, cfg.tau);
  const auto t1 = clock::now();

  const auto& shortlist = out.retrieval.shortlist;
  const auto& simulation = out.retrieval.simulation;
  const bool simulate = needs_simulation(cfg.strategy) || cfg.value_selection;
  SimilarityMatrix c;
  std::vector<double> p;
  if (simulate) {
    std::vector<TokenSequence> rows, cols;
    rows.reserve(shortlist.size());
    cols.reserve(simulation.size());
    for (const auto& e : shortlist.entries) rows.push_back(pool.candidate(e.id).tokens);
    for (const auto& e : simulation.entries) cols.push_back(pool.candidate(e.id).tokens);
    c = similarity_matrix(rows, cols);
    p = simulation.probabilities();
  }

  if (auto search_kind = search_strategy(cfg.strategy)) {
    out.selection = search(*search_kind, c, p, cfg.k, {cfg.samples, cfg.seed});
  } else {
    switch (cfg.strategy) {
      case Strategy::matching:
        out.selection = topk_select(shortlist, cfg.k);
        break;
      case Strategy::mmr: {
        std::vector<TokenSequence> tokens;
        for (const auto& e : shortlist.entries) tokens.push_back(pool.candidate(e.id).tokens);
        out.selection = mmr_select(shortlist, tokens, cfg.k, cfg.mmr_lambda);
        break;
      }
      case Strategy::topic: {
        std::vector<std::string> texts;
        for (const auto& e : shortlist.entries) texts.push_back(pool.candidate(e.id).text);
        out.selection = topic_select(texts, labeler, cfg.k);
        break;
      }
      case Strategy::simsr_individual:
        out.selection = individual_sim_select(c, p, cfg.k);
        break;
      default:
        throw std::logic_error("unhandled strategy");
    }
    if (simulate) out.selection.expected_score = expected_score(c, p, out.selection.indices);
  }
  out.valued = simulate;
  const auto t2 = clock::now();

  for (auto idx : out.selection.indices) {
    const auto id = shortlist.entries[idx].id;
    out.reply_ids.push_back(id);
    out.replies.push_back(pool.candidate(id).text);
  }
  out.timings = {ms(t1 - t0), ms(t2 - t1), ms(clock::now() - t0)};
  return out;
}

}  // namespace simsr
