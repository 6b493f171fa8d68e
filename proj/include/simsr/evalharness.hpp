#pragma once

// Dataset ingestion, the offline evaluation protocol and a synthetic corpus
// whose messages admit several reply intents.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "simsr/engine.hpp"
#include "simsr/textmetrics.hpp"

namespace simsr {

struct DialoguePair {
  std::string message;
  std::string reply;
  bool operator==(const DialoguePair&) const = default;
};

/// Prepends persona lines (joined with " | ") and keeps the last 64 tokens.
inline std::string compose_message(const std::vector<std::string>& persona,
                                   std::string_view message) {
  std::string full;
  for (const auto& line : persona) {
    full += line;
    full += " | ";
  }
  full += message;
  return truncate_to_last_tokens(full, kMaxInputTokens);
}

/// JSONL with {"message": str, "reply": str, "persona": [str...]?} per line.
/// Blank lines are ignored.
inline std::vector<DialoguePair> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  std::vector<DialoguePair> pairs;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fail = [&](const std::string& why) {
      return std::runtime_error(path + ":" + std::to_string(lineno) + ": " + why);
    };
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw fail(std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw fail("expected a JSON object");
    if (!obj.contains("message") || !obj["message"].is_string())
      throw fail("missing string field \"message\"");
    if (!obj.contains("reply") || !obj["reply"].is_string())
      throw fail("missing string field \"reply\"");
    std::vector<std::string> persona;
    if (obj.contains("persona")) {
      const auto& p = obj["persona"];
      if (!p.is_array()) throw fail("\"persona\" must be an array of strings");
      for (const auto& item : p) {
        if (!item.is_string()) throw fail("\"persona\" must be an array of strings");
        persona.push_back(item.get<std::string>());
      }
    }
    DialoguePair pair{compose_message(persona, obj["message"].get<std::string>()),
                      obj["reply"].get<std::string>()};
    if (tokenize(pair.message).empty()) throw fail("message has no tokens");
    if (tokenize(pair.reply).empty()) throw fail("reply has no tokens");
    pairs.push_back(std::move(pair));
  }
  if (pairs.empty()) throw std::runtime_error("dataset is empty: " + path);
  return pairs;
}

inline void save_dataset(const std::vector<DialoguePair>& pairs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& p : pairs)
    out << nlohmann::json{{"message", p.message}, {"reply", p.reply}}.dump() << '\n';
}

inline std::vector<std::pair<std::string, std::string>> as_text_pairs(
    const std::vector<DialoguePair>& pairs) {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.emplace_back(p.message, p.reply);
  return out;
}

inline std::vector<std::string> replies_of(const std::vector<DialoguePair>& pairs) {
  std::vector<std::string> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.reply);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

struct SyntheticConfig {
  std::size_t intents = 100;
  std::size_t paraphrases_per_intent = 10;
  std::size_t messages = 150;
  double bimodal_fraction = 0.6;
  double secondary_weight = 0.4;  // probability of the second intent
  std::size_t train_per_message = 24;
  std::size_t test_per_message = 2;
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  std::vector<DialoguePair> train;
  std::vector<DialoguePair> test;
  std::vector<std::string> replies;                  // every surface form
  std::vector<std::vector<std::size_t>> message_intents;  // per message type
};

namespace detail {

// Pronounceable, collision-free pseudo-words: id -> 4 syllables.
inline std::string synthetic_word(std::size_t id) {
  static constexpr const char* kSyl[16] = {"ba", "ko", "mi", "tu", "re", "sa",
                                           "lo", "ni", "du", "fe", "ga", "hi",
                                           "jo", "pu", "ve", "zy"};
  std::string w;
  for (int i = 0; i < 4; ++i, id >>= 4) w += kSyl[id & 0xf];
  return w;
}

}  // namespace detail

/// Builds message types whose replies come from one intent or, for a
/// `bimodal_fraction` of them, from two intents with disjoint vocabularies.
/// Paraphrases of an intent share three core words and differ in two
/// variant words. Training pairs sample one intent per occurrence.
inline SyntheticCorpus make_synthetic(const SyntheticConfig& cfg) {
  if (cfg.intents < 2) throw std::invalid_argument("synthetic corpus needs at least 2 intents");
  if (cfg.paraphrases_per_intent < 1)
    throw std::invalid_argument("paraphrases_per_intent must be >= 1");
  if (cfg.messages < 1) throw std::invalid_argument("messages must be >= 1");
  if (!(cfg.bimodal_fraction >= 0.0 && cfg.bimodal_fraction <= 1.0))
    throw std::invalid_argument("bimodal_fraction must lie in [0, 1]");
  if (!(cfg.secondary_weight > 0.0 && cfg.secondary_weight < 1.0))
    throw std::invalid_argument("secondary_weight must lie in (0, 1)");
  if (cfg.train_per_message < 1) throw std::invalid_argument("train_per_message must be >= 1");

  std::mt19937_64 rng(cfg.seed);
  std::size_t next_word = 0;
  auto fresh = [&] { return detail::synthetic_word(next_word++); };
  auto uniform = [&](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };

  // Enough variant words that C(V, 2) covers the paraphrase count.
  std::size_t variants = 6;
  while (variants * (variants - 1) / 2 < cfg.paraphrases_per_intent) ++variants;

  SyntheticCorpus corpus;
  std::vector<std::vector<std::string>> paraphrases(cfg.intents);
  for (std::size_t i = 0; i < cfg.intents; ++i) {
    std::vector<std::string> core{fresh(), fresh(), fresh()};
    std::vector<std::string> var;
    for (std::size_t v = 0; v < variants; ++v) var.push_back(fresh());
    std::vector<std::pair<std::size_t, std::size_t>> combos;
    for (std::size_t a = 0; a < variants; ++a)
      for (std::size_t b = a + 1; b < variants; ++b) combos.emplace_back(a, b);
    std::shuffle(combos.begin(), combos.end(), rng);
    for (std::size_t p = 0; p < cfg.paraphrases_per_intent; ++p) {
      std::string text = core[0] + " " + core[1] + " " + core[2] + " " +
                         var[combos[p].first] + " " + var[combos[p].second];
      text[0] = static_cast<char>(text[0] - 'a' + 'A');
      text += (p % 2 == 0) ? "." : "!";
      paraphrases[i].push_back(text);
      corpus.replies.push_back(text);
    }
  }

  static const std::vector<std::string> kFillers = {"hey", "so", "well", "um", "ok", "right"};
  std::vector<std::vector<std::string>> message_words(cfg.messages);
  const auto bimodal_count =
      static_cast<std::size_t>(std::llround(cfg.bimodal_fraction * cfg.messages));
  std::vector<std::size_t> order(cfg.messages);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> bimodal(cfg.messages, false);
  for (std::size_t i = 0; i < bimodal_count; ++i) bimodal[order[i]] = true;

  corpus.message_intents.resize(cfg.messages);
  for (std::size_t j = 0; j < cfg.messages; ++j) {
    message_words[j] = {fresh(), fresh(), fresh()};
    const std::size_t primary = uniform(cfg.intents);
    corpus.message_intents[j].push_back(primary);
    if (bimodal[j]) {
      std::size_t secondary = uniform(cfg.intents - 1);
      if (secondary >= primary) ++secondary;
      corpus.message_intents[j].push_back(secondary);
    }
  }

  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution second(cfg.secondary_weight);
  auto sample_pair = [&](std::size_t j) {
    const auto& w = message_words[j];
    std::string message;
    if (coin(rng)) message = kFillers[uniform(kFillers.size())] + " ";
    message += w[0] + " " + w[1] + " " + w[2] + "?";
    const auto& intents = corpus.message_intents[j];
    const std::size_t intent = (intents.size() > 1 && second(rng)) ? intents[1] : intents[0];
    return DialoguePair{message, paraphrases[intent][uniform(paraphrases[intent].size())]};
  };
  for (std::size_t j = 0; j < cfg.messages; ++j)
    for (std::size_t t = 0; t < cfg.train_per_message; ++t) corpus.train.push_back(sample_pair(j));
  for (std::size_t j = 0; j < cfg.messages; ++j)
    for (std::size_t t = 0; t < cfg.test_per_message; ++t) corpus.test.push_back(sample_pair(j));
  return corpus;
}

// ---------------------------------------------------------------------------
// Evaluation

struct SystemReport {
  std::string system;
  std::size_t samples = 0;
  std::size_t failures = 0;
  double max_rouge = 0.0;       // mean over pairs of max_k weighted ROUGE
  double max_term_f1 = 0.0;     // same with term-level F1
  double self_rouge = 0.0;      // mean Self-ROUGE (0 when K < 2)
  double tuples_evaluated = 0.0;
  double latency_p50_ms = 0.0;
  double latency_p95_ms = 0.0;
};

struct EvalReport {
  std::size_t k = 0, n = 0, m = 0;
  double tau = 0.0;
  std::vector<SystemReport> systems;

  const SystemReport* find(std::string_view name) const {
    for (const auto& s : systems)
      if (s.system == name) return &s;
    return nullptr;
  }
};

/// Nearest-rank percentile of an unsorted sample.
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * values.size()));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

/// Runs one system over the dataset. Latency is wall clock around suggest();
/// a failing item is counted and skipped.
template <TextEncoder E>
SystemReport evaluate_system(Strategy system, std::span<const DialoguePair> dataset,
                             const E& model, const CandidatePool& pool,
                             SuggestConfig config,
                             const TopicLabeler& labeler = default_topic_labeler()) {
  using clock = std::chrono::steady_clock;
  config.strategy = system;
  SystemReport report;
  report.system = std::string(strategy_name(system) == "ablative" ? "simsr"
                                                                  : strategy_name(system));
  std::vector<double> latencies;
  double rouge_sum = 0.0, f1_sum = 0.0, self_sum = 0.0, tuples_sum = 0.0;
  for (const auto& pair : dataset) {
    Suggestion s;
    const auto t0 = clock::now();
    try {
      s = suggest(model, pool, pair.message, config, labeler);
    } catch (const std::exception&) {
      ++report.failures;
      continue;
    }
    latencies.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());

    const auto truth = tokenize(pair.reply);
    std::vector<TokenSequence> predicted;
    double best_rouge = 0.0, best_f1 = 0.0;
    for (auto id : s.reply_ids) {
      const auto& tokens = pool.candidate(id).tokens;
      best_rouge = std::max(best_rouge, weighted_rouge(tokens, truth));
      best_f1 = std::max(best_f1, term_f1(tokens, truth));
      predicted.push_back(tokens);
    }
    rouge_sum += best_rouge;
    f1_sum += best_f1;
    if (predicted.size() >= 2) self_sum += self_rouge(predicted);
    tuples_sum += static_cast<double>(s.selection.tuples_evaluated);
    ++report.samples;
  }
  if (report.samples > 0) {
    const double n = static_cast<double>(report.samples);
    report.max_rouge = rouge_sum / n;
    report.max_term_f1 = f1_sum / n;
    report.self_rouge = self_sum / n;
    report.tuples_evaluated = tuples_sum / n;
  }
  report.latency_p50_ms = percentile(latencies, 0.50);
  report.latency_p95_ms = percentile(latencies, 0.95);
  return report;
}

template <TextEncoder E>
EvalReport evaluate(std::span<const Strategy> systems, std::span<const DialoguePair> dataset,
                    const E& model, const CandidatePool& pool, SuggestConfig config,
                    const TopicLabeler& labeler = default_topic_labeler()) {
  config.value_selection = false;
  const auto eff = effective_config(config, pool.size());
  EvalReport report{eff.k, eff.n, eff.m, eff.tau, {}};
  for (auto s : systems)
    report.systems.push_back(evaluate_system(s, dataset, model, pool, config, labeler));
  return report;
}

inline nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json systems = nlohmann::json::array();
  for (const auto& s : report.systems)
    systems.push_back({{"system", s.system},
                       {"samples", s.samples},
                       {"failures", s.failures},
                       {"rouge", s.max_rouge},
                       {"term_f1", s.max_term_f1},
                       {"self_rouge", s.self_rouge},
                       {"tuples_evaluated", s.tuples_evaluated},
                       {"latency_ms", {{"p50", s.latency_p50_ms}, {"p95", s.latency_p95_ms}}}});
  return {{"config", {{"k", report.k}, {"n", report.n}, {"m", report.m}, {"tau", report.tau}}},
          {"systems", systems}};
}

/// Aligned text table, one row per system.
inline std::string format_table(const EvalReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(18) << "System" << std::right << std::setw(9) << "ROUGE"
      << std::setw(12) << "Self-ROUGE" << std::setw(9) << "Term-F1" << std::setw(9)
      << "Tuples" << std::setw(9) << "p50 ms" << std::setw(9) << "p95 ms" << std::setw(8)
      << "n" << '\n';
  out << std::string(83, '-') << '\n';
  out << std::fixed;
  for (const auto& s : report.systems) {
    out << std::left << std::setw(18) << s.system << std::right << std::setprecision(4)
        << std::setw(9) << s.max_rouge << std::setw(12) << s.self_rouge << std::setw(9)
        << s.max_term_f1 << std::setprecision(1) << std::setw(9) << s.tuples_evaluated
        << std::setprecision(3) << std::setw(9) << s.latency_p50_ms << std::setw(9)
        << s.latency_p95_ms << std::setw(8) << s.samples << '\n';
  }
  return out.str();
}

inline std::string to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "system,samples,failures,rouge,self_rouge,term_f1,tuples_evaluated,latency_p50_ms,"
         "latency_p95_ms\n";
  out << std::setprecision(10);
  for (const auto& s : report.systems)
    out << s.system << ',' << s.samples << ',' << s.failures << ',' << s.max_rouge << ','
        << s.self_rouge << ',' << s.max_term_f1 << ',' << s.tuples_evaluated << ','
        << s.latency_p50_ms << ',' << s.latency_p95_ms << '\n';
  return out.str();
}

}  // namespace simsr
