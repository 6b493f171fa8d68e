#pragma once

// JSON wire format and HTTP routes of the suggestion service.
//
//   POST /suggest  {"message": str, "persona": [str]?, "overrides": {...}?}
//   GET  /health   -> "ok"
//   GET  /config   -> active defaults

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "simsr/engine.hpp"
#include "simsr/evalharness.hpp"

namespace simsr {

/// A client-side mistake; maps to HTTP 400.
class RequestError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SuggestOverrides {
  std::optional<std::size_t> k, n, m, samples;
  std::optional<double> tau, lambda;
  std::optional<Strategy> strategy;
  std::optional<std::uint64_t> seed;
};

struct SuggestRequest {
  std::string message;
  std::vector<std::string> persona;
  SuggestOverrides overrides;
};

namespace detail {

inline std::size_t json_count(const nlohmann::json& v, const char* key) {
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw RequestError(std::string("\"") + key + "\" must be a non-negative integer");
  return v.get<std::size_t>();
}

inline double json_real(const nlohmann::json& v, const char* key) {
  if (!v.is_number()) throw RequestError(std::string("\"") + key + "\" must be a number");
  return v.get<double>();
}

}  // namespace detail

inline SuggestRequest parse_suggest_request(const std::string& body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw RequestError("malformed JSON");
  }
  if (!doc.is_object()) throw RequestError("request must be a JSON object");
  if (!doc.contains("message") || !doc["message"].is_string())
    throw RequestError("\"message\" must be a string");

  SuggestRequest req;
  req.message = doc["message"].get<std::string>();
  if (tokenize(req.message).empty()) throw RequestError("\"message\" is empty");

  if (doc.contains("persona")) {
    const auto& p = doc["persona"];
    if (!p.is_array()) throw RequestError("\"persona\" must be an array of strings");
    for (const auto& line : p) {
      if (!line.is_string()) throw RequestError("\"persona\" must be an array of strings");
      req.persona.push_back(line.get<std::string>());
    }
  }

  if (doc.contains("overrides")) {
    const auto& o = doc["overrides"];
    if (!o.is_object()) throw RequestError("\"overrides\" must be an object");
    auto& ov = req.overrides;
    for (const auto& [key, value] : o.items()) {
      if (key == "k") ov.k = detail::json_count(value, "k");
      else if (key == "n") ov.n = detail::json_count(value, "n");
      else if (key == "m") ov.m = detail::json_count(value, "m");
      else if (key == "samples") ov.samples = detail::json_count(value, "samples");
      else if (key == "seed") ov.seed = detail::json_count(value, "seed");
      else if (key == "tau") ov.tau = detail::json_real(value, "tau");
      else if (key == "lambda") ov.lambda = detail::json_real(value, "lambda");
      else if (key == "strategy") {
        if (!value.is_string()) throw RequestError("\"strategy\" must be a string");
        ov.strategy = parse_strategy(value.get<std::string>());
        if (!ov.strategy)
          throw RequestError("unknown strategy \"" + value.get<std::string>() + "\"");
      } else {
        throw RequestError("unknown override \"" + key + "\"");
      }
    }
  }
  return req;
}

/// Applies overrides on top of the defaults. Explicit n/m must fit the pool;
/// defaults are clamped to it.
inline SuggestConfig apply_overrides(SuggestConfig config, const SuggestOverrides& ov,
                                     std::size_t pool_size) {
  if (ov.k) config.k = *ov.k;
  if (ov.n) config.n = *ov.n;
  if (ov.m) config.m = *ov.m;
  if (ov.tau) config.tau = *ov.tau;
  if (ov.strategy) config.strategy = *ov.strategy;
  if (ov.seed) config.seed = *ov.seed;
  if (ov.samples) config.samples = *ov.samples;
  if (ov.lambda) config.mmr_lambda = *ov.lambda;

  if (config.k == 0) throw RequestError("K must be positive");
  if (config.k > pool_size) throw RequestError("K exceeds pool");
  if (ov.n && *ov.n > pool_size) throw RequestError("N exceeds pool");
  if (ov.m && *ov.m > pool_size) throw RequestError("M exceeds pool");
  if (ov.n && config.k > *ov.n) throw RequestError("K exceeds N");
  if (config.n == 0 || config.m == 0) throw RequestError("N and M must be positive");
  if (!(config.tau > 0.0) || !std::isfinite(config.tau))
    throw RequestError("tau must be positive");
  if (config.samples == 0) throw RequestError("samples must be >= 1");
  if (!(config.mmr_lambda >= 0.0 && config.mmr_lambda <= 1.0))
    throw RequestError("lambda must lie in [0, 1]");
  try {
    return effective_config(config, pool_size);
  } catch (const std::invalid_argument& e) {
    throw RequestError(e.what());
  }
}

inline nlohmann::json config_to_json(const SuggestConfig& c) {
  return {{"k", c.k},
          {"n", c.n},
          {"m", c.m},
          {"tau", c.tau},
          {"strategy", std::string(strategy_name(c.strategy))},
          {"samples", c.samples},
          {"seed", c.seed},
          {"lambda", c.mmr_lambda}};
}

inline nlohmann::json suggestion_to_json(const Suggestion& s, const CandidatePool& pool,
                                         bool include_timings) {
  nlohmann::json shortlist = nlohmann::json::array();
  for (const auto& e : s.retrieval.shortlist.entries)
    shortlist.push_back({{"id", e.id}, {"text", pool.candidate(e.id).text}, {"score", e.score}});
  nlohmann::json simulation = nlohmann::json::array();
  for (const auto& e : s.retrieval.simulation.entries)
    simulation.push_back({{"id", e.id},
                          {"text", pool.candidate(e.id).text},
                          {"score", e.score},
                          {"probability", e.probability}});
  nlohmann::json out = {
      {"replies", s.replies},
      {"reply_ids", s.reply_ids},
      {"indices", s.selection.indices},
      {"expected_score",
       s.valued ? nlohmann::json(s.selection.expected_score) : nlohmann::json(nullptr)},
      {"tuples_evaluated", s.selection.tuples_evaluated},
      {"strategy", std::string(strategy_name(s.config.strategy))},
      {"config", config_to_json(s.config)},
      {"shortlist", shortlist},
      {"simulation", simulation},
  };
  if (include_timings)
    out["timings_ms"] = {{"retrieve", s.timings.retrieve_ms},
                         {"simulate", s.timings.simulate_ms},
                         {"total", s.timings.total_ms}};
  return out;
}

/// One loaded model + pool; read-only after construction.
struct ServiceContext {
  EncoderModel model;
  CandidatePool pool;
  SuggestConfig defaults;
  TopicLabeler labeler = default_topic_labeler();
};

struct HttpResult {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

inline std::string error_body(const std::string& message) {
  return nlohmann::json{{"error", message}}.dump();
}

inline std::string next_error_id() {
  static std::atomic<std::uint64_t> counter{0};
  const auto now = static_cast<std::uint64_t>(
      std::chrono::system_clock::now().time_since_epoch().count());
  return fingerprint_hex(mix64(now ^ mix64(++counter)));
}

inline HttpResult handle_suggest(const ServiceContext& ctx, const std::string& body,
                                 bool include_timings = true) {
  try {
    const auto req = parse_suggest_request(body);
    const auto config = apply_overrides(ctx.defaults, req.overrides, ctx.pool.size());
    const auto message = compose_message(req.persona, req.message);
    const auto s = suggest(ctx.model, ctx.pool, message, config, ctx.labeler);
    return {200, suggestion_to_json(s, ctx.pool, include_timings).dump()};
  } catch (const RequestError& e) {
    return {400, error_body(e.what())};
  } catch (const std::exception& e) {
    const auto id = next_error_id();
    std::cerr << "suggest failed [" << id << "]: " << e.what() << '\n';
    return {500, nlohmann::json{{"error", "internal error"}, {"id", id}}.dump()};
  }
}

inline HttpResult handle_config(const ServiceContext& ctx) {
  nlohmann::json out = config_to_json(ctx.defaults);
  out["pool_size"] = ctx.pool.size();
  out["dim"] = ctx.pool.dim();
  return {200, out.dump()};
}

struct ServiceOptions {
  std::string cors_origin;  // empty: no CORS headers
};

inline void install_routes(httplib::Server& server, const ServiceContext& ctx,
                           const ServiceOptions& options = {}) {
  if (!options.cors_origin.empty()) {
    server.set_default_headers({{"Access-Control-Allow-Origin", options.cors_origin},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
      res.status = 204;
    });
  }
  server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });
  server.Get("/config", [&ctx](const httplib::Request&, httplib::Response& res) {
    const auto r = handle_config(ctx);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  });
  server.Post("/suggest", [&ctx](const httplib::Request& req, httplib::Response& res) {
    const auto r = handle_suggest(ctx, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  });
}

}  // namespace simsr
