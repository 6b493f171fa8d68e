// simsr: train the matching model, build pools, suggest, evaluate, serve.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>

#include "simsr/service.hpp"
#include "simsr/simsr.hpp"

namespace {

using namespace simsr;

void require_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("no such file: " + path);
}

ServiceContext load_context(const std::string& pool_dir, const std::string& model_path) {
  require_file(model_path);
  require_file(pool_dir);
  ServiceContext ctx{load_model(model_path), load_pool(pool_dir), {}, default_topic_labeler()};
  check_compatible(ctx.model, ctx.pool);
  return ctx;
}

std::vector<Strategy> parse_systems(const std::string& list) {
  std::vector<Strategy> out;
  std::stringstream ss(list);
  for (std::string name; std::getline(ss, name, ',');) {
    if (name.empty()) continue;
    auto s = parse_strategy(name);
    if (!s) throw std::runtime_error("unknown system: " + name);
    out.push_back(*s);
  }
  if (out.empty()) throw std::runtime_error("no systems given");
  return out;
}

struct SuggestFlags {
  std::size_t k = 3, n = 15, m = 25, samples = 25;
  double tau = 10.0, lambda = 0.5;
  std::string strategy = "ablative";
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--k", k, "Replies to show")->capture_default_str();
    cmd->add_option("--n", n, "Shortlist size")->capture_default_str();
    cmd->add_option("--m", m, "Simulated replies")->capture_default_str();
    cmd->add_option("--tau", tau, "Softmax temperature")->capture_default_str();
    cmd->add_option("--samples", samples, "Tuples drawn by sample_rank")->capture_default_str();
    cmd->add_option("--lambda", lambda, "MMR relevance weight")->capture_default_str();
    cmd->add_option("--seed", seed, "Search seed")->capture_default_str();
  }

  SuggestConfig config() const {
    SuggestConfig c;
    c.k = k;
    c.n = n;
    c.m = m;
    c.tau = tau;
    c.samples = samples;
    c.mmr_lambda = lambda;
    c.seed = seed;
    auto s = parse_strategy(strategy);
    if (!s) throw std::runtime_error("unknown strategy: " + strategy);
    c.strategy = *s;
    return c;
  }
};

int run_bench(const ServiceContext& ctx, const std::vector<std::string>& messages,
              const std::vector<Strategy>& systems, SuggestConfig base) {
  using clock = std::chrono::steady_clock;
  base.value_selection = false;
  std::cout << std::left << std::setw(18) << "System" << std::right << std::setw(10)
            << "p50 ms" << std::setw(10) << "p95 ms" << std::setw(13) << "retrieve ms"
            << std::setw(13) << "simulate ms" << '\n'
            << std::string(64, '-') << '\n'
            << std::fixed << std::setprecision(3);
  for (auto system : systems) {
    auto cfg = base;
    cfg.strategy = system;
    std::vector<double> total;
    double retrieve = 0.0, simulate = 0.0;
    for (const auto& msg : messages) {
      const auto t0 = clock::now();
      const auto s = suggest(ctx.model, ctx.pool, msg, cfg, ctx.labeler);
      total.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
      retrieve += s.timings.retrieve_ms;
      simulate += s.timings.simulate_ms;
    }
    const double q = static_cast<double>(messages.size());
    const std::string name =
        system == Strategy::ablative ? "simsr" : std::string(strategy_name(system));
    std::cout << std::left << std::setw(18) << name << std::right << std::setw(10)
              << percentile(total, 0.5) << std::setw(10) << percentile(total, 0.95)
              << std::setw(13) << retrieve / q << std::setw(13) << simulate / q << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SimSR smart-reply engine"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the matching model");
  std::string data_path, model_path, out_path, pool_path;
  TrainConfig tc;
  train_cmd->add_option("--data", data_path, "Training pairs (JSONL)")->required();
  train_cmd->add_option("--out", out_path, "Model file to write")->required();
  train_cmd->add_option("--epochs", tc.epochs)->capture_default_str();
  train_cmd->add_option("--batch", tc.batch_size)->capture_default_str();
  train_cmd->add_option("--dim", tc.dim)->capture_default_str();
  train_cmd->add_option("--buckets", tc.buckets, "Hash buckets")->capture_default_str();
  train_cmd->add_option("--lr", tc.learning_rate, "Initial SGD step")->capture_default_str();
  train_cmd->add_option("--seed", tc.seed)->capture_default_str();

  // index
  auto* index_cmd = app.add_subcommand("index", "Build a candidate pool from training replies");
  index_cmd->add_option("--data", data_path, "Training pairs (JSONL)")->required();
  index_cmd->add_option("--model", model_path)->required();
  index_cmd->add_option("--out", out_path, "Pool directory to write")->required();

  // suggest
  auto* suggest_cmd = app.add_subcommand("suggest", "Suggest replies for one message");
  SuggestFlags sf;
  std::string message;
  std::vector<std::string> persona;
  bool timings = false;
  suggest_cmd->add_option("--pool", pool_path)->required();
  suggest_cmd->add_option("--model", model_path)->required();
  suggest_cmd->add_option("--message", message)->required();
  suggest_cmd->add_option("--persona", persona, "Persona line (repeatable)");
  suggest_cmd->add_option("--strategy", sf.strategy)->capture_default_str();
  suggest_cmd->add_flag("--timings", timings, "Include stage timings in the output");
  sf.attach(suggest_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate systems on a dataset");
  SuggestFlags ef;
  std::string systems = "matching,mmr,topic,simsr,simsr-individual", format = "table", csv_path,
              json_path;
  eval_cmd->add_option("--pool", pool_path)->required();
  eval_cmd->add_option("--model", model_path)->required();
  eval_cmd->add_option("--data", data_path, "Evaluation pairs (JSONL)")->required();
  eval_cmd->add_option("--systems", systems)->capture_default_str();
  eval_cmd->add_option("--format", format, "table | json | csv")
      ->check(CLI::IsMember({"table", "json", "csv"}))
      ->capture_default_str();
  eval_cmd->add_option("--csv", csv_path, "Also write CSV here");
  eval_cmd->add_option("--json", json_path, "Also write JSON here");
  ef.attach(eval_cmd);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Latency table across systems");
  SuggestFlags bf;
  std::size_t queries = 200;
  std::string bench_systems = "matching,topic,mmr,simsr-individual,simsr";
  bench_cmd->add_option("--pool", pool_path)->required();
  bench_cmd->add_option("--model", model_path)->required();
  bench_cmd->add_option("--data", data_path, "Messages to time (JSONL); pool texts otherwise");
  bench_cmd->add_option("--queries", queries)->capture_default_str();
  bench_cmd->add_option("--systems", bench_systems)->capture_default_str();
  bf.attach(bench_cmd);

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP suggestion service");
  std::string host = "0.0.0.0", cors_origin;
  int port = 8080;
  if (const char* env = std::getenv("SIMSR_PORT")) port = std::atoi(env);
  serve_cmd->add_option("--pool", pool_path)->required();
  serve_cmd->add_option("--model", model_path)->required();
  serve_cmd->add_option("--port", port, "Overrides SIMSR_PORT")->capture_default_str();
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--cors-origin", cors_origin, "Allowed browser origin");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic multi-intent corpus");
  SyntheticConfig syn;
  std::string train_out, test_out;
  synth_cmd->add_option("--train-out", train_out)->required();
  synth_cmd->add_option("--test-out", test_out)->required();
  synth_cmd->add_option("--intents", syn.intents)->capture_default_str();
  synth_cmd->add_option("--paraphrases", syn.paraphrases_per_intent)->capture_default_str();
  synth_cmd->add_option("--messages", syn.messages)->capture_default_str();
  synth_cmd->add_option("--bimodal", syn.bimodal_fraction)->capture_default_str();
  synth_cmd->add_option("--train-per-message", syn.train_per_message)->capture_default_str();
  synth_cmd->add_option("--test-per-message", syn.test_per_message)->capture_default_str();
  synth_cmd->add_option("--seed", syn.seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      require_file(data_path);
      const auto pairs = as_text_pairs(load_dataset(data_path));
      const auto model = train(pairs, tc);
      save_model(model, out_path);
      std::cerr << "trained on " << pairs.size() << " pairs -> " << out_path << '\n';
    } else if (*index_cmd) {
      require_file(data_path);
      require_file(model_path);
      const auto model = load_model(model_path);
      const auto replies = replies_of(load_dataset(data_path));
      const auto pool = build_pool(replies, model);
      save_pool(pool, out_path);
      std::cerr << "indexed " << pool.size() << " unique replies -> " << out_path << '\n';
    } else if (*suggest_cmd) {
      const auto ctx = load_context(pool_path, model_path);
      const auto s = suggest(ctx.model, ctx.pool, compose_message(persona, message),
                             sf.config(), ctx.labeler);
      std::cout << suggestion_to_json(s, ctx.pool, timings).dump(2) << '\n';
    } else if (*eval_cmd) {
      require_file(data_path);
      const auto ctx = load_context(pool_path, model_path);
      const auto dataset = load_dataset(data_path);
      const auto report =
          evaluate(parse_systems(systems), dataset, ctx.model, ctx.pool, ef.config(), ctx.labeler);
      if (format == "json")
        std::cout << to_json(report).dump(2) << '\n';
      else if (format == "csv")
        std::cout << to_csv(report);
      else
        std::cout << format_table(report);
      if (!csv_path.empty()) std::ofstream(csv_path) << to_csv(report);
      if (!json_path.empty()) std::ofstream(json_path) << to_json(report).dump(2) << '\n';
    } else if (*bench_cmd) {
      const auto ctx = load_context(pool_path, model_path);
      std::vector<std::string> messages;
      if (!data_path.empty()) {
        require_file(data_path);
        for (const auto& p : load_dataset(data_path)) messages.push_back(p.message);
      } else {
        for (const auto& c : ctx.pool.candidates()) messages.push_back(c.text);
      }
      if (messages.size() > queries) messages.resize(queries);
      return run_bench(ctx, messages, parse_systems(bench_systems), bf.config());
    } else if (*serve_cmd) {
      const auto ctx = load_context(pool_path, model_path);
      httplib::Server server;
      install_routes(server, ctx, {cors_origin});
      std::cerr << "serving " << ctx.pool.size() << " candidates on " << host << ':' << port
                << '\n';
      if (!server.listen(host, port)) {
        std::cerr << "error: cannot listen on " << host << ':' << port << '\n';
        return 1;
      }
    } else if (*synth_cmd) {
      const auto corpus = make_synthetic(syn);
      save_dataset(corpus.train, train_out);
      save_dataset(corpus.test, test_out);
      std::cerr << corpus.train.size() << " train / " << corpus.test.size()
                << " test pairs, " << corpus.replies.size() << " reply forms\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
