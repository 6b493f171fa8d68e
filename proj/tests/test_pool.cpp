#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "simsr/pool.hpp"

using namespace simsr;

namespace {

CandidatePool pool_from_rows(const std::vector<std::vector<float>>& rows) {
  EmbeddingMatrix m{rows.size(), static_cast<std::uint32_t>(rows.front().size()), {}};
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.values.insert(m.values.end(), rows[i].begin(), rows[i].end());
    texts.push_back("reply " + std::to_string(i));
  }
  return CandidatePool(texts, m, 0);
}

// Sorts every id by (score desc, id asc) with a plain O(R^2) selection.
std::vector<std::uint32_t> naive_order(const std::vector<double>& scores) {
  std::vector<std::uint32_t> out;
  std::vector<bool> used(scores.size(), false);
  for (std::size_t step = 0; step < scores.size(); ++step) {
    std::size_t best = scores.size();
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (!used[i] && (best == scores.size() || scores[i] > scores[best])) best = i;
    used[best] = true;
    out.push_back(static_cast<std::uint32_t>(best));
  }
  return out;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "simsr_pool_test" / name;
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(BuildPool, DeduplicatesKeepingFirstOccurrence) {
  const auto model = EncoderModel::random(256, 4, 1, 0.3);
  const std::vector<std::string> replies{"hi", "hi", "yo"};
  const auto pool = build_pool(std::span(replies), model);
  ASSERT_EQ(pool.size(), 2u);
  EXPECT_EQ(pool.candidate(0).text, "hi");
  EXPECT_EQ(pool.candidate(1).text, "yo");
  EXPECT_EQ(pool.candidate(1).id, 1u);
  EXPECT_EQ(pool.model_fingerprint(), model.fingerprint());
}

TEST(BuildPool, RowsAreTheEncoderOutput) {
  const auto model = EncoderModel::random(512, 6, 2, 0.3);
  const std::vector<std::string> replies{"sounds good", "see you at noon", "no thanks"};
  const auto pool = build_pool(std::span(replies), model);
  for (std::size_t i = 0; i < replies.size(); ++i) {
    const auto e = encode(model, replies[i]);
    const auto row = pool.embedding(i);
    ASSERT_EQ(row.size(), e.size());
    for (std::size_t j = 0; j < e.size(); ++j) EXPECT_EQ(row[j], e[j]);
  }
}

TEST(BuildPool, NormalisesLineBreaks) {
  const auto model = EncoderModel::random(64, 2, 3, 0.3);
  const std::vector<std::string> replies{"a\nb", "a b", "c\r\nd"};
  const auto pool = build_pool(std::span(replies), model);
  ASSERT_EQ(pool.size(), 2u);
  EXPECT_EQ(pool.candidate(1).text, "c  d");
  EXPECT_THROW(build_pool(std::span<const std::string>(), model), std::invalid_argument);
}

TEST(Softmax, TemperatureExample) {
  // e^{0.2}, e^{0.1}, e^{0} normalised (independent Python evaluation).
  const std::vector<double> s{2.0, 1.0, 0.0};
  const auto p = softmax_with_temperature(s, 10.0);
  EXPECT_NEAR(p[0], 0.367165, 1e-6);
  EXPECT_NEAR(p[1], 0.332225, 1e-6);
  EXPECT_NEAR(p[2], 0.300610, 1e-6);
  EXPECT_NEAR(p[0] / p[1], std::exp(0.1), 1e-12);
  EXPECT_THROW(softmax_with_temperature(s, 0.0), std::invalid_argument);
}

TEST(Retrieve, SoftmaxOnlyOverTopM) {
  // Scores 2, 1, 0, -1, -2 against query [1].
  const auto pool = pool_from_rows({{0.0f}, {-2.0f}, {2.0f}, {1.0f}, {-1.0f}});
  const std::vector<float> q{1.0f};
  const auto r = retrieve_by_embedding(pool, q, 2, 3, 10.0);
  ASSERT_EQ(r.shortlist.size(), 2u);
  EXPECT_EQ(r.shortlist.entries[0].id, 2u);
  EXPECT_EQ(r.shortlist.entries[1].id, 3u);
  ASSERT_EQ(r.simulation.size(), 3u);
  EXPECT_EQ(r.simulation.entries[2].id, 0u);
  EXPECT_NEAR(r.simulation.entries[0].probability, 0.367165, 1e-6);
  EXPECT_NEAR(r.simulation.entries[1].probability, 0.332225, 1e-6);
  EXPECT_NEAR(r.simulation.entries[2].probability, 0.300610, 1e-6);
}

TEST(Retrieve, TiedScoresGiveUniformAndLowerIdFirst) {
  const auto pool = pool_from_rows({{1.0f}, {1.0f}, {1.0f}, {1.0f}});
  const std::vector<float> q{0.5f};
  const auto r = retrieve_by_embedding(pool, q, 4, 4, 10.0);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(r.shortlist.entries[i].id, i);
    EXPECT_DOUBLE_EQ(r.simulation.entries[i].probability, 0.25);
  }
}

TEST(Retrieve, RangeErrors) {
  const auto pool = pool_from_rows({{1.0f}, {2.0f}});
  const std::vector<float> q{1.0f}, bad{1.0f, 2.0f};
  EXPECT_THROW(retrieve_by_embedding(pool, q, 3, 1, 10.0), std::invalid_argument);
  EXPECT_THROW(retrieve_by_embedding(pool, q, 1, 3, 10.0), std::invalid_argument);
  EXPECT_THROW(retrieve_by_embedding(pool, q, 0, 1, 10.0), std::invalid_argument);
  EXPECT_THROW(retrieve_by_embedding(pool, q, 1, 1, -1.0), std::invalid_argument);
  EXPECT_THROW(retrieve_by_embedding(pool, bad, 1, 1, 10.0), std::invalid_argument);
}

TEST(Retrieve, MatchesNaiveScanOnRandomPools) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t r = 5 + rng() % 60, d = 1 + rng() % 8;
    std::vector<std::vector<float>> rows(r, std::vector<float>(d));
    for (auto& row : rows)
      for (auto& v : row) v = std::round(u(rng) * 4.0f) / 4.0f;  // coarse: forces ties
    const auto pool = pool_from_rows(rows);
    std::vector<float> q(d);
    for (auto& v : q) v = u(rng);
    std::vector<double> scores(r);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < d; ++j) scores[i] += double(q[j]) * double(rows[i][j]);
    const auto expected = naive_order(scores);
    const std::size_t n = 1 + rng() % r, m = 1 + rng() % r;
    const double tau = 0.5 + (rng() % 20);
    const auto got = retrieve_by_embedding(pool, q, n, m, tau);
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_EQ(got.shortlist.entries[i].id, expected[i]);
      EXPECT_EQ(got.shortlist.entries[i].score, scores[expected[i]]);
    }
    double sum = 0.0, denom = 0.0;
    for (std::size_t i = 0; i < m; ++i) denom += std::exp(scores[expected[i]] / tau);
    for (std::size_t i = 0; i < m; ++i) {
      ASSERT_EQ(got.simulation.entries[i].id, expected[i]);
      const double p = got.simulation.entries[i].probability;
      EXPECT_NEAR(p, std::exp(scores[expected[i]] / tau) / denom, 1e-12);
      EXPECT_GT(p, 0.0);
      sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Retrieve, ThroughEncoderAgreesWithEmbeddingPath) {
  const auto model = EncoderModel::random(1024, 8, 4, 0.3);
  const std::vector<std::string> replies{"sure", "on my way", "sounds great", "call me later"};
  const auto pool = build_pool(std::span(replies), model);
  const auto a = retrieve(pool, "are you coming", model, 3, 4, 10.0);
  const auto q = encode(model, "are you coming");
  const auto b = retrieve_by_embedding(pool, q, 3, 4, 10.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.shortlist.entries[i].id, b.shortlist.entries[i].id);
}

TEST(PoolFiles, RoundTrip) {
  const auto model = EncoderModel::random(512, 4, 5, 0.3);
  const std::vector<std::string> replies{"yes", "no", "maybe later"};
  const auto pool = build_pool(std::span(replies), model);
  const auto dir = temp_dir("roundtrip");
  save_pool(pool, dir);
  const auto loaded = load_pool(dir);
  ASSERT_EQ(loaded.size(), pool.size());
  EXPECT_EQ(loaded.matrix().values, pool.matrix().values);
  EXPECT_EQ(loaded.model_fingerprint(), model.fingerprint());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    EXPECT_EQ(loaded.candidate(i).text, pool.candidate(i).text);
    EXPECT_EQ(loaded.candidate(i).tokens, pool.candidate(i).tokens);
  }
  std::ifstream in(dir / "manifest.json");
  const auto manifest = nlohmann::json::parse(in);
  EXPECT_EQ(manifest["R"], 3);
  EXPECT_EQ(manifest["d"], 4);
  EXPECT_EQ(manifest["model_fingerprint"], fingerprint_hex(model.fingerprint()));
  EXPECT_TRUE(manifest.contains("build_timestamp"));
}

TEST(PoolFiles, ShapeMismatchIsRejected) {
  const auto model = EncoderModel::random(512, 4, 5, 0.3);
  const std::vector<std::string> replies{"yes", "no"};
  const auto dir = temp_dir("mismatch");
  save_pool(build_pool(std::span(replies), model), dir);
  std::ifstream in(dir / "manifest.json");
  auto manifest = nlohmann::json::parse(in);
  in.close();
  manifest["R"] = 5;
  std::ofstream(dir / "manifest.json") << manifest.dump();
  EXPECT_THROW(load_pool(dir), std::runtime_error);
  EXPECT_THROW(load_pool(temp_dir("absent")), std::runtime_error);
}

TEST(Fingerprint, HexRoundTrip) {
  EXPECT_EQ(fingerprint_hex(0x00ab), "00000000000000ab");
  EXPECT_EQ(parse_fingerprint_hex(fingerprint_hex(0xfedcba9876543210ULL)), 0xfedcba9876543210ULL);
}
