#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "simsr/baselines.hpp"

using namespace simsr;

namespace {

Shortlist descending(std::size_t n) {
  Shortlist s;
  for (std::size_t i = 0; i < n; ++i)
    s.entries.push_back({static_cast<std::uint32_t>(i), 10.0 - static_cast<double>(i)});
  return s;
}

std::vector<TokenSequence> tokens_of(const std::vector<std::string>& texts) {
  std::vector<TokenSequence> out;
  for (const auto& t : texts) out.push_back(tokenize(t));
  return out;
}

}  // namespace

TEST(TopK, FirstKRows) {
  EXPECT_EQ(topk_select(descending(5), 3).indices, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_THROW(topk_select(descending(2), 3), std::invalid_argument);
}

TEST(Mmr, LambdaOneIsTopK) {
  const auto toks = tokens_of({"a b", "a b", "a c", "d e", "f"});
  EXPECT_EQ(mmr_select(descending(5), toks, 3, 1.0).indices,
            topk_select(descending(5), 3).indices);
}

TEST(Mmr, LambdaZeroAvoidsOverlap) {
  // After row 0, rows 1 and 2 overlap with it; row 3 is the first with zero
  // overlap; then rows 4 (F1 0) beats others.
  const auto toks = tokens_of({"a b", "a b", "a c", "d e", "f g"});
  EXPECT_EQ(mmr_select(descending(5), toks, 3, 0.0).indices,
            (std::vector<std::size_t>{0, 3, 4}));
}

TEST(Mmr, EqualScoresStartFromFirstRow) {
  Shortlist flat{{{0, 1.0}, {1, 1.0}, {2, 1.0}}};
  const auto toks = tokens_of({"x", "x", "y"});
  EXPECT_EQ(mmr_select(flat, toks, 2, 0.5).indices, (std::vector<std::size_t>{0, 2}));
  EXPECT_THROW(mmr_select(flat, toks, 2, 1.5), std::invalid_argument);
  EXPECT_THROW(mmr_select(flat, tokens_of({"x"}), 1, 0.5), std::invalid_argument);
}

TEST(Topic, FirstOfEachLabel) {
  const std::vector<std::string> labels{"A", "A", "B", "C"};
  EXPECT_EQ(topic_select_by_labels(labels, 3).indices, (std::vector<std::size_t>{0, 2, 3}));
}

TEST(Topic, BackfillsWhenLabelsRunOut) {
  const std::vector<std::string> labels{"A", "A", "A", "A"};
  EXPECT_EQ(topic_select_by_labels(labels, 3).indices, (std::vector<std::size_t>{0, 1, 2}));
  const std::vector<std::string> two{"A", "B", "A", "B", "A"};
  EXPECT_EQ(topic_select_by_labels(two, 3).indices, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Topic, CustomLabeler) {
  const std::vector<std::string> texts{"yes sure", "yes ok", "no way", "maybe"};
  TopicLabeler first_word = [](std::string_view t) { return tokenize(t).front(); };
  EXPECT_EQ(topic_select(texts, first_word, 3).indices, (std::vector<std::size_t>{0, 2, 3}));
}

TEST(Topic, DefaultLabelerIsDeterministic) {
  EXPECT_EQ(default_topic_label("Lunch at noon?"), default_topic_label("lunch lunch"));
  EXPECT_EQ(default_topic_label("yes it is"), "topic-none");
  EXPECT_EQ(default_topic_label(""), "topic-none");
  EXPECT_EQ(default_topic_label("pizza tonight").rfind("topic-", 0), 0u);
}

TEST(Individual, KOneEqualsExhaustive) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = oracle::random_instance(rng, 1 + rng() % 10, 1 + rng() % 8);
    SimilarityMatrix c(inst.n, inst.m);
    for (std::size_t i = 0; i < inst.n; ++i)
      for (std::size_t j = 0; j < inst.m; ++j) c(i, j) = inst.c[i][j];
    const auto ind = individual_sim_select(c, inst.p, 1);
    const auto ex = exhaustive_search(c, inst.p, 1);
    EXPECT_EQ(ind.indices, ex.indices);
    EXPECT_DOUBLE_EQ(ind.expected_score, ex.expected_score);
    EXPECT_EQ(ind.tuples_evaluated, inst.n);
  }
}

TEST(Individual, IgnoresRedundancy) {
  // Two copies of the best row win even though they cover the same column.
  const SimilarityMatrix c(3, 2, {1.0, 0.0, 1.0, 0.0, 0.0, 0.9});
  const std::vector<double> p{0.6, 0.4};
  EXPECT_EQ(individual_sim_select(c, p, 2).indices, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(exhaustive_search(c, p, 2).indices, (std::vector<std::size_t>{0, 2}));
}
