#include <gtest/gtest.h>

#include <random>

#include "simsr/textmetrics.hpp"

using namespace simsr;

TEST(Tokenize, LowercasesAndSplitsOnPunctuation) {
  EXPECT_EQ(tokenize("Hello, world!"), (TokenSequence{"hello", "world"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize("  ,.!? ").empty());
}

TEST(Tokenize, ApostropheSplits) {
  EXPECT_EQ(tokenize("I'm ok"), (TokenSequence{"i", "m", "ok"}));
}

TEST(Tokenize, KeepsNonAsciiBytesInsideTokens) {
  EXPECT_EQ(tokenize("caf\xC3\xA9 ol\xC3\xA9!"), (TokenSequence{"caf\xC3\xA9", "ol\xC3\xA9"}));
}

TEST(Tokenize, IdempotentOnJoinedOutput) {
  std::mt19937 rng(3);
  const std::string alphabet = "abcXYZ019 ,.'!?-_\t";
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    for (int i = 0; i < 40; ++i) text.push_back(alphabet[rng() % alphabet.size()]);
    const auto once = tokenize(text);
    EXPECT_EQ(tokenize(join_tokens(once)), once);
  }
}

TEST(Truncate, KeepsLastTokensWithOriginalText) {
  EXPECT_EQ(truncate_to_last_tokens("a b, c d!", 2), "c d!");
  EXPECT_EQ(truncate_to_last_tokens("a b", 5), "a b");
}

TEST(TermF1, Examples) {
  EXPECT_DOUBLE_EQ(term_f1(tokenize("a b c"), tokenize("a b c")), 1.0);
  EXPECT_DOUBLE_EQ(term_f1(tokenize("a b"), tokenize("c d")), 0.0);
  EXPECT_NEAR(term_f1(tokenize("a b c"), tokenize("b c d")), 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(term_f1({}, {}), 0.0);
  EXPECT_DOUBLE_EQ(term_f1({}, tokenize("a")), 0.0);
}

TEST(TermF1, ClipsRepeatedTokens) {
  // overlap = min(3,1) = 1, P = 1/3, R = 1 -> F1 = 0.5
  EXPECT_NEAR(term_f1(tokenize("a a a"), tokenize("a")), 0.5, 1e-12);
}

TEST(WeightedRouge, Examples) {
  EXPECT_DOUBLE_EQ(weighted_rouge(tokenize("a b c d"), tokenize("a b c d")), 1.0);
  // R1 = 2/3, R2 = 1/2, R3 = 0 -> 2/18 + 1/6
  EXPECT_NEAR(weighted_rouge(tokenize("a b c"), tokenize("a b d")), 0.2778, 1e-4);
  EXPECT_NEAR(weighted_rouge(tokenize("a b c"), tokenize("a b d")), 2.0 / 18 + 1.0 / 6, 1e-12);
  EXPECT_DOUBLE_EQ(weighted_rouge(tokenize("x"), tokenize("a b c")), 0.0);
}

TEST(WeightedRouge, ShortReferenceDropsHigherOrders) {
  // identical two-token texts: R1 = R2 = 1, R3 = 0
  EXPECT_NEAR(weighted_rouge(tokenize("a b"), tokenize("a b")), 0.5, 1e-12);
}

TEST(SelfRouge, Examples) {
  EXPECT_DOUBLE_EQ(self_rouge({tokenize("a b c"), tokenize("a b c"), tokenize("a b c")}), 1.0);
  EXPECT_DOUBLE_EQ(self_rouge({tokenize("a b c"), tokenize("d e f"), tokenize("g h i")}), 0.0);
  EXPECT_NEAR(self_rouge({tokenize("a b c"), tokenize("a b c"), tokenize("x y z")}), 2.0 / 3.0,
              1e-12);
}

TEST(SelfRouge, NeedsTwoReplies) {
  EXPECT_THROW(self_rouge({tokenize("a b c")}), std::invalid_argument);
  EXPECT_THROW(self_rouge({}), std::invalid_argument);
}

namespace {
TokenSequence random_tokens(std::mt19937& rng, std::size_t max_len, int vocab) {
  TokenSequence t(rng() % (max_len + 1));
  for (auto& w : t) w = std::string(1, static_cast<char>('a' + rng() % vocab));
  return t;
}
}  // namespace

TEST(MetricProperties, SymmetricAndBounded) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = random_tokens(rng, 8, 5);
    const auto b = random_tokens(rng, 8, 5);
    const double f = term_f1(a, b);
    EXPECT_DOUBLE_EQ(f, term_f1(b, a));
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
    for (std::size_t n = 1; n <= 3; ++n) {
      const double r = rouge_n_f1(a, b, n);
      EXPECT_DOUBLE_EQ(r, rouge_n_f1(b, a, n));
      EXPECT_GE(r, 0.0);
      EXPECT_LE(r, 1.0);
    }
    const double w = weighted_rouge(a, b);
    EXPECT_GE(w, 0.0);
    EXPECT_LE(w, 1.0 + 1e-12);
    if (a.size() >= 3) EXPECT_NEAR(weighted_rouge(a, a), 1.0, 1e-12);
  }
}

TEST(MetricProperties, DisjointReplacementLowersSelfRouge) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    TokenSequence base = random_tokens(rng, 6, 4);
    while (base.size() < 3) base.push_back("a");
    std::vector<TokenSequence> replies(3, base);
    EXPECT_DOUBLE_EQ(self_rouge(replies), 1.0);
    const std::size_t k = rng() % 3;
    replies[k] = {"zz1", "zz2", "zz3"};
    EXPECT_LT(self_rouge(replies), 1.0);
  }
}
