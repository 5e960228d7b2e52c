#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace e2rank;

TEST(Tokenize, Examples) {
  EXPECT_TRUE(tokenize("").empty());
  const auto aa = tokenize("a a");
  ASSERT_EQ(aa.size(), 2u);
  EXPECT_EQ(aa[0], aa[1]);
  EXPECT_EQ(tokenize("Hello world"), tokenize("hello world"));
}

TEST(Tokenize, CaseFoldingCanBeDisabled) {
  TokenizerConfig cfg;
  cfg.lowercase = false;
  EXPECT_NE(tokenize("Hello", cfg), tokenize("hello", cfg));
}

TEST(Tokenize, KnownHashValue) {
  // FNV-1a 64 of "a" is 0xaf63dc4c8601ec8c.
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(token_id("a", TokenizerConfig{}), static_cast<TokenId>(0xaf63dc4c8601ec8cULL % 8191));
}

TEST(Tokenize, UnicodeWhitespaceSeparates) {
  const auto plain = tokenize("alpha beta");
  EXPECT_EQ(tokenize("alpha beta"), plain);
  EXPECT_EQ(tokenize("alpha　beta"), plain);
  EXPECT_EQ(tokenize("  alpha\t\n beta \r\n"), plain);
  EXPECT_EQ(tokenize("café").size(), 1u);
}

TEST(Tokenize, InvalidVocab) {
  TokenizerConfig cfg;
  cfg.vocab_size = 1;
  EXPECT_THROW(tokenize("x", cfg), InvalidArgument);
}

TEST(TokenizeProperties, RangeDeterminismConcatenation) {
  Pcg32 rng(2024);
  const std::string alphabet = "abcXYZ019-_.,\xc3\xa9";
  auto word = [&] {
    std::string w;
    const std::size_t n = 1 + rng.below(8);
    for (std::size_t i = 0; i < n; ++i) w += alphabet[rng.below(static_cast<std::uint32_t>(alphabet.size()))];
    return w;
  };
  auto sentence = [&] {
    std::string s;
    const std::size_t n = 1 + rng.below(6);
    for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + word();
    return s;
  };
  for (std::uint32_t vocab : {2u, 17u, 8192u}) {
    TokenizerConfig cfg;
    cfg.vocab_size = vocab;
    for (int trial = 0; trial < 300; ++trial) {
      const std::string s1 = sentence();
      const std::string s2 = sentence();
      const auto t1 = tokenize(s1, cfg);
      EXPECT_EQ(t1, tokenize(s1, cfg));
      for (TokenId id : t1) EXPECT_LE(id, vocab - 2);
      auto joined = t1;
      const auto t2 = tokenize(s2, cfg);
      joined.insert(joined.end(), t2.begin(), t2.end());
      EXPECT_EQ(tokenize(s1 + " " + s2, cfg), joined);
    }
  }
}

TEST(TruncateTokens, KeepsBytePrefix) {
  EXPECT_EQ(truncate_tokens("a  b c", 2), "a  b");
  EXPECT_EQ(truncate_tokens("a b", 5), "a b");
  EXPECT_EQ(truncate_tokens("a b", 0), "");
  EXPECT_EQ(tokenize(truncate_tokens("one two three four", 3)).size(), 3u);
}
