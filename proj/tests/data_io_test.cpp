#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"

using namespace e2rank;

TEST(ReadCorpus, OrderPreserved) {
  std::istringstream in("{\"id\":\"b\",\"text\":\"second doc\"}\n{\"id\":\"a\",\"text\":\"first\"}\n");
  const auto docs = read_corpus(in);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].id, "b");
  EXPECT_EQ(docs[1].text, "first");
}

TEST(ReadCorpus, BeirStyleTitleJoin) {
  std::istringstream in(R"({"_id":"x","title":"T","text":"X"}
{"_id":"y","title":"","text":"Y"}
)");
  const auto docs = read_corpus(in);
  EXPECT_EQ(docs[0].id, "x");
  EXPECT_EQ(docs[0].text, "T X");
  EXPECT_EQ(docs[1].text, "Y");
}

TEST(ReadCorpus, DuplicateIdNamed) {
  std::istringstream in("{\"id\":\"dup\",\"text\":\"a\"}\n{\"id\":\"dup\",\"text\":\"b\"}\n");
  try {
    read_corpus(in, "c.jsonl");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("\"dup\""), std::string::npos);
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ReadCorpus, MissingFieldAndMalformedLine) {
  std::istringstream missing("{\"id\":\"a\"}\n");
  EXPECT_THROW(read_corpus(missing), ParseError);
  std::istringstream malformed("{\"id\":\"a\",\"text\":\"ok\"}\n\n{not json\n");
  try {
    read_corpus(malformed, "c");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream empty_id("{\"id\":\"\",\"text\":\"x\"}\n");
  EXPECT_THROW(read_corpus(empty_id), ParseError);
  std::istringstream wrong_type("{\"id\":3,\"text\":\"x\"}\n");
  EXPECT_THROW(read_corpus(wrong_type), ParseError);
}

TEST(ReadQueries, Basic) {
  std::istringstream in("{\"id\":\"q1\",\"text\":\"what is it\"}\n");
  const auto qs = read_queries(in);
  ASSERT_EQ(qs.size(), 1u);
  EXPECT_EQ(qs[0].text, "what is it");
}

TEST(DataIoProperties, LosslessUtf8RoundTrip) {
  Pcg32 rng(6);
  const std::vector<std::string> pieces{"a", "Z", " ", "\t", "\"", "\\", "é", "日本", "🙂", "\n", "/", " "};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Document> docs;
    for (int i = 0; i < 5; ++i) {
      std::string text;
      const std::size_t n = rng.below(12);
      for (std::size_t j = 0; j < n; ++j) text += pieces[rng.below(static_cast<std::uint32_t>(pieces.size()))];
      docs.push_back({"d" + std::to_string(i), text});
    }
    std::istringstream in(to_jsonl(docs));
    const auto back = read_corpus(in);
    ASSERT_EQ(back.size(), docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
      EXPECT_EQ(back[i].id, docs[i].id);
      EXPECT_EQ(back[i].text, docs[i].text);
    }
  }
}

TEST(DocumentStoreLookup, ByIdAndErrors) {
  const DocumentStore store({{"a", "x"}, {"b", "y"}});
  EXPECT_EQ(store.at("b").text, "y");
  EXPECT_THROW(store.at("c"), InvalidArgument);
  EXPECT_THROW(DocumentStore({{"a", "x"}, {"a", "y"}}), InvalidArgument);
}
