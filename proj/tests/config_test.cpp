#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"

using namespace e2rank;

namespace {

KeyValueConfig parse(const std::string& text) {
  std::istringstream in(text);
  return KeyValueConfig::parse(in, "cfg");
}

}  // namespace

TEST(KeyValue, TypedValuesAndDefaults) {
  auto kv = parse("# comment\n a = 1.5 \nb=7\nflag = on\nname = x y\n");
  EXPECT_EQ(kv.get_double("a", 0.0), 1.5);
  EXPECT_EQ(kv.get_uint("b", 0), 7u);
  EXPECT_TRUE(kv.get_bool("flag", false));
  EXPECT_EQ(kv.get_string("name", ""), "x y");
  EXPECT_EQ(kv.get_uint("absent", 42), 42u);
  EXPECT_NO_THROW(kv.finish());
}

TEST(KeyValue, Errors) {
  EXPECT_THROW(parse("novalue\n"), ParseError);
  EXPECT_THROW(parse("a = 1\na = 2\n"), ParseError);
  EXPECT_THROW(parse(" = 2\n"), ParseError);
  auto kv = parse("a = x\nb = -3\nc = maybe\nd = 1\n");
  EXPECT_THROW(kv.get_double("a", 0), ParseError);
  EXPECT_THROW(kv.get_uint("b", 0), ParseError);
  EXPECT_THROW(kv.get_bool("c", false), ParseError);
  try {
    kv.finish();
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(ShippedConfigs, LoadCleanly) {
  const std::string dir = std::string(E2RANK_SOURCE_DIR) + "/configs/";
  auto spec_kv = KeyValueConfig::load(dir + "synthetic.spec");
  const auto spec = load_synthetic_spec(spec_kv);
  spec_kv.finish();
  EXPECT_EQ(spec.n_topics * spec.docs_per_topic, 1000u);
  EXPECT_EQ(spec.n_topics * spec.queries_per_topic, 100u);

  auto s1 = KeyValueConfig::load(dir + "stage1.cfg");
  const auto init = load_init_config(s1);
  const auto c1 = load_stage_config(s1, Stage::I);
  s1.finish();
  EXPECT_EQ(init.vocab_size, 8192u);
  EXPECT_EQ(init.dim, 64u);
  EXPECT_TRUE(c1.in_batch_negatives);

  auto s2 = KeyValueConfig::load(dir + "stage2.cfg");
  const auto c2 = load_stage_config(s2, Stage::II);
  s2.finish();
  EXPECT_EQ(c2.batch_size, 128u);
  EXPECT_EQ(c2.loss.lambda, 2.0);
  EXPECT_EQ(c2.loss.tau_ranknet, 0.1);
}

TEST(StageDefaults, MatchDocumentedValues) {
  const auto s1 = StageConfig::stage1();
  EXPECT_EQ(s1.batch_size, 512u);
  EXPECT_EQ(s1.learning_rate, 5e-6);
  EXPECT_FALSE(s1.in_batch_negatives);
  EXPECT_EQ(s1.warmup_fraction, 0.03);
  const auto s2 = StageConfig::stage2();
  EXPECT_EQ(s2.batch_size, 128u);
  EXPECT_TRUE(s2.in_batch_negatives);
  EXPECT_EQ(s2.loss.tau_infonce, 0.03);
  EXPECT_EQ(s2.loss.tau_ranknet, 0.1);
  EXPECT_EQ(s2.loss.lambda, 2.0);
}
