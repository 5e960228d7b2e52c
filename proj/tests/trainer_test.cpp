#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "test_support.hpp"

using namespace e2rank;

namespace {

TokenizerConfig small_vocab() {
  TokenizerConfig t;
  t.vocab_size = 512;
  return t;
}

TrainingInstance instance(const std::string& id, const std::string& q, const std::string& pos,
                          std::vector<std::string> negs, bool labeled) {
  TrainingInstance inst;
  inst.query = {id, q};
  inst.instruction = "find";
  inst.positive = {id + "_p", pos};
  for (std::size_t i = 0; i < negs.size(); ++i) inst.negatives.push_back({id + "_n" + std::to_string(i), negs[i]});
  if (labeled) {
    std::vector<int> perm(negs.size() + 1);
    std::iota(perm.begin(), perm.end(), 1);
    inst.label = RankingLabel(perm);
  }
  return inst;
}

std::vector<TrainingInstance> toy_data(bool labeled) {
  return {instance("a", "red apple", "apple red fruit", {"blue car", "green tree"}, labeled),
          instance("b", "fast car", "car engine fast", {"red apple", "slow snail"}, labeled),
          instance("c", "tall tree", "tree tall green", {"fast car", "apple pie"}, labeled)};
}

const SyntheticData& synthetic() {
  static const SyntheticData data = [] {
    SyntheticCorpusSpec spec;
    spec.heldout_queries_per_topic = 3;
    return generate_synthetic(spec);
  }();
  return data;
}

}  // namespace

TEST(LearningRate, LinearWarmupThenConstant) {
  StageConfig c;
  c.learning_rate = 1.0;
  c.warmup_fraction = 0.1;
  EXPECT_EQ(learning_rate_at(0, 100, c), 0.1);
  EXPECT_EQ(learning_rate_at(9, 100, c), 1.0);
  EXPECT_EQ(learning_rate_at(50, 100, c), 1.0);
  c.warmup_fraction = 0.0;
  EXPECT_EQ(learning_rate_at(0, 100, c), 1.0);
  c.batch_size = 2;
  c.epochs = 3;
  EXPECT_EQ(total_steps(5, c), 9u);
}

TEST(TrainStage1, ZeroStepsLeavesParamsUnchanged) {
  const Encoder init(EncoderParams::random(512, 8, 1), small_vocab());
  StageConfig c = StageConfig::stage1();
  c.epochs = 0;
  const auto r = train_stage1(toy_data(false), c, init);
  EXPECT_EQ(r.params, init.params());
  EXPECT_TRUE(r.curve.empty());
}

TEST(TrainStage1, OneStepEqualsManualUpdate) {
  const Encoder init(EncoderParams::random(512, 8, 1), small_vocab());
  StageConfig c = StageConfig::stage1();
  c.learning_rate = 0.05;
  c.warmup_fraction = 0.0;
  const std::vector<TrainingInstance> one{toy_data(false)[0]};
  const auto r = train_stage1(one, c, init);
  ASSERT_EQ(r.curve.size(), 1u);
  const auto tokenized = tokenize_instances(one, c, init);
  const auto lg = loss_gradients(tokenized, init.params(), effective_loss(c));
  EncoderParams expected = init.params();
  for (std::size_t i = 0; i < expected.token_table.size(); ++i) expected.token_table[i] -= 0.05 * lg.grad.token_table[i];
  for (std::size_t i = 0; i < expected.projection.size(); ++i) expected.projection[i] -= 0.05 * lg.grad.projection[i];
  EXPECT_EQ(r.params, expected);
  EXPECT_EQ(r.curve[0].loss.infonce, lg.loss.infonce);
  EXPECT_EQ(r.curve[0].loss.ranknet, 0.0);
}

TEST(TrainStage1, Validation) {
  const Encoder init(EncoderParams::random(512, 8, 1), small_vocab());
  auto data = toy_data(false);
  data[1].negatives.clear();
  EXPECT_THROW(train_stage1(data, StageConfig::stage1(), init), InvalidArgument);
  EXPECT_THROW(train_stage1(std::vector<TrainingInstance>{}, StageConfig::stage1(), init), InvalidArgument);
  EXPECT_THROW(train_stage1(toy_data(false), StageConfig::stage2(), init), InvalidArgument);
  EXPECT_THROW(train_stage2(toy_data(false), StageConfig::stage2(), init), InvalidArgument);  // no labels
}

TEST(TrainStage2, Deterministic) {
  const Encoder init(EncoderParams::random(512, 8, 2), small_vocab());
  StageConfig c = StageConfig::stage2();
  c.learning_rate = 0.01;
  c.epochs = 3;
  c.batch_size = 2;
  const auto a = train_stage2(toy_data(true), c, init);
  const auto b = train_stage2(toy_data(true), c, init);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(curve_csv(a.curve), curve_csv(b.curve));
  EXPECT_EQ(save_checkpoint(a.params), save_checkpoint(b.params));
  c.seed = 43;
  EXPECT_NE(train_stage2(toy_data(true), c, init).params, a.params);
}

TEST(TrainStage2, ZeroLambdaIsContinuedStage1) {
  const Encoder init(EncoderParams::random(512, 8, 3), small_vocab());
  StageConfig c2 = StageConfig::stage2();
  c2.learning_rate = 0.02;
  c2.epochs = 4;
  c2.batch_size = 2;
  c2.loss.lambda = 0.0;
  StageConfig c1 = c2;
  c1.stage = Stage::I;
  const auto a = train_stage2(toy_data(true), c2, init);
  const auto b = train_stage1(toy_data(false), c1, init);
  EXPECT_EQ(a.params, b.params);
  for (std::size_t i = 0; i < a.curve.size(); ++i) EXPECT_EQ(a.curve[i].loss.infonce, b.curve[i].loss.infonce);
}

TEST(TrainStage2, ZeroInfoNceWeightTrainsOnRankNetOnly) {
  const Encoder init(EncoderParams::random(512, 8, 3), small_vocab());
  StageConfig c = StageConfig::stage2();
  c.learning_rate = 0.02;
  c.loss.infonce_weight = 0.0;
  const auto r = train_stage2(toy_data(true), c, init);
  for (const auto& s : r.curve) EXPECT_EQ(s.loss.combined, c.loss.lambda * s.loss.ranknet);
}

TEST(TrainStage2, InBatchToggleNeverTouchesRankNet) {
  const Encoder init(EncoderParams::random(512, 8, 4), small_vocab());
  StageConfig on = StageConfig::stage2();
  on.learning_rate = 0.02;
  on.epochs = 5;
  on.batch_size = 2;
  StageConfig off = on;
  off.in_batch_negatives = false;
  // The first batch sees identical parameters, so its RankNet value is identical.
  const auto a = train_stage2(toy_data(true), on, init);
  const auto b = train_stage2(toy_data(true), off, init);
  EXPECT_EQ(a.curve[0].loss.ranknet, b.curve[0].loss.ranknet);
  EXPECT_NE(a.curve[0].loss.infonce, b.curve[0].loss.infonce);
  // Without the InfoNCE term the whole RankNet curve is bit-identical.
  on.loss.infonce_weight = off.loss.infonce_weight = 0.0;
  const auto c = train_stage2(toy_data(true), on, init);
  const auto d = train_stage2(toy_data(true), off, init);
  ASSERT_EQ(c.curve.size(), d.curve.size());
  for (std::size_t i = 0; i < c.curve.size(); ++i) EXPECT_EQ(c.curve[i].loss.ranknet, d.curve[i].loss.ranknet);
}

TEST(TrainStage2, PromptOrderIsSeededAndNotLabelOrder) {
  const Encoder init(EncoderParams::random(8192, 8, 5));
  StageConfig c = StageConfig::stage2();
  const auto& data = synthetic().stage2_train;
  const auto a = tokenize_instances(data, c, init);
  const auto b = tokenize_instances(data, c, init);
  std::size_t differs_from_label_order = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(a[i].ranking_query, b[i].ranking_query);
    std::vector<Document> label_order;
    const auto docs = instance_documents(data[i]);
    for (int idx : data[i].label->permutation()) label_order.push_back(docs[static_cast<std::size_t>(idx - 1)]);
    const auto leaked = prompt_tokens(make_listwise_prompt(c.prompt, label_order, data[i].query, init), c.prompt, init);
    if (leaked != a[i].ranking_query) ++differs_from_label_order;
  }
  EXPECT_EQ(differs_from_label_order, data.size());
  c.shuffle_prompt = false;
  const auto ordered = tokenize_instances(data, c, init);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<Document> label_order;
    const auto docs = instance_documents(data[i]);
    for (int idx : data[i].label->permutation()) label_order.push_back(docs[static_cast<std::size_t>(idx - 1)]);
    EXPECT_EQ(ordered[i].ranking_query,
              prompt_tokens(make_listwise_prompt(c.prompt, label_order, data[i].query, init), c.prompt, init));
  }
  c.shuffle_prompt = true;
  c.listwise = false;
  const auto plain = tokenize_instances(data, c, init);
  EXPECT_EQ(plain[0].ranking_query, plain[0].query);
}

TEST(TrainStage1, SyntheticRunReducesHeldOutInfoNce) {
  const auto& data = synthetic();
  const Encoder init(EncoderParams::random(8192, 64, 7));
  StageConfig c = StageConfig::stage1();
  c.learning_rate = 0.01;
  c.epochs = 200;
  c.in_batch_negatives = true;
  c.warmup_fraction = 0.0;
  const auto r = train_stage1(data.stage1_train, c, init);
  ASSERT_EQ(r.curve.size(), 200u);
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    first += r.curve[i].loss.combined;
    last += r.curve[r.curve.size() - 1 - i].loss.combined;
  }
  for (const auto& s : r.curve) EXPECT_TRUE(std::isfinite(s.loss.combined));
  EXPECT_LT(last, first);
  StageConfig eval = c;
  eval.in_batch_negatives = false;
  const auto held_out = tokenize_instances(data.stage1_test, eval, init);
  const double before = evaluate_losses(held_out, init.params(), effective_loss(eval)).infonce;
  const double after = evaluate_losses(held_out, r.params, effective_loss(eval)).infonce;
  EXPECT_LT(after, 0.8 * before) << before << " -> " << after;
}

TEST(InstanceFiles, RoundTrip) {
  const auto& data = synthetic();
  for (const auto* set : {&data.stage1_train, &data.stage2_train}) {
    const std::string text = instances_jsonl(*set);
    std::istringstream in(text);
    const auto back = read_instances(in, "inst");
    ASSERT_EQ(back.size(), set->size());
    EXPECT_EQ(instances_jsonl(back), text);
  }
  std::istringstream bad(R"({"qid":"q","query":"x","positive":{"id":"p","text":"t"},"negatives":[],"permutation":[2]})");
  EXPECT_THROW(read_instances(bad, "inst"), ParseError);
}

TEST(Synthetic, DeterministicAndSeeded) {
  SyntheticCorpusSpec spec;
  spec.n_topics = 4;
  spec.docs_per_topic = 10;
  const auto a = synthetic_files(generate_synthetic(spec));
  EXPECT_EQ(a, synthetic_files(generate_synthetic(spec)));
  spec.seed = 8;
  EXPECT_NE(a, synthetic_files(generate_synthetic(spec)));
}

TEST(Synthetic, PositiveOutscoresNegativesAndGradesMatchOverlapOracle) {
  const auto& data = synthetic();
  const SyntheticCorpusSpec spec;
  auto overlap = [](const std::string& text, const std::vector<std::string>& keys) {
    std::size_t n = 0;
    for (const auto& k : keys) {
      const auto words = split_whitespace(text);
      n += std::find(words.begin(), words.end(), k) != words.end();
    }
    return n;
  };
  for (std::size_t i = 0; i < data.train_queries.size(); ++i) {
    const auto& q = data.train_queries[i];
    const auto& inst = data.stage2_train[i];
    const std::size_t pos = overlap(inst.positive.text, q.key_set);
    for (const auto& n : inst.negatives) EXPECT_GT(pos, overlap(n.text, q.key_set));
    EXPECT_EQ(inst.label->permutation()[0], 1);
  }
  for (const auto& q : data.test_queries) {
    const auto it = data.test_qrels.find(q.query.id);
    for (const auto& doc : data.corpus) {
      const std::size_t o = overlap(doc.text, q.key_set);
      const int expected = static_cast<int>(o * (spec.relevance_levels - 1) / q.key_set.size());
      const int got = it == data.test_qrels.end() || !it->second.count(doc.id) ? 0 : it->second.at(doc.id);
      EXPECT_EQ(got, expected);
    }
  }
}

TEST(Synthetic, SplitSizes) {
  const auto& data = synthetic();
  EXPECT_EQ(data.corpus.size(), 1000u);
  EXPECT_EQ(data.train_queries.size(), 100u);
  EXPECT_EQ(data.test_queries.size(), 60u);
  EXPECT_EQ(data.stage2_train[0].negatives.size(), 15u);
  std::set<std::string> train_ids, test_ids;
  for (const auto& q : data.train_queries) train_ids.insert(q.query.id);
  for (const auto& q : data.test_queries) EXPECT_FALSE(train_ids.count(q.query.id));
}
