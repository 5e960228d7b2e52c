#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "oracles.hpp"
#include "test_support.hpp"

using namespace e2rank;

namespace {

std::vector<RunEntry> entries(const std::vector<std::string>& docs) {
  std::vector<RunEntry> out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    out.push_back({"q", docs[i], static_cast<int>(i + 1), static_cast<double>(docs.size() - i)});
  }
  return out;
}

}  // namespace

TEST(Ndcg, Examples) {
  EXPECT_DOUBLE_EQ(ndcg_at_k(entries({"a", "b", "c"}), {{"a", 2}, {"b", 1}}), 1.0);
  EXPECT_NEAR(ndcg_at_k(entries({"x", "a"}), {{"a", 1}}), 0.6309, 5e-5);
  EXPECT_DOUBLE_EQ(ndcg_at_k(entries({"x", "a"}), {{"a", 1}}), 1.0 / std::log2(3.0));
  EXPECT_NEAR(ndcg_at_k(entries({"c", "b", "a"}), {{"a", 3}, {"b", 2}, {"c", 1}}), 0.6806, 5e-5);
  EXPECT_NEAR(ndcg_at_k(entries({"c", "b", "a"}), {{"a", 3}, {"b", 2}, {"c", 1}}), 6.3928 / 9.3928, 1e-4);
}

TEST(Ndcg, IdealUsesAllJudgedDocsAndCutoff) {
  // "b" is relevant but not retrieved; it still counts in the ideal ranking.
  EXPECT_DOUBLE_EQ(ndcg_at_k(entries({"a"}), {{"a", 1}, {"b", 1}}), 1.0 / (1.0 + 1.0 / std::log2(3.0)));
  EXPECT_DOUBLE_EQ(ndcg_at_k(entries({"x", "a"}), {{"a", 1}}, 1), 0.0);
  EXPECT_EQ(ndcg_at_k(entries({"a"}), {{"a", 0}}), 0.0);
  EXPECT_THROW(ndcg_at_k(entries({"a"}), {{"a", 1}}, 0), InvalidArgument);
}

TEST(MeanNdcg, Examples) {
  e2rank::Run run;
  run.add("q1", entries({"a"}));
  Qrels qrels{{"q1", {{"a", 1}}}};
  EXPECT_EQ(mean_ndcg(run, qrels), 1.0);
  run.add("q2", entries({"x"}));
  qrels["q2"] = {{"b", 1}};
  EXPECT_EQ(mean_ndcg(run, qrels), 0.5);
  qrels["q3"] = {{"c", 0}};  // no relevant docs: excluded
  EXPECT_EQ(mean_ndcg(run, qrels), 0.5);
  qrels["q4"] = {{"d", 2}};  // evaluable but missing from the run: scores 0
  EXPECT_DOUBLE_EQ(mean_ndcg(run, qrels), 1.0 / 3.0);
  EXPECT_THROW(mean_ndcg(run, Qrels{{"q1", {{"a", 0}}}}), InvalidArgument);
}

namespace {

struct RandomCase {
  std::vector<std::string> ranked;
  std::map<std::string, int> grades;
};

RandomCase random_case(Pcg32& rng) {
  RandomCase c;
  const std::size_t pool = 1 + rng.below(40);
  std::vector<std::string> docs;
  for (std::size_t i = 0; i < pool; ++i) docs.push_back("d" + std::to_string(i));
  shuffle(std::span<std::string>(docs), rng);
  const std::size_t n = 1 + rng.below(static_cast<std::uint32_t>(pool));
  c.ranked.assign(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(n));
  for (const auto& d : docs) {
    if (rng.below(3) == 0) c.grades[d] = static_cast<int>(rng.below(5));
  }
  return c;
}

}  // namespace

TEST(NdcgOracle, TwoHundredRandomInstances) {
  Pcg32 rng(200);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = random_case(rng);
    const std::size_t k = 1 + rng.below(20);
    const double got = ndcg_at_k(entries(c.ranked), c.grades, k);
    EXPECT_NEAR(got, oracle::ndcg(c.ranked, c.grades, k), 1e-12) << "trial " << trial;
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0);
  }
}

TEST(NdcgOracle, TwentyQueryMean) {
  Pcg32 rng(20);
  e2rank::Run run;
  Qrels qrels;
  long double sum = 0.0L;
  std::size_t counted = 0;
  for (int q = 0; q < 20; ++q) {
    auto c = random_case(rng);
    c.grades["d0"] = 1 + static_cast<int>(rng.below(3));  // every query evaluable
    const std::string qid = "q" + std::to_string(q);
    auto e = entries(c.ranked);
    for (auto& x : e) x.query_id = qid;
    run.add(qid, e);
    qrels[qid] = c.grades;
    sum += oracle::ndcg(c.ranked, c.grades, 10);
    ++counted;
  }
  EXPECT_NEAR(mean_ndcg(run, qrels), static_cast<double>(sum / counted), 1e-12);
}

TEST(NdcgProperties, OrderOnlyAndReversal) {
  Pcg32 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    auto c = random_case(rng);
    const double base = ndcg_at_k(entries(c.ranked), c.grades, 10);
    // Monotone transform of scores keeps the order, so the value is unchanged.
    auto e = entries(c.ranked);
    for (auto& x : e) x.score = std::exp(x.score) * 3.0 - 1.0;
    EXPECT_EQ(ndcg_at_k(e, c.grades, 10), base);
    // Reversal of a full ranking with unequal grades never helps.
    std::vector<std::string> all;
    for (const auto& [d, g] : c.grades) all.push_back(d);
    std::sort(all.begin(), all.end(), [&](const auto& a, const auto& b) { return c.grades[a] > c.grades[b]; });
    std::set<int> distinct;
    for (const auto& [d, g] : c.grades) distinct.insert(g);
    if (all.empty() || distinct.size() < 2) continue;
    std::vector<std::string> reversed(all.rbegin(), all.rend());
    EXPECT_LE(ndcg_at_k(entries(reversed), c.grades, 10), ndcg_at_k(entries(all), c.grades, 10));
  }
}

TEST(RunFile, RoundTrip) {
  e2rank::Run run;
  run.add("q1", std::vector<ScoredDoc>{{"d1", 0.9}, {"d2", 0.1 + 0.2}, {"d3", -1e-310}});
  run.add("q0", std::vector<ScoredDoc>{{"z", 1.0}});
  const std::string text = format_run(run);
  EXPECT_EQ(text.substr(0, text.find('\n')), "q1 Q0 d1 1 0.9 e2rank");
  std::istringstream in(text);
  std::vector<std::string> warnings;
  const e2rank::Run back = read_run(in, "run", &warnings);
  EXPECT_TRUE(warnings.empty());
  EXPECT_EQ(back, run);
  EXPECT_EQ(format_run(back), text);
}

TEST(RunFile, MalformedLinesNameTheLine) {
  std::istringstream cols("q Q0 a 1 1.0 t\nq Q0 b 2 0.5\n");
  try {
    read_run(cols, "r.txt");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("r.txt:2"), std::string::npos);
  }
  std::istringstream num("q Q0 a 1 abc t\n");
  EXPECT_THROW(read_run(num, "r"), ParseError);
  std::istringstream dup("q Q0 a 1 1 t\nq Q0 a 2 0 t\n");
  EXPECT_THROW(read_run(dup, "r"), ParseError);
}

TEST(RunFile, OrderViolationReranksWithWarning) {
  std::istringstream in("q Q0 a 1 0.1 t\nq Q0 b 2 0.9 t\nq Q0 c 3 0.5 t\n");
  std::vector<std::string> warnings;
  const e2rank::Run run = read_run(in, "r", &warnings);
  EXPECT_EQ(warnings.size(), 1u);
  const auto& e = run.entries("q");
  EXPECT_EQ(e[0].doc_id, "b");
  EXPECT_EQ(e[1].doc_id, "c");
  EXPECT_EQ(e[2].doc_id, "a");
  EXPECT_EQ(e[2].rank, 3);
}

TEST(QrelsFile, RoundTripAndErrors) {
  std::istringstream in("q1 0 a 2\nq1 0 b 0\n\nq2 0 c 1\n");
  const Qrels q = read_qrels(in, "qrels");
  EXPECT_EQ(q.at("q1").at("a"), 2);
  EXPECT_EQ(format_qrels(q), "q1 0 a 2\nq1 0 b 0\nq2 0 c 1\n");
  std::istringstream neg("q1 0 a -1\n");
  EXPECT_THROW(read_qrels(neg, "qrels"), ParseError);
  std::istringstream cols("q1 0 a\n");
  EXPECT_THROW(read_qrels(cols, "qrels"), ParseError);
}
