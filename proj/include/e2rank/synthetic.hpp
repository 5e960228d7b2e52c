#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "e2rank/config.hpp"
#include "e2rank/labels.hpp"
#include "e2rank/metrics.hpp"
#include "e2rank/reranker.hpp"
#include "e2rank/rng.hpp"
#include "e2rank/trainer.hpp"

namespace e2rank {

// Topic-clustered corpus. Each topic has a pool of shared words and several
// subtopics with their own words; a document mixes its subtopic, its topic,
// a little of a sibling subtopic and background words. A query targets one
// subtopic through a hidden key set of that subtopic's words but only shows
// a few of them, and a document's grade is the tier of its overlap with the
// key set.
struct SyntheticCorpusSpec {
  std::size_t n_topics = 20;
  std::size_t docs_per_topic = 50;
  std::size_t queries_per_topic = 5;          // training queries
  std::size_t heldout_queries_per_topic = 10;  // evaluation queries
  std::size_t vocab_words = 200;              // background vocabulary
  std::size_t doc_length = 30;
  std::size_t relevance_levels = 4;           // grades 0..levels-1
  std::uint64_t seed = 7;

  std::size_t subtopics_per_topic = 3;
  std::size_t topic_words = 12;
  std::size_t subtopic_words = 8;
  std::size_t key_words = 6;           // hidden key set size per query
  std::size_t query_key_words = 2;     // key words visible in the query text
  std::size_t query_topic_words = 2;   // topic words in the query text
  std::size_t stage2_negatives = 15;
  // Take the highest-overlap documents below the positive as negatives, the
  // way retriever-mined hard negatives look; otherwise sample uniformly.
  bool hardest_negatives = true;
  // Break overlap ties in stage II labels by key-word occurrence counts.
  bool label_by_occurrences = true;
  double p_subtopic = 0.40;
  double p_topic = 0.25;
  double p_sibling = 0.05;

  void validate() const {
    auto positive = [](std::size_t v, const char* name) {
      if (v == 0) throw InvalidArgument(std::string("SyntheticCorpusSpec: ") + name + " must be positive");
    };
    positive(n_topics, "n_topics");
    positive(docs_per_topic, "docs_per_topic");
    positive(queries_per_topic, "queries_per_topic");
    positive(vocab_words, "vocab_words");
    positive(doc_length, "doc_length");
    positive(subtopics_per_topic, "subtopics_per_topic");
    positive(topic_words, "topic_words");
    positive(subtopic_words, "subtopic_words");
    positive(key_words, "key_words");
    positive(query_key_words, "query_key_words");
    if (relevance_levels < 2) throw InvalidArgument("SyntheticCorpusSpec: relevance_levels must be >= 2");
    if (key_words > subtopic_words || query_key_words > key_words || query_topic_words > topic_words) {
      throw InvalidArgument("SyntheticCorpusSpec: word-count fields are inconsistent");
    }
    if (docs_per_topic < 2) throw InvalidArgument("SyntheticCorpusSpec: docs_per_topic must be >= 2");
    if (!(p_subtopic >= 0 && p_topic >= 0 && p_sibling >= 0 && p_subtopic + p_topic + p_sibling <= 1.0)) {
      throw InvalidArgument("SyntheticCorpusSpec: mixture probabilities must be non-negative and sum to <= 1");
    }
  }
};

inline SyntheticCorpusSpec load_synthetic_spec(KeyValueConfig& kv) {
  SyntheticCorpusSpec s;
  s.n_topics = kv.get_uint("n_topics", s.n_topics);
  s.docs_per_topic = kv.get_uint("docs_per_topic", s.docs_per_topic);
  s.queries_per_topic = kv.get_uint("queries_per_topic", s.queries_per_topic);
  s.heldout_queries_per_topic = kv.get_uint("heldout_queries_per_topic", s.heldout_queries_per_topic);
  s.vocab_words = kv.get_uint("vocab_words", s.vocab_words);
  s.doc_length = kv.get_uint("doc_length", s.doc_length);
  s.relevance_levels = kv.get_uint("relevance_levels", s.relevance_levels);
  s.seed = kv.get_uint("seed", s.seed);
  s.subtopics_per_topic = kv.get_uint("subtopics_per_topic", s.subtopics_per_topic);
  s.topic_words = kv.get_uint("topic_words", s.topic_words);
  s.subtopic_words = kv.get_uint("subtopic_words", s.subtopic_words);
  s.key_words = kv.get_uint("key_words", s.key_words);
  s.query_key_words = kv.get_uint("query_key_words", s.query_key_words);
  s.query_topic_words = kv.get_uint("query_topic_words", s.query_topic_words);
  s.stage2_negatives = kv.get_uint("stage2_negatives", s.stage2_negatives);
  s.hardest_negatives = kv.get_bool("hardest_negatives", s.hardest_negatives);
  s.label_by_occurrences = kv.get_bool("label_by_occurrences", s.label_by_occurrences);
  s.p_subtopic = kv.get_double("p_subtopic", s.p_subtopic);
  s.p_topic = kv.get_double("p_topic", s.p_topic);
  s.p_sibling = kv.get_double("p_sibling", s.p_sibling);
  s.validate();
  return s;
}

struct SyntheticQuery {
  Query query;
  std::size_t topic = 0;
  std::size_t subtopic = 0;
  std::vector<std::string> key_set;
};

struct SyntheticData {
  std::vector<Document> corpus;
  std::vector<std::size_t> doc_topic;
  std::vector<std::size_t> doc_subtopic;
  std::vector<SyntheticQuery> train_queries;
  std::vector<SyntheticQuery> test_queries;
  Qrels train_qrels;
  Qrels test_qrels;
  std::vector<TrainingInstance> stage1_train;
  std::vector<TrainingInstance> stage1_test;
  std::vector<TrainingInstance> stage2_train;
  std::string instruction;

  static std::vector<Query> plain(const std::vector<SyntheticQuery>& qs) {
    std::vector<Query> out;
    for (const auto& q : qs) out.push_back(q.query);
    return out;
  }
};

inline std::string topic_word(std::size_t topic, std::size_t j) {
  return "t" + std::to_string(topic) + "c" + std::to_string(j);
}
inline std::string subtopic_word(std::size_t topic, std::size_t sub, std::size_t j) {
  return "t" + std::to_string(topic) + "s" + std::to_string(sub) + "w" + std::to_string(j);
}
inline std::string background_word(std::size_t j) { return "b" + std::to_string(j); }

// Number of distinct key words occurring in the text.
inline std::size_t key_overlap(const std::string& text, const std::vector<std::string>& key_set) {
  std::set<std::string_view> present;
  for (auto piece : split_whitespace(text)) present.insert(piece);
  std::size_t n = 0;
  for (const auto& k : key_set) n += present.count(k);
  return n;
}

// Number of tokens of the text that are key words (with repetition).
inline std::size_t key_occurrences(const std::string& text, const std::vector<std::string>& key_set) {
  std::size_t n = 0;
  for (auto piece : split_whitespace(text)) {
    n += static_cast<std::size_t>(std::count(key_set.begin(), key_set.end(), piece));
  }
  return n;
}

inline int overlap_grade(std::size_t overlap, std::size_t key_size, std::size_t levels) {
  return static_cast<int>(overlap * (levels - 1) / key_size);
}

namespace detail {

inline std::vector<std::size_t> sample_distinct(std::size_t n, std::size_t k, Pcg32& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(pool), rng);
  pool.resize(std::min(k, n));
  return pool;
}

}  // namespace detail

inline SyntheticData generate_synthetic(const SyntheticCorpusSpec& spec) {
  spec.validate();
  SyntheticData data;
  data.instruction = kDefaultQueryInstruction;
  Pcg32 rng(spec.seed);

  for (std::size_t t = 0; t < spec.n_topics; ++t) {
    for (std::size_t d = 0; d < spec.docs_per_topic; ++d) {
      const std::size_t sub = d % spec.subtopics_per_topic;
      std::string text;
      for (std::size_t i = 0; i < spec.doc_length; ++i) {
        const double r = rng.uniform01();
        std::string w;
        if (r < spec.p_subtopic) {
          w = subtopic_word(t, sub, rng.below(static_cast<std::uint32_t>(spec.subtopic_words)));
        } else if (r < spec.p_subtopic + spec.p_topic) {
          w = topic_word(t, rng.below(static_cast<std::uint32_t>(spec.topic_words)));
        } else if (r < spec.p_subtopic + spec.p_topic + spec.p_sibling && spec.subtopics_per_topic > 1) {
          std::size_t other = rng.below(static_cast<std::uint32_t>(spec.subtopics_per_topic - 1));
          if (other >= sub) ++other;
          w = subtopic_word(t, other, rng.below(static_cast<std::uint32_t>(spec.subtopic_words)));
        } else {
          w = background_word(rng.below(static_cast<std::uint32_t>(spec.vocab_words)));
        }
        if (!text.empty()) text += ' ';
        text += w;
      }
      data.corpus.push_back({"d" + std::to_string(t) + "_" + std::to_string(d), std::move(text)});
      data.doc_topic.push_back(t);
      data.doc_subtopic.push_back(sub);
    }
  }

  auto make_query = [&](std::size_t t, std::size_t ordinal, const std::string& prefix) {
    SyntheticQuery q;
    q.topic = t;
    q.subtopic = ordinal % spec.subtopics_per_topic;
    for (std::size_t j : detail::sample_distinct(spec.subtopic_words, spec.key_words, rng)) {
      q.key_set.push_back(subtopic_word(t, q.subtopic, j));
    }
    std::vector<std::string> words;
    for (std::size_t j : detail::sample_distinct(spec.key_words, spec.query_key_words, rng)) words.push_back(q.key_set[j]);
    for (std::size_t j : detail::sample_distinct(spec.topic_words, spec.query_topic_words, rng)) {
      words.push_back(topic_word(t, j));
    }
    shuffle(std::span<std::string>(words), rng);
    q.query.id = prefix + std::to_string(t) + "_" + std::to_string(ordinal);
    for (const auto& w : words) {
      if (!q.query.text.empty()) q.query.text += ' ';
      q.query.text += w;
    }
    return q;
  };

  for (std::size_t t = 0; t < spec.n_topics; ++t) {
    for (std::size_t i = 0; i < spec.queries_per_topic; ++i) data.train_queries.push_back(make_query(t, i, "q"));
    for (std::size_t i = 0; i < spec.heldout_queries_per_topic; ++i) {
      data.test_queries.push_back(make_query(t, spec.queries_per_topic + i, "h"));
    }
  }

  auto grade_all = [&](const SyntheticQuery& q, Qrels& qrels) {
    std::vector<std::size_t> overlaps(data.corpus.size());
    for (std::size_t d = 0; d < data.corpus.size(); ++d) {
      overlaps[d] = key_overlap(data.corpus[d].text, q.key_set);
      const int grade = overlap_grade(overlaps[d], q.key_set.size(), spec.relevance_levels);
      if (grade > 0) qrels[q.query.id][data.corpus[d].id] = grade;
    }
    return overlaps;
  };

  // The positive is the topic document with the largest overlap (lowest index
  // on ties). Negatives are drawn from topic documents with strictly smaller
  // overlap, then from other topics if those run out.
  auto make_instance = [&](const SyntheticQuery& q, const std::vector<std::size_t>& overlaps, std::size_t n_neg,
                           bool labeled) {
    const std::size_t first = q.topic * spec.docs_per_topic;
    std::size_t pos = first;
    for (std::size_t d = first; d < first + spec.docs_per_topic; ++d) {
      if (overlaps[d] > overlaps[pos]) pos = d;
    }
    std::vector<std::size_t> hard;
    for (std::size_t d = first; d < first + spec.docs_per_topic; ++d) {
      if (overlaps[d] < overlaps[pos]) hard.push_back(d);
    }
    shuffle(std::span<std::size_t>(hard), rng);
    if (spec.hardest_negatives) {
      std::stable_sort(hard.begin(), hard.end(), [&](std::size_t a, std::size_t b) { return overlaps[a] > overlaps[b]; });
    }
    std::vector<std::size_t> negs(hard.begin(), hard.begin() + static_cast<std::ptrdiff_t>(std::min(n_neg, hard.size())));
    while (negs.size() < n_neg) {
      const std::size_t d = rng.below(static_cast<std::uint32_t>(data.corpus.size()));
      if (data.doc_topic[d] == q.topic || std::find(negs.begin(), negs.end(), d) != negs.end()) continue;
      negs.push_back(d);
    }
    TrainingInstance inst;
    inst.query = q.query;
    inst.instruction = data.instruction;
    inst.positive = data.corpus[pos];
    // Label score: distinct overlap first, key-word occurrences as the tie-breaker.
    auto label_score = [&](std::size_t d) {
      const double occ = static_cast<double>(key_occurrences(data.corpus[d].text, q.key_set));
      return static_cast<double>(overlaps[d]) + (spec.label_by_occurrences ? occ / (occ + 1.0) : 0.0);
    };
    std::vector<double> scores{label_score(pos)};
    for (std::size_t d : negs) {
      inst.negatives.push_back(data.corpus[d]);
      scores.push_back(label_score(d));
    }
    if (labeled) inst.label = label_from_scores(scores);
    return inst;
  };

  for (const auto& q : data.train_queries) {
    const auto overlaps = grade_all(q, data.train_qrels);
    data.stage1_train.push_back(make_instance(q, overlaps, 1, false));
    data.stage2_train.push_back(make_instance(q, overlaps, spec.stage2_negatives, true));
  }
  for (const auto& q : data.test_queries) {
    const auto overlaps = grade_all(q, data.test_qrels);
    data.stage1_test.push_back(make_instance(q, overlaps, 1, false));
  }
  return data;
}

// File name and contents of every artifact of a synthetic data set, in a
// fixed order.
inline std::vector<std::pair<std::string, std::string>> synthetic_files(const SyntheticData& data) {
  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back("corpus.jsonl", to_jsonl(data.corpus));
  files.emplace_back("queries_train.jsonl", to_jsonl(SyntheticData::plain(data.train_queries)));
  files.emplace_back("queries_test.jsonl", to_jsonl(SyntheticData::plain(data.test_queries)));
  files.emplace_back("qrels_train.txt", format_qrels(data.train_qrels));
  files.emplace_back("qrels_test.txt", format_qrels(data.test_qrels));
  files.emplace_back("stage1_train.jsonl", instances_jsonl(data.stage1_train));
  files.emplace_back("stage1_test.jsonl", instances_jsonl(data.stage1_test));
  files.emplace_back("stage2_train.jsonl", instances_jsonl(data.stage2_train));
  return files;
}

}  // namespace e2rank
