#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "e2rank/data_io.hpp"
#include "e2rank/encoder.hpp"
#include "e2rank/error.hpp"
#include "e2rank/index.hpp"
#include "e2rank/metrics.hpp"
#include "e2rank/parallel.hpp"
#include "e2rank/prompts.hpp"

namespace e2rank {

inline constexpr const char* kDefaultQueryInstruction =
    "Given a web search query, retrieve relevant passages that answer the query";

struct PRFConfig {
  std::size_t k_prf = 20;          // candidates placed in the listwise prompt
  std::size_t rerank_depth = 100;  // candidates rescored
  PromptTemplate prompt;
  // Used for the plain query embedding (retrieval, and k_prf == 0).
  std::string query_instruction = kDefaultQueryInstruction;

  void validate() const {
    if (k_prf > rerank_depth) throw InvalidArgument("PRFConfig: k_prf must not exceed rerank_depth");
    if (rerank_depth == 0) throw InvalidArgument("PRFConfig: rerank_depth must be >= 1");
    prompt.validate();
  }
};

struct SlidingWindowConfig {
  std::size_t window = 20;
  std::size_t step = 10;

  void validate() const {
    if (step < 1 || step > window) throw InvalidArgument("SlidingWindowConfig: need 1 <= step <= window");
  }
};

struct CostReport {
  std::uint64_t encoder_forward_passes = 0;
  std::uint64_t prompt_tokens_processed = 0;
  std::uint64_t doc_embeddings_reused = 0;
  double wall_ms = 0.0;
};

struct RerankResult {
  std::vector<ScoredDoc> ranked;
  std::size_t rescored = 0;  // ranked[0, rescored) carry cosine scores
  CostReport cost;
};

// Query embedding used for reranking: the listwise prompt over the first
// min(k_prf, n) candidates, or the plain query embedding when that is empty.
struct PrfQuery {
  std::vector<TokenId> tokens;
  Vector embedding;
};

inline PrfQuery build_prf_query(const Query& query, std::span<const ScoredDoc> candidates, const PRFConfig& cfg,
                                const Encoder& encoder, const DocumentStore& store) {
  const std::size_t k = std::min(cfg.k_prf, candidates.size());
  PrfQuery out;
  if (k == 0) {
    out.tokens = encoder.query_tokens(query, cfg.query_instruction);
  } else {
    std::vector<Document> docs;
    docs.reserve(k);
    for (std::size_t i = 0; i < k; ++i) docs.push_back(store.at(candidates[i].doc_id));
    out.tokens = prompt_tokens(make_listwise_prompt(cfg.prompt, std::move(docs), query, encoder), cfg.prompt, encoder);
  }
  out.embedding = encoder.encode_tokens(out.tokens);
  return out;
}

// One encoder pass for the PRF query, then cosine rescoring of the first
// rerank_depth candidates against stored document embeddings. Candidates past
// the depth keep their relative order below the rescored block, with scores
// strictly under the lowest rescored score.
inline RerankResult prf_rerank(const Query& query, std::span<const ScoredDoc> candidates, const PRFConfig& cfg,
                               const Encoder& encoder, const EmbeddingIndex& idx, const DocumentStore& store) {
  cfg.validate();
  if (candidates.empty()) throw InvalidArgument("prf_rerank: no candidates");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t depth = std::min(cfg.rerank_depth, candidates.size());
  for (std::size_t i = 0; i < depth; ++i) {
    if (!idx.contains(candidates[i].doc_id)) {
      throw InvalidArgument("prf_rerank: no embedding for candidate \"" + candidates[i].doc_id + "\"");
    }
  }

  const PrfQuery prf = build_prf_query(query, candidates, cfg, encoder, store);
  const auto q = unit(prf.embedding);

  RerankResult out;
  out.ranked.reserve(candidates.size());
  for (std::size_t i = 0; i < depth; ++i) out.ranked.push_back({candidates[i].doc_id, idx.score(q, candidates[i].doc_id)});
  std::sort(out.ranked.begin(), out.ranked.end(), ranks_before);
  const double floor = out.ranked.back().score;
  for (std::size_t i = depth; i < candidates.size(); ++i) {
    out.ranked.push_back({candidates[i].doc_id, floor - static_cast<double>(i - depth + 1)});
  }
  out.rescored = depth;
  out.cost.encoder_forward_passes = 1;
  out.cost.prompt_tokens_processed = prf.tokens.size() + 1;
  out.cost.doc_embeddings_reused = depth;
  out.cost.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// ---- cost models -------------------------------------------------------------------

inline std::uint64_t sliding_window_passes(std::uint64_t n, const SlidingWindowConfig& cfg) {
  cfg.validate();
  if (n == 0) throw InvalidArgument("sliding_window_cost: n_candidates must be >= 1");
  if (n <= cfg.window) return 1;
  return 1 + (n - cfg.window + cfg.step - 1) / cfg.step;
}

// Every window of the baseline holds min(window, n) documents and none of
// their representations can be reused across windows.
inline CostReport sliding_window_cost(std::uint64_t n_candidates, const SlidingWindowConfig& cfg,
                                      std::uint64_t avg_doc_tokens) {
  CostReport c;
  c.encoder_forward_passes = sliding_window_passes(n_candidates, cfg);
  c.prompt_tokens_processed = c.encoder_forward_passes * std::min<std::uint64_t>(cfg.window, n_candidates) * avg_doc_tokens;
  c.doc_embeddings_reused = 0;
  return c;
}

// Analytic counterpart for the PRF reranker under the same token model.
inline CostReport prf_cost(std::uint64_t n_candidates, std::uint64_t k_prf, std::uint64_t rerank_depth,
                           std::uint64_t avg_doc_tokens) {
  if (n_candidates == 0) throw InvalidArgument("prf_cost: n_candidates must be >= 1");
  CostReport c;
  c.encoder_forward_passes = 1;
  c.prompt_tokens_processed = std::min(k_prf, n_candidates) * avg_doc_tokens;
  c.doc_embeddings_reused = std::min(rerank_depth, n_candidates);
  return c;
}

// Orders a window: returns positions 0..w-1 of the given slice, best first.
using WindowScorer = std::function<std::vector<std::size_t>(std::span<const ScoredDoc>)>;

// Back-to-front sliding-window reranking with any window scorer. Each window
// is one forward pass. Output scores are n - position.
inline RerankResult sliding_window_rerank(std::span<const ScoredDoc> candidates, const SlidingWindowConfig& cfg,
                                          const WindowScorer& scorer, std::uint64_t avg_doc_tokens = 0) {
  cfg.validate();
  if (candidates.empty()) throw InvalidArgument("sliding_window_rerank: no candidates");
  std::vector<ScoredDoc> order(candidates.begin(), candidates.end());
  const std::size_t n = order.size();
  RerankResult out;
  std::size_t end = n;
  std::size_t begin = n > cfg.window ? n - cfg.window : 0;
  for (;;) {
    std::span<const ScoredDoc> slice(order.data() + begin, end - begin);
    const auto perm = scorer(slice);
    if (perm.size() != slice.size()) throw InvalidArgument("window scorer returned a wrong-sized permutation");
    std::vector<ScoredDoc> reordered;
    std::vector<char> used(slice.size(), 0);
    for (std::size_t p : perm) {
      if (p >= slice.size() || used[p]++) throw InvalidArgument("window scorer returned an invalid permutation");
      reordered.push_back(slice[p]);
    }
    std::copy(reordered.begin(), reordered.end(), order.begin() + static_cast<std::ptrdiff_t>(begin));
    ++out.cost.encoder_forward_passes;
    out.cost.prompt_tokens_processed += (end - begin) * avg_doc_tokens;
    if (begin == 0) break;
    // The last window is anchored at the front and kept full width.
    if (begin > cfg.step) {
      begin -= cfg.step;
      end -= cfg.step;
    } else {
      begin = 0;
      end = std::min(n, cfg.window);
    }
  }
  for (std::size_t i = 0; i < n; ++i) order[i].score = static_cast<double>(n - i);
  out.ranked = std::move(order);
  out.rescored = n;
  return out;
}

// ---- pipelines -----------------------------------------------------------------------

struct EndToEndResult {
  std::vector<ScoredDoc> retrieved;
  RerankResult reranked;
};

inline EndToEndResult end_to_end(const Query& query, std::size_t k_retrieve, const PRFConfig& cfg,
                                 const Encoder& encoder, const EmbeddingIndex& idx, const DocumentStore& store) {
  EndToEndResult out;
  out.retrieved = idx.top_k(encoder.encode_query(query, cfg.query_instruction), k_retrieve);
  out.reranked = prf_rerank(query, out.retrieved, cfg, encoder, idx, store);
  return out;
}

inline Run retrieve_run(const std::vector<Query>& queries, std::size_t k, const std::string& instruction,
                        const Encoder& encoder, const EmbeddingIndex& idx) {
  std::vector<std::vector<ScoredDoc>> results(queries.size());
  parallel_for(queries.size(), [&](std::size_t i) {
    results[i] = idx.top_k(encoder.encode_query(queries[i], instruction), k);
  });
  Run run;
  for (std::size_t i = 0; i < queries.size(); ++i) run.add(queries[i].id, results[i]);
  return run;
}

struct RerankedRun {
  Run run;
  std::vector<std::string> query_ids;  // parallel to results
  std::vector<RerankResult> results;
};

// Reranks every query of `candidates` that also appears in `queries`, in the
// run's query order.
inline RerankedRun rerank_run(const Run& candidates, const std::vector<Query>& queries, const PRFConfig& cfg,
                              const Encoder& encoder, const EmbeddingIndex& idx, const DocumentStore& store) {
  std::map<std::string, const Query*> by_id;
  for (const auto& q : queries) by_id.emplace(q.id, &q);
  RerankedRun out;
  for (const auto& qid : candidates.queries()) {
    if (by_id.count(qid)) out.query_ids.push_back(qid);
  }
  out.results.resize(out.query_ids.size());
  parallel_for(out.query_ids.size(), [&](std::size_t i) {
    const auto scored = candidates.scored(out.query_ids[i]);
    out.results[i] = prf_rerank(*by_id.at(out.query_ids[i]), scored, cfg, encoder, idx, store);
  });
  for (std::size_t i = 0; i < out.query_ids.size(); ++i) out.run.add(out.query_ids[i], out.results[i].ranked);
  return out;
}

struct SweepPoint {
  std::size_t k_prf = 0;
  double mean_ndcg = 0.0;
};

inline std::vector<SweepPoint> prf_size_sweep(const Run& candidates, const std::vector<Query>& queries,
                                              std::span<const std::size_t> sizes, const PRFConfig& base,
                                              const Encoder& encoder, const EmbeddingIndex& idx,
                                              const DocumentStore& store, const Qrels& qrels, std::size_t k = 10) {
  std::vector<SweepPoint> out;
  for (std::size_t size : sizes) {
    PRFConfig cfg = base;
    cfg.k_prf = size;
    cfg.rerank_depth = std::max(base.rerank_depth, size);
    const auto reranked = rerank_run(candidates, queries, cfg, encoder, idx, store);
    out.push_back({size, mean_ndcg(reranked.run, qrels, k)});
  }
  return out;
}

// Mean over queries of the p-th highest score, for p up to the shortest list.
inline std::vector<double> score_distribution(const std::vector<std::vector<double>>& per_query_scores) {
  if (per_query_scores.empty()) throw InvalidArgument("score_distribution: empty query set");
  std::size_t len = per_query_scores.front().size();
  for (const auto& s : per_query_scores) len = std::min(len, s.size());
  std::vector<double> sums(len, 0.0);
  for (const auto& s : per_query_scores) {
    std::vector<double> sorted = s;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    for (std::size_t p = 0; p < len; ++p) sums[p] += sorted[p];
  }
  for (double& v : sums) v /= static_cast<double>(per_query_scores.size());
  return sums;
}

inline std::vector<double> score_distribution(const RerankedRun& reranked, std::size_t max_len = 100) {
  std::vector<std::vector<double>> scores;
  for (const auto& r : reranked.results) {
    std::vector<double> s;
    for (std::size_t i = 0; i < std::min(r.rescored, max_len); ++i) s.push_back(r.ranked[i].score);
    scores.push_back(std::move(s));
  }
  return score_distribution(scores);
}

inline std::string cost_report_json(const std::string& qid, const CostReport& c) {
  return Json{{"qid", qid},
              {"forward_passes", c.encoder_forward_passes},
              {"prompt_tokens", c.prompt_tokens_processed},
              {"reused_embeddings", c.doc_embeddings_reused},
              {"wall_ms", c.wall_ms}}
      .dump();
}

// ---- text reports ---------------------------------------------------------------

inline std::string format_sweep(std::span<const SweepPoint> points, std::size_t k = 10) {
  std::string out = "k_prf,ndcg@" + std::to_string(k) + "\n";
  for (const auto& p : points) out += std::to_string(p.k_prf) + ',' + format_metric(p.mean_ndcg) + '\n';
  return out;
}

inline std::string format_score_distribution(std::span<const double> dist) {
  std::string out = "rank,mean_score\n";
  for (std::size_t i = 0; i < dist.size(); ++i) out += std::to_string(i + 1) + ',' + format_metric(dist[i]) + '\n';
  return out;
}

inline std::string format_cost_comparison(const CostReport& window, const CostReport& prf) {
  std::string out;
  out += "window_forward_passes " + std::to_string(window.encoder_forward_passes) + '\n';
  out += "window_prompt_tokens " + std::to_string(window.prompt_tokens_processed) + '\n';
  out += "prf_forward_passes " + std::to_string(prf.encoder_forward_passes) + '\n';
  out += "prf_prompt_tokens " + std::to_string(prf.prompt_tokens_processed) + '\n';
  out += "prf_reused_embeddings " + std::to_string(prf.doc_embeddings_reused) + '\n';
  if (window.prompt_tokens_processed > 0) {
    out += "prompt_token_ratio " +
           format_metric(static_cast<double>(prf.prompt_tokens_processed) /
                         static_cast<double>(window.prompt_tokens_processed)) +
           '\n';
  }
  return out;
}

}  // namespace e2rank
