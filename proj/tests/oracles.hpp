// Straight-line reference implementations used as test oracles. They avoid
// the production code paths on purpose: different loop structure, long
// double arithmetic, full sorts instead of partial ones.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "e2rank/e2rank.hpp"

namespace oracle {

// Mean over instances of -log(exp(s+/t) / (exp(s+/t) + sum exp(s-/t))).
inline double infonce(const std::vector<e2rank::ScoredCandidates>& batch, double tau) {
  long double total = 0.0L;
  for (const auto& c : batch) {
    const long double pos = std::exp(static_cast<long double>(c.positive_score) / tau);
    long double neg = 0.0L;
    for (double s : c.negative_scores) neg += std::exp(static_cast<long double>(s) / tau);
    const long double z = pos + neg;
    // Pick the form that does not cancel: -log(p) when p is small, -log1p(-(1-p)) otherwise.
    total += neg > pos ? -std::log(pos / z) : -std::log1p(-neg / z);
  }
  return static_cast<double>(total / static_cast<long double>(batch.size()));
}

// Mean over instances of the sum over label-ordered pairs (better, worse) of
// log(1 + exp((s_worse - s_better) / tau)).
inline double ranknet(const std::vector<e2rank::ScoredCandidates>& batch, double tau) {
  long double total = 0.0L;
  for (const auto& c : batch) {
    const std::size_t n = c.ranks.size();
    std::vector<std::size_t> by_rank(n);
    for (std::size_t j = 0; j < n; ++j) by_rank[static_cast<std::size_t>(c.ranks[j] - 1)] = j;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const long double x = (static_cast<long double>(c.all_scores[by_rank[q]]) - c.all_scores[by_rank[p]]) / tau;
        total += std::log1p(std::exp(x));
      }
    }
  }
  return static_cast<double>(total / static_cast<long double>(batch.size()));
}

// DCG / IDCG written from the textbook definition.
inline double ndcg(const std::vector<std::string>& ranked, const std::map<std::string, int>& grades, std::size_t k) {
  auto g = [&](const std::string& doc) {
    const auto it = grades.find(doc);
    return it == grades.end() ? 0 : it->second;
  };
  long double dcg = 0.0L;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
    dcg += (std::pow(2.0L, g(ranked[i])) - 1.0L) / (std::log(static_cast<long double>(i + 2)) / std::log(2.0L));
  }
  std::vector<int> ideal;
  for (const auto& kv : grades) ideal.push_back(kv.second);
  std::sort(ideal.rbegin(), ideal.rend());
  long double idcg = 0.0L;
  for (std::size_t i = 0; i < ideal.size() && i < k; ++i) {
    idcg += (std::pow(2.0L, ideal[i]) - 1.0L) / (std::log(static_cast<long double>(i + 2)) / std::log(2.0L));
  }
  return idcg == 0.0L ? 0.0 : static_cast<double>(dcg / idcg);
}

// Every document scored, fully sorted, truncated.
inline std::vector<e2rank::ScoredDoc> top_k(const std::vector<std::string>& ids, const std::vector<e2rank::Vector>& rows,
                                            const e2rank::Vector& query, std::size_t k) {
  std::vector<e2rank::ScoredDoc> all;
  for (std::size_t i = 0; i < ids.size(); ++i) all.push_back({ids[i], e2rank::cosine(query, rows[i])});
  std::sort(all.begin(), all.end(), [](const e2rank::ScoredDoc& a, const e2rank::ScoredDoc& b) {
    return a.score > b.score || (a.score == b.score && a.doc_id < b.doc_id);
  });
  all.resize(std::min(k, all.size()));
  return all;
}

// Central difference of f with respect to x[i].
inline double central_difference(std::vector<double>& x, std::size_t i, double h, const std::function<double()>& f) {
  const double saved = x[i];
  x[i] = saved + h;
  const double up = f();
  x[i] = saved - h;
  const double down = f();
  x[i] = saved;
  return (up - down) / (2.0 * h);
}

inline double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace oracle
