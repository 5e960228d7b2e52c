#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "e2rank/encoder.hpp"
#include "e2rank/error.hpp"
#include "e2rank/linalg.hpp"

namespace e2rank {

struct LossConfig {
  double tau_infonce = 0.03;
  double tau_ranknet = 0.1;
  double lambda = 2.0;
  // Multiplier on the InfoNCE term; 0 gives the "without InfoNCE" ablation.
  double infonce_weight = 1.0;
  // Other instances' documents join each InfoNCE denominator.
  bool in_batch_negatives = false;
  // Test-only: exponent (s_better - s_worse) / tau exactly as printed, which
  // rewards inversions. The default penalizes s_worse > s_better.
  bool literal_ranknet_sign = false;

  void validate() const {
    if (!(tau_infonce > 0.0) || !(tau_ranknet > 0.0)) throw InvalidArgument("LossConfig: temperatures must be > 0");
    if (!(lambda >= 0.0)) throw InvalidArgument("LossConfig: lambda must be >= 0");
    if (!(infonce_weight >= 0.0)) throw InvalidArgument("LossConfig: infonce_weight must be >= 0");
  }
};

// Similarity scores of one training instance. ranks[j] is the target rank of
// all_scores[j]; rank 1 is the most relevant.
struct ScoredCandidates {
  double positive_score = 0.0;
  std::vector<double> negative_scores;
  std::vector<double> all_scores;
  std::vector<int> ranks;
};

inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace detail {

inline void require_nonempty(std::size_t n, const char* what) {
  if (n == 0) throw InvalidArgument(std::string(what) + ": empty batch");
}

inline void validate_ranks(const ScoredCandidates& c) {
  if (c.ranks.size() != c.all_scores.size()) throw InvalidArgument("ranknet: ranks and scores differ in length");
  std::vector<char> seen(c.ranks.size() + 1, 0);
  for (int r : c.ranks) {
    if (r < 1 || static_cast<std::size_t>(r) > c.ranks.size()) {
      throw InvalidArgument("ranknet: rank " + std::to_string(r) + " outside 1.." + std::to_string(c.ranks.size()));
    }
    if (seen[static_cast<std::size_t>(r)]++) throw InvalidArgument("ranknet: duplicate rank " + std::to_string(r));
  }
}

// -log softmax of the positive, from differences d_j = (s_neg_j - s_pos) / tau.
// Shifting by max(0, max d) keeps every exponent <= 0.
struct InfoNceTerm {
  double loss;
  std::vector<double> neg_probs;  // softmax mass on each negative
};

inline InfoNceTerm infonce_term(double positive, std::span<const double> negatives, double tau) {
  double shift = 0.0;
  std::vector<double> diffs(negatives.size());
  for (std::size_t j = 0; j < negatives.size(); ++j) {
    diffs[j] = (negatives[j] - positive) / tau;
    shift = std::max(shift, diffs[j]);
  }
  double tail = 0.0;
  for (double d : diffs) tail += std::exp(d - shift);
  InfoNceTerm term;
  const double head = std::exp(-shift);
  term.loss = shift == 0.0 ? std::log1p(tail) : shift + std::log(head + tail);
  term.neg_probs.resize(diffs.size());
  for (std::size_t j = 0; j < diffs.size(); ++j) term.neg_probs[j] = std::exp(diffs[j] - shift) / (head + tail);
  return term;
}

inline double ranknet_pair_exponent(double better, double worse, const LossConfig& cfg) {
  return cfg.literal_ranknet_sign ? (better - worse) / cfg.tau_ranknet : (worse - better) / cfg.tau_ranknet;
}

}  // namespace detail

inline double infonce(std::span<const ScoredCandidates> batch, const LossConfig& cfg) {
  detail::require_nonempty(batch.size(), "infonce");
  cfg.validate();
  double total = 0.0;
  for (const auto& c : batch) total += detail::infonce_term(c.positive_score, c.negative_scores, cfg.tau_infonce).loss;
  return total / static_cast<double>(batch.size());
}

inline double ranknet(std::span<const ScoredCandidates> batch, const LossConfig& cfg) {
  detail::require_nonempty(batch.size(), "ranknet");
  cfg.validate();
  double total = 0.0;
  for (const auto& c : batch) {
    detail::validate_ranks(c);
    const std::size_t n = c.all_scores.size();
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        if (c.ranks[j] < c.ranks[k]) {
          total += softplus(detail::ranknet_pair_exponent(c.all_scores[j], c.all_scores[k], cfg));
        }
      }
    }
  }
  return total / static_cast<double>(batch.size());
}

inline double combined(std::span<const ScoredCandidates> batch, const LossConfig& cfg) {
  return cfg.infonce_weight * infonce(batch, cfg) + cfg.lambda * ranknet(batch, cfg);
}

// ---- encoder-level objective ------------------------------------------------

// One training instance as token sequences. docs[0] is the positive. When
// ranks is empty the instance contributes no RankNet pairs and ranking_query
// is ignored.
struct TokenizedInstance {
  std::vector<TokenId> query;
  std::vector<TokenId> ranking_query;
  std::vector<std::vector<TokenId>> docs;
  std::vector<int> ranks;
};

struct LossValues {
  double infonce = 0.0;
  double ranknet = 0.0;
  double combined = 0.0;
};

struct ParamGradient {
  std::vector<double> token_table;
  std::vector<double> projection;
};

struct LossGradient {
  LossValues loss;
  ParamGradient grad;
};

namespace detail {

struct Embedded {
  std::vector<TokenId> tokens;  // eos not included
  std::vector<double> pooled;
  std::vector<double> embedding;
  std::vector<double> unit;
  double norm = 0.0;
  std::vector<double> grad_unit;  // accumulated dL/d(unit) projected later
};

inline Embedded embed(std::span<const TokenId> tokens, const EncoderParams& params) {
  Embedded e;
  e.tokens.assign(tokens.begin(), tokens.end());
  e.pooled = pool(tokens, params);
  e.embedding = project(e.pooled, params);
  e.norm = checked_norm(e.embedding);
  e.unit = unit(e.embedding);
  e.grad_unit.assign(params.dim, 0.0);
  return e;
}

// Accumulates weight * d cos(a, b) into both sides. d cos / d a = (u_b - s u_a) / |a|;
// the 1/|a| factor is applied in backprop().
inline void add_cosine_grad(Embedded& a, Embedded& b, double s, double weight) {
  if (weight == 0.0) return;
  for (std::size_t i = 0; i < a.unit.size(); ++i) {
    a.grad_unit[i] += weight * (b.unit[i] - s * a.unit[i]);
    b.grad_unit[i] += weight * (a.unit[i] - s * b.unit[i]);
  }
}

inline void backprop(const Embedded& e, const EncoderParams& params, ParamGradient& grad) {
  const std::size_t d = params.dim;
  std::vector<double> de(d);
  for (std::size_t i = 0; i < d; ++i) de[i] = e.grad_unit[i] / e.norm;
  std::vector<double> dh(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    if (de[i] == 0.0) continue;
    for (std::size_t j = 0; j < d; ++j) {
      grad.projection[i * d + j] += de[i] * e.pooled[j];
      dh[j] += params.projection[i * d + j] * de[i];
    }
  }
  const double inv_len = 1.0 / static_cast<double>(e.tokens.size() + 1);
  auto add_row = [&](TokenId t) {
    double* row = grad.token_table.data() + static_cast<std::size_t>(t) * d;
    for (std::size_t j = 0; j < d; ++j) row[j] += dh[j] * inv_len;
  };
  for (TokenId t : e.tokens) add_row(t);
  add_row(params.eos_id());
}

struct EmbeddedInstance {
  Embedded query;
  Embedded ranking_query;
  std::vector<Embedded> docs;
  bool has_ranking = false;
};

inline std::vector<EmbeddedInstance> embed_batch(std::span<const TokenizedInstance> batch,
                                                 const EncoderParams& params) {
  std::vector<EmbeddedInstance> out(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& inst = batch[i];
    if (inst.docs.empty()) throw InvalidArgument("training instance without a positive document");
    out[i].query = embed(inst.query, params);
    out[i].has_ranking = !inst.ranks.empty();
    if (out[i].has_ranking) {
      if (inst.ranks.size() != inst.docs.size()) throw InvalidArgument("ranks must cover every document");
      out[i].ranking_query = embed(inst.ranking_query, params);
    }
    for (const auto& doc : inst.docs) out[i].docs.push_back(embed(doc, params));
  }
  return out;
}

// Scores in the layout the scalar losses consume. In-batch negatives follow
// the instance's own negatives, other instances in ascending order, each
// instance's documents in order.
inline std::vector<ScoredCandidates> score_embedded(std::span<const TokenizedInstance> batch,
                                                    const std::vector<EmbeddedInstance>& emb,
                                                    const LossConfig& cfg) {
  std::vector<ScoredCandidates> scored(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto& c = scored[i];
    const auto& q = emb[i].query.unit;
    c.positive_score = dot(q, emb[i].docs[0].unit);
    for (std::size_t j = 1; j < emb[i].docs.size(); ++j) c.negative_scores.push_back(dot(q, emb[i].docs[j].unit));
    if (cfg.in_batch_negatives) {
      for (std::size_t o = 0; o < batch.size(); ++o) {
        if (o == i) continue;
        for (const auto& d : emb[o].docs) c.negative_scores.push_back(dot(q, d.unit));
      }
    }
    if (emb[i].has_ranking) {
      for (const auto& d : emb[i].docs) c.all_scores.push_back(dot(emb[i].ranking_query.unit, d.unit));
      c.ranks = batch[i].ranks;
    }
  }
  return scored;
}

}  // namespace detail

inline std::vector<ScoredCandidates> score_batch(std::span<const TokenizedInstance> batch,
                                                 const EncoderParams& params, const LossConfig& cfg) {
  const auto emb = detail::embed_batch(batch, params);
  return detail::score_embedded(batch, emb, cfg);
}

inline LossValues evaluate_losses(std::span<const TokenizedInstance> batch, const EncoderParams& params,
                                  const LossConfig& cfg) {
  const auto scored = score_batch(batch, params, cfg);
  LossValues v;
  v.infonce = infonce(scored, cfg);
  v.ranknet = ranknet(scored, cfg);
  v.combined = cfg.infonce_weight * v.infonce + cfg.lambda * v.ranknet;
  return v;
}

// Loss values and the analytic gradient of the combined loss with respect to
// the token table and projection. Contributions are accumulated in instance
// order, so the result is deterministic.
inline LossGradient loss_gradients(std::span<const TokenizedInstance> batch, const EncoderParams& params,
                                   const LossConfig& cfg) {
  detail::require_nonempty(batch.size(), "loss_gradients");
  cfg.validate();
  auto emb = detail::embed_batch(batch, params);
  const auto scored = detail::score_embedded(batch, emb, cfg);

  LossGradient out;
  out.loss.infonce = infonce(scored, cfg);
  out.loss.ranknet = ranknet(scored, cfg);
  out.loss.combined = cfg.infonce_weight * out.loss.infonce + cfg.lambda * out.loss.ranknet;

  const double n = static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& c = scored[i];
    auto& inst = emb[i];

    if (cfg.infonce_weight != 0.0) {
      const double scale = cfg.infonce_weight / (n * cfg.tau_infonce);
      const auto term = detail::infonce_term(c.positive_score, c.negative_scores, cfg.tau_infonce);
      double neg_mass = 0.0;
      for (double p : term.neg_probs) neg_mass += p;
      detail::add_cosine_grad(inst.query, inst.docs[0], c.positive_score, -scale * neg_mass);
      std::size_t slot = 0;
      for (std::size_t j = 1; j < inst.docs.size(); ++j, ++slot) {
        detail::add_cosine_grad(inst.query, inst.docs[j], c.negative_scores[slot], scale * term.neg_probs[slot]);
      }
      if (cfg.in_batch_negatives) {
        for (std::size_t o = 0; o < batch.size(); ++o) {
          if (o == i) continue;
          for (auto& d : emb[o].docs) {
            detail::add_cosine_grad(inst.query, d, c.negative_scores[slot], scale * term.neg_probs[slot]);
            ++slot;
          }
        }
      }
    }

    if (inst.has_ranking && cfg.lambda != 0.0) {
      const double scale = cfg.lambda / (n * cfg.tau_ranknet);
      const std::size_t m = c.all_scores.size();
      std::vector<double> dscore(m, 0.0);
      for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t k = 0; k < m; ++k) {
          if (c.ranks[j] >= c.ranks[k]) continue;
          const double g = scale * sigmoid(detail::ranknet_pair_exponent(c.all_scores[j], c.all_scores[k], cfg));
          if (cfg.literal_ranknet_sign) {
            dscore[j] += g;
            dscore[k] -= g;
          } else {
            dscore[k] += g;
            dscore[j] -= g;
          }
        }
      }
      for (std::size_t j = 0; j < m; ++j) {
        detail::add_cosine_grad(inst.ranking_query, inst.docs[j], c.all_scores[j], dscore[j]);
      }
    }
  }

  out.grad.token_table.assign(params.token_table.size(), 0.0);
  out.grad.projection.assign(params.projection.size(), 0.0);
  for (const auto& inst : emb) {
    detail::backprop(inst.query, params, out.grad);
    if (inst.has_ranking) detail::backprop(inst.ranking_query, params, out.grad);
    for (const auto& d : inst.docs) detail::backprop(d, params, out.grad);
  }
  return out;
}

}  // namespace e2rank
