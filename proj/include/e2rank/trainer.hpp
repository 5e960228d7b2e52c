#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "e2rank/config.hpp"
#include "e2rank/data_io.hpp"
#include "e2rank/encoder.hpp"
#include "e2rank/labels.hpp"
#include "e2rank/losses.hpp"
#include "e2rank/metrics.hpp"
#include "e2rank/prompts.hpp"
#include "e2rank/rng.hpp"

namespace e2rank {

// One query with its positive and negatives. label, when present, ranks the
// documents [positive, negatives...] as indices 1..1+|negatives|.
struct TrainingInstance {
  Query query;
  std::string instruction;
  Document positive;
  std::vector<Document> negatives;
  std::optional<RankingLabel> label;
};

enum class Stage { I = 1, II = 2 };

struct StageConfig {
  Stage stage = Stage::I;
  std::size_t batch_size = 512;
  double learning_rate = 5e-6;
  std::size_t epochs = 1;
  bool in_batch_negatives = false;
  double warmup_fraction = 0.03;
  std::uint64_t seed = 42;
  LossConfig loss;
  // false: RankNet scores use the plain query embedding instead of the
  // listwise prompt ("without listwise" ablation).
  bool listwise = true;
  // false: the training prompt lists documents in label order, best first.
  bool shuffle_prompt = true;
  PromptTemplate prompt;

  static StageConfig stage1() { return StageConfig{}; }

  static StageConfig stage2() {
    StageConfig c;
    c.stage = Stage::II;
    c.batch_size = 128;
    c.in_batch_negatives = true;
    return c;
  }

  void validate() const {
    if (batch_size == 0) throw InvalidArgument("StageConfig: batch_size must be positive");
    if (!(warmup_fraction >= 0.0)) throw InvalidArgument("StageConfig: warmup_fraction must be >= 0");
    if (!(learning_rate >= 0.0)) throw InvalidArgument("StageConfig: learning_rate must be >= 0");
    loss.validate();
    prompt.validate();
  }
};

// Reads the training keys of a key=value file on top of the stage defaults.
inline StageConfig load_stage_config(KeyValueConfig& kv, Stage stage) {
  StageConfig c = stage == Stage::I ? StageConfig::stage1() : StageConfig::stage2();
  c.batch_size = kv.get_uint("batch_size", c.batch_size);
  c.learning_rate = kv.get_double("learning_rate", c.learning_rate);
  c.epochs = kv.get_uint("epochs", c.epochs);
  c.in_batch_negatives = kv.get_bool("in_batch_negatives", c.in_batch_negatives);
  c.warmup_fraction = kv.get_double("warmup_fraction", c.warmup_fraction);
  c.seed = kv.get_uint("seed", c.seed);
  c.loss.tau_infonce = kv.get_double("tau_infonce", c.loss.tau_infonce);
  c.loss.tau_ranknet = kv.get_double("tau_ranknet", c.loss.tau_ranknet);
  c.loss.lambda = kv.get_double("lambda", c.loss.lambda);
  c.loss.infonce_weight = kv.get_double("infonce_weight", c.loss.infonce_weight);
  c.listwise = kv.get_bool("listwise", c.listwise);
  c.shuffle_prompt = kv.get_bool("shuffle_prompt", c.shuffle_prompt);
  if (kv.has("template")) c.prompt = load_template(kv.get_string("template", ""));
  c.validate();
  return c;
}

// Shape and seed of a freshly initialized encoder.
struct InitConfig {
  std::uint32_t vocab_size = 8192;
  std::uint32_t dim = 64;
  std::uint64_t seed = 7;

  EncoderParams params() const { return EncoderParams::random(vocab_size, dim, seed); }
};

inline InitConfig load_init_config(KeyValueConfig& kv) {
  InitConfig c;
  const auto vocab = kv.get_uint("vocab_size", c.vocab_size);
  const auto dim = kv.get_uint("dim", c.dim);
  if (vocab < 2 || vocab > 0xffffffffULL) throw InvalidArgument("vocab_size must be in 2..2^32-1");
  if (dim < 1 || dim > 0xffffffffULL) throw InvalidArgument("dim must be positive");
  c.vocab_size = static_cast<std::uint32_t>(vocab);
  c.dim = static_cast<std::uint32_t>(dim);
  c.seed = kv.get_uint("init_seed", c.seed);
  return c;
}

struct StepLoss {
  std::size_t step = 0;
  double learning_rate = 0.0;
  LossValues loss;
};

struct TrainResult {
  EncoderParams params;
  std::vector<StepLoss> curve;
};

inline std::vector<Document> instance_documents(const TrainingInstance& inst) {
  std::vector<Document> docs{inst.positive};
  docs.insert(docs.end(), inst.negatives.begin(), inst.negatives.end());
  return docs;
}

// Token sequences for training. In stage II every instance needs a label;
// the listwise prompt holds the instance's documents in a permutation drawn
// per instance from the seed, so the prompt order carries no label signal.
inline std::vector<TokenizedInstance> tokenize_instances(std::span<const TrainingInstance> data, const StageConfig& cfg,
                                                         const Encoder& encoder) {
  std::vector<TokenizedInstance> out;
  out.reserve(data.size());
  Pcg32 order_rng(cfg.seed, 0x70726f6d7074ULL);
  for (const auto& inst : data) {
    TokenizedInstance t;
    t.query = encoder.query_tokens(inst.query, inst.instruction);
    const auto docs = instance_documents(inst);
    for (const auto& d : docs) t.docs.push_back(encoder.document_tokens(d));
    if (cfg.stage == Stage::II) {
      if (!inst.label) throw InvalidArgument("stage II instance \"" + inst.query.id + "\" has no label");
      if (inst.label->size() != docs.size()) {
        throw InvalidArgument("label of \"" + inst.query.id + "\" does not cover all documents");
      }
      t.ranks = inst.label->ranks();
      if (cfg.listwise) {
        std::vector<Document> shown;
        if (cfg.shuffle_prompt) {
          shown = docs;
          shuffle(std::span<Document>(shown), order_rng);
        } else {
          for (int idx : inst.label->permutation()) shown.push_back(docs[static_cast<std::size_t>(idx - 1)]);
        }
        t.ranking_query = prompt_tokens(make_listwise_prompt(cfg.prompt, std::move(shown), inst.query, encoder),
                                        cfg.prompt, encoder);
      } else {
        t.ranking_query = t.query;
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

// Loss used for a stage: stage I is InfoNCE alone.
inline LossConfig effective_loss(const StageConfig& cfg) {
  LossConfig loss = cfg.loss;
  loss.in_batch_negatives = cfg.in_batch_negatives;
  if (cfg.stage == Stage::I) loss.lambda = 0.0;
  return loss;
}

inline std::size_t total_steps(std::size_t n, const StageConfig& cfg) {
  return cfg.epochs * ((n + cfg.batch_size - 1) / cfg.batch_size);
}

// Linear warmup over ceil(warmup_fraction * total) steps, then constant.
inline double learning_rate_at(std::size_t step, std::size_t total, const StageConfig& cfg) {
  const auto warmup = static_cast<std::size_t>(std::ceil(cfg.warmup_fraction * static_cast<double>(total)));
  if (warmup == 0 || step >= warmup) return cfg.learning_rate;
  return cfg.learning_rate * static_cast<double>(step + 1) / static_cast<double>(warmup);
}

// Plain SGD over seeded shuffled mini-batches. The curve records the loss of
// each batch before its update.
inline TrainResult train_tokenized(const std::vector<TokenizedInstance>& data, const StageConfig& cfg,
                                   EncoderParams params) {
  cfg.validate();
  if (data.empty()) throw InvalidArgument("train: empty training data");
  const LossConfig loss = effective_loss(cfg);
  const std::size_t total = total_steps(data.size(), cfg);
  Pcg32 rng(cfg.seed);
  TrainResult result;
  std::vector<std::size_t> order(data.size());
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(order), rng);
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      std::vector<TokenizedInstance> batch;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) batch.push_back(data[order[i]]);
      const auto lg = loss_gradients(batch, params, loss);
      const double lr = learning_rate_at(step, total, cfg);
      for (std::size_t i = 0; i < params.token_table.size(); ++i) params.token_table[i] -= lr * lg.grad.token_table[i];
      for (std::size_t i = 0; i < params.projection.size(); ++i) params.projection[i] -= lr * lg.grad.projection[i];
      result.curve.push_back({step, lr, lg.loss});
      ++step;
    }
  }
  params.validate();
  result.params = std::move(params);
  return result;
}

inline TrainResult train_stage1(std::span<const TrainingInstance> data, const StageConfig& cfg, const Encoder& init) {
  if (cfg.stage != Stage::I) throw InvalidArgument("train_stage1: config is not a stage I config");
  if (data.empty()) throw InvalidArgument("train_stage1: empty training data");
  for (const auto& inst : data) {
    if (inst.negatives.empty()) throw InvalidArgument("train_stage1: instance \"" + inst.query.id + "\" has no negative");
  }
  return train_tokenized(tokenize_instances(data, cfg, init), cfg, init.params());
}

inline TrainResult train_stage2(std::span<const TrainingInstance> data, const StageConfig& cfg, const Encoder& init) {
  if (cfg.stage != Stage::II) throw InvalidArgument("train_stage2: config is not a stage II config");
  if (data.empty()) throw InvalidArgument("train_stage2: empty training data");
  return train_tokenized(tokenize_instances(data, cfg, init), cfg, init.params());
}

inline std::string curve_csv(const std::vector<StepLoss>& curve) {
  std::string out = "step,infonce,ranknet,combined\n";
  for (const auto& s : curve) {
    out += std::to_string(s.step) + ',' + format_double(s.loss.infonce) + ',' + format_double(s.loss.ranknet) + ',' +
           format_double(s.loss.combined) + '\n';
  }
  return out;
}

// ---- instance files ----------------------------------------------------------------

// {"qid","query","instruction","positive":{"id","text"},"negatives":[...],"permutation":[...]?}
inline std::string instance_to_json(const TrainingInstance& inst) {
  Json j{{"qid", inst.query.id},
         {"query", inst.query.text},
         {"instruction", inst.instruction},
         {"positive", Json{{"id", inst.positive.id}, {"text", inst.positive.text}}}};
  Json negs = Json::array();
  for (const auto& d : inst.negatives) negs.push_back(Json{{"id", d.id}, {"text", d.text}});
  j["negatives"] = std::move(negs);
  if (inst.label) {
    j["permutation"] = std::vector<int>(inst.label->permutation().begin(), inst.label->permutation().end());
  }
  return j.dump();
}

inline std::vector<TrainingInstance> read_instances(std::istream& in, const std::string& source) {
  std::vector<TrainingInstance> out;
  for_each_jsonl(in, source, [&](const Json& rec, std::size_t line) {
    TrainingInstance inst;
    inst.query.id = detail::string_field(rec, "qid", source, line);
    inst.query.text = detail::string_field(rec, "query", source, line);
    inst.instruction = rec.contains("instruction") ? detail::string_field(rec, "instruction", source, line) : "";
    if (!rec.contains("positive")) throw ParseError(source, line, "missing field \"positive\"");
    inst.positive = detail::read_text_record<Document>(rec.at("positive"), source, line);
    if (rec.contains("negatives")) {
      if (!rec.at("negatives").is_array()) throw ParseError(source, line, "\"negatives\" is not an array");
      for (const auto& n : rec.at("negatives")) inst.negatives.push_back(detail::read_text_record<Document>(n, source, line));
    }
    if (rec.contains("permutation")) {
      std::vector<int> perm;
      for (const auto& v : rec.at("permutation")) {
        if (!v.is_number_integer()) throw ParseError(source, line, "non-integer permutation entry");
        perm.push_back(v.get<int>());
      }
      try {
        RankingLabel::validate_permutation(perm, 1 + inst.negatives.size());
      } catch (const PermutationError& e) {
        throw ParseError(source, line, e.what());
      }
      inst.label = RankingLabel(std::move(perm));
    }
    out.push_back(std::move(inst));
  });
  return out;
}

inline std::vector<TrainingInstance> read_instances(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_instances(in, path);
}

inline std::string instances_jsonl(const std::vector<TrainingInstance>& data) {
  std::string out;
  for (const auto& inst : data) out += instance_to_json(inst) + '\n';
  return out;
}

}  // namespace e2rank
