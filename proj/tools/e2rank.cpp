// Command-line front end. Every subcommand reads its inputs, calls library
// operations, and writes their formatted output.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "e2rank/e2rank.hpp"

namespace {

using namespace e2rank;

void emit(const std::optional<std::string>& path, const std::string& text) {
  if (path) {
    write_file(*path, text);
  } else {
    std::cout << text;
  }
}

PromptTemplate template_or_default(const std::string& path) {
  return path.empty() ? PromptTemplate{} : load_template(path);
}

// Inputs shared by the commands that rerank a candidate run.
struct RerankInputs {
  std::string index, ckpt, corpus, queries, run, templ;
  std::string instruction = kDefaultQueryInstruction;
  std::size_t depth = 100;

  void add(CLI::App* cmd) {
    cmd->add_option("--index", index, "index file from embed")->required();
    cmd->add_option("--ckpt", ckpt, "encoder checkpoint")->required();
    cmd->add_option("--corpus", corpus, "corpus JSONL (document text for prompts)")->required();
    cmd->add_option("--queries", queries, "queries JSONL")->required();
    cmd->add_option("--run", run, "candidate run file")->required();
    cmd->add_option("--template", templ, "prompt template file (built-in default if omitted)");
    cmd->add_option("--instruction", instruction, "query instruction")->capture_default_str();
    cmd->add_option("--depth", depth, "candidates rescored per query")->capture_default_str();
  }

  struct Loaded {
    Encoder encoder;
    EmbeddingIndex index;
    DocumentStore store;
    std::vector<Query> queries;
    Run run;
  };

  Loaded load() const {
    std::vector<std::string> warnings;
    Run r = read_run(run, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    return Loaded{load_encoder_file(ckpt), load_index_file(index), DocumentStore(read_corpus(corpus)),
                  read_queries(queries), std::move(r)};
  }

  PRFConfig config(std::size_t k_prf) const {
    PRFConfig cfg;
    cfg.k_prf = k_prf;
    cfg.rerank_depth = depth;
    cfg.prompt = template_or_default(templ);
    cfg.query_instruction = instruction;
    cfg.validate();
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"e2rank: embedding retrieval with listwise PRF reranking"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "generate the synthetic corpus and training instances");
  std::string gen_spec, gen_out;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--spec", gen_spec, "key=value corpus spec")->required();
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "corpus seed (overrides the spec; spec default 7)");

  // train
  auto* train = app.add_subcommand("train", "run one training stage");
  int train_stage = 1;
  std::string train_data, train_config, train_init, train_out, train_curve;
  std::optional<std::uint64_t> train_seed;
  train->add_option("--stage", train_stage, "1 or 2")->required()->check(CLI::IsMember({1, 2}));
  train->add_option("--data", train_data, "directory holding stage<N>_train.jsonl")->required();
  train->add_option("--config", train_config, "key=value stage config")->required();
  train->add_option("--init", train_init, "initial checkpoint (fresh random init if omitted)");
  train->add_option("--out", train_out, "output checkpoint")->required();
  train->add_option("--curve", train_curve, "per-step loss CSV");
  train->add_option("--seed", train_seed, "shuffle seed (overrides the config; defaults 42 / 7)");

  // embed
  auto* embed = app.add_subcommand("embed", "build a document index");
  std::string embed_ckpt, embed_corpus, embed_out, embed_external;
  embed->add_option("--ckpt", embed_ckpt, "encoder checkpoint");
  embed->add_option("--corpus", embed_corpus, "corpus JSONL")->required();
  embed->add_option("--external", embed_external, "precomputed embeddings JSONL");
  embed->add_option("--out", embed_out, "output index")->required();

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "first-stage dense retrieval");
  std::string ret_index, ret_ckpt, ret_queries, ret_out;
  std::string ret_instruction = kDefaultQueryInstruction;
  std::size_t ret_k = 100;
  retrieve->add_option("--index", ret_index, "index file")->required();
  retrieve->add_option("--ckpt", ret_ckpt, "encoder checkpoint")->required();
  retrieve->add_option("--queries", ret_queries, "queries JSONL")->required();
  retrieve->add_option("--k", ret_k, "results per query")->capture_default_str();
  retrieve->add_option("--instruction", ret_instruction, "query instruction")->capture_default_str();
  retrieve->add_option("--out", ret_out, "output run file")->required();

  // rerank
  auto* rerank = app.add_subcommand("rerank", "PRF listwise reranking of a run");
  RerankInputs rr;
  std::size_t rr_kprf = 20;
  std::string rr_out, rr_cost;
  rr.add(rerank);
  rerank->add_option("--k-prf", rr_kprf, "candidates placed in the prompt")->capture_default_str();
  rerank->add_option("--out", rr_out, "output run file")->required();
  rerank->add_option("--cost-report", rr_cost, "per-query cost JSONL");

  // eval
  auto* eval = app.add_subcommand("eval", "mean NDCG@k of a run");
  std::string ev_run, ev_qrels;
  std::size_t ev_k = 10;
  bool ev_per_query = false;
  eval->add_option("--run", ev_run, "run file")->required();
  eval->add_option("--qrels", ev_qrels, "qrels file")->required();
  eval->add_option("--k", ev_k, "cutoff")->capture_default_str();
  eval->add_flag("--per-query", ev_per_query, "also print one line per query");

  // sweep-prf
  auto* sweep = app.add_subcommand("sweep-prf", "NDCG@k as a function of the PRF size");
  RerankInputs sw;
  std::vector<std::size_t> sw_sizes{0, 5, 10, 20, 50, 100};
  std::string sw_qrels;
  std::optional<std::string> sw_out;
  std::size_t sw_k = 10;
  sw.add(sweep);
  sweep->add_option("--sizes", sw_sizes, "comma-separated PRF sizes")->delimiter(',')->capture_default_str();
  sweep->add_option("--qrels", sw_qrels, "qrels file")->required();
  sweep->add_option("--k", sw_k, "NDCG cutoff")->capture_default_str();
  sweep->add_option("--out", sw_out, "output CSV (stdout if omitted)");

  // score-dist
  auto* dist = app.add_subcommand("score-dist", "mean reranking score by rank position");
  RerankInputs sd;
  std::size_t sd_kprf = 20, sd_max = 100;
  std::optional<std::string> sd_out;
  sd.add(dist);
  dist->add_option("--k-prf", sd_kprf, "candidates placed in the prompt")->capture_default_str();
  dist->add_option("--max-len", sd_max, "positions reported")->capture_default_str();
  dist->add_option("--out", sd_out, "output CSV (stdout if omitted)");

  // window-cost
  auto* wc = app.add_subcommand("window-cost", "sliding-window versus PRF cost model");
  std::uint64_t wc_n = 100, wc_avg = 1, wc_kprf = 20;
  SlidingWindowConfig wc_cfg;
  std::optional<std::uint64_t> wc_depth;
  wc->add_option("--n", wc_n, "candidates")->capture_default_str();
  wc->add_option("--window", wc_cfg.window, "window size")->capture_default_str();
  wc->add_option("--step", wc_cfg.step, "window step")->capture_default_str();
  wc->add_option("--avg-doc-tokens", wc_avg, "tokens per document")->capture_default_str();
  wc->add_option("--k-prf", wc_kprf, "PRF prompt size")->capture_default_str();
  wc->add_option("--depth", wc_depth, "PRF rerank depth (defaults to --n)");

  // parse-labels
  auto* pl = app.add_subcommand("parse-labels", "ingest ranking labels and report labeling accuracy");
  std::string pl_in, pl_out;
  std::optional<std::string> pl_report;
  std::size_t pl_k = 0;
  pl->add_option("--in", pl_in, "JSONL records {qid, text, k?, gold?}")->required();
  pl->add_option("--k", pl_k, "candidates per label when a record has no k")->required();
  pl->add_option("--out", pl_out, "output labels JSONL")->required();
  pl->add_option("--report", pl_report, "report file (stdout if omitted)")->expected(0, 1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      auto kv = KeyValueConfig::load(gen_spec);
      auto spec = load_synthetic_spec(kv);
      kv.finish();
      if (gen_seed) spec.seed = *gen_seed;
      std::cerr << "seed " << spec.seed << '\n';
      std::filesystem::create_directories(gen_out);
      for (const auto& [name, text] : synthetic_files(generate_synthetic(spec))) {
        write_file((std::filesystem::path(gen_out) / name).string(), text);
      }
    } else if (*train) {
      const Stage stage = train_stage == 1 ? Stage::I : Stage::II;
      auto kv = KeyValueConfig::load(train_config);
      const InitConfig init_cfg = load_init_config(kv);
      StageConfig cfg = load_stage_config(kv, stage);
      kv.finish();
      if (train_seed) cfg.seed = *train_seed;
      std::cerr << "seed " << cfg.seed << '\n';
      const Encoder init = train_init.empty() ? encoder_for(init_cfg.params()) : load_encoder_file(train_init);
      if (train_init.empty()) std::cerr << "init_seed " << init_cfg.seed << '\n';
      const std::string file = "stage" + std::to_string(train_stage) + "_train.jsonl";
      const auto data = read_instances((std::filesystem::path(train_data) / file).string());
      const TrainResult result = stage == Stage::I ? train_stage1(data, cfg, init) : train_stage2(data, cfg, init);
      save_checkpoint_file(result.params, train_out);
      if (!train_curve.empty()) write_file(train_curve, curve_csv(result.curve));
    } else if (*embed) {
      if (embed_ckpt.empty() == embed_external.empty()) {
        throw InvalidArgument("embed: pass exactly one of --ckpt and --external");
      }
      const auto docs = read_corpus(embed_corpus);
      const EmbeddingIndex idx = embed_external.empty()
                                     ? build_index(docs, load_encoder_file(embed_ckpt))
                                     : build_index(docs, load_external_embeddings(embed_external));
      save_index_file(idx, embed_out);
    } else if (*retrieve) {
      const Run run = retrieve_run(read_queries(ret_queries), ret_k, ret_instruction, load_encoder_file(ret_ckpt),
                                   load_index_file(ret_index));
      write_file(ret_out, format_run(run));
    } else if (*rerank) {
      const auto in = rr.load();
      const auto out = rerank_run(in.run, in.queries, rr.config(rr_kprf), in.encoder, in.index, in.store);
      write_file(rr_out, format_run(out.run));
      if (!rr_cost.empty()) {
        std::string lines;
        for (std::size_t i = 0; i < out.results.size(); ++i) {
          lines += cost_report_json(out.query_ids[i], out.results[i].cost) + '\n';
        }
        write_file(rr_cost, lines);
      }
    } else if (*eval) {
      std::vector<std::string> warnings;
      const Run run = read_run(ev_run, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
      std::cout << format_evaluation(run, read_qrels(ev_qrels), ev_k, ev_per_query);
    } else if (*sweep) {
      const auto in = sw.load();
      const auto points = prf_size_sweep(in.run, in.queries, sw_sizes, sw.config(0), in.encoder, in.index,
                                         in.store, read_qrels(sw_qrels), sw_k);
      emit(sw_out, format_sweep(points, sw_k));
    } else if (*dist) {
      const auto in = sd.load();
      const auto out = rerank_run(in.run, in.queries, sd.config(sd_kprf), in.encoder, in.index, in.store);
      emit(sd_out, format_score_distribution(score_distribution(out, sd_max)));
    } else if (*wc) {
      const auto window = sliding_window_cost(wc_n, wc_cfg, wc_avg);
      const auto prf = prf_cost(wc_n, wc_kprf, wc_depth.value_or(wc_n), wc_avg);
      std::cout << format_cost_comparison(window, prf);
    } else if (*pl) {
      std::ifstream in(pl_in);
      if (!in) throw Error("cannot open " + pl_in);
      const auto result = ingest_labels(read_raw_labels(in, pl_in), pl_k);
      std::string lines;
      for (const auto& r : result.labels) lines += label_to_json(r) + '\n';
      write_file(pl_out, lines);
      emit(pl_report && !pl_report->empty() ? pl_report : std::nullopt, format_ingest_report(result.report));
    }
  } catch (const std::exception& e) {
    std::cerr << "e2rank " << app.get_subcommands().front()->get_name() << ": error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
