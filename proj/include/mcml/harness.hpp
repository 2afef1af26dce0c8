#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mcml/adaption.hpp"
#include "mcml/corpus.hpp"
#include "mcml/diffmath.hpp"
#include "mcml/memory.hpp"
#include "mcml/protonet.hpp"

namespace mcml::harness {

// ------------------------------------------------------------------ span F1

struct Span {
    int start = 0;  // token index, end exclusive
    int end = 0;
    std::string slot;
    bool operator==(const Span&) const = default;
    auto operator<=>(const Span&) const = default;
};

// Lenient decode: B-x opens, I-x extends a live span of x or opens one when
// none is live, anything else closes. Malformed predictions are repaired,
// never rejected.
std::vector<Span> spans_from_bio(std::span<const corpus::BioTag> tags);

struct PRF {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};

// Micro-averaged exact-match span counts.
struct SpanCounts {
    long predicted = 0, gold = 0, correct = 0;
    void add(std::span<const Span> pred, std::span<const Span> gold_spans);
    PRF prf() const;  // 0 by convention when denominators vanish
};

// --------------------------------------------------------------- run config

struct RunConfig {
    // data
    std::string corpus_path;          // CoNLL file; empty -> synthetic
    std::string synthetic_spec_path;  // synthetic spec config; empty -> built-in default
    std::vector<std::string> source_domains;
    std::string validation_domain;
    std::vector<std::string> target_domains;
    // episodes
    int k_shot = 1;
    int query_size = 10;
    int train_episodes = 100;
    int eval_episodes = 20;
    int val_episodes = 40;
    std::vector<int> shots{1, 5};  // ablation loops these
    // encoder
    int d_e = 16;
    int d_h = 16;
    // model
    proto::SimilarityMetric metric = proto::SimilarityMetric::DotProduct;
    double lambda_memory = 1.0;
    mem::ContrastiveConfig contrastive{mem::SignMode::Flipped, false};
    bool use_memory = false;
    bool use_adaption = false;
    // adaption
    ada::MapKind f_kind = ada::MapKind::Linear;
    int ada_iterations = 1000;
    double ada_lr = 0.05;
    std::vector<double> alpha_grid{0.1, 0.3, 0.5, 0.7, 0.9};
    bool blend_seen = true;
    double fixed_alpha = -1.0;  // < 0: select on validation episodes
    // optimizer
    diff::AdamConfig adam{1e-2, 0.9, 0.999, 1e-8, 5e-5};
    // run
    std::vector<std::uint64_t> seeds{1};
    std::vector<std::string> modes{"baseline", "A", "M", "AM"};
    std::string checkpoint_path;
    int checkpoint_every = 0;  // episodes; 0 = only at the end
    std::string metrics_out;   // JSON-lines metrics sink; empty = stdout only
};

RunConfig parse_run_config(const cfg::Config& config);
RunConfig load_run_config(const std::string& path);
// mode in {baseline, A, M, AM}; sets the two flags
void apply_mode(RunConfig& config, const std::string& mode);
std::string mode_name(const RunConfig& config);

// Reads or generates the corpus and fills in missing domain role lists.
corpus::Corpus load_corpus(RunConfig& config);

// ------------------------------------------------------------------ metrics

struct MetricsRecord {
    std::uint64_t seed = 0;
    std::string domain;
    int shot = 0;
    std::string mode;
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    long episodes = 0;
    std::vector<double> episode_losses;  // mean -log P(gold) per episode
    double selected_alpha = 1.0;
    double wall_seconds = 0.0;

    std::string to_json() const;
};

// ----------------------------------------------------------------- training

struct TrainLogEntry {
    long episode_id = 0;
    std::string domain;
    double ner_loss = 0.0;
    double memory_loss = 0.0;
    double total_loss = 0.0;
    // snapshot of what went into the memory store (empty when nothing did)
    proto::PrototypeValues inserted;
};

struct TrainResult {
    diff::ParamStore params;
    mem::MemoryStore memory;
    std::vector<TrainLogEntry> log;
};

// Sequential episodic meta-training; one optimizer step per episode with
// L_ner plus (when enabled) lambda * L_memory. Deterministic per seed.
TrainResult train(const RunConfig& config, const corpus::Corpus& corpus, std::uint64_t seed);

// --------------------------------------------------------------- evaluation

// Everything evaluation needs from one test episode, computed once so that
// alpha sweeps only redo the blending and classification.
struct EpisodeEval {
    corpus::Episode episode;
    proto::PrototypeValues ori;
    bool adapted = false;  // adaption fitted (seen set non-empty)
    ada::AdaptionMap map;
    std::vector<std::string> seen_labels;
    std::vector<std::vector<diff::Vec>> query_embeddings;  // per sentence, per token
};

EpisodeEval prepare_episode(const diff::ParamStore& params, const mem::MemoryStore& store,
                            const corpus::Vocabulary& vocab, const corpus::Episode& episode,
                            const RunConfig& config);

// Per-sentence predicted tags for one alpha.
std::vector<std::vector<corpus::BioTag>> predict_episode(const EpisodeEval& eval,
                                                         const RunConfig& config, double alpha);

// Micro span F1 over already-prepared episodes for one alpha; cheap enough
// to call once per grid point.
MetricsRecord evaluate_prepared(std::span<const EpisodeEval> evals, const RunConfig& config,
                                double alpha);

// Micro span F1 over the episode list; never mutates params or store.
MetricsRecord evaluate(const diff::ParamStore& params, const mem::MemoryStore& store,
                       const corpus::Vocabulary& vocab,
                       std::span<const corpus::Episode> episodes, const RunConfig& config,
                       double alpha);

// Fixed pre-sampled evaluation episodes: identical for every mode given the
// same (seed, domain) so ablation columns are paired.
std::vector<corpus::Episode> eval_episodes(const corpus::Corpus& corpus,
                                           const std::string& domain, const RunConfig& config,
                                           std::uint64_t seed, int count, bool validation);

// Train + alpha selection + target evaluation for one (config, seed, mode).
std::vector<MetricsRecord> run_seed(const RunConfig& config, const corpus::Corpus& corpus,
                                    std::uint64_t seed, const std::string& mode);

// ----------------------------------------------------------------- ablation

struct AblationCell {
    double mean_f1 = 0.0;
    double stddev_f1 = 0.0;
    int n = 0;
};

struct AblationTable {
    int shot = 0;
    std::vector<std::string> modes;
    std::vector<std::string> domains;  // plus implicit "average" row
    // cells[domain_index][mode_index]; last row is the across-domain average
    std::vector<std::vector<AblationCell>> cells;
    std::vector<MetricsRecord> records;

    std::string format() const;
};

std::vector<AblationTable> run_ablation(const RunConfig& config, const corpus::Corpus& corpus,
                                        std::ostream* metrics_jsonl = nullptr);

// -------------------------------------------------------------- checkpoints

struct Checkpoint {
    diff::ParamStore params;
    mem::MemoryStore memory;
};

std::string checkpoint_string(const diff::ParamStore& params, const mem::MemoryStore& memory);
void save_checkpoint(const std::string& path, const diff::ParamStore& params,
                     const mem::MemoryStore& memory);
Checkpoint load_checkpoint(const std::string& path);

// --------------------------------------------------------------- grad suite

struct GradSuiteResult {
    std::string name;
    double max_rel_err = 0.0;
    bool pass = true;
};

// Finite-difference check of every loss in the pipeline on randomized small
// instances (d_h <= 8, <= 4 labels).
std::vector<GradSuiteResult> run_grad_suite(int instances, std::uint64_t seed,
                                            double epsilon = 1e-5, double tolerance = 1e-4);

// ---------------------------------------------------------------------- CLI

// Subcommands: gen-data, train, eval, ablate, grad-check.
// Exit codes: 0 success, 1 usage error, 2 runtime error.
int cli_main(const std::vector<std::string>& args);

}  // namespace mcml::harness
