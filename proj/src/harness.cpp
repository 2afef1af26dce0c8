#include "mcml/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "mcml/encoder.hpp"
#include "mcml/rng.hpp"

namespace mcml::harness {

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// seed stream tags
constexpr std::uint64_t kInitStream = 0x101;
constexpr std::uint64_t kTrainStream = 0x202;
constexpr std::uint64_t kValStream = 0x303;
constexpr std::uint64_t kEvalStream = 0x404;
constexpr std::uint64_t kAdaptStream = 0x505;

}  // namespace

// ------------------------------------------------------------------ span F1

std::vector<Span> spans_from_bio(std::span<const corpus::BioTag> tags) {
    std::vector<Span> out;
    int live_start = -1;
    std::string live_slot;
    auto close = [&](int end) {
        if (live_start >= 0) out.push_back(Span{live_start, end, live_slot});
        live_start = -1;
        live_slot.clear();
    };
    for (int i = 0; i < static_cast<int>(tags.size()); ++i) {
        const corpus::BioTag& t = tags[static_cast<std::size_t>(i)];
        switch (t.kind) {
            case corpus::BioTag::Kind::O:
                close(i);
                break;
            case corpus::BioTag::Kind::B:
                close(i);
                live_start = i;
                live_slot = t.slot;
                break;
            case corpus::BioTag::Kind::I:
                if (live_start >= 0 && live_slot == t.slot) break;  // extends
                close(i);  // lenient repair: treat as an opening tag
                live_start = i;
                live_slot = t.slot;
                break;
        }
    }
    close(static_cast<int>(tags.size()));
    return out;
}

void SpanCounts::add(std::span<const Span> pred, std::span<const Span> gold_spans) {
    predicted += static_cast<long>(pred.size());
    gold += static_cast<long>(gold_spans.size());
    for (const Span& p : pred)
        for (const Span& g : gold_spans)
            if (p == g) {
                ++correct;
                break;
            }
}

PRF SpanCounts::prf() const {
    PRF out;
    out.precision = predicted > 0 ? static_cast<double>(correct) / static_cast<double>(predicted) : 0.0;
    out.recall = gold > 0 ? static_cast<double>(correct) / static_cast<double>(gold) : 0.0;
    double denom = out.precision + out.recall;
    out.f1 = denom > 0.0 ? 2.0 * out.precision * out.recall / denom : 0.0;
    return out;
}

// --------------------------------------------------------------- run config

RunConfig parse_run_config(const cfg::Config& c) {
    RunConfig rc;
    rc.corpus_path = c.get_or("data.corpus", "");
    rc.synthetic_spec_path = c.get_or("data.synthetic_spec", "");
    rc.source_domains = c.get_list("data.source_domains");
    rc.validation_domain = c.get_or("data.validation_domain", "");
    rc.target_domains = c.get_list("data.target_domains");

    rc.k_shot = c.get_int("episodes.k_shot", rc.k_shot);
    rc.query_size = c.get_int("episodes.query_size", rc.query_size);
    rc.train_episodes = c.get_int("episodes.train_episodes", rc.train_episodes);
    rc.eval_episodes = c.get_int("episodes.eval_episodes", rc.eval_episodes);
    rc.val_episodes = c.get_int("episodes.val_episodes", rc.val_episodes);
    if (c.has("episodes.shots")) {
        rc.shots.clear();
        for (double s : c.get_double_list("episodes.shots")) rc.shots.push_back(static_cast<int>(s));
    }

    rc.d_e = c.get_int("encoder.d_e", rc.d_e);
    rc.d_h = c.get_int("encoder.d_h", rc.d_h);

    rc.metric = proto::parse_metric(c.get_or("model.metric", "dot"));
    rc.lambda_memory = c.get_double("model.lambda_memory", rc.lambda_memory);
    rc.contrastive.sign_mode = mem::parse_sign_mode(c.get_or("model.sign_mode", "flipped"));
    rc.contrastive.include_O = c.get_bool("model.include_o", false);
    rc.use_memory = c.get_bool("model.use_memory", false);
    rc.use_adaption = c.get_bool("model.use_adaption", false);

    rc.f_kind = ada::parse_map_kind(c.get_or("adaption.f_kind", "linear"));
    rc.ada_iterations = c.get_int("adaption.iterations", rc.ada_iterations);
    rc.ada_lr = c.get_double("adaption.lr", rc.ada_lr);
    if (c.has("adaption.alpha_grid")) rc.alpha_grid = c.get_double_list("adaption.alpha_grid");
    rc.blend_seen = c.get_bool("adaption.blend_seen", rc.blend_seen);
    rc.fixed_alpha = c.get_double("adaption.alpha", rc.fixed_alpha);

    rc.adam.lr = c.get_double("optimizer.lr", rc.adam.lr);
    rc.adam.beta1 = c.get_double("optimizer.beta1", rc.adam.beta1);
    rc.adam.beta2 = c.get_double("optimizer.beta2", rc.adam.beta2);
    rc.adam.eps = c.get_double("optimizer.eps", rc.adam.eps);
    rc.adam.weight_decay = c.get_double("optimizer.weight_decay", rc.adam.weight_decay);

    if (c.has("run.seeds")) {
        rc.seeds.clear();
        for (const std::string& s : c.get_list("run.seeds"))
            rc.seeds.push_back(std::strtoull(s.c_str(), nullptr, 10));
    }
    if (c.has("run.modes")) rc.modes = c.get_list("run.modes");
    rc.checkpoint_path = c.get_or("run.checkpoint", "");
    rc.checkpoint_every = c.get_int("run.checkpoint_every", rc.checkpoint_every);
    rc.metrics_out = c.get_or("run.metrics_out", "");

    if (rc.k_shot < 1) throw SpecError("config: k_shot must be >= 1");
    if (rc.seeds.empty()) throw SpecError("config: need at least one seed");
    return rc;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(cfg::Config::parse_file(path));
}

void apply_mode(RunConfig& config, const std::string& mode) {
    if (mode == "baseline") {
        config.use_memory = false;
        config.use_adaption = false;
    } else if (mode == "A") {
        config.use_memory = false;
        config.use_adaption = true;
    } else if (mode == "M") {
        config.use_memory = true;
        config.use_adaption = false;
    } else if (mode == "AM" || mode == "A+M") {
        config.use_memory = true;
        config.use_adaption = true;
    } else {
        throw SpecError("unknown mode '" + mode + "' (baseline, A, M, AM)");
    }
}

std::string mode_name(const RunConfig& config) {
    if (config.use_memory && config.use_adaption) return "AM";
    if (config.use_memory) return "M";
    if (config.use_adaption) return "A";
    return "baseline";
}

corpus::Corpus load_corpus(RunConfig& config) {
    corpus::Corpus c;
    if (!config.corpus_path.empty()) {
        c = corpus::read_conll(config.corpus_path);
    } else {
        corpus::SyntheticSpec spec =
            config.synthetic_spec_path.empty()
                ? corpus::default_synthetic_spec()
                : corpus::parse_synthetic_spec(cfg::Config::parse_file(config.synthetic_spec_path));
        c = corpus::generate_synthetic(spec);
        using Role = corpus::DomainSpec::Role;
        if (config.source_domains.empty()) config.source_domains = spec.domains_with_role(Role::Source);
        if (config.validation_domain.empty()) {
            auto v = spec.domains_with_role(Role::Validation);
            if (!v.empty()) config.validation_domain = v.front();
        }
        if (config.target_domains.empty()) config.target_domains = spec.domains_with_role(Role::Target);
    }
    if (config.source_domains.empty()) {
        // fall back to corpus order: sources, then validation, then target
        std::vector<std::string> names;
        for (const auto& d : c.domains) names.push_back(d.name);
        if (names.size() < 2) throw SpecError("corpus needs at least two domains");
        if (names.size() == 2) {
            config.source_domains = {names[0]};
            if (config.validation_domain.empty()) config.validation_domain = names[0];
            if (config.target_domains.empty()) config.target_domains = {names[1]};
        } else {
            config.source_domains.assign(names.begin(), names.end() - 2);
            if (config.validation_domain.empty()) config.validation_domain = names[names.size() - 2];
            if (config.target_domains.empty()) config.target_domains = {names.back()};
        }
    }
    if (config.validation_domain.empty()) config.validation_domain = config.source_domains.back();
    if (config.target_domains.empty()) throw SpecError("config: no target domain");
    return c;
}

// ------------------------------------------------------------------ metrics

std::string MetricsRecord::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["domain"] = domain;
    j["shot"] = shot;
    j["mode"] = mode;
    j["precision"] = precision;
    j["recall"] = recall;
    j["f1"] = f1;
    j["episodes"] = episodes;
    j["episode_losses"] = episode_losses;
    j["selected_alpha"] = selected_alpha;
    j["wall_seconds"] = wall_seconds;
    return j.dump();
}

// ----------------------------------------------------------------- training

TrainResult train(const RunConfig& config, const corpus::Corpus& corpus, std::uint64_t seed) {
    if (config.source_domains.empty()) throw SpecError("train: no source domains");
    corpus::Vocabulary vocab = corpus::Vocabulary::build(corpus, config.source_domains);

    TrainResult result;
    enc::init_encoder(result.params, enc::EncoderConfig{vocab.size(), config.d_e, config.d_h},
                      mix_seed(seed, kInitStream));
    diff::AdamState adam(config.adam);

    for (int i = 0; i < config.train_episodes; ++i) {
        const std::string& domain =
            config.source_domains[static_cast<std::size_t>(i) % config.source_domains.size()];
        corpus::Episode ep = corpus::sample_episode(
            corpus, domain, config.k_shot, config.query_size,
            mix_seed(seed, kTrainStream + static_cast<std::uint64_t>(i)));
        ep.id = i;

        TrainLogEntry entry;
        entry.episode_id = i;
        entry.domain = domain;
        proto::PrototypeValues snapshot;

        diff::LossBuilder build = [&](diff::Graph& g) {
            std::vector<diff::NodeId> support_emb;
            std::vector<std::string> support_labels;
            for (const corpus::Sentence& s : ep.support) {
                std::vector<int> ids = corpus::to_ids(vocab, s);
                std::vector<diff::NodeId> hs = enc::encode(g, ids);
                support_emb.insert(support_emb.end(), hs.begin(), hs.end());
                for (const corpus::BioTag& t : s.tags) support_labels.push_back(t.str());
            }
            proto::PrototypeSet protos =
                proto::compute_prototypes(g, support_emb, support_labels, ep.label_set, ep.id);

            std::vector<diff::NodeId> dists;
            std::vector<int> gold;
            for (const corpus::Sentence& s : ep.query) {
                std::vector<int> ids = corpus::to_ids(vocab, s);
                std::vector<diff::NodeId> hs = enc::encode(g, ids);
                for (std::size_t t = 0; t < hs.size(); ++t) {
                    diff::NodeId scores = proto::similarity(g, hs[t], protos, config.metric);
                    dists.push_back(proto::classify_node(g, scores));
                    gold.push_back(ep.label_index(s.tags[t].str()));
                }
            }
            diff::NodeId loss = proto::ner_loss(g, dists, gold);
            entry.ner_loss = g.value(loss);
            if (config.use_memory) {
                diff::NodeId lmem = mem::memory_loss(g, result.memory, protos, config.contrastive);
                entry.memory_loss = g.value(lmem);
                loss = g.add(loss, g.scale(lmem, config.lambda_memory));
            }
            entry.total_loss = g.value(loss);
            snapshot = proto::detach(g, protos);
            return loss;
        };

        diff::EvalResult res = diff::eval_with_grads(build, result.params);
        if (!std::isfinite(res.value))
            throw TrainingError("training diverged at episode " + std::to_string(i) +
                                " (loss = " + std::to_string(res.value) + ")");
        adam.step(result.params, res.grads);

        // prototypes are stored from the pre-update forward pass, and only
        // when something downstream will read the memory
        if (config.use_memory || config.use_adaption) {
            result.memory.insert(snapshot, config.contrastive);
            entry.inserted = snapshot;
        }
        result.log.push_back(std::move(entry));

        if (!config.checkpoint_path.empty() && config.checkpoint_every > 0 &&
            (i + 1) % config.checkpoint_every == 0)
            save_checkpoint(config.checkpoint_path, result.params, result.memory);
    }
    return result;
}

// --------------------------------------------------------------- evaluation

EpisodeEval prepare_episode(const diff::ParamStore& params, const mem::MemoryStore& store,
                            const corpus::Vocabulary& vocab, const corpus::Episode& episode,
                            const RunConfig& config) {
    EpisodeEval out;
    out.episode = episode;

    diff::Graph g(params);
    std::vector<diff::NodeId> support_emb;
    std::vector<std::string> support_labels;
    for (const corpus::Sentence& s : episode.support) {
        std::vector<int> ids = corpus::to_ids(vocab, s);
        std::vector<diff::NodeId> hs = enc::encode(g, ids);
        support_emb.insert(support_emb.end(), hs.begin(), hs.end());
        for (const corpus::BioTag& t : s.tags) support_labels.push_back(t.str());
    }
    proto::PrototypeSet protos =
        proto::compute_prototypes(g, support_emb, support_labels, episode.label_set, episode.id);
    out.ori = proto::detach(g, protos);

    for (const corpus::Sentence& s : episode.query) {
        std::vector<int> ids = corpus::to_ids(vocab, s);
        std::vector<diff::NodeId> hs = enc::encode(g, ids);
        std::vector<diff::Vec> emb;
        emb.reserve(hs.size());
        for (diff::NodeId h : hs) emb.push_back(g.vec(h));
        out.query_embeddings.push_back(std::move(emb));
    }

    if (config.use_adaption) {
        ada::AdaptionContext ctx =
            ada::partition_labels(store, out.ori, config.contrastive.include_O);
        if (!ctx.seen.empty()) {
            out.map = ada::fit_adaption(ctx.seen, config.f_kind, config.ada_iterations,
                                        config.ada_lr,
                                        mix_seed(kAdaptStream,
                                                 static_cast<std::uint64_t>(episode.id)));
            out.adapted = true;
            for (const ada::SeenPair& p : ctx.seen) out.seen_labels.push_back(p.label);
        }
    }
    return out;
}

std::vector<std::vector<corpus::BioTag>> predict_episode(const EpisodeEval& eval,
                                                         const RunConfig& config, double alpha) {
    proto::PrototypeValues finals = eval.ori;
    if (eval.adapted) {
        for (std::size_t i = 0; i < finals.labels.size(); ++i) {
            const std::string& label = finals.labels[i];
            if (label == "O" && !config.contrastive.include_O) continue;
            bool seen = std::find(eval.seen_labels.begin(), eval.seen_labels.end(), label) !=
                        eval.seen_labels.end();
            if (seen && !config.blend_seen) continue;
            diff::Vec adapted = ada::project(eval.map, eval.ori.values[i]);
            finals.values[i] = ada::blend(eval.ori.values[i], adapted, alpha);
        }
    }
    std::vector<std::vector<corpus::BioTag>> out;
    for (const auto& sentence_emb : eval.query_embeddings) {
        std::vector<corpus::BioTag> tags;
        tags.reserve(sentence_emb.size());
        for (const diff::Vec& h : sentence_emb) {
            diff::Vec scores = proto::similarity_values(h, finals, config.metric);
            proto::Classification c = proto::classify(scores);
            tags.push_back(corpus::BioTag::parse(finals.labels[static_cast<std::size_t>(c.argmax)]));
        }
        out.push_back(std::move(tags));
    }
    return out;
}

MetricsRecord evaluate_prepared(std::span<const EpisodeEval> evals, const RunConfig& config,
                                double alpha) {
    MetricsRecord rec;
    SpanCounts counts;
    for (const EpisodeEval& ev : evals) {
        auto predicted = predict_episode(ev, config, alpha);
        double loss_sum = 0.0;
        long tokens = 0;
        // the loss uses the same final prototypes as the predictions
        proto::PrototypeValues finals = ev.ori;
        if (ev.adapted) {
            for (std::size_t i = 0; i < finals.labels.size(); ++i) {
                const std::string& label = finals.labels[i];
                if (label == "O" && !config.contrastive.include_O) continue;
                bool seen = std::find(ev.seen_labels.begin(), ev.seen_labels.end(), label) !=
                            ev.seen_labels.end();
                if (seen && !config.blend_seen) continue;
                finals.values[i] =
                    ada::blend(ev.ori.values[i], ada::project(ev.map, ev.ori.values[i]), alpha);
            }
        }
        for (std::size_t si = 0; si < ev.query_embeddings.size(); ++si) {
            const corpus::Sentence& s = ev.episode.query[si];
            for (std::size_t ti = 0; ti < ev.query_embeddings[si].size(); ++ti) {
                diff::Vec scores =
                    proto::similarity_values(ev.query_embeddings[si][ti], finals, config.metric);
                proto::Classification c = proto::classify(scores);
                int gold = ev.episode.label_index(s.tags[ti].str());
                if (gold >= 0) {
                    loss_sum += -std::log(std::max(c.distribution(gold), 1e-300));
                    ++tokens;
                }
            }
            auto pred_spans = spans_from_bio(predicted[si]);
            auto gold_spans = spans_from_bio(s.tags);
            counts.add(pred_spans, gold_spans);
        }
        rec.episode_losses.push_back(tokens > 0 ? loss_sum / static_cast<double>(tokens) : 0.0);
        ++rec.episodes;
    }
    PRF prf = counts.prf();
    rec.precision = prf.precision;
    rec.recall = prf.recall;
    rec.f1 = prf.f1;
    rec.selected_alpha = alpha;
    return rec;
}

MetricsRecord evaluate(const diff::ParamStore& params, const mem::MemoryStore& store,
                       const corpus::Vocabulary& vocab,
                       std::span<const corpus::Episode> episodes, const RunConfig& config,
                       double alpha) {
    std::vector<EpisodeEval> prepared;
    prepared.reserve(episodes.size());
    for (const corpus::Episode& ep : episodes)
        prepared.push_back(prepare_episode(params, store, vocab, ep, config));
    return evaluate_prepared(prepared, config, alpha);
}

std::vector<corpus::Episode> eval_episodes(const corpus::Corpus& corpus,
                                           const std::string& domain, const RunConfig& config,
                                           std::uint64_t seed, int count, bool validation) {
    std::uint64_t stream = mix_seed(seed, fnv1a(domain) ^ (validation ? kValStream : kEvalStream));
    std::vector<corpus::Episode> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        corpus::Episode ep =
            corpus::sample_episode(corpus, domain, config.k_shot, config.query_size,
                                   mix_seed(stream, static_cast<std::uint64_t>(i)));
        // ids stable across modes so adaption fits are reproducible
        ep.id = (validation ? 1000000 : 2000000) + i;
        out.push_back(std::move(ep));
    }
    return out;
}

std::vector<MetricsRecord> run_seed(const RunConfig& base, const corpus::Corpus& corpus,
                                    std::uint64_t seed, const std::string& mode) {
    RunConfig config = base;
    apply_mode(config, mode);
    auto t0 = std::chrono::steady_clock::now();

    TrainResult trained = train(config, corpus, seed);
    corpus::Vocabulary vocab = corpus::Vocabulary::build(corpus, config.source_domains);

    double alpha = 1.0;
    if (config.use_adaption) {
        if (config.fixed_alpha >= 0.0) {
            alpha = config.fixed_alpha;
        } else {
            std::vector<corpus::Episode> val = eval_episodes(
                corpus, config.validation_domain, config, seed, config.val_episodes, true);
            std::vector<EpisodeEval> prepared;
            prepared.reserve(val.size());
            for (const corpus::Episode& ep : val)
                prepared.push_back(prepare_episode(trained.params, trained.memory, vocab, ep, config));
            alpha = ada::select_alpha(config.alpha_grid, [&](double a) {
                return evaluate_prepared(prepared, config, a).f1;
            });
        }
    }

    std::vector<MetricsRecord> out;
    for (const std::string& domain : config.target_domains) {
        std::vector<corpus::Episode> eps =
            eval_episodes(corpus, domain, config, seed, config.eval_episodes, false);
        MetricsRecord rec = evaluate(trained.params, trained.memory, vocab, eps, config, alpha);
        rec.seed = seed;
        rec.domain = domain;
        rec.shot = config.k_shot;
        rec.mode = mode;
        rec.selected_alpha = config.use_adaption ? alpha : 1.0;
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(std::move(rec));
    }
    return out;
}

// ----------------------------------------------------------------- ablation

namespace {

AblationCell cell_stats(const std::vector<double>& values) {
    AblationCell cell;
    cell.n = static_cast<int>(values.size());
    if (values.empty()) return cell;
    double sum = 0.0;
    for (double v : values) sum += v;
    cell.mean_f1 = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - cell.mean_f1) * (v - cell.mean_f1);
        cell.stddev_f1 = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return cell;
}

}  // namespace

std::string AblationTable::format() const {
    std::ostringstream out;
    out << shot << "-shot span F1 (mean +/- stddev over seeds)\n";
    out << "domain";
    for (const std::string& m : modes) out << '\t' << m;
    out << "\n";
    for (std::size_t d = 0; d < cells.size(); ++d) {
        out << (d < domains.size() ? domains[d] : std::string("average"));
        for (const AblationCell& c : cells[d]) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "\t%.2f +/- %.2f", 100.0 * c.mean_f1,
                          100.0 * c.stddev_f1);
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

std::vector<AblationTable> run_ablation(const RunConfig& config, const corpus::Corpus& corpus,
                                        std::ostream* metrics_jsonl) {
    std::vector<AblationTable> tables;
    for (int shot : config.shots) {
        RunConfig shot_cfg = config;
        shot_cfg.k_shot = shot;
        AblationTable table;
        table.shot = shot;
        table.modes = config.modes;
        table.domains = config.target_domains;
        // f1[mode][domain][seed-order]
        std::vector<std::vector<std::vector<double>>> f1(
            config.modes.size(), std::vector<std::vector<double>>(config.target_domains.size()));
        std::vector<std::vector<double>> avg(config.modes.size());
        for (std::uint64_t seed : config.seeds) {
            for (std::size_t m = 0; m < config.modes.size(); ++m) {
                try {
                    std::vector<MetricsRecord> records =
                        run_seed(shot_cfg, corpus, seed, config.modes[m]);
                    double sum = 0.0;
                    for (std::size_t d = 0; d < records.size(); ++d) {
                        f1[m][d].push_back(records[d].f1);
                        sum += records[d].f1;
                        if (metrics_jsonl) *metrics_jsonl << records[d].to_json() << "\n";
                        table.records.push_back(records[d]);
                    }
                    avg[m].push_back(sum / static_cast<double>(records.size()));
                } catch (const std::exception& e) {
                    std::cerr << "ablation cell failed (shot=" << shot << " seed=" << seed
                              << " mode=" << config.modes[m] << "): " << e.what() << "\n";
                }
            }
        }
        for (std::size_t d = 0; d < config.target_domains.size(); ++d) {
            std::vector<AblationCell> row;
            for (std::size_t m = 0; m < config.modes.size(); ++m) row.push_back(cell_stats(f1[m][d]));
            table.cells.push_back(std::move(row));
        }
        std::vector<AblationCell> avg_row;
        for (std::size_t m = 0; m < config.modes.size(); ++m) avg_row.push_back(cell_stats(avg[m]));
        table.cells.push_back(std::move(avg_row));
        tables.push_back(std::move(table));
    }
    return tables;
}

// -------------------------------------------------------------- checkpoints

std::string checkpoint_string(const diff::ParamStore& params, const mem::MemoryStore& memory) {
    std::ostringstream out;
    params.save(out);
    memory.save(out);
    return out.str();
}

void save_checkpoint(const std::string& path, const diff::ParamStore& params,
                     const mem::MemoryStore& memory) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << checkpoint_string(params, memory);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    Checkpoint ck;
    ck.params = diff::ParamStore::load(in);
    ck.memory = mem::MemoryStore::load(in);
    return ck;
}

}  // namespace mcml::harness
