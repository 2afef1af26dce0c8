#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mcml/encoder.hpp"
#include "mcml/harness.hpp"
#include "mcml/rng.hpp"

namespace mcml::harness {

// --------------------------------------------------------------- grad suite

namespace {

std::uint64_t hash_name(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct GradCheckSpec {
    diff::ParamStore params;
    diff::LossBuilder build;
};

diff::Vec random_vec(Rng& rng, int d) {
    diff::Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = rng.uniform(-1.0, 1.0);
    if (v.norm() < 1e-3) v(0) = 1.0;  // keep norms differentiable
    return v;
}

// A small but complete L_ner instance: random support/query token ids through
// the real encoder, prototypes, similarity and cross-entropy.
GradCheckSpec make_ner_instance(std::uint64_t seed) {
    GradCheckSpec spec;
    Rng rng(seed);
    const int vocab = 8, d_e = 4, d_h = 4;
    enc::init_encoder(spec.params, enc::EncoderConfig{vocab, d_e, d_h}, rng.next());

    auto labels = std::make_shared<std::vector<std::string>>();
    *labels = {"O", "B-a"};
    if (rng.uniform_int(2)) labels->push_back("B-b");
    if (rng.uniform_int(2)) labels->push_back("I-a");

    auto support_ids = std::make_shared<std::vector<std::vector<int>>>();
    auto support_lab = std::make_shared<std::vector<std::vector<int>>>();
    for (int s = 0; s < 2; ++s) {
        std::vector<int> ids, lab;
        for (int t = 0; t < 4; ++t) {
            ids.push_back(2 + static_cast<int>(rng.uniform_int(vocab - 2)));
            // first sentence covers every label at least once
            int l = (s == 0 && t < static_cast<int>(labels->size()))
                        ? t
                        : static_cast<int>(rng.uniform_int(static_cast<int>(labels->size())));
            lab.push_back(l);
        }
        support_ids->push_back(std::move(ids));
        support_lab->push_back(std::move(lab));
    }
    auto query_ids = std::make_shared<std::vector<int>>();
    auto query_gold = std::make_shared<std::vector<int>>();
    for (int t = 0; t < 3; ++t) {
        query_ids->push_back(2 + static_cast<int>(rng.uniform_int(vocab - 2)));
        query_gold->push_back(static_cast<int>(rng.uniform_int(static_cast<int>(labels->size()))));
    }
    auto metric = static_cast<proto::SimilarityMetric>(seed % 3);

    spec.build = [=](diff::Graph& g) {
        std::vector<diff::NodeId> emb;
        std::vector<std::string> tok_labels;
        for (std::size_t s = 0; s < support_ids->size(); ++s) {
            auto hs = enc::encode(g, (*support_ids)[s]);
            emb.insert(emb.end(), hs.begin(), hs.end());
            for (int l : (*support_lab)[s])
                tok_labels.push_back((*labels)[static_cast<std::size_t>(l)]);
        }
        proto::PrototypeSet protos = proto::compute_prototypes(g, emb, tok_labels, *labels, 0);
        std::vector<diff::NodeId> dists;
        auto hs = enc::encode(g, *query_ids);
        for (diff::NodeId h : hs)
            dists.push_back(proto::classify_node(g, proto::similarity(g, h, protos, metric)));
        return proto::ner_loss(g, dists, *query_gold);
    };
    return spec;
}

GradCheckSpec make_memory_instance(std::uint64_t seed, mem::SignMode mode) {
    GradCheckSpec spec;
    Rng rng(seed);
    const int d = 2 + static_cast<int>(rng.uniform_int(7));
    const int n_labels = 2 + static_cast<int>(rng.uniform_int(3));
    auto labels = std::make_shared<std::vector<std::string>>();
    labels->push_back("O");
    for (int i = 0; i < n_labels; ++i) labels->push_back("B-l" + std::to_string(i));
    for (std::size_t i = 1; i < labels->size(); ++i)
        spec.params.add_vec("p" + std::to_string(i), random_vec(rng, d));

    auto store = std::make_shared<mem::MemoryStore>();
    proto::PrototypeValues past;
    past.labels = *labels;
    past.episode_id = 7;
    for (std::size_t i = 0; i < labels->size(); ++i) {
        past.values.push_back(random_vec(rng, d));
        past.counts.push_back(1);
    }
    // drop one label from the store half the time so the unseen path runs too
    if (rng.uniform_int(2) && labels->size() > 2) {
        past.labels.pop_back();
        past.values.pop_back();
        past.counts.pop_back();
    }
    store->insert(past, mem::ContrastiveConfig{mode, false});

    spec.build = [=](diff::Graph& g) {
        proto::PrototypeSet protos;
        protos.labels = *labels;
        protos.episode_id = 8;
        protos.protos.push_back(g.input(diff::Vec::Zero(d)));  // O, never used
        protos.counts.push_back(1);
        for (std::size_t i = 1; i < labels->size(); ++i) {
            protos.protos.push_back(g.param_vec("p" + std::to_string(i)));
            protos.counts.push_back(1);
        }
        return mem::memory_loss(g, *store, protos, mem::ContrastiveConfig{mode, false});
    };
    return spec;
}

GradCheckSpec make_adaption_instance(std::uint64_t seed, ada::MapKind kind) {
    GradCheckSpec spec;
    Rng rng(seed);
    const int d = 2 + static_cast<int>(rng.uniform_int(7));
    const int pairs = 2 + static_cast<int>(rng.uniform_int(3));
    if (kind == ada::MapKind::Linear) {
        diff::Mat w = diff::Mat::Identity(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) w(i, j) += 0.2 * rng.uniform(-1.0, 1.0);
        spec.params.add_mat("ada.W", w);
        spec.params.add_vec("ada.b", diff::Vec(0.1 * random_vec(rng, d)));
    } else {
        const int h = d;
        diff::Mat w1(h, d), w2(d, h);
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < d; ++j) w1(i, j) = rng.uniform(-0.5, 0.5);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < h; ++j) w2(i, j) = rng.uniform(-0.5, 0.5);
        spec.params.add_mat("ada.W1", w1);
        spec.params.add_vec("ada.b1", diff::Vec(0.1 * random_vec(rng, h)));
        spec.params.add_mat("ada.W2", w2);
        spec.params.add_vec("ada.b2", diff::Vec(0.1 * random_vec(rng, d)));
    }
    auto xs = std::make_shared<std::vector<diff::Vec>>();
    auto ys = std::make_shared<std::vector<diff::Vec>>();
    for (int i = 0; i < pairs; ++i) {
        xs->push_back(random_vec(rng, d));
        ys->push_back(random_vec(rng, d));
    }
    spec.build = [=](diff::Graph& g) {
        std::vector<diff::NodeId> terms;
        for (std::size_t i = 0; i < xs->size(); ++i) {
            diff::NodeId x = g.input((*xs)[i]);
            diff::NodeId y;
            if (kind == ada::MapKind::Linear) {
                y = g.add(g.matvec("ada.W", x), g.param_vec("ada.b"));
            } else {
                diff::NodeId h = g.tanh(g.add(g.matvec("ada.W1", x), g.param_vec("ada.b1")));
                y = g.add(g.matvec("ada.W2", h), g.param_vec("ada.b2"));
            }
            terms.push_back(g.squared_distance(y, g.input((*ys)[i])));
        }
        return g.sum(g.concat(terms));
    };
    return spec;
}

}  // namespace

std::vector<GradSuiteResult> run_grad_suite(int instances, std::uint64_t seed, double epsilon,
                                            double tolerance) {
    struct Family {
        std::string name;
        std::function<GradCheckSpec(std::uint64_t)> make;
    };
    const std::vector<Family> families{
        {"L_ner", [](std::uint64_t s) { return make_ner_instance(s); }},
        {"L_memory/literal",
         [](std::uint64_t s) { return make_memory_instance(s, mem::SignMode::Literal); }},
        {"L_memory/flipped",
         [](std::uint64_t s) { return make_memory_instance(s, mem::SignMode::Flipped); }},
        {"L_adaption/linear",
         [](std::uint64_t s) { return make_adaption_instance(s, ada::MapKind::Linear); }},
        {"L_adaption/mlp",
         [](std::uint64_t s) { return make_adaption_instance(s, ada::MapKind::Mlp); }},
    };
    std::vector<GradSuiteResult> out;
    for (const Family& fam : families) {
        GradSuiteResult res;
        res.name = fam.name;
        for (int i = 0; i < instances; ++i) {
            GradCheckSpec spec =
                fam.make(mix_seed(seed, hash_name(fam.name) + static_cast<std::uint64_t>(i)));
            diff::GradCheckReport report =
                diff::grad_check(spec.build, spec.params, epsilon, tolerance);
            res.max_rel_err = std::max(res.max_rel_err, report.max_rel_error);
            res.pass = res.pass && report.pass;
        }
        out.push_back(std::move(res));
    }
    return out;
}

// ---------------------------------------------------------------------- CLI

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    return f;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"episodic few-shot slot tagging with a prototype memory"};
    app.require_subcommand(1);
    app.fallthrough();  // options may follow the subcommand

    std::string config_path, out_path, mode, checkpoint_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    app.add_option_function<std::uint64_t>(
           "--seed",
           [&](std::uint64_t s) {
               seed = s;
               seed_set = true;
           },
           "master RNG seed");
    app.add_option("--config", config_path, "configuration file");
    app.add_option("--out", out_path, "output path");
    app.add_option("--mode", mode, "baseline | A | M | AM")
        ->check(CLI::IsMember({"baseline", "A", "M", "AM"}));
    app.add_option("--checkpoint", checkpoint_path, "checkpoint file (eval input / train output)");

    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic CoNLL corpus");
    CLI::App* train_cmd = app.add_subcommand("train", "episodic training on the source domains");
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the target domains");
    CLI::App* ablate = app.add_subcommand("ablate", "full mode x shot x seed sweep");
    CLI::App* gradc = app.add_subcommand("grad-check", "finite-difference check of every loss");

    try {
        std::vector<const char*> argv;
        argv.push_back("mcml");
        for (const std::string& a : args) argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) {
            corpus::SyntheticSpec spec =
                config_path.empty()
                    ? corpus::default_synthetic_spec()
                    : corpus::parse_synthetic_spec(cfg::Config::parse_file(config_path));
            if (seed_set) spec.seed = seed;
            if (out_path.empty()) throw IoError("gen-data: --out is required");
            corpus::Corpus c = corpus::generate_synthetic(spec);
            corpus::write_conll(c, out_path);
            long n = 0;
            for (const auto& d : c.domains) n += static_cast<long>(d.sentences.size());
            std::cout << "wrote " << n << " sentences across " << c.domains.size()
                      << " domains to " << out_path << "\n";
            return 0;
        }

        if (gradc->parsed()) {
            auto results = run_grad_suite(20, seed_set ? seed : 42);
            bool all = true;
            for (const GradSuiteResult& r : results) {
                std::printf("%-18s max_rel_err %.3e %s\n", r.name.c_str(), r.max_rel_err,
                            r.pass ? "PASS" : "FAIL");
                all = all && r.pass;
            }
            return all ? 0 : 2;
        }

        if (config_path.empty()) {
            std::cerr << "error: --config is required\n";
            return 1;
        }
        RunConfig config = load_run_config(config_path);
        if (seed_set) config.seeds = {seed};
        if (!mode.empty()) {
            apply_mode(config, mode);
            config.modes = {mode};
        }
        corpus::Corpus c = load_corpus(config);

        if (train_cmd->parsed()) {
            std::string ckpt = !checkpoint_path.empty()          ? checkpoint_path
                               : !out_path.empty()               ? out_path
                               : !config.checkpoint_path.empty() ? config.checkpoint_path
                                                                 : std::string("mcml-checkpoint.txt");
            config.checkpoint_path = ckpt;
            TrainResult tr = train(config, c, config.seeds.front());
            save_checkpoint(ckpt, tr.params, tr.memory);
            if (!config.metrics_out.empty()) {
                std::ofstream log = open_out(config.metrics_out);
                for (const TrainLogEntry& e : tr.log) {
                    nlohmann::json j;
                    j["episode"] = e.episode_id;
                    j["domain"] = e.domain;
                    j["ner_loss"] = e.ner_loss;
                    j["memory_loss"] = e.memory_loss;
                    j["total_loss"] = e.total_loss;
                    log << j.dump() << "\n";
                }
            }
            double last = tr.log.empty() ? 0.0 : tr.log.back().total_loss;
            std::cout << "trained " << tr.log.size() << " episodes (final loss " << last
                      << "), memory records " << tr.memory.size() << ", checkpoint " << ckpt
                      << "\n";
            return 0;
        }

        if (eval_cmd->parsed()) {
            std::string ckpt = !checkpoint_path.empty() ? checkpoint_path : config.checkpoint_path;
            if (ckpt.empty()) throw IoError("eval: --checkpoint (or run.checkpoint) is required");
            Checkpoint loaded = load_checkpoint(ckpt);
            corpus::Vocabulary vocab = corpus::Vocabulary::build(c, config.source_domains);
            std::uint64_t s = config.seeds.front();

            double alpha = 1.0;
            if (config.use_adaption) {
                if (config.fixed_alpha >= 0.0) {
                    alpha = config.fixed_alpha;
                } else {
                    auto val = eval_episodes(c, config.validation_domain, config, s,
                                             config.val_episodes, true);
                    std::vector<EpisodeEval> prepared;
                    prepared.reserve(val.size());
                    for (const corpus::Episode& ep : val)
                        prepared.push_back(
                            prepare_episode(loaded.params, loaded.memory, vocab, ep, config));
                    alpha = ada::select_alpha(config.alpha_grid, [&](double a) {
                        return evaluate_prepared(prepared, config, a).f1;
                    });
                }
            }
            std::ofstream sink;
            std::string sink_path = !out_path.empty() ? out_path : config.metrics_out;
            if (!sink_path.empty()) sink = open_out(sink_path);
            for (const std::string& domain : config.target_domains) {
                auto eps = eval_episodes(c, domain, config, s, config.eval_episodes, false);
                MetricsRecord rec =
                    evaluate(loaded.params, loaded.memory, vocab, eps, config, alpha);
                rec.seed = s;
                rec.domain = domain;
                rec.shot = config.k_shot;
                rec.mode = mode_name(config);
                rec.selected_alpha = config.use_adaption ? alpha : 1.0;
                std::cout << rec.to_json() << "\n";
                if (sink.is_open()) sink << rec.to_json() << "\n";
            }
            return 0;
        }

        if (ablate->parsed()) {
            std::ofstream sink;
            std::string sink_path = !out_path.empty() ? out_path : config.metrics_out;
            if (!sink_path.empty()) sink = open_out(sink_path);
            auto tables = run_ablation(config, c, sink.is_open() ? &sink : nullptr);
            for (const AblationTable& t : tables) std::cout << t.format() << "\n";
            return 0;
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace mcml::harness
