#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mcml/harness.hpp"

using namespace mcml;
namespace hr = mcml::harness;

namespace {

std::vector<corpus::BioTag> tags(std::initializer_list<const char*> ts) {
    std::vector<corpus::BioTag> out;
    for (const char* t : ts) out.push_back(corpus::BioTag::parse(t));
    return out;
}

hr::RunConfig small_config() {
    hr::RunConfig cfg;
    cfg.train_episodes = 20;
    cfg.eval_episodes = 5;
    cfg.val_episodes = 3;
    return cfg;
}

corpus::Corpus default_corpus(hr::RunConfig& cfg) { return hr::load_corpus(cfg); }

}  // namespace

TEST_CASE("span decoding: worked examples including lenient repair") {
    auto spans = hr::spans_from_bio(tags({"B-x", "I-x", "O"}));
    REQUIRE(spans.size() == 1);
    CHECK(spans[0] == hr::Span{0, 2, "x"});

    CHECK(hr::spans_from_bio(tags({"O", "O"})).empty());

    auto repaired = hr::spans_from_bio(tags({"I-x", "B-x"}));
    REQUIRE(repaired.size() == 2);
    CHECK(repaired[0] == hr::Span{0, 1, "x"});
    CHECK(repaired[1] == hr::Span{1, 2, "x"});

    // I of a different slot closes and reopens
    auto mixed = hr::spans_from_bio(tags({"B-x", "I-y", "I-y"}));
    REQUIRE(mixed.size() == 2);
    CHECK(mixed[0] == hr::Span{0, 1, "x"});
    CHECK(mixed[1] == hr::Span{1, 3, "y"});

    // span open at the end of the sentence still closes
    auto tail = hr::spans_from_bio(tags({"O", "B-z"}));
    REQUIRE(tail.size() == 1);
    CHECK(tail[0] == hr::Span{1, 2, "z"});
}

TEST_CASE("span counting worked examples") {
    auto gold = hr::spans_from_bio(tags({"B-x", "I-x", "O", "B-y"}));
    hr::SpanCounts exact;
    exact.add(gold, gold);
    auto p = exact.prf();
    CHECK(p.precision == 1.0);
    CHECK(p.recall == 1.0);
    CHECK(p.f1 == 1.0);

    hr::SpanCounts none;
    none.add({}, gold);
    auto q = none.prf();
    CHECK(q.precision == 0.0);
    CHECK(q.recall == 0.0);
    CHECK(q.f1 == 0.0);

    auto pred = hr::spans_from_bio(tags({"B-x", "I-x", "O", "B-z"}));
    hr::SpanCounts half;
    half.add(pred, gold);
    auto r = half.prf();
    CHECK(r.precision == 0.5);
    CHECK(r.recall == 0.5);
    CHECK(r.f1 == 0.5);
}

TEST_CASE("run config parses sections and lists") {
    std::istringstream in(
        "[episodes]\n"
        "k_shot = 5\n"
        "shots = 1, 5\n"
        "[model]\n"
        "metric = cosine\n"
        "use_memory = true\n"
        "lambda_memory = 0.5\n"
        "[adaption]\n"
        "alpha_grid = 0.2, 0.8\n"
        "f_kind = mlp\n"
        "[run]\n"
        "seeds = 3, 4\n"
        "modes = baseline, AM\n");
    hr::RunConfig cfg = hr::parse_run_config(cfg::Config::parse(in));
    CHECK(cfg.k_shot == 5);
    CHECK(cfg.shots == std::vector<int>{1, 5});
    CHECK(cfg.metric == proto::SimilarityMetric::Cosine);
    CHECK(cfg.use_memory);
    CHECK_FALSE(cfg.use_adaption);
    CHECK(cfg.lambda_memory == 0.5);
    CHECK(cfg.alpha_grid == std::vector<double>{0.2, 0.8});
    CHECK(cfg.f_kind == ada::MapKind::Mlp);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 4});
    CHECK(cfg.modes == std::vector<std::string>{"baseline", "AM"});
}

TEST_CASE("mode flags") {
    hr::RunConfig cfg;
    hr::apply_mode(cfg, "AM");
    CHECK(cfg.use_memory);
    CHECK(cfg.use_adaption);
    CHECK(hr::mode_name(cfg) == "AM");
    hr::apply_mode(cfg, "baseline");
    CHECK_FALSE(cfg.use_memory);
    CHECK_FALSE(cfg.use_adaption);
    CHECK_THROWS_AS(hr::apply_mode(cfg, "X"), SpecError);
}

TEST_CASE("load_corpus fills domain roles from the synthetic spec") {
    hr::RunConfig cfg;
    corpus::Corpus c = hr::load_corpus(cfg);
    CHECK(cfg.source_domains == std::vector<std::string>{"music", "kitchen"});
    CHECK(cfg.validation_domain == "travel");
    CHECK(cfg.target_domains == std::vector<std::string>{"library"});
    CHECK(c.domains.size() == 4);
}

TEST_CASE("baseline training keeps the memory empty and logs only the task loss") {
    hr::RunConfig cfg = small_config();
    corpus::Corpus c = default_corpus(cfg);
    hr::apply_mode(cfg, "baseline");
    hr::TrainResult tr = hr::train(cfg, c, 1);
    CHECK(tr.memory.size() == 0);
    REQUIRE(tr.log.size() == 20);
    for (const auto& e : tr.log) {
        CHECK(e.memory_loss == 0.0);
        CHECK(e.total_loss == e.ner_loss);
        CHECK(e.inserted.labels.empty());
    }
}

TEST_CASE("first memory episode sees an empty store") {
    hr::RunConfig cfg = small_config();
    corpus::Corpus c = default_corpus(cfg);
    hr::apply_mode(cfg, "M");
    hr::TrainResult tr = hr::train(cfg, c, 1);
    REQUIRE(!tr.log.empty());
    CHECK(tr.log[0].memory_loss == 0.0);
    bool nonzero_later = false;
    for (std::size_t i = 1; i < tr.log.size(); ++i)
        nonzero_later = nonzero_later || tr.log[i].memory_loss != 0.0;
    CHECK(nonzero_later);
    CHECK(tr.memory.self_check().pass);
}

TEST_CASE("training is deterministic: identical checkpoints per seed") {
    hr::RunConfig cfg = small_config();
    corpus::Corpus c = default_corpus(cfg);
    hr::apply_mode(cfg, "AM");
    hr::TrainResult a = hr::train(cfg, c, 9);
    hr::TrainResult b = hr::train(cfg, c, 9);
    CHECK(hr::checkpoint_string(a.params, a.memory) == hr::checkpoint_string(b.params, b.memory));
    hr::TrainResult other = hr::train(cfg, c, 10);
    CHECK(hr::checkpoint_string(a.params, a.memory) !=
          hr::checkpoint_string(other.params, other.memory));
}

TEST_CASE("evaluation mutates neither parameters nor memory") {
    hr::RunConfig cfg = small_config();
    corpus::Corpus c = default_corpus(cfg);
    hr::apply_mode(cfg, "AM");
    hr::TrainResult tr = hr::train(cfg, c, 2);
    std::string before = hr::checkpoint_string(tr.params, tr.memory);
    corpus::Vocabulary vocab = corpus::Vocabulary::build(c, cfg.source_domains);
    auto eps = hr::eval_episodes(c, cfg.target_domains[0], cfg, 2, cfg.eval_episodes, false);
    hr::evaluate(tr.params, tr.memory, vocab, eps, cfg, 0.5);
    CHECK(hr::checkpoint_string(tr.params, tr.memory) == before);
}

TEST_CASE("evaluation episodes are identical across modes") {
    hr::RunConfig cfg = small_config();
    corpus::Corpus c = default_corpus(cfg);
    hr::RunConfig am = cfg;
    hr::apply_mode(am, "AM");
    auto a = hr::eval_episodes(c, "library", cfg, 7, 5, false);
    auto b = hr::eval_episodes(c, "library", am, 7, 5, false);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].support == b[i].support);
        CHECK(a[i].query == b[i].query);
        CHECK(a[i].id == b[i].id);
    }
}

TEST_CASE("alpha one and empty memory both recover baseline predictions") {
    hr::RunConfig cfg = small_config();
    corpus::Corpus c = default_corpus(cfg);
    hr::RunConfig base = cfg, adapt = cfg;
    hr::apply_mode(base, "baseline");
    hr::apply_mode(adapt, "A");
    hr::TrainResult tr = hr::train(adapt, c, 4);
    corpus::Vocabulary vocab = corpus::Vocabulary::build(c, cfg.source_domains);
    auto eps = hr::eval_episodes(c, "library", cfg, 4, 5, false);
    mem::MemoryStore empty;
    for (const auto& ep : eps) {
        auto plain = hr::predict_episode(hr::prepare_episode(tr.params, tr.memory, vocab, ep, base),
                                         base, 1.0);
        auto a1 = hr::predict_episode(hr::prepare_episode(tr.params, tr.memory, vocab, ep, adapt),
                                      adapt, 1.0);
        auto no_overlap = hr::predict_episode(
            hr::prepare_episode(tr.params, empty, vocab, ep, adapt), adapt, 0.3);
        CHECK(plain == a1);
        CHECK(plain == no_overlap);
    }
}

TEST_CASE("ablation with a single mode yields a single column and JSONL rows") {
    hr::RunConfig cfg = small_config();
    corpus::Corpus c = default_corpus(cfg);
    cfg.modes = {"baseline"};
    cfg.seeds = {1, 2};
    cfg.shots = {1};
    std::ostringstream jsonl;
    auto tables = hr::run_ablation(cfg, c, &jsonl);
    REQUIRE(tables.size() == 1);
    CHECK(tables[0].modes == std::vector<std::string>{"baseline"});
    REQUIRE(tables[0].cells.size() == 2);  // library + average row
    CHECK(tables[0].cells[0].size() == 1);
    CHECK(tables[0].cells[0][0].n == 2);

    // one JSON line per (seed, domain, mode, shot)
    int lines = 0;
    std::string line;
    std::istringstream in(jsonl.str());
    while (std::getline(in, line))
        if (!line.empty()) ++lines;
    CHECK(lines == 2);
    CHECK(tables[0].format().find("baseline") != std::string::npos);
}

TEST_CASE("checkpoint files round trip through disk") {
    hr::RunConfig cfg = small_config();
    corpus::Corpus c = default_corpus(cfg);
    hr::apply_mode(cfg, "M");
    hr::TrainResult tr = hr::train(cfg, c, 6);
    std::string path = (std::filesystem::temp_directory_path() / "mcml_test_ck.txt").string();
    hr::save_checkpoint(path, tr.params, tr.memory);
    hr::Checkpoint back = hr::load_checkpoint(path);
    CHECK(hr::checkpoint_string(back.params, back.memory) ==
          hr::checkpoint_string(tr.params, tr.memory));
    std::filesystem::remove(path);
}

TEST_CASE("metrics records serialize to stable JSON field names") {
    hr::MetricsRecord rec;
    rec.seed = 3;
    rec.domain = "library";
    rec.mode = "AM";
    rec.f1 = 0.5;
    std::string j = rec.to_json();
    for (const char* key : {"\"seed\"", "\"domain\"", "\"shot\"", "\"mode\"", "\"precision\"",
                            "\"recall\"", "\"f1\"", "\"episodes\"", "\"episode_losses\"",
                            "\"selected_alpha\"", "\"wall_seconds\""})
        CHECK(j.find(key) != std::string::npos);
}

TEST_CASE("cli exit codes: usage and missing files") {
    CHECK(hr::cli_main({"no-such-command"}) == 1);
    CHECK(hr::cli_main({"train", "--config", "/nonexistent/x.cfg"}) == 1);
    CHECK(hr::cli_main({"--help"}) == 0);
}
