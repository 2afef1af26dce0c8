#include <cmath>

#include "doctest.h"
#include "mcml/protonet.hpp"
#include "mcml/rng.hpp"

using namespace mcml;

namespace {

diff::NodeId in(diff::Graph& g, std::initializer_list<double> xs) {
    diff::Vec v(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) v(i++) = x;
    return g.input(v);
}

}  // namespace

TEST_CASE("prototype of a single token is the token itself") {
    diff::ParamStore p;
    diff::Graph g(p);
    std::vector<diff::NodeId> emb{in(g, {1.0, 2.0})};
    std::vector<std::string> labels{"B-x"};
    auto protos = proto::compute_prototypes(g, emb, labels, {"B-x"}, 0);
    CHECK(g.vec(protos.protos[0]) == g.vec(emb[0]));
    CHECK(protos.counts[0] == 1);
}

TEST_CASE("prototype of two tokens is their mean") {
    diff::ParamStore p;
    diff::Graph g(p);
    std::vector<diff::NodeId> emb{in(g, {1.0, 2.0}), in(g, {3.0, 4.0})};
    std::vector<std::string> labels{"B-x", "B-x"};
    auto protos = proto::compute_prototypes(g, emb, labels, {"B-x"}, 0);
    diff::Vec want(2);
    want << 2.0, 3.0;
    CHECK((g.vec(protos.protos[0]) - want).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(protos.counts[0] == 2);
}

TEST_CASE("prototypes match a group-by-label mean oracle") {
    Rng rng(31);
    diff::ParamStore p;
    diff::Graph g(p);
    std::vector<std::string> label_set{"O", "B-a", "B-b"};
    std::vector<diff::NodeId> emb;
    std::vector<std::string> labels;
    std::vector<diff::Vec> raw;
    for (int i = 0; i < 6; ++i) {
        diff::Vec v(3);
        for (int j = 0; j < 3; ++j) v(j) = rng.uniform(-2.0, 2.0);
        raw.push_back(v);
        emb.push_back(g.input(v));
        labels.push_back(label_set[i % 3]);
    }
    auto protos = proto::compute_prototypes(g, emb, labels, label_set, 0);
    for (std::size_t k = 0; k < label_set.size(); ++k) {
        diff::Vec sum = diff::Vec::Zero(3);
        int n = 0;
        for (std::size_t i = 0; i < raw.size(); ++i)
            if (labels[i] == label_set[k]) {
                sum += raw[i];
                ++n;
            }
        CHECK((g.vec(protos.protos[k]) - sum / n).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("a label with no support token is an error naming it") {
    diff::ParamStore p;
    diff::Graph g(p);
    std::vector<diff::NodeId> emb{in(g, {1.0, 2.0})};
    std::vector<std::string> labels{"B-x"};
    CHECK_THROWS_WITH_AS(proto::compute_prototypes(g, emb, labels, {"B-x", "B-missing"}, 0),
                         doctest::Contains("B-missing"), DomainError);
}

TEST_CASE("similarity values across the three metrics") {
    proto::PrototypeValues protos;
    protos.labels = {"B-x"};
    diff::Vec c(2);
    c << 3.0, 4.0;
    protos.values = {c};
    protos.counts = {1};

    diff::Vec x(2);
    x << 1.0, 2.0;
    CHECK(proto::similarity_values(x, protos, proto::SimilarityMetric::DotProduct)(0) ==
          doctest::Approx(11.0));
    CHECK(proto::similarity_values(diff::Vec::Zero(2), protos,
                                   proto::SimilarityMetric::DotProduct)(0) == 0.0);
    CHECK(proto::similarity_values(diff::Vec::Zero(2), protos,
                                   proto::SimilarityMetric::Cosine)(0) == 0.0);
    CHECK(proto::similarity_values(c, protos, proto::SimilarityMetric::NegSqEuclidean)(0) == 0.0);

    // x == one prototype is strictly maximal under the squared-distance metric
    proto::PrototypeValues two = protos;
    diff::Vec other(2);
    other << -1.0, 0.5;
    two.labels.push_back("B-y");
    two.values.push_back(other);
    two.counts.push_back(1);
    diff::Vec scores = proto::similarity_values(c, two, proto::SimilarityMetric::NegSqEuclidean);
    CHECK(scores(0) > scores(1));
}

TEST_CASE("classify matches the softmax worked values") {
    diff::Vec s2(2);
    s2 << 0.0, 0.0;
    auto c = proto::classify(s2);
    CHECK(c.distribution(0) == doctest::Approx(0.5));
    CHECK(c.argmax == 0);  // tie goes to the first label

    diff::Vec s3 = diff::Vec::Constant(3, 1.0);
    auto u = proto::classify(s3);
    for (int i = 0; i < 3; ++i) CHECK(u.distribution(i) == doctest::Approx(1.0 / 3.0));

    diff::Vec sl(2);
    sl << std::log(2.0), 0.0;
    auto w = proto::classify(sl);
    CHECK(w.distribution(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(w.distribution(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    CHECK(w.distribution.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("argmax is invariant under adding a constant to all scores") {
    Rng rng(8);
    for (int t = 0; t < 20; ++t) {
        diff::Vec s(4);
        for (int i = 0; i < 4; ++i) s(i) = rng.uniform(-3.0, 3.0);
        int base = proto::classify(s).argmax;
        CHECK(proto::classify(diff::Vec(s.array() + 57.5)).argmax == base);
    }
}

TEST_CASE("non-finite scores are rejected") {
    diff::Vec s(2);
    s << 1.0, std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(proto::classify(s), DomainError);
}

TEST_CASE("cross-entropy worked values") {
    diff::ParamStore p;

    // uniform distribution over K labels -> ln K
    for (int k : {2, 5}) {
        diff::Graph g(p);
        std::vector<diff::NodeId> dists{g.softmax(g.input(diff::Vec::Zero(k)))};
        std::vector<int> gold{0};
        CHECK(g.value(proto::ner_loss(g, dists, gold)) ==
              doctest::Approx(std::log(double(k))).epsilon(1e-12));
    }

    // two tokens with P_gold = 1/2 and 1/4 -> (ln2 + ln4)/2
    diff::Graph g(p);
    diff::Vec d1(2), d2(2);
    d1 << 0.5, 0.5;
    d2 << 0.25, 0.75;
    std::vector<diff::NodeId> dists{g.input(d1), g.input(d2)};
    std::vector<int> gold{0, 0};
    CHECK(g.value(proto::ner_loss(g, dists, gold)) ==
          doctest::Approx(1.5 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("metric names round trip") {
    for (auto m : {proto::SimilarityMetric::DotProduct, proto::SimilarityMetric::Cosine,
                   proto::SimilarityMetric::NegSqEuclidean})
        CHECK(proto::parse_metric(proto::metric_name(m)) == m);
    CHECK_THROWS_AS(proto::parse_metric("vpb"), SpecError);
}
