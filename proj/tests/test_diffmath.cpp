#include <cmath>
#include <sstream>

#include "doctest.h"
#include "mcml/diffmath.hpp"
#include "mcml/rng.hpp"

using namespace mcml;

TEST_CASE("square of a scalar slot: value and gradient") {
    diff::ParamStore p;
    p.add_vec("w", diff::Vec::Constant(1, 3.0));
    auto res = diff::eval_with_grads(
        [](diff::Graph& g) {
            diff::NodeId w = g.param_vec("w");
            return g.dot(w, w);
        },
        p);
    CHECK(res.value == doctest::Approx(9.0));
    CHECK(res.grads.at("w")(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("sum of softmax is constant one with zero gradient") {
    diff::ParamStore p;
    diff::Vec v(4);
    v << 0.3, -1.2, 2.0, 0.0;
    p.add_vec("v", v);
    auto res = diff::eval_with_grads(
        [](diff::Graph& g) { return g.sum(g.softmax(g.param_vec("v"))); }, p);
    CHECK(res.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.grads.at("v").cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("log sigmoid at zero") {
    diff::ParamStore p;
    p.add_vec("w", diff::Vec::Zero(1));
    auto res = diff::eval_with_grads(
        [](diff::Graph& g) { return g.log(g.sigmoid(g.param_vec("w"))); }, p);
    CHECK(res.value == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
    CHECK(res.grads.at("w")(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("log of a non-positive argument names the op") {
    diff::ParamStore p;
    p.add_vec("w", diff::Vec::Constant(1, -1.0));
    CHECK_THROWS_AS(
        diff::eval_value([](diff::Graph& g) { return g.log(g.param_vec("w")); }, p),
        DomainError);
}

TEST_CASE("shape mismatch in add raises a shape error") {
    diff::ParamStore p;
    p.add_vec("a", diff::Vec::Zero(2));
    p.add_vec("b", diff::Vec::Zero(3));
    CHECK_THROWS_AS(
        diff::eval_value([](diff::Graph& g) { return g.sum(g.add(g.param_vec("a"), g.param_vec("b"))); }, p),
        ShapeError);
}

TEST_CASE("gradient checker on a quadratic is essentially exact") {
    diff::ParamStore p;
    p.add_vec("w", diff::Vec::Constant(1, 3.0));
    auto report = diff::grad_check(
        [](diff::Graph& g) {
            diff::NodeId w = g.param_vec("w");
            return g.dot(w, w);
        },
        p, 1e-5, 1e-4);
    CHECK(report.pass);
    CHECK(report.max_rel_error < 1e-8);
}

TEST_CASE("gradient checker on a constant expression") {
    diff::ParamStore p;
    p.add_vec("w", diff::Vec::Constant(1, 2.0));
    auto report = diff::grad_check(
        [](diff::Graph& g) {
            (void)g.param_vec("w");
            return g.input(7.0);
        },
        p, 1e-5, 1e-4);
    CHECK(report.pass);
    CHECK(report.max_rel_error == 0.0);
}

TEST_CASE("gradient checker covers the whole op vocabulary at once") {
    diff::ParamStore p;
    Rng rng(99);
    diff::Vec a(5), b(5);
    for (int i = 0; i < 5; ++i) {
        a(i) = rng.uniform(-1.0, 1.0);
        b(i) = rng.uniform(0.1, 1.0);
    }
    p.add_vec("a", a);
    p.add_vec("b", b);
    diff::Mat m(3, 5);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 5; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    p.add_mat("M", m);
    auto report = diff::grad_check(
        [](diff::Graph& g) {
            diff::NodeId a = g.param_vec("a");
            diff::NodeId b = g.param_vec("b");
            diff::NodeId t = g.tanh(g.matvec("M", a));
            std::vector<diff::NodeId> parts{t, g.sigmoid(b)};
            diff::NodeId cat = g.concat(parts);
            diff::NodeId sm = g.softmax(cat);
            diff::NodeId terms = g.add(
                g.scale(g.mean(sm), 3.0),
                g.add(g.squared_distance(a, b),
                      g.add(g.log(g.l2norm(b)), g.exp(g.dot(a, g.scale(b, 0.25))))));
            return g.sum(terms);
        },
        p, 1e-5, 1e-4);
    CHECK(report.pass);
}

TEST_CASE("first Adam step has magnitude lr under bias correction") {
    diff::ParamStore p;
    p.add_vec("w", diff::Vec::Zero(1));
    diff::AdamState adam(diff::AdamConfig{0.1, 0.9, 0.999, 1e-8, 0.0});
    diff::Gradients grads;
    grads["w"] = diff::Mat::Constant(1, 1, 1.0);
    adam.step(p, grads);
    CHECK(p.at("w").value(0, 0) == doctest::Approx(-0.1).epsilon(1e-6));
    CHECK(adam.t() == 1);
}

TEST_CASE("Adam with zero gradient and no weight decay is a no-op on values") {
    diff::ParamStore p;
    p.add_vec("w", diff::Vec::Constant(2, 1.5));
    diff::AdamState adam(diff::AdamConfig{0.1, 0.9, 0.999, 1e-8, 0.0});
    diff::Gradients grads;
    grads["w"] = diff::Mat::Zero(2, 1);
    adam.step(p, grads);
    CHECK(p.at("w").value(0, 0) == 1.5);
    CHECK(p.at("w").value(1, 0) == 1.5);
    CHECK(adam.t() == 1);
}

TEST_CASE("frozen slots ignore gradients") {
    diff::ParamStore p;
    p.add_vec("w", diff::Vec::Constant(1, 2.0), /*trainable=*/false);
    diff::AdamState adam;
    diff::Gradients grads;
    grads["w"] = diff::Mat::Constant(1, 1, 5.0);
    adam.step(p, grads);
    CHECK(p.at("w").value(0, 0) == 2.0);
}

TEST_CASE("param store text round trip is bit exact") {
    diff::ParamStore p;
    diff::Vec v(4);
    v << 1.0 / 3.0, -0.0, 1e-300, 0.1 + 0.2;
    p.add_vec("v", v);
    diff::Mat m(2, 3);
    m << 1e17, -12345.678901234567, 3.0, 1e-17, 2.2250738585072014e-308, -1.0;
    p.add_mat("frozen", m, /*trainable=*/false);

    std::stringstream ss;
    p.save(ss);
    diff::ParamStore q = diff::ParamStore::load(ss);
    REQUIRE(q.slots().size() == 2);
    CHECK(q.at("v").value == p.at("v").value);
    CHECK(q.at("frozen").value == p.at("frozen").value);
    CHECK(q.at("frozen").trainable == false);
    CHECK(q.at("v").kind == diff::SlotKind::Vector);

    std::stringstream ss2;
    q.save(ss2);
    CHECK(ss2.str() == [&] { std::stringstream s3; p.save(s3); return s3.str(); }());
}

TEST_CASE("backward through matvec and concat matches finite differences") {
    Rng rng(5);
    diff::ParamStore p;
    diff::Mat w(4, 3);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j) w(i, j) = rng.uniform(-1.0, 1.0);
    p.add_mat("W", w);
    diff::Vec x(3);
    x << 0.2, -0.4, 0.9;
    p.add_vec("x", x);
    auto report = diff::grad_check(
        [](diff::Graph& g) {
            diff::NodeId y = g.matvec("W", g.param_vec("x"));
            std::vector<diff::NodeId> parts{y, g.param_vec("x")};
            return g.l2norm(g.concat(parts));
        },
        p, 1e-5, 1e-4);
    CHECK(report.pass);
}
