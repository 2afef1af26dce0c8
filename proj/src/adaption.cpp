#include "mcml/adaption.hpp"

#include <algorithm>
#include <cmath>

#include "mcml/rng.hpp"

namespace mcml::ada {

namespace {

constexpr const char* kW = "ada.W";
constexpr const char* kB = "ada.b";
constexpr const char* kW1 = "ada.W1";
constexpr const char* kB1 = "ada.b1";
constexpr const char* kW2 = "ada.W2";
constexpr const char* kB2 = "ada.b2";

diff::Mat uniform_matrix(int rows, int cols, double bound, Rng& rng) {
    diff::Mat m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
    return m;
}

diff::NodeId apply_map(diff::Graph& g, MapKind kind, diff::NodeId x) {
    if (kind == MapKind::Linear) return g.add(g.matvec(kW, x), g.param_vec(kB));
    diff::NodeId h = g.tanh(g.add(g.matvec(kW1, x), g.param_vec(kB1)));
    return g.add(g.matvec(kW2, h), g.param_vec(kB2));
}

}  // namespace

AdaptionContext partition_labels(const mem::MemoryStore& store,
                                 const proto::PrototypeValues& test_prototypes,
                                 bool include_O) {
    AdaptionContext ctx;
    for (std::size_t i = 0; i < test_prototypes.labels.size(); ++i) {
        const std::string& label = test_prototypes.labels[i];
        if (label == "O" && !include_O) continue;
        if (store.contains(label))
            ctx.seen.push_back(SeenPair{label, store.centroid(label), test_prototypes.values[i]});
        else
            ctx.unseen.emplace_back(label, test_prototypes.values[i]);
    }
    return ctx;
}

AdaptionMap fit_adaption(std::span<const SeenPair> seen_pairs, MapKind kind, int iterations,
                         double lr, std::uint64_t seed) {
    if (seen_pairs.empty())
        throw DomainError("fit_adaption: no seen pairs; skip adaption for this episode");
    const int d = static_cast<int>(seen_pairs.front().test_side.size());
    for (const SeenPair& p : seen_pairs)
        if (p.test_side.size() != d || p.train_side.size() != d)
            throw ShapeError("fit_adaption: inconsistent pair dimensions");

    AdaptionMap map;
    map.kind = kind;
    if (kind == MapKind::Linear) {
        // identity start: zero loss whenever train == test, and alpha-blending
        // at iteration 0 already reproduces the unadapted pipeline
        map.params.add_mat(kW, diff::Mat::Identity(d, d));
        map.params.add_vec(kB, diff::Vec::Zero(d));
    } else {
        Rng rng(seed);
        double bound = 1.0 / std::sqrt(static_cast<double>(d));
        map.params.add_mat(kW1, uniform_matrix(d, d, bound, rng));
        map.params.add_vec(kB1, diff::Vec::Zero(d));
        map.params.add_mat(kW2, uniform_matrix(d, d, bound, rng));
        map.params.add_vec(kB2, diff::Vec::Zero(d));
    }

    diff::LossBuilder build = [&](diff::Graph& g) {
        std::vector<diff::NodeId> terms;
        terms.reserve(seen_pairs.size());
        for (const SeenPair& p : seen_pairs) {
            diff::NodeId projected = apply_map(g, kind, g.input(p.test_side));
            terms.push_back(g.squared_distance(g.input(p.train_side), projected));
        }
        return g.sum(g.concat(terms));
    };

    diff::AdamConfig adam_cfg;
    adam_cfg.lr = lr;
    diff::AdamState adam(adam_cfg);

    double best_loss = diff::eval_value(build, map.params);
    map.fit_report.initial_loss = best_loss;
    std::vector<diff::Slot> best = map.params.slots();
    for (int it = 0; it < iterations; ++it) {
        diff::EvalResult res = diff::eval_with_grads(build, map.params);
        adam.step(map.params, res.grads);
        double loss = diff::eval_value(build, map.params);
        if (loss < best_loss) {
            best_loss = loss;
            best = map.params.slots();
        }
    }
    map.params.slots() = best;
    map.fit_report.final_loss = best_loss;
    map.fit_report.iterations = iterations;
    return map;
}

diff::Vec project(const AdaptionMap& map, const diff::Vec& test_ori) {
    if (map.kind == MapKind::Linear) {
        const diff::Mat& W = map.params.at(kW).value;
        if (W.cols() != test_ori.size())
            throw ShapeError("project: map dim " + std::to_string(W.cols()) + " vs input dim " +
                             std::to_string(test_ori.size()));
        return W * test_ori + map.params.at(kB).value.col(0);
    }
    const diff::Mat& W1 = map.params.at(kW1).value;
    if (W1.cols() != test_ori.size())
        throw ShapeError("project: map dim " + std::to_string(W1.cols()) + " vs input dim " +
                         std::to_string(test_ori.size()));
    diff::Vec h = (W1 * test_ori + map.params.at(kB1).value.col(0)).array().tanh().matrix();
    return map.params.at(kW2).value * h + map.params.at(kB2).value.col(0);
}

diff::Vec blend(const diff::Vec& test_ori, const diff::Vec& test_ada, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw DomainError("blend: alpha must be in [0, 1], got " + std::to_string(alpha));
    if (test_ori.size() != test_ada.size())
        throw ShapeError("blend: dim " + std::to_string(test_ori.size()) + " vs " +
                         std::to_string(test_ada.size()));
    return alpha * test_ori + (1.0 - alpha) * test_ada;
}

double select_alpha(std::span<const double> grid,
                    const std::function<double(double)>& mean_f1_of_alpha) {
    if (grid.empty()) throw DomainError("select_alpha: empty grid");
    std::vector<double> sorted(grid.begin(), grid.end());
    std::sort(sorted.begin(), sorted.end());
    double best_alpha = sorted.front();
    double best_f1 = -1.0;
    for (double alpha : sorted) {
        double f1 = mean_f1_of_alpha(alpha);
        if (f1 >= best_f1) {  // ties go to the larger alpha
            best_f1 = f1;
            best_alpha = alpha;
        }
    }
    return best_alpha;
}

MapKind parse_map_kind(const std::string& name) {
    if (name == "linear") return MapKind::Linear;
    if (name == "mlp") return MapKind::Mlp;
    throw SpecError("unknown adaption map kind '" + name + "' (linear, mlp)");
}

std::string map_kind_name(MapKind kind) { return kind == MapKind::Linear ? "linear" : "mlp"; }

}  // namespace mcml::ada
