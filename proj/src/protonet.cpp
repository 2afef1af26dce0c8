#include "mcml/protonet.hpp"

#include <cmath>

namespace mcml::proto {

namespace {

template <class T>
int find_label(const std::vector<std::string>& labels, const T& label) {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) return static_cast<int>(i);
    return -1;
}

}  // namespace

int PrototypeSet::index_of(const std::string& label) const { return find_label(labels, label); }
int PrototypeValues::index_of(const std::string& label) const { return find_label(labels, label); }

PrototypeSet compute_prototypes(diff::Graph& g, std::span<const diff::NodeId> embeddings,
                                std::span<const std::string> token_labels,
                                const std::vector<std::string>& label_set, long episode_id) {
    if (embeddings.size() != token_labels.size())
        throw ShapeError("compute_prototypes: " + std::to_string(embeddings.size()) +
                         " embeddings vs " + std::to_string(token_labels.size()) + " labels");
    PrototypeSet out;
    out.episode_id = episode_id;
    out.labels = label_set;
    for (const std::string& label : label_set) {
        diff::NodeId acc = -1;
        int count = 0;
        for (std::size_t i = 0; i < token_labels.size(); ++i) {
            if (token_labels[i] != label) continue;
            acc = (acc < 0) ? embeddings[i] : g.add(acc, embeddings[i]);
            ++count;
        }
        if (count == 0)
            throw DomainError("compute_prototypes: label '" + label + "' has no support token");
        out.protos.push_back(g.scale(acc, 1.0 / static_cast<double>(count)));
        out.counts.push_back(count);
    }
    return out;
}

PrototypeValues detach(const diff::Graph& g, const PrototypeSet& protos) {
    PrototypeValues out;
    out.labels = protos.labels;
    out.counts = protos.counts;
    out.episode_id = protos.episode_id;
    for (diff::NodeId id : protos.protos) out.values.push_back(g.vec(id));
    return out;
}

diff::NodeId similarity(diff::Graph& g, diff::NodeId query, const PrototypeSet& protos,
                        SimilarityMetric metric) {
    std::vector<diff::NodeId> scores;
    scores.reserve(protos.protos.size());
    for (diff::NodeId p : protos.protos) {
        switch (metric) {
            case SimilarityMetric::DotProduct:
                scores.push_back(g.dot(query, p));
                break;
            case SimilarityMetric::Cosine:
                if (g.vec(query).norm() == 0.0 || g.vec(p).norm() == 0.0)
                    scores.push_back(g.input(0.0));
                else
                    scores.push_back(diff::cosine(g, query, p));
                break;
            case SimilarityMetric::NegSqEuclidean:
                scores.push_back(g.scale(g.squared_distance(query, p), -1.0));
                break;
        }
    }
    return g.concat(scores);
}

diff::Vec similarity_values(const diff::Vec& query, const PrototypeValues& protos,
                            SimilarityMetric metric) {
    diff::Vec out(static_cast<Eigen::Index>(protos.values.size()));
    for (std::size_t i = 0; i < protos.values.size(); ++i) {
        const diff::Vec& p = protos.values[i];
        if (p.size() != query.size())
            throw ShapeError("similarity: query dim " + std::to_string(query.size()) +
                             " vs prototype dim " + std::to_string(p.size()));
        switch (metric) {
            case SimilarityMetric::DotProduct:
                out(static_cast<Eigen::Index>(i)) = query.dot(p);
                break;
            case SimilarityMetric::Cosine: {
                double nq = query.norm(), np = p.norm();
                out(static_cast<Eigen::Index>(i)) =
                    (nq == 0.0 || np == 0.0) ? 0.0 : query.dot(p) / (nq * np);
                break;
            }
            case SimilarityMetric::NegSqEuclidean:
                out(static_cast<Eigen::Index>(i)) = -(query - p).squaredNorm();
                break;
        }
    }
    return out;
}

Classification classify(const diff::Vec& scores) {
    if (scores.size() < 1) throw ShapeError("classify: empty score vector");
    for (Eigen::Index i = 0; i < scores.size(); ++i)
        if (!std::isfinite(scores(i)))
            throw DomainError("classify: non-finite score at index " + std::to_string(i));
    double m = scores.maxCoeff();
    diff::Vec e = (scores.array() - m).exp().matrix();
    Classification out;
    out.distribution = e / e.sum();
    out.argmax = 0;
    for (Eigen::Index i = 1; i < scores.size(); ++i)
        if (scores(i) > scores(out.argmax)) out.argmax = static_cast<int>(i);
    return out;
}

diff::NodeId classify_node(diff::Graph& g, diff::NodeId scores) {
    for (Eigen::Index i = 0; i < g.vec(scores).size(); ++i)
        if (!std::isfinite(g.vec(scores)(i)))
            throw DomainError("classify: non-finite score at index " + std::to_string(i));
    return g.softmax(scores);
}

diff::NodeId ner_loss(diff::Graph& g, std::span<const diff::NodeId> distributions,
                      std::span<const int> gold_indices) {
    if (distributions.size() != gold_indices.size() || distributions.empty())
        throw ShapeError("ner_loss: need one gold label per distribution");
    std::vector<diff::NodeId> log_probs;
    log_probs.reserve(distributions.size());
    for (std::size_t i = 0; i < distributions.size(); ++i) {
        int gold = gold_indices[i];
        int dim = g.dim(distributions[i]);
        if (gold < 0 || gold >= dim)
            throw LookupError("ner_loss: gold index " + std::to_string(gold) +
                              " out of range (" + std::to_string(dim) + " labels)");
        diff::Vec onehot = diff::Vec::Zero(dim);
        onehot(gold) = 1.0;
        log_probs.push_back(g.log(g.dot(distributions[i], g.input(std::move(onehot)))));
    }
    return g.scale(g.mean(g.concat(log_probs)), -1.0);
}

SimilarityMetric parse_metric(const std::string& name) {
    if (name == "dot") return SimilarityMetric::DotProduct;
    if (name == "cosine") return SimilarityMetric::Cosine;
    if (name == "negsq") return SimilarityMetric::NegSqEuclidean;
    throw SpecError("unknown similarity metric '" + name + "' (dot, cosine, negsq)");
}

std::string metric_name(SimilarityMetric metric) {
    switch (metric) {
        case SimilarityMetric::DotProduct: return "dot";
        case SimilarityMetric::Cosine: return "cosine";
        case SimilarityMetric::NegSqEuclidean: return "negsq";
    }
    return "dot";
}

}  // namespace mcml::proto
