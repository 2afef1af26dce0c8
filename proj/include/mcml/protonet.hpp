#pragma once

#include <span>
#include <string>
#include <vector>

#include "mcml/diffmath.hpp"

namespace mcml::proto {

enum class SimilarityMetric { DotProduct, Cosine, NegSqEuclidean };

// Per-episode label -> prototype map, built inside an expression graph so the
// prototypes stay differentiable through the support embeddings.
struct PrototypeSet {
    std::vector<std::string> labels;  // episode label_set order
    std::vector<diff::NodeId> protos;
    std::vector<int> counts;  // support tokens per label
    long episode_id = 0;

    int index_of(const std::string& label) const;
};

// Detached (plain value) copy of a PrototypeSet.
struct PrototypeValues {
    std::vector<std::string> labels;
    std::vector<diff::Vec> values;
    std::vector<int> counts;
    long episode_id = 0;

    int index_of(const std::string& label) const;
};

// Mean embedding per label over support tokens; throws when a label in
// label_set has no support token.
PrototypeSet compute_prototypes(diff::Graph& g, std::span<const diff::NodeId> embeddings,
                                std::span<const std::string> token_labels,
                                const std::vector<std::string>& label_set, long episode_id);

PrototypeValues detach(const diff::Graph& g, const PrototypeSet& protos);

// Score vector over labels, in label_set order.
diff::NodeId similarity(diff::Graph& g, diff::NodeId query, const PrototypeSet& protos,
                        SimilarityMetric metric);
diff::Vec similarity_values(const diff::Vec& query, const PrototypeValues& protos,
                            SimilarityMetric metric);

struct Classification {
    diff::Vec distribution;
    int argmax = 0;  // ties broken by label_set order
};

Classification classify(const diff::Vec& scores);
diff::NodeId classify_node(diff::Graph& g, diff::NodeId scores);

// Mean over query tokens of -log P(gold).
diff::NodeId ner_loss(diff::Graph& g, std::span<const diff::NodeId> distributions,
                      std::span<const int> gold_indices);

SimilarityMetric parse_metric(const std::string& name);
std::string metric_name(SimilarityMetric metric);

}  // namespace mcml::proto
