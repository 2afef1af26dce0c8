#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mcml/diffmath.hpp"
#include "mcml/memory.hpp"
#include "mcml/protonet.hpp"

namespace mcml::ada {

enum class MapKind { Linear, Mlp };

struct SeenPair {
    std::string label;
    diff::Vec train_side;  // memory centroid
    diff::Vec test_side;   // test-episode prototype
};

struct AdaptionContext {
    std::vector<SeenPair> seen;
    std::vector<std::pair<std::string, diff::Vec>> unseen;  // label, test_ori
};

// Seen = labels present in both the store and the test episode (O excluded
// unless include_O); everything else is unseen. Empty seen set is legal.
AdaptionContext partition_labels(const mem::MemoryStore& store,
                                 const proto::PrototypeValues& test_prototypes,
                                 bool include_O = false);

struct FitReport {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    int iterations = 0;
};

struct AdaptionMap {
    MapKind kind = MapKind::Linear;
    diff::ParamStore params;
    double alpha = 1.0;
    FitReport fit_report;
};

// Minimizes sum_i ||train_i - f(test_i)||^2 by full-batch Adam. Linear f
// starts at the identity; the returned parameters are the best iterate, so
// the final loss never exceeds the initial one.
AdaptionMap fit_adaption(std::span<const SeenPair> seen_pairs, MapKind kind, int iterations,
                         double lr, std::uint64_t seed = 0);

diff::Vec project(const AdaptionMap& map, const diff::Vec& test_ori);

// alpha * test_ori + (1 - alpha) * test_ada, alpha in [0, 1].
diff::Vec blend(const diff::Vec& test_ori, const diff::Vec& test_ada, double alpha);

// Grid value maximizing the evaluator's mean span-F1, ties broken toward
// larger alpha (less adaption).
double select_alpha(std::span<const double> grid,
                    const std::function<double(double)>& mean_f1_of_alpha);

MapKind parse_map_kind(const std::string& name);
std::string map_kind_name(MapKind kind);

}  // namespace mcml::ada
