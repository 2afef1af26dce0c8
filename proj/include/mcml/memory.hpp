#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mcml/diffmath.hpp"
#include "mcml/protonet.hpp"

namespace mcml::mem {

// The printed contrastive distance rewards dissimilar positives; Literal
// keeps that form, Flipped negates the exponent. Both are exposed so the
// ablation harness can run either.
enum class SignMode { Literal, Flipped };

struct ContrastiveConfig {
    SignMode sign_mode = SignMode::Literal;
    bool include_O = false;
};

struct MemoryRecord {
    std::string label;
    diff::Vec embedding;  // frozen snapshot, never mutated after insertion
    long episode_id = 0;
};

// Append-only bank of per-episode label prototypes with cached centroids.
class MemoryStore {
public:
    // One record per (non-O unless include_O) label; counts one episode.
    void insert(const proto::PrototypeValues& prototypes, const ContrastiveConfig& config);

    diff::Vec centroid(const std::string& label) const;
    bool contains(const std::string& label) const;
    std::vector<std::string> labels() const;  // sorted

    const std::vector<MemoryRecord>& records() const { return records_; }
    long size() const { return static_cast<long>(records_.size()); }
    long episodes_seen() const { return episodes_seen_; }
    const std::vector<int>& labels_per_episode() const { return labels_per_episode_; }

    struct CheckReport {
        bool pass = true;
        std::vector<std::string> issues;
        long records = 0;
        long episodes = 0;
        double mean_labels_per_episode = 0.0;
        int max_labels_per_episode = 0;
    };
    CheckReport self_check() const;

    // "memory v1" checkpoint section.
    void save(std::ostream& out) const;
    static MemoryStore load(std::istream& in);

    // Fault-injection hook for the self-check tests.
    void debug_corrupt_running_sum(const std::string& label, double delta);

private:
    struct Cached {
        diff::Vec sum;
        int count = 0;
    };
    std::vector<MemoryRecord> records_;
    std::map<std::string, Cached> cache_;
    long episodes_seen_ = 0;
    std::vector<int> labels_per_episode_;
};

// d(a, b) over the cosine of the two directions: Literal 1/(1+exp(cos)),
// Flipped 1/(1+exp(-cos)). Symmetric, scale-invariant, in (0, 1).
diff::NodeId pair_distance(diff::Graph& g, diff::NodeId a, diff::NodeId b, SignMode mode);
double pair_distance(const diff::Vec& a, const diff::Vec& b, SignMode mode);

// Contrastive loss of the current episode's prototypes against the stored
// centroids: mean over terms of -[log d(c, c*_label) for the matching label
// and log(1 - d(c', c*_label)) for every other current prototype c'].
// Gradient flows only through the current prototypes. Empty term set -> 0.
diff::NodeId memory_loss(diff::Graph& g, const MemoryStore& store,
                         const proto::PrototypeSet& prototypes, const ContrastiveConfig& config);

SignMode parse_sign_mode(const std::string& name);
std::string sign_mode_name(SignMode mode);

}  // namespace mcml::mem
