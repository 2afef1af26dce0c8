#include "mcml/memory.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace mcml::mem {

void MemoryStore::insert(const proto::PrototypeValues& prototypes,
                         const ContrastiveConfig& config) {
    int inserted = 0;
    for (std::size_t i = 0; i < prototypes.labels.size(); ++i) {
        const std::string& label = prototypes.labels[i];
        if (label == "O" && !config.include_O) continue;
        records_.push_back(MemoryRecord{label, prototypes.values[i], prototypes.episode_id});
        Cached& c = cache_[label];
        if (c.count == 0) c.sum = diff::Vec::Zero(prototypes.values[i].size());
        c.sum += prototypes.values[i];
        ++c.count;
        ++inserted;
    }
    ++episodes_seen_;
    labels_per_episode_.push_back(inserted);
}

diff::Vec MemoryStore::centroid(const std::string& label) const {
    auto it = cache_.find(label);
    if (it == cache_.end() || it->second.count == 0)
        throw LookupError("memory: no records for label '" + label + "'");
    return it->second.sum / static_cast<double>(it->second.count);
}

bool MemoryStore::contains(const std::string& label) const {
    auto it = cache_.find(label);
    return it != cache_.end() && it->second.count > 0;
}

std::vector<std::string> MemoryStore::labels() const {
    std::vector<std::string> out;
    for (const auto& [label, c] : cache_)
        if (c.count > 0) out.push_back(label);
    return out;
}

MemoryStore::CheckReport MemoryStore::self_check() const {
    CheckReport report;
    report.records = size();
    report.episodes = episodes_seen_;
    long total_from_history = 0;
    for (int k : labels_per_episode_) {
        total_from_history += k;
        report.max_labels_per_episode = std::max(report.max_labels_per_episode, k);
    }
    if (episodes_seen_ > 0)
        report.mean_labels_per_episode =
            static_cast<double>(total_from_history) / static_cast<double>(episodes_seen_);
    auto fail = [&](const std::string& msg) {
        report.pass = false;
        report.issues.push_back(msg);
    };
    if (static_cast<long>(labels_per_episode_.size()) != episodes_seen_)
        fail("episode history length != episodes_seen");
    if (total_from_history != size())
        fail("record count != sum of per-episode label counts");
    if (size() > 0 && labels().empty()) fail("records present but no distinct label");
    // bound: mean labels/episode <= records <= episodes * max labels/episode
    if (size() > 0) {
        if (report.mean_labels_per_episode > static_cast<double>(size()) + 1e-12)
            fail("mean labels per episode exceeds record count");
        if (size() > episodes_seen_ * static_cast<long>(report.max_labels_per_episode))
            fail("record count exceeds episodes * max labels per episode");
    }
    // cached centroids vs brute-force recomputation over the record list
    std::map<std::string, Cached> brute;
    for (const MemoryRecord& r : records_) {
        Cached& c = brute[r.label];
        if (c.count == 0) c.sum = diff::Vec::Zero(r.embedding.size());
        c.sum += r.embedding;
        ++c.count;
    }
    if (brute.size() != cache_.size()) fail("cached label set differs from records");
    for (const auto& [label, c] : cache_) {
        auto it = brute.find(label);
        if (it == brute.end()) {
            fail("cached label '" + label + "' has no records");
            continue;
        }
        if (it->second.count != c.count)
            fail("cached count for label '" + label + "' differs from records");
        else if ((it->second.sum - c.sum).cwiseAbs().maxCoeff() != 0.0)
            fail("cached running sum for label '" + label + "' differs from records");
    }
    return report;
}

void MemoryStore::save(std::ostream& out) const {
    out << "memory v1\n";
    out << "episodes " << episodes_seen_ << " records " << records_.size() << "\n";
    for (int k : labels_per_episode_) out << k << ' ';
    out << "\n";
    char buf[40];
    for (const MemoryRecord& r : records_) {
        out << r.label << ' ' << r.episode_id << ' ' << r.embedding.size() << "\n";
        for (Eigen::Index i = 0; i < r.embedding.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", r.embedding(i));
            if (i) out << ' ';
            out << buf;
        }
        out << "\n";
    }
}

MemoryStore MemoryStore::load(std::istream& in) {
    std::string line;
    while (std::getline(in, line) && line.empty()) {
    }
    if (line != "memory v1") throw ParseError("checkpoint: missing 'memory v1' header");
    MemoryStore store;
    std::string word;
    long episodes = 0, n_records = 0;
    {
        if (!std::getline(in, line)) throw ParseError("memory section: truncated counts");
        std::istringstream counts(line);
        if (!(counts >> word >> episodes) || word != "episodes" ||
            !(counts >> word >> n_records) || word != "records")
            throw ParseError("memory section: bad counts line: " + line);
    }
    if (!std::getline(in, line)) throw ParseError("memory section: truncated history");
    {
        std::istringstream hist(line);
        int k;
        while (hist >> k) store.labels_per_episode_.push_back(k);
    }
    if (static_cast<long>(store.labels_per_episode_.size()) != episodes)
        throw ParseError("memory section: episode history length mismatch");
    store.episodes_seen_ = episodes;
    for (long r = 0; r < n_records; ++r) {
        MemoryRecord rec;
        Eigen::Index dim = 0;
        if (!std::getline(in, line)) throw ParseError("memory section: truncated record header");
        std::istringstream hdr(line);
        if (!(hdr >> rec.label >> rec.episode_id >> dim))
            throw ParseError("memory section: bad record header: " + line);
        if (!std::getline(in, line)) throw ParseError("memory section: truncated record floats");
        rec.embedding.resize(dim);
        const char* p = line.c_str();
        char* end = nullptr;
        for (Eigen::Index i = 0; i < dim; ++i) {
            rec.embedding(i) = std::strtod(p, &end);
            if (end == p) throw ParseError("memory section: bad float in record");
            p = end;
        }
        Cached& c = store.cache_[rec.label];
        if (c.count == 0) c.sum = diff::Vec::Zero(dim);
        c.sum += rec.embedding;
        ++c.count;
        store.records_.push_back(std::move(rec));
    }
    return store;
}

void MemoryStore::debug_corrupt_running_sum(const std::string& label, double delta) {
    auto it = cache_.find(label);
    if (it == cache_.end()) throw LookupError("memory: no records for label '" + label + "'");
    it->second.sum(0) += delta;
}

// ------------------------------------------------------------- pair distance

diff::NodeId pair_distance(diff::Graph& g, diff::NodeId a, diff::NodeId b, SignMode mode) {
    if (g.vec(a).norm() == 0.0 || g.vec(b).norm() == 0.0)
        throw DomainError("pair_distance: zero-norm input");
    diff::NodeId cos = diff::cosine(g, a, b);
    // 1/(1+exp(z)) == sigmoid(-z)
    return g.sigmoid(g.scale(cos, mode == SignMode::Literal ? -1.0 : 1.0));
}

double pair_distance(const diff::Vec& a, const diff::Vec& b, SignMode mode) {
    diff::ParamStore empty;
    diff::Graph g(empty);
    return g.value(pair_distance(g, g.input(a), g.input(b), mode));
}

// --------------------------------------------------------------- memory loss

diff::NodeId memory_loss(diff::Graph& g, const MemoryStore& store,
                         const proto::PrototypeSet& prototypes,
                         const ContrastiveConfig& config) {
    std::vector<int> current;  // indices of prototypes that participate
    for (std::size_t i = 0; i < prototypes.labels.size(); ++i) {
        if (prototypes.labels[i] == "O" && !config.include_O) continue;
        current.push_back(static_cast<int>(i));
    }
    std::vector<diff::NodeId> terms;
    for (int i : current) {
        const std::string& label = prototypes.labels[static_cast<std::size_t>(i)];
        if (!store.contains(label)) continue;  // inserted afterwards, no loss term
        // centroid enters as a constant: stored records are stop-gradient
        diff::NodeId cstar = g.input(store.centroid(label));
        double pos_sign = config.sign_mode == SignMode::Literal ? -1.0 : 1.0;
        // log d(c, c*) = log sigmoid(pos_sign * cos); log(1 - d) flips the sign
        diff::NodeId cos_pos =
            diff::cosine(g, prototypes.protos[static_cast<std::size_t>(i)], cstar);
        terms.push_back(g.log(g.sigmoid(g.scale(cos_pos, pos_sign))));
        for (int j : current) {
            if (j == i) continue;
            diff::NodeId cos_neg =
                diff::cosine(g, prototypes.protos[static_cast<std::size_t>(j)], cstar);
            terms.push_back(g.log(g.sigmoid(g.scale(cos_neg, -pos_sign))));
        }
    }
    if (terms.empty()) return g.input(0.0);
    return g.scale(g.mean(g.concat(terms)), -1.0);
}

SignMode parse_sign_mode(const std::string& name) {
    if (name == "literal") return SignMode::Literal;
    if (name == "flipped") return SignMode::Flipped;
    throw SpecError("unknown sign mode '" + name + "' (literal, flipped)");
}

std::string sign_mode_name(SignMode mode) {
    return mode == SignMode::Literal ? "literal" : "flipped";
}

}  // namespace mcml::mem
