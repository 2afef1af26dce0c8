#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mcml/config.hpp"
#include "mcml/errors.hpp"

namespace mcml::corpus {

// Reserved vocabulary ids.
inline constexpr int kUnkId = 0;
inline constexpr int kPadId = 1;

struct BioTag {
    enum class Kind { O, B, I };
    Kind kind = Kind::O;
    std::string slot;  // empty iff kind == O

    std::string str() const;
    static BioTag parse(const std::string& s);  // "O", "B-<slot>", "I-<slot>"
    bool operator==(const BioTag&) const = default;
};

struct Sentence {
    std::vector<std::string> tokens;
    std::vector<BioTag> tags;
    std::string domain;

    bool operator==(const Sentence&) const = default;
};

struct Corpus {
    struct Domain {
        std::string name;
        std::vector<Sentence> sentences;
        bool operator==(const Domain&) const = default;
    };
    std::vector<Domain> domains;           // in first-appearance order
    std::vector<std::string> vocab_tokens;  // id -> token; [0]="<unk>", [1]="<pad>"
    std::unordered_map<std::string, int> vocab_ids;

    const Domain* find_domain(const std::string& name) const;
    Domain& get_or_add_domain(const std::string& name);
    // All distinct tag strings in a domain: "O" first, then sorted.
    std::vector<std::string> label_set(const std::string& domain) const;
    // First-occurrence order after the reserved ids.
    void rebuild_vocabulary();

    bool operator==(const Corpus& other) const { return domains == other.domains; }
};

Corpus read_conll(const std::string& path);
void write_conll(const Corpus& corpus, const std::string& path);
std::string to_conll(const Corpus& corpus);
Corpus read_conll_string(const std::string& text, const std::string& origin = "<string>");

struct Episode {
    std::vector<Sentence> support;
    std::vector<Sentence> query;
    std::vector<std::string> label_set;  // "O" first, then sorted
    long id = 0;

    int label_index(const std::string& label) const;  // -1 when absent
    // Throws unless every non-O label occurs >= k_shot times in support.
    void validate(int k_shot) const;
};

// Greedy minimal-inclusion support construction over all labels of the
// domain; deterministic per seed. Episode id is set to (long)seed (callers
// typically overwrite it with a sequential id).
Episode sample_episode(const Corpus& corpus, const std::string& domain, int k_shot,
                       int query_size, std::uint64_t seed);

// ------------------------------------------------------------------ synthetic

struct SlotSpec {
    std::string name;
    std::vector<std::vector<std::string>> fillers;  // each filler is a token sequence
};

struct DomainSpec {
    enum class Role { Source, Validation, Target };
    std::string name;
    Role role = Role::Source;
    std::vector<SlotSpec> slots;
    std::vector<std::vector<std::string>> templates;  // tokens; "{slot}" placeholders
};

struct SyntheticSpec {
    std::vector<DomainSpec> domains;
    double overlap = 0.5;  // fraction of non-source slots renamed onto source slots
    int sentences_per_domain = 200;
    std::uint64_t seed = 1;

    std::vector<std::string> domains_with_role(DomainSpec::Role role) const;
};

SyntheticSpec parse_synthetic_spec(const cfg::Config& config);
SyntheticSpec default_synthetic_spec();

// Deterministic per spec.seed. For each non-source domain, exactly
// ceil(overlap * |slots|) of its slots take the name (and filler lexicon) of
// distinct source-domain slots; the remaining names stay as declared and must
// not collide with source slot names.
Corpus generate_synthetic(const SyntheticSpec& spec);

// ---------------------------------------------------------------- vocabulary

// Token -> id map restricted to a domain subset. Unknown tokens map to id 0.
struct Vocabulary {
    std::vector<std::string> tokens;
    std::unordered_map<std::string, int> ids;

    int id(const std::string& token) const;
    int size() const { return static_cast<int>(tokens.size()); }
    static Vocabulary build(const Corpus& corpus, std::span<const std::string> domains);
};

std::vector<int> to_ids(const Vocabulary& vocab, const Sentence& sentence);

}  // namespace mcml::corpus
