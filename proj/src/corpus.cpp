#include "mcml/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mcml/rng.hpp"

namespace mcml::corpus {

// -------------------------------------------------------------------- BioTag

std::string BioTag::str() const {
    switch (kind) {
        case Kind::O: return "O";
        case Kind::B: return "B-" + slot;
        case Kind::I: return "I-" + slot;
    }
    return "O";
}

BioTag BioTag::parse(const std::string& s) {
    if (s == "O") return BioTag{};
    if (s.size() >= 3 && (s[0] == 'B' || s[0] == 'I') && s[1] == '-')
        return BioTag{s[0] == 'B' ? Kind::B : Kind::I, s.substr(2)};
    throw ParseError("malformed tag '" + s + "' (expected O, B-<slot> or I-<slot>)");
}

// -------------------------------------------------------------------- Corpus

const Corpus::Domain* Corpus::find_domain(const std::string& name) const {
    for (const Domain& d : domains)
        if (d.name == name) return &d;
    return nullptr;
}

Corpus::Domain& Corpus::get_or_add_domain(const std::string& name) {
    for (Domain& d : domains)
        if (d.name == name) return d;
    domains.push_back(Domain{name, {}});
    return domains.back();
}

std::vector<std::string> Corpus::label_set(const std::string& domain) const {
    const Domain* d = find_domain(domain);
    if (!d) throw LookupError("no domain '" + domain + "' in corpus");
    std::set<std::string> labels;
    for (const Sentence& s : d->sentences)
        for (const BioTag& t : s.tags)
            if (t.kind != BioTag::Kind::O) labels.insert(t.str());
    std::vector<std::string> out;
    out.push_back("O");
    out.insert(out.end(), labels.begin(), labels.end());
    return out;
}

void Corpus::rebuild_vocabulary() {
    vocab_tokens = {"<unk>", "<pad>"};
    vocab_ids = {{"<unk>", kUnkId}, {"<pad>", kPadId}};
    for (const Domain& d : domains)
        for (const Sentence& s : d.sentences)
            for (const std::string& tok : s.tokens)
                if (!vocab_ids.count(tok)) {
                    vocab_ids[tok] = static_cast<int>(vocab_tokens.size());
                    vocab_tokens.push_back(tok);
                }
}

// ------------------------------------------------------------------ CoNLL IO

namespace {

void validate_bio(const Sentence& s, const std::vector<int>& line_numbers,
                  const std::string& origin) {
    for (std::size_t i = 0; i < s.tags.size(); ++i) {
        const BioTag& t = s.tags[i];
        if (t.kind != BioTag::Kind::I) continue;
        bool ok = i > 0 && s.tags[i - 1].kind != BioTag::Kind::O && s.tags[i - 1].slot == t.slot;
        if (!ok)
            throw ParseError(origin + ":" + std::to_string(line_numbers[i]) +
                             ": dangling I-tag '" + t.str() + "'");
    }
}

}  // namespace

Corpus read_conll_string(const std::string& text, const std::string& origin) {
    Corpus corpus;
    std::istringstream in(text);
    std::string line, domain;
    Sentence pending;
    std::vector<int> pending_lines;
    int lineno = 0;
    auto flush = [&] {
        if (pending.tokens.empty()) return;
        validate_bio(pending, pending_lines, origin);
        if (domain.empty())
            throw ParseError(origin + ":" + std::to_string(pending_lines.front()) +
                             ": sentence before any '# domain=' comment");
        pending.domain = domain;
        corpus.get_or_add_domain(domain).sentences.push_back(std::move(pending));
        pending = Sentence{};
        pending_lines.clear();
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            flush();
            continue;
        }
        if (line[0] == '#') {
            static const std::string kPrefix = "# domain=";
            if (line.rfind(kPrefix, 0) == 0) {
                flush();
                domain = line.substr(kPrefix.size());
                corpus.get_or_add_domain(domain);
            }
            continue;
        }
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
            throw ParseError(origin + ":" + std::to_string(lineno) +
                             ": expected exactly two TAB-separated columns");
        std::string token = line.substr(0, tab);
        std::string tag = line.substr(tab + 1);
        if (token.empty())
            throw ParseError(origin + ":" + std::to_string(lineno) + ": empty token");
        BioTag parsed;
        try {
            parsed = BioTag::parse(tag);
        } catch (const ParseError& e) {
            throw ParseError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
        pending.tokens.push_back(std::move(token));
        pending.tags.push_back(std::move(parsed));
        pending_lines.push_back(lineno);
    }
    flush();
    corpus.rebuild_vocabulary();
    return corpus;
}

Corpus read_conll(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return read_conll_string(buf.str(), path);
}

std::string to_conll(const Corpus& corpus) {
    std::ostringstream out;
    for (const Corpus::Domain& d : corpus.domains) {
        out << "# domain=" << d.name << "\n";
        for (const Sentence& s : d.sentences) {
            for (std::size_t i = 0; i < s.tokens.size(); ++i)
                out << s.tokens[i] << '\t' << s.tags[i].str() << "\n";
            out << "\n";
        }
    }
    return out.str();
}

void write_conll(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << to_conll(corpus);
}

// ------------------------------------------------------------------- Episode

int Episode::label_index(const std::string& label) const {
    for (std::size_t i = 0; i < label_set.size(); ++i)
        if (label_set[i] == label) return static_cast<int>(i);
    return -1;
}

void Episode::validate(int k_shot) const {
    std::map<std::string, int> counts;
    for (const Sentence& s : support)
        for (const BioTag& t : s.tags)
            if (t.kind != BioTag::Kind::O) ++counts[t.str()];
    for (const std::string& label : label_set) {
        if (label == "O") continue;
        auto it = counts.find(label);
        if (it == counts.end() || it->second < k_shot)
            throw SamplingError("episode violates " + std::to_string(k_shot) +
                                "-shot contract for label " + label);
    }
    for (const auto& [label, n] : counts)
        if (label_index(label) < 0)
            throw SamplingError("support label " + label + " missing from label_set");
}

Episode sample_episode(const Corpus& corpus, const std::string& domain, int k_shot,
                       int query_size, std::uint64_t seed) {
    const Corpus::Domain* d = corpus.find_domain(domain);
    if (!d) throw LookupError("no domain '" + domain + "' in corpus");
    if (k_shot < 1) throw SamplingError("k_shot must be >= 1");

    std::vector<int> order(d->sentences.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<std::string> labels = corpus.label_set(domain);
    std::map<std::string, int> counts;
    for (const std::string& l : labels)
        if (l != "O") counts[l] = 0;

    auto sentence_labels = [&](const Sentence& s) {
        std::map<std::string, int> occ;
        for (const BioTag& t : s.tags)
            if (t.kind != BioTag::Kind::O) ++occ[t.str()];
        return occ;
    };

    // Greedy minimal-inclusion cover: repeatedly add the sentence covering the
    // most still-deficient labels, ties broken by shuffled order.
    std::vector<char> taken(order.size(), 0);
    std::vector<int> support_idx;
    auto deficient = [&] {
        for (const auto& [l, n] : counts)
            if (n < k_shot) return true;
        return false;
    };
    while (deficient()) {
        int best = -1, best_cover = 0;
        for (std::size_t pos = 0; pos < order.size(); ++pos) {
            if (taken[pos]) continue;
            const Sentence& s = d->sentences[static_cast<std::size_t>(order[pos])];
            int cover = 0;
            for (const auto& [l, n] : sentence_labels(s))
                if (counts.at(l) < k_shot) ++cover;
            if (cover > best_cover) {
                best_cover = cover;
                best = static_cast<int>(pos);
            }
        }
        if (best < 0) {
            std::string missing;
            for (const auto& [l, n] : counts)
                if (n < k_shot) missing += (missing.empty() ? "" : ", ") + l;
            throw SamplingError("domain '" + domain + "' cannot satisfy " +
                                std::to_string(k_shot) + "-shot for labels: " + missing);
        }
        taken[static_cast<std::size_t>(best)] = 1;
        support_idx.push_back(best);
        for (const auto& [l, n] : sentence_labels(d->sentences[static_cast<std::size_t>(order[best])]))
            counts[l] += n;
    }
    // Drop sentences whose removal keeps every label count >= K (insertion order).
    for (std::size_t i = 0; i < support_idx.size();) {
        const Sentence& s = d->sentences[static_cast<std::size_t>(order[support_idx[i]])];
        auto occ = sentence_labels(s);
        bool removable = true;
        for (const auto& [l, n] : occ)
            if (counts.at(l) - n < k_shot) removable = false;
        if (removable && support_idx.size() > 1) {
            for (const auto& [l, n] : occ) counts[l] -= n;
            taken[static_cast<std::size_t>(support_idx[i])] = 0;
            support_idx.erase(support_idx.begin() + static_cast<long>(i));
        } else {
            ++i;
        }
    }

    Episode ep;
    ep.id = static_cast<long>(seed);
    ep.label_set = labels;
    for (int pos : support_idx) ep.support.push_back(d->sentences[static_cast<std::size_t>(order[pos])]);
    for (std::size_t pos = 0; pos < order.size() && static_cast<int>(ep.query.size()) < query_size; ++pos) {
        if (taken[pos]) continue;
        const Sentence& s = d->sentences[static_cast<std::size_t>(order[pos])];
        bool in_set = true;
        for (const BioTag& t : s.tags)
            if (t.kind != BioTag::Kind::O && ep.label_index(t.str()) < 0) in_set = false;
        if (in_set) ep.query.push_back(s);
    }
    if (static_cast<int>(ep.query.size()) < query_size)
        throw SamplingError("domain '" + domain + "' has too few sentences for query_size " +
                            std::to_string(query_size));
    ep.validate(k_shot);
    return ep;
}

// ----------------------------------------------------------------- synthetic

std::vector<std::string> SyntheticSpec::domains_with_role(DomainSpec::Role role) const {
    std::vector<std::string> out;
    for (const DomainSpec& d : domains)
        if (d.role == role) out.push_back(d.name);
    return out;
}

namespace {

std::vector<std::string> split_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

int shared_slot_count(double overlap, std::size_t n_slots) {
    if (overlap <= 0.0) return 0;
    double raw = overlap * static_cast<double>(n_slots);
    int n = static_cast<int>(std::ceil(raw - 1e-9));
    return std::min(n, static_cast<int>(n_slots));
}

bool is_placeholder(const std::string& tok) {
    return tok.size() >= 3 && tok.front() == '{' && tok.back() == '}';
}

void validate_spec(const SyntheticSpec& spec) {
    if (spec.overlap < 0.0 || spec.overlap > 1.0)
        throw SpecError("synthetic spec: overlap must be in [0,1]");
    if (spec.sentences_per_domain < 1)
        throw SpecError("synthetic spec: sentences_per_domain must be >= 1");
    if (spec.domains.empty()) throw SpecError("synthetic spec: no domains");
    for (const DomainSpec& d : spec.domains) {
        if (d.slots.empty()) throw SpecError("synthetic spec: domain '" + d.name + "' has no slots");
        if (d.templates.empty())
            throw SpecError("synthetic spec: domain '" + d.name + "' has no templates");
        for (const SlotSpec& s : d.slots)
            if (s.fillers.empty())
                throw SpecError("synthetic spec: slot '" + s.name + "' has no fillers");
        for (const auto& tpl : d.templates)
            for (const std::string& tok : tpl)
                if (is_placeholder(tok)) {
                    std::string name = tok.substr(1, tok.size() - 2);
                    bool found = false;
                    for (const SlotSpec& s : d.slots)
                        if (s.name == name) found = true;
                    if (!found)
                        throw SpecError("synthetic spec: template in domain '" + d.name +
                                        "' references undeclared slot '" + name + "'");
                }
    }
}

}  // namespace

Corpus generate_synthetic(const SyntheticSpec& spec) {
    validate_spec(spec);
    Rng rng(spec.seed);

    // Source slot inventory, deduplicated in first-occurrence order.
    std::vector<SlotSpec> inventory;
    std::set<std::string> source_names;
    for (const DomainSpec& d : spec.domains)
        if (d.role == DomainSpec::Role::Source)
            for (const SlotSpec& s : d.slots)
                if (source_names.insert(s.name).second) inventory.push_back(s);

    std::vector<DomainSpec> doms = spec.domains;
    for (DomainSpec& d : doms) {
        if (d.role == DomainSpec::Role::Source) continue;
        int n_shared = shared_slot_count(spec.overlap, d.slots.size());
        if (n_shared > static_cast<int>(inventory.size()))
            throw SpecError("synthetic spec: overlap needs " + std::to_string(n_shared) +
                            " source slots but only " + std::to_string(inventory.size()) +
                            " are declared");
        std::vector<int> local(d.slots.size());
        for (std::size_t i = 0; i < local.size(); ++i) local[i] = static_cast<int>(i);
        rng.shuffle(local);
        std::vector<int> src(inventory.size());
        for (std::size_t i = 0; i < src.size(); ++i) src[i] = static_cast<int>(i);
        rng.shuffle(src);
        std::map<std::string, std::string> rename;
        for (int i = 0; i < n_shared; ++i) {
            SlotSpec& slot = d.slots[static_cast<std::size_t>(local[i])];
            const SlotSpec& from = inventory[static_cast<std::size_t>(src[i])];
            rename["{" + slot.name + "}"] = "{" + from.name + "}";
            slot = from;  // shared label keeps the source name and filler lexicon
        }
        for (std::size_t i = static_cast<std::size_t>(n_shared); i < local.size(); ++i) {
            const SlotSpec& slot = d.slots[static_cast<std::size_t>(local[i])];
            if (source_names.count(slot.name))
                throw SpecError("synthetic spec: non-shared slot '" + slot.name + "' in domain '" +
                                d.name + "' collides with a source slot name");
        }
        for (auto& tpl : d.templates)
            for (std::string& tok : tpl) {
                auto it = rename.find(tok);
                if (it != rename.end()) tok = it->second;
            }
    }

    Corpus corpus;
    for (const DomainSpec& d : doms) {
        Corpus::Domain& out = corpus.get_or_add_domain(d.name);
        for (int i = 0; i < spec.sentences_per_domain; ++i) {
            const auto& tpl = d.templates[static_cast<std::size_t>(rng.uniform_int(
                static_cast<int>(d.templates.size())))];
            Sentence s;
            s.domain = d.name;
            for (const std::string& tok : tpl) {
                if (!is_placeholder(tok)) {
                    s.tokens.push_back(tok);
                    s.tags.push_back(BioTag{});
                    continue;
                }
                std::string name = tok.substr(1, tok.size() - 2);
                const SlotSpec* slot = nullptr;
                for (const SlotSpec& sl : d.slots)
                    if (sl.name == name) slot = &sl;
                const auto& filler = slot->fillers[static_cast<std::size_t>(
                    rng.uniform_int(static_cast<int>(slot->fillers.size())))];
                for (std::size_t k = 0; k < filler.size(); ++k) {
                    s.tokens.push_back(filler[k]);
                    s.tags.push_back(BioTag{k == 0 ? BioTag::Kind::B : BioTag::Kind::I, name});
                }
            }
            out.sentences.push_back(std::move(s));
        }
    }
    corpus.rebuild_vocabulary();
    return corpus;
}

SyntheticSpec parse_synthetic_spec(const cfg::Config& config) {
    SyntheticSpec spec;
    spec.overlap = config.get_double("synthetic.overlap", spec.overlap);
    spec.sentences_per_domain = config.get_int("synthetic.sentences_per_domain",
                                               spec.sentences_per_domain);
    spec.seed = config.get_u64("synthetic.seed", spec.seed);

    std::vector<std::string> names;  // first-appearance order
    for (const auto& [key, value] : config.entries()) {
        if (key.rfind("domain.", 0) != 0) continue;
        std::string rest = key.substr(7);
        std::size_t dot = rest.find('.');
        if (dot == std::string::npos) continue;
        std::string name = rest.substr(0, dot);
        if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    }
    for (const std::string& name : names) {
        DomainSpec d;
        d.name = name;
        std::string role = config.get_or("domain." + name + ".role", "source");
        if (role == "source") d.role = DomainSpec::Role::Source;
        else if (role == "validation") d.role = DomainSpec::Role::Validation;
        else if (role == "target") d.role = DomainSpec::Role::Target;
        else throw SpecError("synthetic spec: bad role '" + role + "' for domain " + name);
        for (const auto& [key, value] : config.entries()) {
            std::string prefix = "domain." + name + ".slot.";
            if (key.rfind(prefix, 0) == 0) {
                SlotSpec slot;
                slot.name = key.substr(prefix.size());
                for (const std::string& filler : cfg::split_list(value))
                    slot.fillers.push_back(split_tokens(filler));
                d.slots.push_back(std::move(slot));
            } else if (key == "domain." + name + ".template") {
                d.templates.push_back(split_tokens(value));
            }
        }
        spec.domains.push_back(std::move(d));
    }
    if (spec.domains.empty()) spec.domains = default_synthetic_spec().domains;
    return spec;
}

SyntheticSpec default_synthetic_spec() {
    auto F = [](std::initializer_list<const char*> fillers) {
        std::vector<std::vector<std::string>> out;
        for (const char* f : fillers) out.push_back(split_tokens(f));
        return out;
    };
    auto T = [](std::initializer_list<const char*> templates) {
        std::vector<std::vector<std::string>> out;
        for (const char* t : templates) out.push_back(split_tokens(t));
        return out;
    };

    SyntheticSpec spec;
    spec.overlap = 0.5;
    spec.sentences_per_domain = 200;
    spec.seed = 1;

    DomainSpec music;
    music.name = "music";
    music.role = DomainSpec::Role::Source;
    music.slots = {
        {"artist", F({"ella", "monk", "coltrane", "nina simone", "miles davis", "bowie",
                      "aretha", "sun ra"})},
        {"genre", F({"jazz", "blues", "funk", "soul", "hip hop", "bebop", "indie rock",
                     "swing"})},
        {"instrument", F({"piano", "guitar", "drums", "upright bass", "trumpet", "violin",
                          "tenor sax"})},
    };
    music.templates = T({
        "play some {genre} music now",
        "play {artist} songs please",
        "i want to hear {genre} on the {instrument}",
        "put on a {artist} record for me",
        "find {genre} tracks with the {instrument}",
        "play the {instrument} solo by {artist}",
    });

    DomainSpec kitchen;
    kitchen.name = "kitchen";
    kitchen.role = DomainSpec::Role::Source;
    kitchen.slots = {
        {"dish", F({"lasagna", "ramen", "pad thai", "tacos", "beef stew", "pancakes",
                    "omelette", "chili"})},
        {"ingredient", F({"garlic", "basil", "soy sauce", "ground beef", "red onion",
                          "cheddar", "flour", "eggs"})},
        {"utensil", F({"whisk", "skillet", "cast iron pan", "rice cooker", "blender",
                       "rolling pin"})},
    };
    kitchen.templates = T({
        "find a recipe for {dish} please",
        "add {ingredient} to the shopping list",
        "how do i make {dish} with {ingredient}",
        "grab the {utensil} for me now",
        "make {dish} in the {utensil} please",
        "find a {dish} recipe with {ingredient}",
    });

    DomainSpec travel;
    travel.name = "travel";
    travel.role = DomainSpec::Role::Validation;
    travel.slots = {
        {"city", F({"oslo", "kyoto", "lima", "porto", "cape town", "quebec city", "leipzig"})},
        {"transport", F({"train", "ferry", "night bus", "tram", "river boat"})},
        {"landmark", F({"old bridge", "castle", "grand market", "lighthouse", "botanic garden"})},
        {"season", F({"early spring", "winter", "late summer", "autumn"})},
    };
    travel.templates = T({
        "find a {transport} to {city} please",
        "show me the {landmark} in {city}",
        "i want to visit {city} in the {season}",
        "book a {transport} for the {season} trip",
        "find the {landmark} near {city} now",
    });

    DomainSpec library;
    library.name = "library";
    library.role = DomainSpec::Role::Target;
    library.slots = {
        {"author", F({"tolstoy", "le guin", "borges", "morrison", "pynchon",
                      "octavia butler", "calvino"})},
        {"format", F({"hardcover", "audiobook", "paperback", "ebook", "graphic novel"})},
        {"topic", F({"astronomy", "linguistics", "folk tales", "naval history", "chess"})},
        {"branch", F({"east branch", "downtown", "riverside", "north annex"})},
    };
    library.templates = T({
        "find a {format} by {author} please",
        "show me books about {topic} now",
        "i want the {format} of {author}",
        "find {topic} books at the {branch}",
        "put {author} on my list for the {branch}",
    });

    spec.domains = {music, kitchen, travel, library};
    return spec;
}

// ---------------------------------------------------------------- vocabulary

int Vocabulary::id(const std::string& token) const {
    auto it = ids.find(token);
    return it == ids.end() ? kUnkId : it->second;
}

Vocabulary Vocabulary::build(const Corpus& corpus, std::span<const std::string> domains) {
    Vocabulary v;
    v.tokens = {"<unk>", "<pad>"};
    v.ids = {{"<unk>", kUnkId}, {"<pad>", kPadId}};
    for (const std::string& name : domains) {
        const Corpus::Domain* d = corpus.find_domain(name);
        if (!d) throw LookupError("no domain '" + name + "' in corpus");
        for (const Sentence& s : d->sentences)
            for (const std::string& tok : s.tokens)
                if (!v.ids.count(tok)) {
                    v.ids[tok] = static_cast<int>(v.tokens.size());
                    v.tokens.push_back(tok);
                }
    }
    return v;
}

std::vector<int> to_ids(const Vocabulary& vocab, const Sentence& sentence) {
    std::vector<int> out;
    out.reserve(sentence.tokens.size());
    for (const std::string& tok : sentence.tokens) out.push_back(vocab.id(tok));
    return out;
}

}  // namespace mcml::corpus
