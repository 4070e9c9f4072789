#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ptie/corpus.hpp"

namespace ptie {

class KvFile;

// Surface-level knobs that differ between synthetic documentation styles.
struct StyleParams {
    double shuffle_prob = 0.0;  // per-document chance the sentence order is permuted
    double period_prob = 0.9;   // chance a sentence ends with '.'
    double filler_prob = 0.25;  // chance an unannotated filler sentence follows
    double newline_prob = 0.15; // chance sentences are separated by '\n' instead of ' '
};

// One synthetic documentation style: surface-form pools per concept type,
// slotted sentence templates per trigger category, filler sentences and
// style knobs. Template grammar:
//   literal text, {Type} slots, [ optional segment ] (no nesting);
//   each template names its trigger type exactly once, optional segments
//   carry attribute slots.
struct DomainProfile {
    std::string name;
    std::map<std::string, std::vector<std::string>> lexicons;
    std::map<std::string, std::vector<std::string>> templates;  // trigger type -> patterns
    std::vector<std::string> fillers;
    StyleParams style;

    // Throws ConfigError when a pool is empty, a slot names an unknown type,
    // or an attribute slot appears in a category whose pair is unmapped.
    void check(const Schema& schema) const;

    KvFile to_kv() const;
    static DomainProfile from_kv(const KvFile& kv);
    void save(const std::string& path) const;
    static DomainProfile load(const std::string& path);
};

struct GenConfig {
    uint64_t seed = 1;
    int n_documents = 10;
    int triggers_min = 1, triggers_max = 3;
    int attributes_min = 0, attributes_max = 2;

    void check() const;
};

// Identical profiles at shift 0; as shift grows, domain B swaps a growing
// seeded prefix of each lexicon for unseen synonym/abbreviation forms and
// shuffles sentence order, so pool overlap falls monotonically.
std::pair<DomainProfile, DomainProfile> make_domain_pair(const Schema& schema,
                                                         double shift_strength,
                                                         uint64_t seed);

// Pool-merge of a domain pair, used as an unlabeled pretraining distribution
// that covers both documentation styles.
DomainProfile make_union_profile(const DomainProfile& a, const DomainProfile& b);

// Jaccard overlap of the two profiles' pools for one type.
double lexicon_overlap(const DomainProfile& a, const DomainProfile& b, const std::string& ctype);

// Deterministic in (profile, schema, cfg); each document is generated from
// the substream (seed, doc index), so generation order is irrelevant.
Corpus generate_corpus(const DomainProfile& profile, const Schema& schema, const GenConfig& cfg);

// Same, also returning the tally the generator kept while emitting gold
// annotations (an independent cross-check for corpus_stats).
struct GenResult {
    Corpus corpus;
    CorpusStats tally;
};
GenResult generate_corpus_with_tally(const DomainProfile& profile, const Schema& schema,
                                     const GenConfig& cfg);

// The bundled desk-scale schema: triggers Tobacco/Alcohol/Employment,
// attributes Status/Frequency/Type, five relation labels.
Schema default_schema();

}  // namespace ptie
