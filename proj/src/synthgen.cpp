#include "ptie/synthgen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "ptie/common.hpp"
#include "ptie/kv_format.hpp"
#include "ptie/rng.hpp"
#include "ptie/utf8.hpp"

namespace ptie {

namespace {

// ---------------------------------------------------------------------------
// Bundled content. Pools are lowercase; template literals deliberately avoid
// every pool word (and sentence starts are capitalized) so a surface form
// never occurs inside literal text. Together with per-document
// without-replacement sampling this keeps every annotated form unique within
// its document, which is what makes leftmost-match grounding exact.
// Attribute pools are additionally free of form-inside-form pairs because two
// draws from the same attribute pool can land in one document.

struct BuiltinLexicon {
    const char* type;
    const char* base[12];
    const char* alt[12];
};

const BuiltinLexicon kBuiltinLexicons[] = {
    {"Tobacco",
     {"cigarettes", "smoking", "tobacco", "cigs", "nicotine", "cigars", "menthols",
      "smokeless tobacco", "pipe smoking", "hand-rolled cigarettes", "marlboros", "camels"},
     {"vaping", "chew", "snuff", "hookah", "bidis", "kreteks", "snus", "cigarillos",
      "vape pens", "roll-ups", "water pipe", "heated tobacco"}},
    {"Alcohol",
     {"alcohol", "beer", "wine", "liquor", "vodka", "whiskey", "drinking", "booze",
      "cocktails", "spirits", "rum", "gin"},
     {"etoh", "brandy", "tequila", "lager", "ale", "cider", "bourbon", "scotch",
      "moonshine", "hard seltzer", "mixed drinks", "sake"}},
    {"Employment",
     {"carpenter", "teacher", "nurse", "mechanic", "farmer", "cashier", "welder",
      "janitor", "clerk", "driver", "cook", "electrician"},
     {"plumber", "barista", "accountant", "roofer", "tailor", "florist", "machinist",
      "bartender", "painter", "dispatcher", "landscaper", "bookkeeper"}},
    {"Status",
     {"current", "former", "active", "quit", "denies", "ongoing", "past", "stopped",
      "sober", "abstinent", "relapsed", "intermittent"},
     {"reformed", "halted", "ceased", "abstains", "recovering", "on-and-off", "paused",
      "resumed", "refrains", "moderate", "heavy", "tapering"}},
    {"Frequency",
     {"daily", "weekly", "occasionally", "rarely", "nightly", "monthly", "frequently",
      "seldom", "constantly", "sporadically", "regularly", "often"},
     {"hourly", "annually", "sometimes", "scarcely", "persistently", "periodically",
      "routinely", "sparingly", "continually", "episodically", "quarterly",
      "on-occasion"}},
    {"Type",
     {"full-time", "part-time", "retired", "unemployed", "seasonal", "self-employed",
      "salaried", "contract", "temporary", "freelance", "apprenticeship", "volunteer"},
     {"per-diem", "casual", "probationary", "tenured", "locum", "consulting", "gig-based",
      "internship", "commissioned", "on-call", "shift-based", "furloughed"}},
};

struct BuiltinTemplates {
    const char* category;
    const char* patterns[4];
};

const BuiltinTemplates kBuiltinTemplates[] = {
    {"Tobacco",
     {"Patient reports use of {Tobacco}[ about {Frequency}][ and describes the habit as {Status}]",
      "Social history is notable for {Tobacco}[ used {Frequency}][ which is {Status} at this time]",
      "Use of {Tobacco} was discussed[ with reported pattern {Frequency}][ and {Status} behavior noted]",
      "The intake form lists {Tobacco}[ on a {Frequency} basis][ marked {Status}]"}},
    {"Alcohol",
     {"Patient reports taking {Alcohol}[ roughly {Frequency}][ and calls it {Status}]",
      "History includes {Alcohol}[ consumed {Frequency}][ considered {Status} at present]",
      "Screening covered {Alcohol}[ with intake {Frequency}][ and {Status} use noted]",
      "The note mentions {Alcohol}[ taken {Frequency}][ described as {Status}]"}},
    {"Employment",
     {"Patient works as a {Employment}[ in a {Type} arrangement]",
      "Occupation is recorded as {Employment}[ with {Type} standing]",
      "Employment history names {Employment}[ under a {Type} schedule]",
      "The chart lists work as {Employment}[ on a {Type} basis]"}},
};

const char* const kBuiltinFillers[] = {
    "Vitals were reviewed and stable",
    "Medication list was reconciled",
    "Follow-up visit was scheduled",
    "Labs were drawn this morning",
    "No acute distress was observed",
    "Review of systems was otherwise negative",
    "Discharge planning was discussed",
    "Radiology results were unremarkable",
};

const BuiltinLexicon* find_builtin_lexicon(const std::string& type) {
    for (const auto& b : kBuiltinLexicons)
        if (type == b.type) return &b;
    return nullptr;
}

const BuiltinTemplates* find_builtin_templates(const std::string& category) {
    for (const auto& b : kBuiltinTemplates)
        if (category == b.category) return &b;
    return nullptr;
}

std::string lower_ascii(const std::string& s) {
    std::string out = s;
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Fallback pools for schemas beyond the bundled one: "<type>01".."<type>12"
// and a disjoint alt series "<type>x01".."<type>x12".
std::vector<std::string> procedural_pool(const std::string& type, bool alt) {
    std::vector<std::string> pool;
    for (int i = 1; i <= 12; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%s%02d", alt ? "x" : "", i);
        pool.push_back(lower_ascii(type) + buf);
    }
    return pool;
}

std::vector<std::string> procedural_patterns(const Schema& schema, const std::string& category) {
    const char* stems[2] = {"The record notes", "Assessment documents"};
    const char* joins[2] = {"with", "showing"};
    std::vector<std::string> patterns;
    for (int v = 0; v < 2; ++v) {
        std::string p = std::string(stems[v]) + " {" + category + "}";
        for (const auto& attr : schema.attributes_for(category))
            p += std::string("[ ") + joins[v] + " " + lower_ascii(attr) + " {" + attr + "}]";
        patterns.push_back(p);
    }
    return patterns;
}

// ---------------------------------------------------------------------------
// Template grammar: literal text, {Type} slots, [ optional segment ].
// No nesting, no escapes. The trigger slot sits at top level exactly once;
// every optional segment carries exactly one attribute slot.

struct TplPiece {
    bool is_slot = false;
    std::string text;  // literal text, or the slot's concept type
};

struct TplUnit {
    enum Kind { kLiteral, kSlot, kOptional } kind;
    std::string text;           // literal text or slot type
    std::vector<TplPiece> sub;  // pieces of an optional segment
    std::string attr;           // the optional segment's attribute type
};

struct Tpl {
    std::vector<TplUnit> units;
    std::vector<int> optionals;  // indices of optional units, in order
};

[[noreturn]] void tpl_error(const std::string& pattern, const std::string& why) {
    throw ConfigError("bad template \"" + pattern + "\": " + why);
}

Tpl parse_template(const std::string& pattern, const Schema& schema,
                   const std::string& category) {
    Tpl tpl;
    std::string lit;
    std::vector<TplPiece>* opt = nullptr;  // non-null while inside [ ... ]
    std::vector<TplPiece> opt_pieces;
    int trigger_slots = 0;

    auto flush_literal = [&]() {
        if (lit.empty()) return;
        if (opt)
            opt->push_back({false, lit});
        else
            tpl.units.push_back({TplUnit::kLiteral, lit, {}, ""});
        lit.clear();
    };

    for (size_t i = 0; i < pattern.size(); ++i) {
        char c = pattern[i];
        if (c == '{') {
            size_t close = pattern.find('}', i + 1);
            if (close == std::string::npos) tpl_error(pattern, "unterminated '{'");
            std::string type = pattern.substr(i + 1, close - i - 1);
            if (type.empty()) tpl_error(pattern, "empty slot");
            if (!schema.has_type(type)) tpl_error(pattern, "unknown slot type " + type);
            flush_literal();
            if (opt) {
                if (!schema.is_attribute(type))
                    tpl_error(pattern, "optional segment slot " + type + " is not an attribute");
                if (!schema.map_relation(category, type))
                    tpl_error(pattern, "pair (" + category + ", " + type + ") is not mapped");
                opt->push_back({true, type});
            } else {
                if (type != category)
                    tpl_error(pattern, "top-level slot " + type + " is not the trigger " + category);
                ++trigger_slots;
                tpl.units.push_back({TplUnit::kSlot, type, {}, ""});
            }
            i = close;
        } else if (c == '[') {
            if (opt) tpl_error(pattern, "nested '['");
            flush_literal();
            opt_pieces.clear();
            opt = &opt_pieces;
        } else if (c == ']') {
            if (!opt) tpl_error(pattern, "unmatched ']'");
            flush_literal();
            std::string attr;
            for (const auto& p : opt_pieces)
                if (p.is_slot) {
                    if (!attr.empty()) tpl_error(pattern, "optional segment with two slots");
                    attr = p.text;
                }
            if (attr.empty()) tpl_error(pattern, "optional segment without a slot");
            tpl.optionals.push_back(static_cast<int>(tpl.units.size()));
            tpl.units.push_back({TplUnit::kOptional, "", opt_pieces, attr});
            opt = nullptr;
        } else if (c == '}') {
            tpl_error(pattern, "unmatched '}'");
        } else {
            lit.push_back(c);
        }
    }
    if (opt) tpl_error(pattern, "unterminated '['");
    flush_literal();
    if (trigger_slots != 1) tpl_error(pattern, "trigger slot must appear exactly once");
    return tpl;
}

// Draws forms for one document; each type hands out distinct forms until the
// pool is exhausted (never at bundled pool sizes).
class FormDrawer {
public:
    FormDrawer(const DomainProfile& profile, Rng& rng) : profile_(profile), rng_(rng) {}

    std::string draw(const std::string& ctype) {
        const auto& pool = profile_.lexicons.at(ctype);
        auto& used = used_[ctype];
        std::vector<std::string> fresh;
        for (const auto& f : pool)
            if (used.count(f) == 0) fresh.push_back(f);
        const std::string& form = fresh.empty() ? rng_.pick(pool) : rng_.pick(fresh);
        used.insert(form);
        return form;
    }

private:
    const DomainProfile& profile_;
    Rng& rng_;
    std::map<std::string, std::set<std::string>> used_;
};

struct SentencePiece {
    std::string text;
    std::string ctype;  // non-empty when the piece is an annotated form
    bool is_trigger = false;
};

struct Sentence {
    std::vector<SentencePiece> pieces;
    std::string category;  // empty for fillers
};

Sentence realize_sentence(const std::string& category, const Tpl& tpl,
                          const DomainProfile& profile, const GenConfig& cfg,
                          FormDrawer& drawer, Rng& rng) {
    Sentence s;
    s.category = category;

    // Decide which optional segments fire: a uniform count in the configured
    // range (capped by what the template offers), then a uniform subset.
    int n_opt = static_cast<int>(tpl.optionals.size());
    std::vector<char> fire(tpl.units.size(), 0);
    if (n_opt > 0) {
        int lo = std::min(cfg.attributes_min, n_opt);
        int hi = std::min(cfg.attributes_max, n_opt);
        int k = rng.range(lo, hi);
        std::vector<int> order = tpl.optionals;
        rng.shuffle(order);
        for (int j = 0; j < k; ++j) fire[order[j]] = 1;
    }

    for (size_t u = 0; u < tpl.units.size(); ++u) {
        const TplUnit& unit = tpl.units[u];
        switch (unit.kind) {
            case TplUnit::kLiteral:
                s.pieces.push_back({unit.text, "", false});
                break;
            case TplUnit::kSlot:
                s.pieces.push_back({drawer.draw(unit.text), unit.text, true});
                break;
            case TplUnit::kOptional:
                if (fire[u])
                    for (const auto& p : unit.sub) {
                        // Optional-segment slots are attributes by grammar.
                        if (p.is_slot)
                            s.pieces.push_back({drawer.draw(p.text), p.text, false});
                        else
                            s.pieces.push_back({p.text, "", false});
                    }
                break;
        }
    }
    if (rng.bernoulli(profile.style.period_prob)) s.pieces.push_back({".", "", false});
    return s;
}

Document assemble_document(const std::vector<Sentence>& sentences, const Schema& schema,
                           const DomainProfile& profile, const std::string& doc_id,
                           Rng& rng, CorpusStats& tally) {
    Document doc;
    doc.doc_id = doc_id;
    doc.domain_tag = profile.name;

    int64_t cursor = 0;  // Unicode scalar values, matching Concept offsets
    int next_id = 1;
    auto append = [&](const std::string& piece) {
        doc.text += piece;
        cursor += static_cast<int64_t>(utf8_length(piece));
    };

    for (size_t si = 0; si < sentences.size(); ++si) {
        if (si > 0) append(rng.bernoulli(profile.style.newline_prob) ? "\n" : " ");
        const Sentence& s = sentences[si];
        std::string trigger_id;
        std::vector<std::pair<std::string, std::string>> attrs;  // (concept id, type)
        for (const auto& piece : s.pieces) {
            if (!piece.ctype.empty()) {
                Concept c;
                c.id = "T" + std::to_string(next_id++);
                c.ctype = piece.ctype;
                c.start = cursor;
                c.end = cursor + static_cast<int64_t>(utf8_length(piece.text));
                c.text = piece.text;
                if (piece.is_trigger)
                    trigger_id = c.id;
                else
                    attrs.emplace_back(c.id, c.ctype);
                doc.concepts.push_back(c);
                ++tally.n_concepts;
                ++tally.concepts_per_type[c.ctype];
            }
            append(piece.text);
        }
        for (const auto& [attr_id, attr_type] : attrs) {
            auto label = schema.map_relation(s.category, attr_type);
            doc.relations.push_back({trigger_id, attr_id, *label});
            ++tally.n_relations;
            ++tally.relations_per_label[*label];
        }
    }
    ++tally.n_documents;
    return doc;
}

}  // namespace

// ---------------------------------------------------------------------------
// DomainProfile

void DomainProfile::check(const Schema& schema) const {
    schema.check();
    for (const auto& [type, pool] : lexicons)
        if (!schema.has_type(type))
            throw ConfigError("profile " + name + ": lexicon for unknown type " + type);
    for (const auto& type : schema.all_types()) {
        auto it = lexicons.find(type);
        if (it == lexicons.end() || it->second.empty())
            throw ConfigError("profile " + name + ": empty lexicon for type " + type);
    }
    for (const auto& [category, patterns] : templates)
        if (!schema.is_trigger(category))
            throw ConfigError("profile " + name + ": templates for non-trigger " + category);
    for (const auto& category : schema.trigger_list()) {
        auto it = templates.find(category);
        if (it == templates.end() || it->second.empty())
            throw ConfigError("profile " + name + ": no templates for trigger " + category);
        for (const auto& pattern : it->second) parse_template(pattern, schema, category);
    }
    for (double p : {style.shuffle_prob, style.period_prob, style.filler_prob,
                     style.newline_prob})
        if (!(p >= 0.0 && p <= 1.0))
            throw ConfigError("profile " + name + ": style probability outside [0,1]");
}

KvFile DomainProfile::to_kv() const {
    KvFile kv;
    kv.add("name", name);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", style.shuffle_prob);
    kv.add("style", std::string("shuffle_prob ") + buf);
    std::snprintf(buf, sizeof(buf), "%.17g", style.period_prob);
    kv.add("style", std::string("period_prob ") + buf);
    std::snprintf(buf, sizeof(buf), "%.17g", style.filler_prob);
    kv.add("style", std::string("filler_prob ") + buf);
    std::snprintf(buf, sizeof(buf), "%.17g", style.newline_prob);
    kv.add("style", std::string("newline_prob ") + buf);
    for (const auto& [type, pool] : lexicons)
        for (const auto& form : pool) kv.add("lexicon", type + " " + form);
    for (const auto& [category, patterns] : templates)
        for (const auto& pattern : patterns) kv.add("template", category + " " + pattern);
    for (const auto& filler : fillers) kv.add("filler", filler);
    return kv;
}

DomainProfile DomainProfile::from_kv(const KvFile& kv) {
    DomainProfile profile;
    profile.name = kv.get("name");
    if (profile.name.empty()) throw ConfigError("profile file: missing name record");
    for (const auto& rec : kv.records()) {
        if (rec.key == "name") continue;
        if (rec.key == "style") {
            auto fields = split_fields(rec.value);
            if (fields.size() != 2)
                throw ConfigError("profile file: bad style record \"" + rec.value + "\"");
            double v = 0.0;
            try {
                v = std::stod(fields[1]);
            } catch (const std::exception&) {
                throw ConfigError("profile file: bad style value \"" + fields[1] + "\"");
            }
            if (fields[0] == "shuffle_prob")
                profile.style.shuffle_prob = v;
            else if (fields[0] == "period_prob")
                profile.style.period_prob = v;
            else if (fields[0] == "filler_prob")
                profile.style.filler_prob = v;
            else if (fields[0] == "newline_prob")
                profile.style.newline_prob = v;
            else
                throw ConfigError("profile file: unknown style knob " + fields[0]);
        } else if (rec.key == "lexicon" || rec.key == "template") {
            size_t sp = rec.value.find(' ');
            if (sp == std::string::npos)
                throw ConfigError("profile file: bad " + rec.key + " record \"" + rec.value +
                                  "\"");
            std::string type = rec.value.substr(0, sp);
            std::string rest = rec.value.substr(sp + 1);
            if (rec.key == "lexicon")
                profile.lexicons[type].push_back(rest);
            else
                profile.templates[type].push_back(rest);
        } else if (rec.key == "filler") {
            profile.fillers.push_back(rec.value);
        } else {
            throw ConfigError("profile file: unknown record key " + rec.key);
        }
    }
    return profile;
}

void DomainProfile::save(const std::string& path) const { to_kv().save(path); }

DomainProfile DomainProfile::load(const std::string& path) {
    return from_kv(KvFile::load(path));
}

// ---------------------------------------------------------------------------
// GenConfig

void GenConfig::check() const {
    if (n_documents < 1) throw ConfigError("gen config: n_documents must be >= 1");
    if (triggers_min < 1 || triggers_min > triggers_max)
        throw ConfigError("gen config: bad triggers range");
    if (attributes_min < 0 || attributes_min > attributes_max)
        throw ConfigError("gen config: bad attributes range");
}

// ---------------------------------------------------------------------------
// Domain pairs and pool algebra

std::pair<DomainProfile, DomainProfile> make_domain_pair(const Schema& schema,
                                                         double shift_strength,
                                                         uint64_t seed) {
    if (!(shift_strength >= 0.0 && shift_strength <= 1.0))
        throw ConfigError("shift_strength must lie in [0,1]");
    schema.check();

    DomainProfile a;
    a.name = "site_a";
    for (const auto& type : schema.all_types()) {
        if (const BuiltinLexicon* b = find_builtin_lexicon(type))
            a.lexicons[type].assign(b->base, b->base + 12);
        else
            a.lexicons[type] = procedural_pool(type, false);
    }
    for (const auto& category : schema.trigger_list()) {
        if (const BuiltinTemplates* b = find_builtin_templates(category))
            a.templates[category].assign(b->patterns, b->patterns + 4);
        else
            a.templates[category] = procedural_patterns(schema, category);
    }
    a.fillers.assign(std::begin(kBuiltinFillers), std::end(kBuiltinFillers));

    DomainProfile b = a;
    b.name = "site_b";
    b.style.shuffle_prob = shift_strength;

    // Replace a seeded-permutation prefix of each pool with its positional
    // counterpart from the alt series; the replaced set is nested across
    // growing shift, so pool overlap falls monotonically.
    auto types = schema.all_types();
    for (size_t ti = 0; ti < types.size(); ++ti) {
        auto& pool = b.lexicons[types[ti]];
        std::vector<std::string> alt;
        if (const BuiltinLexicon* bl = find_builtin_lexicon(types[ti]))
            alt.assign(bl->alt, bl->alt + 12);
        else
            alt = procedural_pool(types[ti], true);
        size_t n = std::min(pool.size(), alt.size());
        size_t k = static_cast<size_t>(std::llround(shift_strength * static_cast<double>(n)));
        std::vector<size_t> perm(n);
        for (size_t i = 0; i < n; ++i) perm[i] = i;
        Rng perm_rng(Rng::mix(seed, 1000 + ti));
        perm_rng.shuffle(perm);
        for (size_t j = 0; j < k; ++j) pool[perm[j]] = alt[perm[j]];
    }
    if (shift_strength > 0.0) {
        auto categories = schema.trigger_list();
        for (size_t ci = 0; ci < categories.size(); ++ci) {
            Rng order_rng(Rng::mix(seed, 2000 + ci));
            order_rng.shuffle(b.templates[categories[ci]]);
        }
    }
    return {a, b};
}

DomainProfile make_union_profile(const DomainProfile& a, const DomainProfile& b) {
    DomainProfile u = a;
    u.name = a.name + "+" + b.name;
    auto merge = [](std::vector<std::string>& into, const std::vector<std::string>& from) {
        std::set<std::string> seen(into.begin(), into.end());
        for (const auto& s : from)
            if (seen.insert(s).second) into.push_back(s);
    };
    for (const auto& [type, pool] : b.lexicons) merge(u.lexicons[type], pool);
    for (const auto& [category, patterns] : b.templates) merge(u.templates[category], patterns);
    merge(u.fillers, b.fillers);
    u.style.shuffle_prob = 0.5 * (a.style.shuffle_prob + b.style.shuffle_prob);
    u.style.period_prob = 0.5 * (a.style.period_prob + b.style.period_prob);
    u.style.filler_prob = 0.5 * (a.style.filler_prob + b.style.filler_prob);
    u.style.newline_prob = 0.5 * (a.style.newline_prob + b.style.newline_prob);
    return u;
}

double lexicon_overlap(const DomainProfile& a, const DomainProfile& b,
                       const std::string& ctype) {
    auto ia = a.lexicons.find(ctype);
    auto ib = b.lexicons.find(ctype);
    std::set<std::string> sa, sb;
    if (ia != a.lexicons.end()) sa.insert(ia->second.begin(), ia->second.end());
    if (ib != b.lexicons.end()) sb.insert(ib->second.begin(), ib->second.end());
    if (sa.empty() && sb.empty()) return 1.0;
    size_t inter = 0;
    for (const auto& s : sa) inter += sb.count(s);
    size_t uni = sa.size() + sb.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

// ---------------------------------------------------------------------------
// Generation

GenResult generate_corpus_with_tally(const DomainProfile& profile, const Schema& schema,
                                     const GenConfig& cfg) {
    cfg.check();
    profile.check(schema);

    // Parse every pattern once up front.
    std::map<std::string, std::vector<Tpl>> parsed;
    for (const auto& [category, patterns] : profile.templates)
        for (const auto& pattern : patterns)
            parsed[category].push_back(parse_template(pattern, schema, category));

    auto categories_all = schema.trigger_list();

    GenResult result;
    result.corpus.schema = schema;
    for (int di = 0; di < cfg.n_documents; ++di) {
        // Per-document substream: generation is order-independent.
        Rng rng(Rng::mix(cfg.seed, static_cast<uint64_t>(di)));
        FormDrawer drawer(profile, rng);

        int max_triggers = std::min(cfg.triggers_max, static_cast<int>(categories_all.size()));
        int min_triggers = std::min(cfg.triggers_min, max_triggers);
        int n_triggers = rng.range(min_triggers, max_triggers);
        std::vector<std::string> categories = categories_all;
        rng.shuffle(categories);
        categories.resize(static_cast<size_t>(n_triggers));

        std::vector<Sentence> sentences;
        for (const auto& category : categories) {
            const auto& tpls = parsed.at(category);
            const Tpl& tpl = tpls[rng.index(tpls.size())];
            sentences.push_back(realize_sentence(category, tpl, profile, cfg, drawer, rng));
        }
        if (sentences.size() > 1 && rng.bernoulli(profile.style.shuffle_prob))
            rng.shuffle(sentences);

        if (!profile.fillers.empty()) {
            std::vector<Sentence> with_fillers;
            for (const auto& s : sentences) {
                with_fillers.push_back(s);
                if (rng.bernoulli(profile.style.filler_prob)) {
                    Sentence filler;
                    filler.pieces.push_back({rng.pick(profile.fillers), "", false});
                    if (rng.bernoulli(profile.style.period_prob))
                        filler.pieces.push_back({".", "", false});
                    with_fillers.push_back(filler);
                }
            }
            sentences.swap(with_fillers);
        }

        char idbuf[32];
        std::snprintf(idbuf, sizeof(idbuf), "-%04d", di);
        result.corpus.documents.push_back(assemble_document(
            sentences, schema, profile, profile.name + idbuf, rng, result.tally));
    }
    return result;
}

Corpus generate_corpus(const DomainProfile& profile, const Schema& schema,
                       const GenConfig& cfg) {
    return generate_corpus_with_tally(profile, schema, cfg).corpus;
}

// ---------------------------------------------------------------------------

Schema default_schema() {
    Schema s;
    s.name = "social-history";
    s.trigger_types = {"Tobacco", "Alcohol", "Employment"};
    s.attribute_types = {"Status", "Frequency", "Type"};
    s.relation_labels = {"Tobacco-Status", "Tobacco-Frequency", "Alcohol-Status",
                         "Alcohol-Frequency", "Employment-Type"};
    s.relation_map[{"Tobacco", "Status"}] = "Tobacco-Status";
    s.relation_map[{"Tobacco", "Frequency"}] = "Tobacco-Frequency";
    s.relation_map[{"Alcohol", "Status"}] = "Alcohol-Status";
    s.relation_map[{"Alcohol", "Frequency"}] = "Alcohol-Frequency";
    s.relation_map[{"Employment", "Type"}] = "Employment-Type";
    return s;
}

}  // namespace ptie
