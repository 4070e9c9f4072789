#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace ptie {

// Extraction ontology: trigger concept types (E1), attribute concept types
// (E2), relation labels (R) and the (trigger type, attribute type) -> label
// mapping that determines which pairs can be related and how.
struct Schema {
    std::string name;
    std::set<std::string> trigger_types;
    std::set<std::string> attribute_types;
    std::set<std::string> relation_labels;
    std::map<std::pair<std::string, std::string>, std::string> relation_map;

    bool is_trigger(const std::string& t) const { return trigger_types.count(t) > 0; }
    bool is_attribute(const std::string& t) const { return attribute_types.count(t) > 0; }
    bool has_type(const std::string& t) const { return is_trigger(t) || is_attribute(t); }

    // Label for (trigger type, attribute type), or nullopt if the pair is
    // not declared.
    std::optional<std::string> map_relation(const std::string& trigger_type,
                                            const std::string& attribute_type) const;

    // Attribute types that can relate to the given trigger type.
    std::vector<std::string> attributes_for(const std::string& trigger_type) const;

    std::vector<std::string> trigger_list() const;    // sorted
    std::vector<std::string> attribute_list() const;  // sorted
    std::vector<std::string> all_types() const;       // triggers then attributes, sorted

    // Throws ConfigError if the type sets overlap or a mapped label is not
    // declared in relation_labels.
    void check() const;

    static Schema from_kv(const class KvFile& kv);
    class KvFile to_kv() const;
    static Schema load(const std::string& path);
    void save(const std::string& path) const;
};

// Typed character span. Offsets count Unicode scalar values of the document
// text (newline is one character), so .ann offsets are portable byte-for-byte
// across tools. For ASCII text scalar and byte offsets coincide.
struct Concept {
    std::string id;
    std::string ctype;
    int64_t start = 0;  // inclusive
    int64_t end = 0;    // exclusive
    std::string text;
    std::map<std::string, std::string> metadata;  // BRAT A-lines; never scored

    bool same_span(const Concept& o) const {
        return start == o.start && end == o.end && ctype == o.ctype;
    }
};

struct Relation {
    std::string trigger_id;
    std::string attribute_id;
    std::string label;
};

// The unit of end-to-end scoring. Equality is exact match on spans, types
// and label.
struct Triplet {
    int64_t e1_start = 0, e1_end = 0;
    std::string e1_type;
    std::string label;
    int64_t e2_start = 0, e2_end = 0;
    std::string e2_type;

    auto key() const {
        return std::tie(e1_start, e1_end, e1_type, label, e2_start, e2_end, e2_type);
    }
    bool operator==(const Triplet& o) const { return key() == o.key(); }
    bool operator<(const Triplet& o) const { return key() < o.key(); }
};

struct Document {
    std::string doc_id;
    std::string text;
    std::vector<Concept> concepts;
    std::vector<Relation> relations;
    std::string domain_tag;

    const Concept* find_concept(const std::string& id) const;
    std::vector<Triplet> triplets() const;  // resolved relations; skips dangling ids
};

struct Corpus {
    std::vector<Document> documents;
    Schema schema;
    std::string split_name;
};

// One invariant violation; violations are data, not errors.
struct Violation {
    std::string doc_id;
    std::string code;
    std::string detail;
};

std::vector<Violation> validate_document(const Document& doc, const Schema& schema);
std::vector<Violation> validate_corpus(const Corpus& corpus);

struct CorpusStats {
    int64_t n_documents = 0;
    int64_t n_concepts = 0;
    int64_t n_relations = 0;
    std::map<std::string, int64_t> concepts_per_type;
    std::map<std::string, int64_t> relations_per_label;
};

CorpusStats corpus_stats(const Corpus& corpus);
std::string render_stats(const CorpusStats& s, const std::string& title);

// ---------------------------------------------------------------------------
// BRAT standoff (.txt + .ann). Supported records:
//   T<k>\t<Type> <start> <end>\t<text>
//   R<k>\t<Label> Arg1:T<i> Arg2:T<j>
//   E<k>\t<Type>:T<i> <Role>:T<j> ...   (flattened: trigger concept + one
//                                        relation per argument, labeled via
//                                        schema.relation_map)
//   A<k>\t<Name> T<i> [<Value>]         (attached as concept metadata)
// '#' comment lines and blank lines are skipped. Newlines inside an
// annotated span are written as spaces in the .ann text field (the usual
// standoff convention); the Concept keeps the true substring.

Document parse_brat(const std::string& txt_content, const std::string& ann_content,
                    const Schema& schema, const std::string& doc_id = "doc");

struct BratFiles {
    std::string txt;
    std::string ann;
};

// Ids are renumbered canonically (T1..., R1...) in concept/relation storage
// order, so serialization is deterministic.
BratFiles serialize_brat(const Document& doc);

// ---------------------------------------------------------------------------
// JSONL: one document per line with fields doc_id, text, domain_tag,
// concepts[{id, ctype, start, end, text}], relations[{trigger_id,
// attribute_id, label}]. The schema lives in a key-value sidecar file.

std::string document_to_json(const Document& doc);
Document document_from_json(const std::string& line);

void save_jsonl(const Corpus& corpus, const std::string& path);
Corpus load_jsonl(const std::string& path, const Schema& schema,
                  const std::string& split_name = "");

// Reads a directory of <stem>.txt/<stem>.ann pairs, sorted by stem.
// A missing .ann is treated as an unannotated document.
Corpus load_brat_dir(const std::string& dir, const Schema& schema,
                     const std::string& split_name = "");
void save_brat_dir(const Corpus& corpus, const std::string& dir);

}  // namespace ptie
