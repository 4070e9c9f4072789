#include "ptie/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ptie/common.hpp"
#include "ptie/kv_format.hpp"
#include "ptie/utf8.hpp"

namespace fs = std::filesystem;

namespace ptie {

// ---------------------------------------------------------------------------
// Schema

std::optional<std::string> Schema::map_relation(const std::string& trigger_type,
                                                const std::string& attribute_type) const {
    auto it = relation_map.find({trigger_type, attribute_type});
    if (it == relation_map.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> Schema::attributes_for(const std::string& trigger_type) const {
    std::vector<std::string> out;
    for (const auto& [pair, label] : relation_map) {
        (void)label;
        if (pair.first == trigger_type) out.push_back(pair.second);
    }
    return out;
}

std::vector<std::string> Schema::trigger_list() const {
    return {trigger_types.begin(), trigger_types.end()};
}

std::vector<std::string> Schema::attribute_list() const {
    return {attribute_types.begin(), attribute_types.end()};
}

std::vector<std::string> Schema::all_types() const {
    auto out = trigger_list();
    auto attrs = attribute_list();
    out.insert(out.end(), attrs.begin(), attrs.end());
    return out;
}

void Schema::check() const {
    for (const auto& t : trigger_types)
        if (attribute_types.count(t))
            throw ConfigError("schema '" + name + "': type '" + t +
                              "' is both trigger and attribute");
    for (const auto& [pair, label] : relation_map) {
        if (!trigger_types.count(pair.first))
            throw ConfigError("schema '" + name + "': relation pair names unknown trigger '" +
                              pair.first + "'");
        if (!attribute_types.count(pair.second))
            throw ConfigError("schema '" + name + "': relation pair names unknown attribute '" +
                              pair.second + "'");
        if (!relation_labels.count(label))
            throw ConfigError("schema '" + name + "': mapped label '" + label +
                              "' not in relation label set");
    }
}

Schema Schema::from_kv(const KvFile& kv) {
    Schema s;
    s.name = kv.get("name", "schema");
    for (const auto& r : kv.records()) {
        if (r.key == "trigger") {
            s.trigger_types.insert(r.value);
        } else if (r.key == "attribute") {
            s.attribute_types.insert(r.value);
        } else if (r.key == "label") {
            s.relation_labels.insert(r.value);
        } else if (r.key == "relation") {
            auto f = split_fields(r.value);
            if (f.size() != 3)
                throw IngestError("schema relation record needs '<trigger> <attribute> <label>', got: " +
                                  r.value);
            s.relation_map[{f[0], f[1]}] = f[2];
            s.relation_labels.insert(f[2]);
        } else if (r.key != "name") {
            throw IngestError("unknown schema record key: " + r.key);
        }
    }
    s.check();
    return s;
}

KvFile Schema::to_kv() const {
    KvFile kv;
    kv.add("name", name);
    for (const auto& t : trigger_types) kv.add("trigger", t);
    for (const auto& t : attribute_types) kv.add("attribute", t);
    for (const auto& l : relation_labels) kv.add("label", l);
    for (const auto& [pair, label] : relation_map)
        kv.add("relation", pair.first + " " + pair.second + " " + label);
    return kv;
}

Schema Schema::load(const std::string& path) { return from_kv(KvFile::load(path)); }

void Schema::save(const std::string& path) const { to_kv().save(path); }

// ---------------------------------------------------------------------------
// Document

const Concept* Document::find_concept(const std::string& id) const {
    for (const auto& c : concepts)
        if (c.id == id) return &c;
    return nullptr;
}

std::vector<Triplet> Document::triplets() const {
    std::vector<Triplet> out;
    for (const auto& r : relations) {
        const Concept* e1 = find_concept(r.trigger_id);
        const Concept* e2 = find_concept(r.attribute_id);
        if (!e1 || !e2) continue;
        Triplet t;
        t.e1_start = e1->start;
        t.e1_end = e1->end;
        t.e1_type = e1->ctype;
        t.label = r.label;
        t.e2_start = e2->start;
        t.e2_end = e2->end;
        t.e2_type = e2->ctype;
        out.push_back(t);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Validation

std::vector<Violation> validate_document(const Document& doc, const Schema& schema) {
    std::vector<Violation> v;
    TextIndex idx(doc.text);
    const int64_t n = idx.scalar_length();

    std::set<std::string> seen_ids;
    for (const auto& c : doc.concepts) {
        if (!seen_ids.insert(c.id).second)
            v.push_back({doc.doc_id, "duplicate-concept-id", c.id});
        if (!schema.has_type(c.ctype))
            v.push_back({doc.doc_id, "unknown-concept-type", c.ctype});
        if (c.start < 0 || c.start >= c.end || c.end > n) {
            v.push_back({doc.doc_id, "span-out-of-range",
                         c.id + " [" + std::to_string(c.start) + "," + std::to_string(c.end) + ")"});
            continue;
        }
        std::string sub = idx.slice(c.start, c.end);
        if (sub != c.text)
            v.push_back({doc.doc_id, "text-mismatch",
                         c.id + ": concept '" + c.text + "' vs document '" + sub + "'"});
    }
    for (const auto& r : doc.relations) {
        if (!doc.find_concept(r.trigger_id))
            v.push_back({doc.doc_id, "missing-concept-ref", r.trigger_id});
        if (!doc.find_concept(r.attribute_id))
            v.push_back({doc.doc_id, "missing-concept-ref", r.attribute_id});
        if (!schema.relation_labels.count(r.label))
            v.push_back({doc.doc_id, "unknown-relation-label", r.label});
    }
    return v;
}

std::vector<Violation> validate_corpus(const Corpus& corpus) {
    std::vector<Violation> v;
    for (const auto& d : corpus.documents) {
        auto dv = validate_document(d, corpus.schema);
        v.insert(v.end(), dv.begin(), dv.end());
    }
    return v;
}

// ---------------------------------------------------------------------------
// Stats

CorpusStats corpus_stats(const Corpus& corpus) {
    CorpusStats s;
    s.n_documents = static_cast<int64_t>(corpus.documents.size());
    for (const auto& d : corpus.documents) {
        s.n_concepts += static_cast<int64_t>(d.concepts.size());
        s.n_relations += static_cast<int64_t>(d.relations.size());
        for (const auto& c : d.concepts) s.concepts_per_type[c.ctype]++;
        for (const auto& r : d.relations) s.relations_per_label[r.label]++;
    }
    return s;
}

std::string render_stats(const CorpusStats& s, const std::string& title) {
    std::ostringstream os;
    os << title << "\n";
    os << "  notes      " << s.n_documents << "\n";
    os << "  concepts   " << s.n_concepts << "\n";
    os << "  relations  " << s.n_relations << "\n";
    for (const auto& [t, n] : s.concepts_per_type)
        os << "    concept  " << t << "  " << n << "\n";
    for (const auto& [l, n] : s.relations_per_label)
        os << "    relation " << l << "  " << n << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// BRAT

namespace {

// The .ann text field cannot hold the record separators; the standoff
// convention is to flatten them to spaces.
std::string ann_text(const std::string& s) {
    std::string out = s;
    for (char& c : out)
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (true) {
        size_t tab = line.find('\t', pos);
        if (tab == std::string::npos) {
            out.push_back(line.substr(pos));
            break;
        }
        out.push_back(line.substr(pos, tab - pos));
        pos = tab + 1;
    }
    return out;
}

int64_t parse_offset(const std::string& s, const std::string& line_id) {
    try {
        size_t used = 0;
        int64_t v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IngestError(line_id + ": bad offset '" + s + "'");
    }
}

}  // namespace

Document parse_brat(const std::string& txt_content, const std::string& ann_content,
                    const Schema& schema, const std::string& doc_id) {
    Document doc;
    doc.doc_id = doc_id;
    doc.text = txt_content;
    TextIndex idx(doc.text);
    const int64_t n = idx.scalar_length();

    struct ELine {
        std::string id;
        std::vector<std::string> parts;  // "Type:Tk" fields
    };
    std::vector<ELine> elines;
    struct RLine {
        std::string id, label, arg1, arg2;
    };
    std::vector<RLine> rlines;
    struct ALine {
        std::string id, name, target, value;
    };
    std::vector<ALine> alines;

    std::istringstream is(ann_content);
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_tabs(line);
        const std::string& id = fields[0];
        if (id.empty()) throw IngestError("empty annotation id in line: " + line);
        switch (id[0]) {
            case 'T': {
                if (fields.size() < 3)
                    throw IngestError(id + ": T record needs 3 tab-separated fields");
                auto head = split_fields(fields[1]);
                if (head.size() != 3) {
                    if (fields[1].find(';') != std::string::npos)
                        throw IngestError(id + ": discontinuous spans are not supported");
                    throw IngestError(id + ": T record header needs '<Type> <start> <end>'");
                }
                Concept c;
                c.id = id;
                c.ctype = head[0];
                c.start = parse_offset(head[1], id);
                c.end = parse_offset(head[2], id);
                if (!schema.has_type(c.ctype))
                    throw IngestError(id + ": unknown concept type '" + c.ctype + "'");
                if (c.start < 0 || c.start >= c.end || c.end > n)
                    throw IngestError(id + ": offsets [" + std::to_string(c.start) + "," +
                                      std::to_string(c.end) + ") out of range for text of length " +
                                      std::to_string(n));
                c.text = idx.slice(c.start, c.end);
                if (ann_text(c.text) != fields[2])
                    throw IngestError(id + ": text mismatch, annotation '" + fields[2] +
                                      "' vs document '" + ann_text(c.text) + "'");
                doc.concepts.push_back(std::move(c));
                break;
            }
            case 'R': {
                if (fields.size() < 2) throw IngestError(id + ": R record needs 2 fields");
                auto parts = split_fields(fields[1]);
                if (parts.size() != 3 || parts[1].rfind("Arg1:", 0) != 0 ||
                    parts[2].rfind("Arg2:", 0) != 0)
                    throw IngestError(id + ": R record needs '<Label> Arg1:T<i> Arg2:T<j>'");
                rlines.push_back({id, parts[0], parts[1].substr(5), parts[2].substr(5)});
                break;
            }
            case 'E': {
                if (fields.size() < 2) throw IngestError(id + ": E record needs 2 fields");
                elines.push_back({id, split_fields(fields[1])});
                break;
            }
            case 'A':
            case 'M': {
                if (fields.size() < 2) throw IngestError(id + ": A record needs 2 fields");
                auto parts = split_fields(fields[1]);
                if (parts.size() < 2)
                    throw IngestError(id + ": A record needs '<Name> T<i> [<Value>]'");
                std::string value = parts.size() > 2 ? parts[2] : "true";
                for (size_t i = 3; i < parts.size(); ++i) value += " " + parts[i];
                alines.push_back({id, parts[0], parts[1], value});
                break;
            }
            default:
                throw IngestError(id + ": unsupported annotation record type '" +
                                  std::string(1, id[0]) + "'");
        }
    }

    auto find = [&](const std::string& cid, const std::string& from) -> const Concept& {
        const Concept* c = doc.find_concept(cid);
        if (!c) throw IngestError(from + ": reference to unknown annotation " + cid);
        return *c;
    };

    for (const auto& r : rlines) {
        const Concept& a1 = find(r.arg1, r.id);
        const Concept& a2 = find(r.arg2, r.id);
        (void)a1;
        (void)a2;
        if (!schema.relation_labels.count(r.label))
            throw IngestError(r.id + ": unknown relation label '" + r.label + "'");
        doc.relations.push_back({r.arg1, r.arg2, r.label});
    }

    // Event lines are flattened: the trigger reference stays a plain concept
    // and each argument becomes a relation labeled via the schema map.
    for (const auto& e : elines) {
        if (e.parts.empty()) throw IngestError(e.id + ": empty E record");
        auto colon = e.parts[0].find(':');
        if (colon == std::string::npos)
            throw IngestError(e.id + ": E trigger needs '<Type>:T<i>'");
        std::string trig_id = e.parts[0].substr(colon + 1);
        const Concept& trig = find(trig_id, e.id);
        for (size_t i = 1; i < e.parts.size(); ++i) {
            auto c2 = e.parts[i].find(':');
            if (c2 == std::string::npos)
                throw IngestError(e.id + ": E argument needs '<Role>:T<j>'");
            std::string arg_id = e.parts[i].substr(c2 + 1);
            const Concept& arg = find(arg_id, e.id);
            auto label = schema.map_relation(trig.ctype, arg.ctype);
            if (!label)
                throw IngestError(e.id + ": no relation label declared for pair (" + trig.ctype +
                                  ", " + arg.ctype + ")");
            doc.relations.push_back({trig_id, arg_id, *label});
        }
    }

    for (const auto& a : alines) {
        Concept* target = nullptr;
        for (auto& c : doc.concepts)
            if (c.id == a.target) target = &c;
        if (!target) throw IngestError(a.id + ": reference to unknown annotation " + a.target);
        target->metadata[a.name] = a.value;
    }

    return doc;
}

BratFiles serialize_brat(const Document& doc) {
    BratFiles out;
    out.txt = doc.text;
    std::ostringstream ann;
    std::map<std::string, std::string> renumber;
    int tn = 0;
    for (const auto& c : doc.concepts) {
        std::string nid = "T" + std::to_string(++tn);
        renumber[c.id] = nid;
        ann << nid << '\t' << c.ctype << ' ' << c.start << ' ' << c.end << '\t'
            << ann_text(c.text) << '\n';
    }
    int rn = 0;
    for (const auto& r : doc.relations) {
        ann << 'R' << ++rn << '\t' << r.label << " Arg1:" << renumber.at(r.trigger_id)
            << " Arg2:" << renumber.at(r.attribute_id) << '\n';
    }
    int an = 0;
    for (const auto& c : doc.concepts) {
        for (const auto& [name, value] : c.metadata) {
            ann << 'A' << ++an << '\t' << name << ' ' << renumber.at(c.id);
            if (value != "true") ann << ' ' << value;
            ann << '\n';
        }
    }
    out.ann = ann.str();
    return out;
}

// ---------------------------------------------------------------------------
// JSONL

using json = nlohmann::ordered_json;

std::string document_to_json(const Document& doc) {
    json j;
    j["doc_id"] = doc.doc_id;
    j["text"] = doc.text;
    j["domain_tag"] = doc.domain_tag;
    j["concepts"] = json::array();
    for (const auto& c : doc.concepts) {
        json jc;
        jc["id"] = c.id;
        jc["ctype"] = c.ctype;
        jc["start"] = c.start;
        jc["end"] = c.end;
        jc["text"] = c.text;
        if (!c.metadata.empty()) jc["metadata"] = c.metadata;
        j["concepts"].push_back(jc);
    }
    j["relations"] = json::array();
    for (const auto& r : doc.relations) {
        json jr;
        jr["trigger_id"] = r.trigger_id;
        jr["attribute_id"] = r.attribute_id;
        jr["label"] = r.label;
        j["relations"].push_back(jr);
    }
    return j.dump();
}

Document document_from_json(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw IngestError(std::string("bad JSONL line: ") + e.what());
    }
    Document d;
    d.doc_id = j.at("doc_id").get<std::string>();
    d.text = j.at("text").get<std::string>();
    d.domain_tag = j.value("domain_tag", "");
    if (j.contains("concepts")) {
        for (const auto& jc : j["concepts"]) {
            Concept c;
            c.id = jc.at("id").get<std::string>();
            c.ctype = jc.at("ctype").get<std::string>();
            c.start = jc.at("start").get<int64_t>();
            c.end = jc.at("end").get<int64_t>();
            c.text = jc.at("text").get<std::string>();
            if (jc.contains("metadata"))
                c.metadata = jc["metadata"].get<std::map<std::string, std::string>>();
            d.concepts.push_back(std::move(c));
        }
    }
    if (j.contains("relations")) {
        for (const auto& jr : j["relations"]) {
            Relation r;
            r.trigger_id = jr.at("trigger_id").get<std::string>();
            r.attribute_id = jr.at("attribute_id").get<std::string>();
            r.label = jr.at("label").get<std::string>();
            d.relations.push_back(std::move(r));
        }
    }
    return d;
}

void save_jsonl(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot write file: " + path);
    for (const auto& d : corpus.documents) out << document_to_json(d) << '\n';
}

Corpus load_jsonl(const std::string& path, const Schema& schema, const std::string& split_name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open file: " + path);
    Corpus c;
    c.schema = schema;
    c.split_name = split_name;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            c.documents.push_back(document_from_json(line));
        } catch (const IngestError& e) {
            throw IngestError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return c;
}

Corpus load_brat_dir(const std::string& dir, const Schema& schema, const std::string& split_name) {
    if (!fs::is_directory(dir)) throw IngestError("not a directory: " + dir);
    std::vector<fs::path> txts;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".txt") txts.push_back(entry.path());
    std::sort(txts.begin(), txts.end());

    Corpus c;
    c.schema = schema;
    c.split_name = split_name;
    for (const auto& txt : txts) {
        std::ifstream tin(txt, std::ios::binary);
        std::ostringstream tss;
        tss << tin.rdbuf();
        fs::path ann = txt;
        ann.replace_extension(".ann");
        std::string ann_content;
        if (fs::exists(ann)) {
            std::ifstream ain(ann, std::ios::binary);
            std::ostringstream ass;
            ass << ain.rdbuf();
            ann_content = ass.str();
        }
        c.documents.push_back(parse_brat(tss.str(), ann_content, schema, txt.stem().string()));
    }
    return c;
}

void save_brat_dir(const Corpus& corpus, const std::string& dir) {
    fs::create_directories(dir);
    for (const auto& d : corpus.documents) {
        BratFiles f = serialize_brat(d);
        std::ofstream(fs::path(dir) / (d.doc_id + ".txt"), std::ios::binary) << f.txt;
        std::ofstream(fs::path(dir) / (d.doc_id + ".ann"), std::ios::binary) << f.ann;
    }
}

}  // namespace ptie
