#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <set>

#include "ptie/common.hpp"
#include "ptie/corpus.hpp"
#include "ptie/kv_format.hpp"
#include "ptie/synthgen.hpp"
#include "ptie/utf8.hpp"

using namespace ptie;

namespace {

GenConfig small_cfg(uint64_t seed, int n) {
    GenConfig cfg;
    cfg.seed = seed;
    cfg.n_documents = n;
    return cfg;
}

bool profiles_identical(const DomainProfile& a, const DomainProfile& b) {
    return a.name == b.name && a.lexicons == b.lexicons && a.templates == b.templates &&
           a.fillers == b.fillers && a.style.shuffle_prob == b.style.shuffle_prob &&
           a.style.period_prob == b.style.period_prob &&
           a.style.filler_prob == b.style.filler_prob &&
           a.style.newline_prob == b.style.newline_prob;
}

}  // namespace

TEST_CASE("default schema is internally consistent") {
    Schema s = default_schema();
    s.check();
    CHECK(s.trigger_types.size() == 3);
    CHECK(s.attribute_types.size() == 3);
    CHECK(s.relation_labels.size() == 5);
    CHECK(s.map_relation("Employment", "Type") == std::string("Employment-Type"));
    CHECK(!s.map_relation("Employment", "Status"));
}

TEST_CASE("shift 0 produces byte-identical profiles up to the name") {
    Schema s = default_schema();
    auto [a, b] = make_domain_pair(s, 0.0, 42);
    DomainProfile b_renamed = b;
    b_renamed.name = a.name;
    CHECK(profiles_identical(a, b_renamed));
    a.check(s);
    b.check(s);
}

TEST_CASE("shift 1 empties the lexicon overlap for every type") {
    Schema s = default_schema();
    auto [a, b] = make_domain_pair(s, 1.0, 42);
    for (const auto& type : s.all_types())
        CHECK(lexicon_overlap(a, b, type) == doctest::Approx(0.0));
    b.check(s);
}

TEST_CASE("fixed seed reproduces the same pair") {
    Schema s = default_schema();
    auto [a1, b1] = make_domain_pair(s, 0.5, 7);
    auto [a2, b2] = make_domain_pair(s, 0.5, 7);
    CHECK(profiles_identical(a1, a2));
    CHECK(profiles_identical(b1, b2));
}

TEST_CASE("lexicon overlap is non-increasing in shift strength") {
    Schema s = default_schema();
    std::vector<double> strengths = {0.0, 0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9, 1.0};
    std::map<std::string, double> prev;
    for (const auto& type : s.all_types()) prev[type] = 1.1;
    for (double strength : strengths) {
        auto [a, b] = make_domain_pair(s, strength, 99);
        for (const auto& type : s.all_types()) {
            double ov = lexicon_overlap(a, b, type);
            CHECK(ov <= prev[type] + 1e-12);
            prev[type] = ov;
        }
    }
}

TEST_CASE("shift strength outside [0,1] is rejected") {
    Schema s = default_schema();
    CHECK_THROWS_AS(make_domain_pair(s, -0.1, 1), ConfigError);
    CHECK_THROWS_AS(make_domain_pair(s, 1.1, 1), ConfigError);
}

TEST_CASE("generation is deterministic and respects n_documents") {
    Schema s = default_schema();
    auto [a, b] = make_domain_pair(s, 0.5, 5);
    Corpus c1 = generate_corpus(a, s, small_cfg(11, 10));
    Corpus c2 = generate_corpus(a, s, small_cfg(11, 10));
    REQUIRE(c1.documents.size() == 10);
    REQUIRE(c2.documents.size() == 10);
    for (size_t i = 0; i < 10; ++i) {
        CHECK(c1.documents[i].text == c2.documents[i].text);
        CHECK(c1.documents[i].doc_id == c2.documents[i].doc_id);
        CHECK(c1.documents[i].concepts.size() == c2.documents[i].concepts.size());
    }
    // Every document carries at least one trigger concept.
    for (const auto& d : c1.documents) {
        int triggers = 0;
        for (const auto& c : d.concepts) triggers += s.is_trigger(c.ctype);
        CHECK(triggers >= 1);
        CHECK(d.domain_tag == a.name);
    }
}

TEST_CASE("generated gold is exact: validation, offsets, labels") {
    Schema s = default_schema();
    auto [a, b] = make_domain_pair(s, 0.7, 21);
    for (const DomainProfile& profile : {a, b}) {
        Corpus c = generate_corpus(profile, s, small_cfg(13, 50));
        CHECK(validate_corpus(c).empty());
        for (const auto& d : c.documents) {
            TextIndex ix(d.text);
            for (const auto& span : d.concepts)
                CHECK(ix.slice(span.start, span.end) == span.text);
            for (const auto& rel : d.relations) {
                const Concept* trig = d.find_concept(rel.trigger_id);
                const Concept* attr = d.find_concept(rel.attribute_id);
                REQUIRE(trig != nullptr);
                REQUIRE(attr != nullptr);
                CHECK(s.map_relation(trig->ctype, attr->ctype) == rel.label);
            }
        }
    }
}

TEST_CASE("bundled pools are substring-clean where forms can co-occur") {
    // Two forms that can land in the same document must not be substrings of
    // one another (and never equal), or leftmost-match span grounding would
    // stop being exact. Same-trigger-type pairs are exempt: each trigger
    // category is drawn at most once per document.
    Schema s = default_schema();
    auto [base, alt] = make_domain_pair(s, 1.0, 1);
    std::vector<std::pair<std::string, std::string>> forms;  // (type, form)
    for (const DomainProfile* p : {&base, &alt})
        for (const auto& [type, pool] : p->lexicons)
            for (const auto& f : pool) forms.emplace_back(type, f);
    for (const auto& [t1, f1] : forms)
        for (const auto& [t2, f2] : forms) {
            if (t1 == t2 && f1 == f2) continue;
            bool cooccur = t1 != t2 || !s.is_trigger(t1);
            if (cooccur && f2.find(f1) != std::string::npos) {
                CAPTURE(t1);
                CAPTURE(f1);
                CAPTURE(t2);
                CAPTURE(f2);
                FAIL_CHECK("co-occurring substring pair");
            }
        }
}

TEST_CASE("each annotated surface form occurs exactly once per document") {
    // This uniqueness is what makes leftmost-match span grounding exact, so
    // it is load-bearing for the text-to-text pipeline, not a style choice.
    Schema s = default_schema();
    for (double strength : {0.0, 0.5, 1.0}) {
        auto [a, b] = make_domain_pair(s, strength, 33);
        for (const DomainProfile& profile : {a, b}) {
            Corpus c = generate_corpus(profile, s, small_cfg(17, 150));
            for (const auto& d : c.documents) {
                for (const auto& span : d.concepts) {
                    size_t first = d.text.find(span.text);
                    REQUIRE(first != std::string::npos);
                    CHECK(d.text.find(span.text, first + 1) == std::string::npos);
                }
            }
        }
    }
}

TEST_CASE("generator tally equals independent corpus statistics") {
    Schema s = default_schema();
    auto [a, b] = make_domain_pair(s, 0.5, 3);
    GenResult r = generate_corpus_with_tally(b, s, small_cfg(19, 40));
    CorpusStats st = corpus_stats(r.corpus);
    CHECK(st.n_documents == r.tally.n_documents);
    CHECK(st.n_concepts == r.tally.n_concepts);
    CHECK(st.n_relations == r.tally.n_relations);
    CHECK(st.concepts_per_type == r.tally.concepts_per_type);
    CHECK(st.relations_per_label == r.tally.relations_per_label);
}

TEST_CASE("per-document substreams: a corpus prefix is stable across sizes") {
    Schema s = default_schema();
    auto [a, b] = make_domain_pair(s, 0.0, 2);
    Corpus big = generate_corpus(a, s, small_cfg(23, 20));
    Corpus small = generate_corpus(a, s, small_cfg(23, 5));
    for (size_t i = 0; i < 5; ++i) CHECK(big.documents[i].text == small.documents[i].text);
}

TEST_CASE("attribute ranges are honored") {
    Schema s = default_schema();
    auto [a, b] = make_domain_pair(s, 0.0, 2);
    GenConfig cfg = small_cfg(29, 40);
    cfg.attributes_min = 0;
    cfg.attributes_max = 0;
    Corpus bare = generate_corpus(a, s, cfg);
    for (const auto& d : bare.documents) {
        CHECK(d.relations.empty());
        for (const auto& c : d.concepts) CHECK(s.is_trigger(c.ctype));
    }
    cfg.attributes_min = 2;
    cfg.attributes_max = 2;
    Corpus full = generate_corpus(a, s, cfg);
    // Tobacco/Alcohol templates carry two attribute slots, Employment one.
    for (const auto& d : full.documents)
        for (const auto& c : d.concepts)
            if (c.ctype == "Tobacco" || c.ctype == "Alcohol") {
                int attached = 0;
                for (const auto& rel : d.relations)
                    attached += d.find_concept(rel.trigger_id)->id == c.id;
                CHECK(attached == 2);
            }
}

TEST_CASE("union profile covers both pools") {
    Schema s = default_schema();
    auto [a, b] = make_domain_pair(s, 1.0, 8);
    DomainProfile u = make_union_profile(a, b);
    u.check(s);
    for (const auto& type : s.all_types()) {
        CHECK(lexicon_overlap(u, a, type) == doctest::Approx(0.5));
        CHECK(lexicon_overlap(u, b, type) == doctest::Approx(0.5));
        CHECK(u.lexicons.at(type).size() == 24);
    }
}

TEST_CASE("profile key-value round-trip") {
    Schema s = default_schema();
    auto [a, b] = make_domain_pair(s, 0.6, 12);
    DomainProfile back = DomainProfile::from_kv(b.to_kv());
    CHECK(profiles_identical(b, back));
    back.check(s);
}

TEST_CASE("profile check rejects structural problems") {
    Schema s = default_schema();
    auto [a, b] = make_domain_pair(s, 0.0, 1);

    DomainProfile empty_pool = a;
    empty_pool.lexicons["Status"].clear();
    CHECK_THROWS_AS(empty_pool.check(s), ConfigError);

    DomainProfile unknown_slot = a;
    unknown_slot.templates["Tobacco"].push_back("Patient mentions {Mystery}");
    CHECK_THROWS_AS(unknown_slot.check(s), ConfigError);

    DomainProfile unmapped_attr = a;
    unmapped_attr.templates["Employment"].push_back(
        "Occupation is {Employment}[ with {Status}]");
    CHECK_THROWS_AS(unmapped_attr.check(s), ConfigError);

    DomainProfile two_triggers = a;
    two_triggers.templates["Tobacco"].push_back("Both {Tobacco} and {Tobacco}");
    CHECK_THROWS_AS(two_triggers.check(s), ConfigError);

    DomainProfile bad_style = a;
    bad_style.style.filler_prob = 1.5;
    CHECK_THROWS_AS(bad_style.check(s), ConfigError);
}

TEST_CASE("gen config validation") {
    GenConfig cfg;
    cfg.n_documents = 0;
    CHECK_THROWS_AS(cfg.check(), ConfigError);
    cfg = GenConfig{};
    cfg.triggers_min = 0;
    CHECK_THROWS_AS(cfg.check(), ConfigError);
    cfg = GenConfig{};
    cfg.attributes_min = 3;
    cfg.attributes_max = 2;
    CHECK_THROWS_AS(cfg.check(), ConfigError);
}

TEST_CASE("procedural pools back arbitrary schemas") {
    Schema s;
    s.name = "custom";
    s.trigger_types = {"Finding"};
    s.attribute_types = {"Severity"};
    s.relation_labels = {"Finding-Severity"};
    s.relation_map[{"Finding", "Severity"}] = "Finding-Severity";
    auto [a, b] = make_domain_pair(s, 0.5, 4);
    a.check(s);
    b.check(s);
    Corpus c = generate_corpus(a, s, small_cfg(41, 10));
    CHECK(validate_corpus(c).empty());
    CHECK(c.documents.size() == 10);
}
