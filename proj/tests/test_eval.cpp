#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "ptie/common.hpp"
#include "ptie/eval.hpp"
#include "ptie/rng.hpp"
#include "support/random_docs.hpp"

using namespace ptie;

namespace {

Schema tiny_schema() {
    Schema s;
    s.name = "tiny";
    s.trigger_types = {"Tobacco", "Alcohol"};
    s.attribute_types = {"Status", "Frequency"};
    s.relation_labels = {"Tobacco-Status", "Tobacco-Frequency", "Alcohol-Status"};
    s.relation_map[{"Tobacco", "Status"}] = "Tobacco-Status";
    s.relation_map[{"Tobacco", "Frequency"}] = "Tobacco-Frequency";
    s.relation_map[{"Alcohol", "Status"}] = "Alcohol-Status";
    return s;
}

Concept make_concept(const std::string& id, const std::string& type, int64_t start, int64_t end) {
    Concept c;
    c.id = id;
    c.ctype = type;
    c.start = start;
    c.end = end;
    return c;
}

Document one_doc(const std::string& id, std::vector<Concept> concepts,
                 std::vector<Relation> relations = {}) {
    Document d;
    d.doc_id = id;
    d.text = std::string(200, 'x');
    d.concepts = std::move(concepts);
    d.relations = std::move(relations);
    return d;
}

Corpus corpus_of(std::vector<Document> docs) {
    Corpus c;
    c.schema = tiny_schema();
    c.documents = std::move(docs);
    return c;
}

// Brute-force scorer written independently of the library implementation:
// greedy one-to-one marking over plain loops, no multisets.
struct OracleCounts {
    int64_t tp = 0, fp = 0, fn = 0;
};

OracleCounts oracle_concepts(const Corpus& gold, const Corpus& pred) {
    OracleCounts out;
    for (const auto& gd : gold.documents) {
        const Document* pd = nullptr;
        for (const auto& d : pred.documents)
            if (d.doc_id == gd.doc_id) pd = &d;
        REQUIRE(pd != nullptr);
        std::vector<bool> used(gd.concepts.size(), false);
        for (const auto& pc : pd->concepts) {
            bool hit = false;
            for (size_t i = 0; i < gd.concepts.size(); ++i) {
                if (used[i]) continue;
                const Concept& gc = gd.concepts[i];
                if (gc.start == pc.start && gc.end == pc.end && gc.ctype == pc.ctype) {
                    used[i] = true;
                    hit = true;
                    break;
                }
            }
            if (hit)
                out.tp += 1;
            else
                out.fp += 1;
        }
        for (bool u : used)
            if (!u) out.fn += 1;
    }
    return out;
}

OracleCounts oracle_relations(const Corpus& gold, const Corpus& pred) {
    OracleCounts out;
    for (const auto& gd : gold.documents) {
        const Document* pd = nullptr;
        for (const auto& d : pred.documents)
            if (d.doc_id == gd.doc_id) pd = &d;
        REQUIRE(pd != nullptr);
        auto gt = gd.triplets();
        auto pt = pd->triplets();
        std::vector<bool> used(gt.size(), false);
        for (const auto& p : pt) {
            bool hit = false;
            for (size_t i = 0; i < gt.size(); ++i) {
                if (used[i]) continue;
                const Triplet& g = gt[i];
                if (g.e1_start == p.e1_start && g.e1_end == p.e1_end &&
                    g.e1_type == p.e1_type && g.label == p.label &&
                    g.e2_start == p.e2_start && g.e2_end == p.e2_end &&
                    g.e2_type == p.e2_type) {
                    used[i] = true;
                    hit = true;
                    break;
                }
            }
            if (hit)
                out.tp += 1;
            else
                out.fp += 1;
        }
        for (bool u : used)
            if (!u) out.fn += 1;
    }
    return out;
}

// A prediction corpus correlated with gold: some concepts kept, some
// shifted, retyped, duplicated or dropped, plus fresh noise.
Corpus mutate(const Corpus& gold, Rng& rng) {
    Corpus pred;
    pred.schema = gold.schema;
    auto types = gold.schema.all_types();
    for (const auto& gd : gold.documents) {
        Document d;
        d.doc_id = gd.doc_id;
        d.text = gd.text;
        int next_id = 1;
        for (const auto& gc : gd.concepts) {
            if (rng.bernoulli(0.25)) continue;  // miss
            Concept c = gc;
            c.id = "T" + std::to_string(next_id++);
            if (rng.bernoulli(0.2)) c.start += rng.range(-2, 2);
            if (rng.bernoulli(0.15)) c.ctype = types[rng.index(types.size())];
            d.concepts.push_back(c);
            if (rng.bernoulli(0.1)) {  // duplicate prediction
                Concept dup = c;
                dup.id = "T" + std::to_string(next_id++);
                d.concepts.push_back(dup);
            }
        }
        int extra = rng.range(0, 2);
        for (int i = 0; i < extra; ++i) {
            Concept c = make_concept("T" + std::to_string(next_id++),
                                     types[rng.index(types.size())], rng.range(0, 40),
                                     rng.range(41, 60));
            d.concepts.push_back(c);
        }
        std::vector<std::string> labels(gold.schema.relation_labels.begin(),
                                        gold.schema.relation_labels.end());
        if (!d.concepts.empty()) {
            int n_rel = rng.range(0, 3);
            for (int i = 0; i < n_rel; ++i)
                d.relations.push_back({d.concepts[rng.index(d.concepts.size())].id,
                                       d.concepts[rng.index(d.concepts.size())].id,
                                       labels[rng.index(labels.size())]});
        }
        pred.documents.push_back(std::move(d));
    }
    return pred;
}

Corpus random_gold(Rng& rng, int n_docs) {
    Corpus c;
    c.schema = tiny_schema();
    for (int i = 0; i < n_docs; ++i)
        c.documents.push_back(
            testsupport::random_document(rng, c.schema, "d" + std::to_string(i)));
    return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Concept scoring basics

TEST_CASE("identical corpora score perfect marks") {
    Corpus gold = corpus_of({one_doc("a", {make_concept("T1", "Tobacco", 3, 8),
                                           make_concept("T2", "Status", 10, 15)},
                                     {{"T1", "T2", "Tobacco-Status"}})});
    EvalReport r = evaluate(gold, gold);
    CHECK(r.concept_micro.precision() == 1.0);
    CHECK(r.concept_micro.recall() == 1.0);
    CHECK(r.concept_micro.f1() == 1.0);
    CHECK(r.relation_micro.f1() == 1.0);
    CHECK(r.n_documents == 1);
}

TEST_CASE("one character off means a miss and a false alarm") {
    Corpus gold = corpus_of({one_doc("a", {make_concept("T1", "Tobacco", 3, 8)})});
    Corpus pred = corpus_of({one_doc("a", {make_concept("T1", "Tobacco", 4, 8)})});
    EvalReport r = strict_concept_prf(gold, pred);
    CHECK(r.concept_micro.tp == 0);
    CHECK(r.concept_micro.fp == 1);
    CHECK(r.concept_micro.fn == 1);
    CHECK(r.concept_micro.f1() == 0.0);
}

TEST_CASE("TP=2 FP=1 FN=2 gives P=2/3 R=1/2 F1=4/7") {
    Corpus gold = corpus_of({one_doc("a", {make_concept("T1", "Tobacco", 0, 4),
                                           make_concept("T2", "Tobacco", 10, 14),
                                           make_concept("T3", "Status", 20, 24),
                                           make_concept("T4", "Status", 30, 34)})});
    Corpus pred = corpus_of({one_doc("a", {make_concept("T1", "Tobacco", 0, 4),
                                           make_concept("T2", "Tobacco", 10, 14),
                                           make_concept("T3", "Status", 40, 44)})});
    EvalReport r = strict_concept_prf(gold, pred);
    CHECK(r.concept_micro.tp == 2);
    CHECK(r.concept_micro.fp == 1);
    CHECK(r.concept_micro.fn == 2);
    CHECK(r.concept_micro.precision() == doctest::Approx(2.0 / 3.0));
    CHECK(r.concept_micro.recall() == doctest::Approx(0.5));
    CHECK(r.concept_micro.f1() == doctest::Approx(4.0 / 7.0));
}

TEST_CASE("duplicate predictions: first is TP, the rest are FP") {
    Corpus gold = corpus_of({one_doc("a", {make_concept("T1", "Tobacco", 3, 8)})});
    Corpus pred = corpus_of({one_doc("a", {make_concept("T1", "Tobacco", 3, 8),
                                           make_concept("T2", "Tobacco", 3, 8),
                                           make_concept("T3", "Tobacco", 3, 8)})});
    EvalReport r = strict_concept_prf(gold, pred);
    CHECK(r.concept_micro.tp == 1);
    CHECK(r.concept_micro.fp == 2);
    CHECK(r.concept_micro.fn == 0);
}

TEST_CASE("wrong type at the right span is a miss plus a false alarm") {
    Corpus gold = corpus_of({one_doc("a", {make_concept("T1", "Tobacco", 3, 8)})});
    Corpus pred = corpus_of({one_doc("a", {make_concept("T1", "Alcohol", 3, 8)})});
    EvalReport r = strict_concept_prf(gold, pred);
    CHECK(r.per_concept_type.at("Tobacco").fn == 1);
    CHECK(r.per_concept_type.at("Alcohol").fp == 1);
    CHECK(r.concept_micro.tp == 0);
}

TEST_CASE("document set mismatch is a usage error naming the difference") {
    Corpus gold = corpus_of({one_doc("a", {}), one_doc("b", {})});
    Corpus pred = corpus_of({one_doc("a", {}), one_doc("c", {})});
    try {
        strict_concept_prf(gold, pred);
        FAIL("expected UsageError");
    } catch (const UsageError& e) {
        std::string msg = e.what();
        CHECK(msg.find("b") != std::string::npos);
        CHECK(msg.find("c") != std::string::npos);
    }
}

// ---------------------------------------------------------------------------
// Relation scoring basics

TEST_CASE("relation with wrong label scores FP plus FN") {
    auto gold_doc = one_doc("a", {make_concept("T1", "Tobacco", 0, 4),
                                  make_concept("T2", "Status", 10, 14)},
                            {{"T1", "T2", "Tobacco-Status"}});
    auto pred_doc = one_doc("a", {make_concept("T1", "Tobacco", 0, 4),
                                  make_concept("T2", "Status", 10, 14)},
                            {{"T1", "T2", "Tobacco-Frequency"}});
    EvalReport r = strict_relation_prf(corpus_of({gold_doc}), corpus_of({pred_doc}));
    CHECK(r.relation_micro.tp == 0);
    CHECK(r.relation_micro.fp == 1);
    CHECK(r.relation_micro.fn == 1);
    CHECK(r.per_relation_label.at("Tobacco-Status").fn == 1);
    CHECK(r.per_relation_label.at("Tobacco-Frequency").fp == 1);
}

TEST_CASE("relation with a shifted trigger span scores FP plus FN") {
    auto gold_doc = one_doc("a", {make_concept("T1", "Tobacco", 0, 4),
                                  make_concept("T2", "Status", 10, 14)},
                            {{"T1", "T2", "Tobacco-Status"}});
    auto pred_doc = one_doc("a", {make_concept("T1", "Tobacco", 1, 4),
                                  make_concept("T2", "Status", 10, 14)},
                            {{"T1", "T2", "Tobacco-Status"}});
    EvalReport r = strict_relation_prf(corpus_of({gold_doc}), corpus_of({pred_doc}));
    CHECK(r.relation_micro.tp == 0);
    CHECK(r.relation_micro.fp == 1);
    CHECK(r.relation_micro.fn == 1);
}

TEST_CASE("dangling relation ids never score") {
    auto pred_doc = one_doc("a", {make_concept("T1", "Tobacco", 0, 4)},
                            {{"T1", "T9", "Tobacco-Status"}});  // T9 missing
    auto gold_doc = one_doc("a", {}, {});
    EvalReport r = strict_relation_prf(corpus_of({gold_doc}), corpus_of({pred_doc}));
    CHECK(r.relation_micro.tp == 0);
    CHECK(r.relation_micro.fp == 0);
    CHECK(r.relation_micro.fn == 0);
}

// ---------------------------------------------------------------------------
// Properties

TEST_CASE("swapping gold and pred swaps precision and recall exactly") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        Corpus gold = random_gold(rng, 4);
        Corpus pred = mutate(gold, rng);
        EvalReport ab = evaluate(gold, pred);
        EvalReport ba = evaluate(pred, gold);
        CHECK(ab.concept_micro.precision() == ba.concept_micro.recall());
        CHECK(ab.concept_micro.recall() == ba.concept_micro.precision());
        CHECK(ab.concept_micro.f1() == ba.concept_micro.f1());
        CHECK(ab.relation_micro.precision() == ba.relation_micro.recall());
        CHECK(ab.relation_micro.recall() == ba.relation_micro.precision());
        CHECK(ab.relation_micro.f1() == ba.relation_micro.f1());
    }
}

TEST_CASE("adding a TP never lowers metrics; adding an FP never raises precision") {
    Rng rng(13);
    for (int trial = 0; trial < 30; ++trial) {
        Corpus gold = random_gold(rng, 3);
        Corpus pred = mutate(gold, rng);
        EvalReport base = strict_concept_prf(gold, pred);

        // Find a document with an unmatched gold concept and predict it.
        bool added = false;
        Corpus pred_plus = pred;
        for (size_t di = 0; di < gold.documents.size() && !added; ++di) {
            EvalReport solo = strict_concept_prf(
                corpus_of({gold.documents[di]}),
                corpus_of({pred.documents[di]}));
            if (solo.concept_micro.fn == 0) continue;
            std::map<std::tuple<int64_t, int64_t, std::string>, int64_t> have;
            for (const auto& c : pred.documents[di].concepts)
                have[{c.start, c.end, c.ctype}] += 1;
            for (const auto& c : gold.documents[di].concepts) {
                auto key = std::make_tuple(c.start, c.end, c.ctype);
                if (have[key] > 0) {
                    have[key] -= 1;
                    continue;
                }
                Concept add = c;
                add.id = "T99";
                pred_plus.documents[di].concepts.push_back(add);
                added = true;
                break;
            }
        }
        if (added) {
            EvalReport plus = strict_concept_prf(gold, pred_plus);
            CHECK(plus.concept_micro.precision() >= base.concept_micro.precision());
            CHECK(plus.concept_micro.recall() >= base.concept_micro.recall());
            CHECK(plus.concept_micro.f1() >= base.concept_micro.f1());
        }

        // A guaranteed false positive: span far outside any gold span.
        Corpus pred_fp = pred;
        pred_fp.documents[0].concepts.push_back(make_concept("T98", "Tobacco", 9000, 9005));
        EvalReport worse = strict_concept_prf(gold, pred_fp);
        CHECK(worse.concept_micro.precision() <= base.concept_micro.precision());
        CHECK(worse.concept_micro.recall() == base.concept_micro.recall());
    }
}

TEST_CASE("micro counts are the sums of the per-type counts") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        Corpus gold = random_gold(rng, 4);
        Corpus pred = mutate(gold, rng);
        EvalReport r = evaluate(gold, pred);
        PrfCounts csum, rsum;
        for (const auto& [t, c] : r.per_concept_type) csum += c;
        for (const auto& [l, c] : r.per_relation_label) rsum += c;
        CHECK(csum.tp == r.concept_micro.tp);
        CHECK(csum.fp == r.concept_micro.fp);
        CHECK(csum.fn == r.concept_micro.fn);
        CHECK(rsum.tp == r.relation_micro.tp);
        CHECK(rsum.fp == r.relation_micro.fp);
        CHECK(rsum.fn == r.relation_micro.fn);
    }
}

TEST_CASE("scorer equals the brute-force oracle on 500 randomized pairs") {
    Rng rng(1234);
    for (int trial = 0; trial < 500; ++trial) {
        Corpus gold = random_gold(rng, rng.range(1, 4));
        Corpus pred = mutate(gold, rng);
        EvalReport r = evaluate(gold, pred);
        OracleCounts oc = oracle_concepts(gold, pred);
        CHECK(r.concept_micro.tp == oc.tp);
        CHECK(r.concept_micro.fp == oc.fp);
        CHECK(r.concept_micro.fn == oc.fn);
        OracleCounts orl = oracle_relations(gold, pred);
        CHECK(r.relation_micro.tp == orl.tp);
        CHECK(r.relation_micro.fp == orl.fp);
        CHECK(r.relation_micro.fn == orl.fn);
    }
}

TEST_CASE("relaxed mode accepts overlap but still demands the type") {
    Corpus gold = corpus_of({one_doc("a", {make_concept("T1", "Tobacco", 10, 20)})});
    Corpus pred = corpus_of({one_doc("a", {make_concept("T1", "Tobacco", 15, 25)})});
    CHECK(strict_concept_prf(gold, pred).concept_micro.tp == 0);
    CHECK(relaxed_concept_prf(gold, pred).concept_micro.tp == 1);
    Corpus pred2 = corpus_of({one_doc("a", {make_concept("T1", "Alcohol", 15, 25)})});
    CHECK(relaxed_concept_prf(gold, pred2).concept_micro.tp == 0);
    Corpus pred3 = corpus_of({one_doc("a", {make_concept("T1", "Tobacco", 20, 25)})});
    CHECK(relaxed_concept_prf(gold, pred3).concept_micro.tp == 0);  // touching, no overlap
}

// ---------------------------------------------------------------------------
// Transfer report

TEST_CASE("transfer drops follow the stated arithmetic") {
    EvalReport in, out;
    in.per_concept_type["Tobacco"] = {9, 1, 1};   // P = R = F1 = 0.9
    out.per_concept_type["Tobacco"] = {8, 2, 2};  // P = R = F1 = 0.8
    in.concept_micro = {9, 1, 1};
    out.concept_micro = {8, 2, 2};
    TransferReport t = transfer_report(in, out);
    CHECK(t.concept_f1.source == doctest::Approx(0.9));
    CHECK(t.concept_f1.target == doctest::Approx(0.8));
    CHECK(t.concept_f1.drop == doctest::Approx(0.1));
    CHECK(t.concept_f1.rel_drop == doctest::Approx(0.1 / 0.9));  // ~11.1%

    TransferReport same = transfer_report(in, in);
    CHECK(same.concept_f1.drop == 0.0);
    CHECK(same.concept_r.drop == 0.0);
    CHECK(same.relation_f1.drop == 0.0);  // both zero -> rel drop 0 by convention
    CHECK(same.relation_f1.rel_drop == 0.0);
}

// ---------------------------------------------------------------------------
// Hyperparameter selection

TEST_CASE("select_best picks the highest dev F1 with documented tie-breaking") {
    EvalReport low, high;
    low.concept_micro = {1, 1, 1};   // F1 = 0.5
    high.concept_micro = {9, 1, 1};  // F1 = 0.9
    low.relation_micro = {9, 1, 1};
    high.relation_micro = {1, 1, 1};

    HyperConfig a{3e-3, 16, 1.0};
    HyperConfig b{1e-2, 8, 0.5};
    CHECK(select_best({{a, high}}, false) == a);
    CHECK(select_best({{a, low}, {b, high}}, false) == b);
    // Same reports, relation criterion flips the winner.
    CHECK(select_best({{a, low}, {b, high}}, true) == a);

    // Exact tie: lowest lr, then smallest batch, then smallest weight.
    HyperConfig c{1e-2, 8, 0.5}, d{1e-2, 32, 0.5}, e{3e-2, 8, 0.5};
    CHECK(select_best({{e, high}, {d, high}, {c, high}}, false) == c);
    HyperConfig f{1e-2, 8, 2.0};
    CHECK(select_best({{f, high}, {c, high}}, false) == c);
    CHECK_THROWS_AS(select_best({}, false), UsageError);
}

// ---------------------------------------------------------------------------
// Rendering and serialization

TEST_CASE("eval report survives the json round-trip") {
    Rng rng(23);
    Corpus gold = random_gold(rng, 5);
    Corpus pred = mutate(gold, rng);
    EvalReport r = evaluate(gold, pred);
    EvalReport back = report_from_json(report_to_json(r));
    CHECK(back.n_documents == r.n_documents);
    CHECK(back.concept_micro.tp == r.concept_micro.tp);
    CHECK(back.concept_micro.fp == r.concept_micro.fp);
    CHECK(back.concept_micro.fn == r.concept_micro.fn);
    CHECK(back.relation_micro.tp == r.relation_micro.tp);
    CHECK(back.per_concept_type.size() == r.per_concept_type.size());
    CHECK_THROWS_AS(report_from_json("{"), IngestError);
}

TEST_CASE("tables carry model rows and both metric groups") {
    EvalReport r;
    r.concept_micro = {9, 1, 1};
    r.relation_micro = {8, 2, 2};
    std::string table = render_eval_table({{"mrc-ptune", r}, {"gen-ptune", r}});
    CHECK(table.find("Clinical concept extraction") != std::string::npos);
    CHECK(table.find("End-to-end relation extraction") != std::string::npos);
    CHECK(table.find("Precision") != std::string::npos);
    CHECK(table.find("mrc-ptune") != std::string::npos);
    CHECK(table.find("gen-ptune") != std::string::npos);
    CHECK(table.find("0.9000") != std::string::npos);
    CHECK(table.find("0.8000") != std::string::npos);

    EvalReport worse;
    worse.concept_micro = {8, 2, 2};
    worse.relation_micro = {7, 3, 3};
    TransferReport t = transfer_report(r, worse);
    std::string tt = render_transfer_table({{"mrc-ptune", t}});
    CHECK(tt.find("in-domain") != std::string::npos);
    CHECK(tt.find("cross-domain") != std::string::npos);
    CHECK(tt.find("drop") != std::string::npos);
    CHECK(tt.find("%") != std::string::npos);
    // Transfer json carries all six drop records.
    std::string js = transfer_to_json(t);
    CHECK(js.find("concept_f1") != std::string::npos);
    CHECK(js.find("relation_recall") != std::string::npos);
    CHECK(js.find("rel_drop") != std::string::npos);
}
