#include "ptie/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "ptie/common.hpp"

namespace ptie {

namespace {

using ordered_json = nlohmann::ordered_json;

// Pairs documents by doc_id; UsageError spelling out any mismatch.
std::vector<std::pair<const Document*, const Document*>> pair_documents(const Corpus& gold,
                                                                        const Corpus& pred) {
    std::map<std::string, const Document*> pred_by_id;
    for (const auto& d : pred.documents) pred_by_id[d.doc_id] = &d;
    std::map<std::string, const Document*> gold_by_id;
    for (const auto& d : gold.documents) gold_by_id[d.doc_id] = &d;

    std::vector<std::string> missing, extra;
    for (const auto& [id, d] : gold_by_id)
        if (!pred_by_id.count(id)) missing.push_back(id);
    for (const auto& [id, d] : pred_by_id)
        if (!gold_by_id.count(id)) extra.push_back(id);
    if (!missing.empty() || !extra.empty()) {
        std::ostringstream os;
        os << "gold and pred cover different documents:";
        if (!missing.empty()) {
            os << " missing in pred:";
            for (const auto& id : missing) os << ' ' << id;
            os << ';';
        }
        if (!extra.empty()) {
            os << " extra in pred:";
            for (const auto& id : extra) os << ' ' << id;
        }
        throw UsageError(os.str());
    }

    std::vector<std::pair<const Document*, const Document*>> out;
    for (const auto& [id, d] : gold_by_id) out.emplace_back(d, pred_by_id.at(id));
    return out;
}

void refresh_micro(EvalReport& r) {
    r.concept_micro = PrfCounts{};
    for (const auto& [t, c] : r.per_concept_type) r.concept_micro += c;
    r.relation_micro = PrfCounts{};
    for (const auto& [l, c] : r.per_relation_label) r.relation_micro += c;
}

MetricDrop make_drop(double source, double target) {
    MetricDrop d;
    d.source = source;
    d.target = target;
    d.drop = source - target;
    d.rel_drop = source > 0.0 ? d.drop / source : 0.0;
    return d;
}

ordered_json counts_json(const PrfCounts& c) {
    return ordered_json{{"tp", c.tp},
                        {"fp", c.fp},
                        {"fn", c.fn},
                        {"precision", c.precision()},
                        {"recall", c.recall()},
                        {"f1", c.f1()}};
}

PrfCounts counts_from_json(const ordered_json& j) {
    PrfCounts c;
    c.tp = j.at("tp").get<int64_t>();
    c.fp = j.at("fp").get<int64_t>();
    c.fn = j.at("fn").get<int64_t>();
    return c;
}

ordered_json drop_json(const MetricDrop& d) {
    return ordered_json{{"source", d.source},
                        {"target", d.target},
                        {"drop", d.drop},
                        {"rel_drop", d.rel_drop}};
}

}  // namespace

EvalReport strict_concept_prf(const Corpus& gold, const Corpus& pred) {
    EvalReport report;
    auto pairs = pair_documents(gold, pred);
    report.n_documents = static_cast<int>(pairs.size());
    for (const auto& [g, p] : pairs) {
        // Per-document multiset of unmatched gold spans.
        std::map<std::tuple<int64_t, int64_t, std::string>, int64_t> open;
        for (const auto& c : g->concepts) {
            open[{c.start, c.end, c.ctype}] += 1;
            report.per_concept_type[c.ctype];  // make every gold type visible
        }
        for (const auto& c : p->concepts) {
            auto it = open.find({c.start, c.end, c.ctype});
            if (it != open.end() && it->second > 0) {
                it->second -= 1;
                report.per_concept_type[c.ctype].tp += 1;
            } else {
                report.per_concept_type[c.ctype].fp += 1;
            }
        }
        for (const auto& [key, count] : open)
            report.per_concept_type[std::get<2>(key)].fn += count;
    }
    refresh_micro(report);
    return report;
}

EvalReport strict_relation_prf(const Corpus& gold, const Corpus& pred) {
    EvalReport report;
    auto pairs = pair_documents(gold, pred);
    report.n_documents = static_cast<int>(pairs.size());
    for (const auto& [g, p] : pairs) {
        std::map<Triplet, int64_t> open;
        for (const auto& t : g->triplets()) {
            open[t] += 1;
            report.per_relation_label[t.label];
        }
        for (const auto& t : p->triplets()) {
            auto it = open.find(t);
            if (it != open.end() && it->second > 0) {
                it->second -= 1;
                report.per_relation_label[t.label].tp += 1;
            } else {
                report.per_relation_label[t.label].fp += 1;
            }
        }
        for (const auto& [t, count] : open) report.per_relation_label[t.label].fn += count;
    }
    refresh_micro(report);
    return report;
}

EvalReport evaluate(const Corpus& gold, const Corpus& pred) {
    EvalReport report = strict_concept_prf(gold, pred);
    EvalReport relation = strict_relation_prf(gold, pred);
    report.per_relation_label = std::move(relation.per_relation_label);
    report.relation_micro = relation.relation_micro;
    return report;
}

EvalReport relaxed_concept_prf(const Corpus& gold, const Corpus& pred) {
    EvalReport report;
    auto pairs = pair_documents(gold, pred);
    report.n_documents = static_cast<int>(pairs.size());
    for (const auto& [g, p] : pairs) {
        std::vector<bool> used(g->concepts.size(), false);
        for (const auto& c : g->concepts) report.per_concept_type[c.ctype];
        for (const auto& c : p->concepts) {
            bool matched = false;
            for (size_t i = 0; i < g->concepts.size(); ++i) {
                const Concept& gc = g->concepts[i];
                if (used[i] || gc.ctype != c.ctype) continue;
                if (c.start < gc.end && gc.start < c.end) {  // any overlap
                    used[i] = true;
                    matched = true;
                    break;
                }
            }
            report.per_concept_type[c.ctype].tp += matched ? 1 : 0;
            report.per_concept_type[c.ctype].fp += matched ? 0 : 1;
        }
        for (size_t i = 0; i < g->concepts.size(); ++i)
            if (!used[i]) report.per_concept_type[g->concepts[i].ctype].fn += 1;
    }
    refresh_micro(report);
    return report;
}

TransferReport transfer_report(const EvalReport& in_domain, const EvalReport& cross_domain) {
    TransferReport t;
    t.source = in_domain;
    t.target = cross_domain;
    t.concept_p = make_drop(in_domain.concept_micro.precision(),
                            cross_domain.concept_micro.precision());
    t.concept_r = make_drop(in_domain.concept_micro.recall(), cross_domain.concept_micro.recall());
    t.concept_f1 = make_drop(in_domain.concept_micro.f1(), cross_domain.concept_micro.f1());
    t.relation_p = make_drop(in_domain.relation_micro.precision(),
                             cross_domain.relation_micro.precision());
    t.relation_r =
        make_drop(in_domain.relation_micro.recall(), cross_domain.relation_micro.recall());
    t.relation_f1 = make_drop(in_domain.relation_micro.f1(), cross_domain.relation_micro.f1());
    return t;
}

bool HyperConfig::operator<(const HyperConfig& o) const {
    return std::tie(lr, batch, loss_weight) < std::tie(o.lr, o.batch, o.loss_weight);
}

bool HyperConfig::operator==(const HyperConfig& o) const {
    return lr == o.lr && batch == o.batch && loss_weight == o.loss_weight;
}

std::string HyperConfig::str() const {
    char buf[96];
    std::snprintf(buf, sizeof buf, "lr=%g batch=%d w=%g", lr, batch, loss_weight);
    return buf;
}

HyperConfig select_best(const std::vector<std::pair<HyperConfig, EvalReport>>& results,
                        bool by_relation) {
    if (results.empty()) throw UsageError("select_best: no results to choose from");
    const HyperConfig* best = nullptr;
    double best_f1 = -1.0;
    for (const auto& [cfg, report] : results) {
        const double f1 = by_relation ? report.relation_micro.f1() : report.concept_micro.f1();
        if (best == nullptr || f1 > best_f1 || (f1 == best_f1 && cfg < *best)) {
            best = &cfg;
            best_f1 = f1;
        }
    }
    return *best;
}

// ---------------------------------------------------------------------------
// Serialization and tables

std::string report_to_json(const EvalReport& report) {
    ordered_json per_type = ordered_json::object();
    for (const auto& [t, c] : report.per_concept_type) per_type[t] = counts_json(c);
    ordered_json per_label = ordered_json::object();
    for (const auto& [l, c] : report.per_relation_label) per_label[l] = counts_json(c);
    ordered_json j{{"documents", report.n_documents},
                   {"concept", ordered_json{{"micro", counts_json(report.concept_micro)},
                                            {"per_type", per_type}}},
                   {"relation", ordered_json{{"micro", counts_json(report.relation_micro)},
                                             {"per_label", per_label}}}};
    return j.dump(2);
}

EvalReport report_from_json(const std::string& json_text) {
    EvalReport r;
    try {
        ordered_json j = ordered_json::parse(json_text);
        r.n_documents = j.at("documents").get<int>();
        for (const auto& [t, c] : j.at("concept").at("per_type").items())
            r.per_concept_type[t] = counts_from_json(c);
        for (const auto& [l, c] : j.at("relation").at("per_label").items())
            r.per_relation_label[l] = counts_from_json(c);
    } catch (const ordered_json::exception& e) {
        throw IngestError(std::string("bad eval report: ") + e.what());
    }
    refresh_micro(r);
    return r;
}

std::string transfer_to_json(const TransferReport& report) {
    ordered_json j{{"source", ordered_json::parse(report_to_json(report.source))},
                   {"target", ordered_json::parse(report_to_json(report.target))},
                   {"drops", ordered_json{{"concept_precision", drop_json(report.concept_p)},
                                          {"concept_recall", drop_json(report.concept_r)},
                                          {"concept_f1", drop_json(report.concept_f1)},
                                          {"relation_precision", drop_json(report.relation_p)},
                                          {"relation_recall", drop_json(report.relation_r)},
                                          {"relation_f1", drop_json(report.relation_f1)}}}};
    return j.dump(2);
}

std::string render_eval_table(const std::vector<std::pair<std::string, EvalReport>>& rows) {
    size_t name_w = 5;
    for (const auto& [name, r] : rows) name_w = std::max(name_w, name.size());
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-*s  %-30s  %-30s\n", static_cast<int>(name_w), "Model",
                  "Clinical concept extraction", "End-to-end relation extraction");
    os << buf;
    std::snprintf(buf, sizeof buf, "%-*s  %-9s %-9s %-10s  %-9s %-9s %-10s\n",
                  static_cast<int>(name_w), "", "Precision", "Recall", "F1", "Precision",
                  "Recall", "F1");
    os << buf;
    for (const auto& [name, r] : rows) {
        std::snprintf(buf, sizeof buf, "%-*s  %-9.4f %-9.4f %-10.4f  %-9.4f %-9.4f %-10.4f\n",
                      static_cast<int>(name_w), name.c_str(), r.concept_micro.precision(),
                      r.concept_micro.recall(), r.concept_micro.f1(),
                      r.relation_micro.precision(), r.relation_micro.recall(),
                      r.relation_micro.f1());
        os << buf;
    }
    return os.str();
}

std::string render_transfer_table(
    const std::vector<std::pair<std::string, TransferReport>>& rows) {
    size_t name_w = 5;
    for (const auto& [name, r] : rows) name_w = std::max(name_w, name.size());
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-*s  %-13s  %-12s  %-13s\n", static_cast<int>(name_w),
                  "Model", "Setting", "Concept F1", "End-to-end F1");
    os << buf;
    for (const auto& [name, r] : rows) {
        std::snprintf(buf, sizeof buf, "%-*s  %-13s  %-12.4f  %-13.4f\n",
                      static_cast<int>(name_w), name.c_str(), "in-domain",
                      r.concept_f1.source, r.relation_f1.source);
        os << buf;
        std::snprintf(buf, sizeof buf, "%-*s  %-13s  %-12.4f  %-13.4f\n",
                      static_cast<int>(name_w), "", "cross-domain", r.concept_f1.target,
                      r.relation_f1.target);
        os << buf;
        std::snprintf(buf, sizeof buf, "%-*s  %-13s  %-12.4f  %-13.4f\n",
                      static_cast<int>(name_w), "", "drop", r.concept_f1.drop,
                      r.relation_f1.drop);
        os << buf;
        std::snprintf(buf, sizeof buf, "%-*s  %-13s  %-11.1f%%  %-12.1f%%\n",
                      static_cast<int>(name_w), "", "rel drop", 100.0 * r.concept_f1.rel_drop,
                      100.0 * r.relation_f1.rel_drop);
        os << buf;
    }
    return os.str();
}

}  // namespace ptie
