#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ptie/corpus.hpp"

namespace ptie {

// ---------------------------------------------------------------------------
// Strict micro-averaged scoring. A predicted concept counts as a true
// positive iff a gold concept with identical (start, end, type) exists in the
// same document; matching is one-to-one, so duplicate predictions beyond the
// gold count become false positives. End-to-end relation scoring matches
// resolved triplets exactly: trigger span+type, attribute span+type, label.

struct PrfCounts {
    int64_t tp = 0, fp = 0, fn = 0;

    double precision() const { return tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp); }
    double recall() const { return tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn); }
    double f1() const {
        const double p = precision(), r = recall();
        return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    }

    PrfCounts& operator+=(const PrfCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
};

struct EvalReport {
    int n_documents = 0;
    std::map<std::string, PrfCounts> per_concept_type;
    std::map<std::string, PrfCounts> per_relation_label;
    PrfCounts concept_micro;   // always the sum of per_concept_type
    PrfCounts relation_micro;  // always the sum of per_relation_label
};

// Gold and pred must cover the same doc_id set (UsageError naming the
// difference otherwise). Each fills its own section of the report.
EvalReport strict_concept_prf(const Corpus& gold, const Corpus& pred);
EvalReport strict_relation_prf(const Corpus& gold, const Corpus& pred);
// Both sections in one report.
EvalReport evaluate(const Corpus& gold, const Corpus& pred);

// Debugging aid: same type, any character overlap counts as a match
// (one-to-one, first overlapping gold in document order). Never used for
// model selection.
EvalReport relaxed_concept_prf(const Corpus& gold, const Corpus& pred);

// ---------------------------------------------------------------------------
// Transfer gaps

struct MetricDrop {
    double source = 0.0;
    double target = 0.0;
    double drop = 0.0;      // source - target
    double rel_drop = 0.0;  // drop / source when source > 0, else 0
};

struct TransferReport {
    EvalReport source;
    EvalReport target;
    MetricDrop concept_p, concept_r, concept_f1;
    MetricDrop relation_p, relation_r, relation_f1;
};

TransferReport transfer_report(const EvalReport& in_domain, const EvalReport& cross_domain);

// ---------------------------------------------------------------------------
// Hyperparameter selection

struct HyperConfig {
    double lr = 1e-2;
    int batch = 16;
    double loss_weight = 1.0;

    // Documented tie order: lowest lr, then smallest batch, then smallest
    // loss weight.
    bool operator<(const HyperConfig& o) const;
    bool operator==(const HyperConfig& o) const;
    std::string str() const;
};

// Argmax of dev micro strict F1 — relation (end-to-end) F1 when by_relation,
// concept F1 otherwise. Exact ties go to the earlier config in the
// documented order. UsageError on an empty result set.
HyperConfig select_best(const std::vector<std::pair<HyperConfig, EvalReport>>& results,
                        bool by_relation);

// ---------------------------------------------------------------------------
// Rendering: machine-readable JSON and aligned-column text tables in the
// shape of the paper-style comparison tables (model rows, concept and
// end-to-end P/R/F1 column groups).

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& json_text);
std::string transfer_to_json(const TransferReport& report);

std::string render_eval_table(const std::vector<std::pair<std::string, EvalReport>>& rows);
std::string render_transfer_table(
    const std::vector<std::pair<std::string, TransferReport>>& rows);

}  // namespace ptie
