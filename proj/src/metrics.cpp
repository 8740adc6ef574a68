#include "smsprobe/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "smsprobe/error.hpp"

namespace smsprobe {

PredictionRecord make_prediction(std::string sample_id, Condition condition, NormalizedAnswer verdict,
                                 int label) {
    PredictionRecord r;
    r.sample_id = std::move(sample_id);
    r.condition = condition;
    r.y_hat = to_label(verdict.verdict);
    r.verdict = std::move(verdict);
    r.label = label;
    return r;
}

void ConfusionCounts::add(const PredictionRecord& r) {
    if (!r.y_hat) {
        ++unparseable;
    } else if (*r.y_hat == 1) {
        (r.label == 1 ? tp : fp)++;
    } else {
        (r.label == 0 ? tn : fn)++;
    }
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    unparseable += o.unparseable;
    return *this;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricSet finalize(const ConfusionCounts& c) {
    MetricSet m;
    m.n = c.n();
    m.tp = c.tp;
    m.fp = c.fp;
    m.tn = c.tn;
    m.fn = c.fn;
    m.unparseable = c.unparseable;
    m.accuracy = ratio(c.tp + c.tn, m.n);
    m.precision = ratio(c.tp, c.tp + c.fp);
    // Unparseable answers on positives are misses for recall purposes too.
    m.recall = ratio(c.tp, c.tp + c.fn);
    m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

MetricSet metric_set(std::span<const PredictionRecord> records) {
    if (records.empty()) throw DataError("metric_set: no records");
    std::set<std::string_view> ids;
    ConfusionCounts counts;
    for (const auto& r : records) {
        if (r.condition != records.front().condition) throw DataError("metric_set: records mix conditions");
        if (!ids.insert(r.sample_id).second) throw DataError("metric_set: duplicate sample_id '" + r.sample_id + "'");
        counts.add(r);
    }
    return finalize(counts);
}

NfrResult nfr(std::span<const PredictionRecord> base, std::span<const PredictionRecord> shifted) {
    std::map<std::string_view, const PredictionRecord*> base_by_id, shifted_by_id;
    for (const auto& r : base)
        if (!base_by_id.emplace(r.sample_id, &r).second)
            throw DataError("nfr: duplicate base sample_id '" + r.sample_id + "'");
    for (const auto& r : shifted)
        if (!shifted_by_id.emplace(r.sample_id, &r).second)
            throw DataError("nfr: duplicate shifted sample_id '" + r.sample_id + "'");

    std::vector<std::string> only_base, only_shifted;
    for (const auto& [id, _] : base_by_id)
        if (!shifted_by_id.count(id)) only_base.emplace_back(id);
    for (const auto& [id, _] : shifted_by_id)
        if (!base_by_id.count(id)) only_shifted.emplace_back(id);
    if (!only_base.empty() || !only_shifted.empty()) {
        std::string msg = "nfr: sample sets differ;";
        auto list = [&](const char* side, const std::vector<std::string>& ids) {
            if (ids.empty()) return;
            msg += std::string(" only in ") + side + ":";
            for (const auto& id : ids) msg += " " + id;
            msg += ";";
        };
        list("base", only_base);
        list("shifted", only_shifted);
        throw DataError(msg);
    }

    NfrResult out;
    out.n = base_by_id.size();
    for (const auto& [id, b] : base_by_id) {
        if (!b->correct()) continue;
        ++out.base_correct;
        if (!shifted_by_id.at(id)->correct()) ++out.flipped;
    }
    out.nfr_paper = ratio(out.flipped, out.n);
    if (out.base_correct > 0) out.nfr_conditional = ratio(out.flipped, out.base_correct);
    return out;
}

}  // namespace smsprobe
