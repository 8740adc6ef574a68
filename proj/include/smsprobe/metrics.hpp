#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smsprobe/normalize.hpp"
#include "smsprobe/sms.hpp"

namespace smsprobe {

struct PredictionRecord {
    std::string sample_id;
    Condition condition = Condition::NoShift;
    NormalizedAnswer verdict;
    std::optional<int> y_hat;  // absent when Unparseable
    int label = 0;

    bool correct() const { return y_hat.has_value() && *y_hat == label; }
};

PredictionRecord make_prediction(std::string sample_id, Condition condition, NormalizedAnswer verdict,
                                 int label);

// Integer confusion counts. Mergeable; ratios are derived once at the end so
// merging partial counts reproduces the serial result exactly.
struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0, unparseable = 0;

    void add(const PredictionRecord& record);
    ConfusionCounts& operator+=(const ConfusionCounts& other);
    std::size_t n() const { return tp + fp + tn + fn + unparseable; }

    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// Unparseable answers count as incorrect and never as tp/tn. The positive
// class is label 1. Precision, recall and F1 are 0 when their denominator is 0.
struct MetricSet {
    std::size_t n = 0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0, unparseable = 0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

MetricSet finalize(const ConfusionCounts& counts);

// Throws DataError on empty input, mixed conditions or duplicate sample ids.
MetricSet metric_set(std::span<const PredictionRecord> records);

struct NfrResult {
    std::size_t n = 0;
    std::size_t base_correct = 0;
    std::size_t flipped = 0;
    double nfr_paper = 0.0;                // flipped / n
    std::optional<double> nfr_conditional; // flipped / base_correct
};

// Samples correct under `base` and incorrect under `shifted`. Both sides
// must cover the same sample ids; a mismatch throws DataError listing the
// symmetric difference.
NfrResult nfr(std::span<const PredictionRecord> base, std::span<const PredictionRecord> shifted);

}  // namespace smsprobe
