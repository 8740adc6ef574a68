#include "smsprobe/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "smsprobe/error.hpp"

namespace smsprobe {

FirstTokenProb softmax2(double logit_yes, double logit_no) {
    if (!std::isfinite(logit_yes) || !std::isfinite(logit_no))
        throw DataError("softmax2: non-finite logit");
    const double hi = std::max(logit_yes, logit_no);
    const double e_yes = std::exp(logit_yes - hi);
    const double e_no = std::exp(logit_no - hi);
    const double z = e_yes + e_no;
    FirstTokenProb p;
    p.p_yes = e_yes / z;
    p.p_no = e_no / z;
    p.predicted = p.p_yes > p.p_no ? 1 : 0;
    p.confidence = std::max(p.p_yes, p.p_no);
    return p;
}

std::size_t bin_index(double confidence, std::size_t bins) {
    if (confidence <= 0.0) return 0;
    const double m = static_cast<double>(bins);
    auto k = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(confidence * m)), 1, bins);
    // c*M can round across a boundary; settle against the same k/M edges the
    // bins report, so (lower, upper] holds exactly.
    while (k > 1 && confidence <= static_cast<double>(k - 1) / m) --k;
    while (k < bins && confidence > static_cast<double>(k) / m) ++k;
    return k - 1;
}

EceResult ece(std::span<const FirstTokenProb> probs, std::span<const bool> correct, std::size_t bins) {
    if (probs.size() != correct.size()) throw DataError("ece: probabilities and correctness differ in length");
    if (probs.empty()) throw DataError("ece: no predictions");
    if (bins == 0) throw DataError("ece: bin count must be positive");

    std::vector<std::size_t> count(bins, 0), hits(bins, 0);
    std::vector<double> conf_sum(bins, 0.0);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        auto b = bin_index(probs[i].confidence, bins);
        ++count[b];
        conf_sum[b] += probs[i].confidence;
        if (correct[i]) ++hits[b];
    }

    EceResult out;
    out.n = probs.size();
    double gap_sum = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        CalibrationBin bin;
        bin.index = b + 1;
        bin.lower = static_cast<double>(b) / static_cast<double>(bins);
        bin.upper = static_cast<double>(b + 1) / static_cast<double>(bins);
        bin.count = count[b];
        if (count[b] > 0) {
            bin.accuracy = static_cast<double>(hits[b]) / static_cast<double>(count[b]);
            bin.confidence = conf_sum[b] / static_cast<double>(count[b]);
            gap_sum += std::abs(static_cast<double>(hits[b]) - conf_sum[b]);
            out.reliability_points.emplace_back(bin.confidence, bin.accuracy);
        }
        out.bins.push_back(bin);
    }
    out.ece = gap_sum / static_cast<double>(out.n);
    return out;
}

AgreementResult agreement_rate(std::span<const int> first_token_predicted,
                               std::span<const NormalizedAnswer> normalized) {
    if (first_token_predicted.size() != normalized.size())
        throw DataError("agreement_rate: inputs differ in length");
    AgreementResult out;
    std::size_t agree = 0;
    for (std::size_t i = 0; i < normalized.size(); ++i) {
        auto label = to_label(normalized[i].verdict);
        if (!label) {
            ++out.n_excluded;
            continue;
        }
        ++out.n_compared;
        if (*label == first_token_predicted[i]) ++agree;
    }
    if (out.n_compared > 0) out.rate = static_cast<double>(agree) / static_cast<double>(out.n_compared);
    return out;
}

}  // namespace smsprobe
