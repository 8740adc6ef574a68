#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "smsprobe/normalize.hpp"

namespace smsprobe {

struct FirstTokenProb {
    double p_yes = 0.5;
    double p_no = 0.5;
    int predicted = 0;        // 1 iff p_yes > p_no; ties go to 0
    double confidence = 0.5;  // max(p_yes, p_no)
};

// Two-way softmax with the max subtracted first. DataError on non-finite input.
FirstTokenProb softmax2(double logit_yes, double logit_no);

struct CalibrationBin {
    std::size_t index = 0;  // 1-based
    double lower = 0.0;     // interval (lower, upper]; bin 1 also holds 0
    double upper = 0.0;
    std::size_t count = 0;
    double accuracy = 0.0;    // meaningful only when count > 0
    double confidence = 0.0;  // mean confidence, likewise
};

struct EceResult {
    double ece = 0.0;
    std::size_t n = 0;
    std::vector<CalibrationBin> bins;
    std::vector<std::pair<double, double>> reliability_points;  // (conf, acc), non-empty bins
};

inline constexpr std::size_t kDefaultBins = 10;

// Bin index (0-based) for a confidence in [0, 1] with `bins` uniform bins,
// right-closed: (k/M, (k+1)/M] maps to k, and 0 maps to 0.
std::size_t bin_index(double confidence, std::size_t bins);

// Expected calibration error over uniform bins. Throws DataError on length
// mismatch, empty input or bins == 0.
EceResult ece(std::span<const FirstTokenProb> probs, std::span<const bool> correct,
              std::size_t bins = kDefaultBins);

struct AgreementResult {
    std::optional<double> rate;  // absent when every answer was Unparseable
    std::size_t n_compared = 0;
    std::size_t n_excluded = 0;
};

// Fraction of parsed answers whose verdict equals the first-token argmax.
AgreementResult agreement_rate(std::span<const int> first_token_predicted,
                               std::span<const NormalizedAnswer> normalized);

}  // namespace smsprobe
