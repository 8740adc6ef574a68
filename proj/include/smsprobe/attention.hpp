#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace smsprobe {

enum class TokenRole { Text, Image, Bos };

// One attention vector per generated token over the input tokens, as
// produced by the backend. How layers and heads were reduced is described by
// ModelCapabilities::attention_aggregation.
struct AttentionBundle {
    std::size_t n_text = 0;
    std::size_t n_image = 0;
    std::vector<TokenRole> roles;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> tokens;  // generated token strings, aligned with rows

    friend bool operator==(const AttentionBundle&, const AttentionBundle&) = default;
};

// Throws ProtocolError if rows/roles/counts disagree or a weight is negative
// or non-finite.
void validate(const AttentionBundle& bundle);

nlohmann::json to_json(const AttentionBundle& bundle);
AttentionBundle attention_from_json(const nlohmann::json& j);

// Copy of `row` with every bos-tagged entry set to zero.
std::vector<double> zero_bos(std::span<const double> row, std::span<const TokenRole> roles);

struct ModalityShare {
    std::size_t t = 0;
    bool degenerate = false;  // no mass left after BOS zeroing
    double text_share = 0.0;
    double image_share = 0.0;
};

// Per-row text/image mass after BOS zeroing, renormalized to sum to one.
std::vector<ModalityShare> modality_shares(const AttentionBundle& bundle);

struct ShareStats {
    double mean = 0.0;
    double variance = 0.0;  // population
    double min = 0.0;
    double max = 0.0;
};

struct StabilityStats {
    std::size_t rows = 0;  // non-degenerate rows used
    ShareStats text;
    ShareStats image;
};

// Throws DataError when every row is degenerate (or there are none).
StabilityStats stability(std::span<const ModalityShare> shares);

// `t,token,text_share,image_share,degenerate`, one line per generated token.
std::string attention_csv(const AttentionBundle& bundle);

}  // namespace smsprobe
