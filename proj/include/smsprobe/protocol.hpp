#pragma once

#include <array>
#include <chrono>
#include <optional>
#include <string>
#include <utility>

#include "json.hpp"
#include "smsprobe/attention.hpp"

namespace smsprobe {

struct ModelCapabilities {
    std::string model_id;
    bool supports_text_only = true;
    bool supports_image_only = true;
    bool supports_attention = false;
    std::string attention_aggregation;

    friend bool operator==(const ModelCapabilities&, const ModelCapabilities&) = default;
};

struct ImagePayload {
    enum class Mode { Path, Inline };
    Mode mode = Mode::Path;
    std::string media_type = "application/octet-stream";
    std::string path;   // Path mode
    std::string bytes;  // Inline mode, raw (base64 only on the wire)

    friend bool operator==(const ImagePayload&, const ImagePayload&) = default;
};

struct PredictRequest {
    std::string request_id;
    std::string instruction;
    std::optional<std::string> text;
    std::optional<ImagePayload> image;
    std::array<std::string, 2> candidate_tokens{"yes", "no"};
    bool return_attention = false;

    friend bool operator==(const PredictRequest&, const PredictRequest&) = default;
};

struct FirstTokenLogits {
    double yes = 0.0;
    double no = 0.0;

    friend bool operator==(const FirstTokenLogits&, const FirstTokenLogits&) = default;
};

struct ModelResponse {
    std::string request_id;
    std::string generated_text;
    FirstTokenLogits first_token_logits;
    std::optional<AttentionBundle> attention;

    friend bool operator==(const ModelResponse&, const ModelResponse&) = default;
};

// Client-side contract: at least one modality, two distinct candidate tokens.
void validate(const PredictRequest& request);

// Throws ValidationError if the request uses a modality combination or
// feature the backend did not declare.
void check_capabilities(const PredictRequest& request, const ModelCapabilities& caps);

nlohmann::json to_json(const ModelCapabilities& caps);
ModelCapabilities capabilities_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PredictRequest& request);  // images in Inline mode go out as base64
PredictRequest request_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelResponse& response);
ModelResponse response_from_json(const nlohmann::json& j);

// Image bytes regardless of mode; path mode reads the file (DataError if unreadable).
std::string image_bytes(const ImagePayload& image);

// The canonical form hashed for caching: sorted keys, request_id and
// return_attention dropped, image replaced by {media_type, sha256 of bytes}.
std::string canonical_request(const PredictRequest& request);

// Lowercase hex SHA-256 of canonical_request.
std::string canonical_hash(const PredictRequest& request);

std::string sha256_hex(std::string_view data);
std::string base64_encode(std::string_view data);
std::string base64_decode(std::string_view text);

}  // namespace smsprobe
