#include "smsprobe/protocol.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "smsprobe/canonical_json.hpp"
#include "smsprobe/error.hpp"

namespace smsprobe {

using nlohmann::json;

void validate(const PredictRequest& r) {
    if (!r.text && !r.image) throw ValidationError("request '" + r.request_id + "' has neither text nor image");
    if (r.candidate_tokens[0] == r.candidate_tokens[1])
        throw ValidationError("request '" + r.request_id + "' candidate tokens must differ");
}

void check_capabilities(const PredictRequest& r, const ModelCapabilities& caps) {
    if (r.text && !r.image && !caps.supports_text_only)
        throw ValidationError("capability: backend '" + caps.model_id + "' does not support text-only input");
    if (r.image && !r.text && !caps.supports_image_only)
        throw ValidationError("capability: backend '" + caps.model_id + "' does not support image-only input");
    if (r.return_attention && !caps.supports_attention)
        throw ValidationError("capability: backend '" + caps.model_id + "' does not return attention");
}

json to_json(const ModelCapabilities& c) {
    return {{"model_id", c.model_id},
            {"supports_text_only", c.supports_text_only},
            {"supports_image_only", c.supports_image_only},
            {"supports_attention", c.supports_attention},
            {"attention_aggregation", c.attention_aggregation}};
}

namespace {

const json& field(const json& j, const char* key, const char* what) {
    if (!j.is_object()) throw ProtocolError(std::string(what) + ": body is not a JSON object");
    auto it = j.find(key);
    if (it == j.end()) throw ProtocolError(std::string(what) + ": missing field '" + key + "'");
    return *it;
}

bool get_bool(const json& j, const char* key, const char* what) {
    const auto& v = field(j, key, what);
    if (!v.is_boolean()) throw ProtocolError(std::string(what) + ": field '" + key + "' must be a boolean");
    return v.get<bool>();
}

std::string get_string(const json& j, const char* key, const char* what) {
    const auto& v = field(j, key, what);
    if (!v.is_string()) throw ProtocolError(std::string(what) + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

double get_finite(const json& j, const char* key, const char* what) {
    const auto& v = field(j, key, what);
    if (!v.is_number()) throw ProtocolError(std::string(what) + ": field '" + key + "' must be a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) throw ProtocolError(std::string(what) + ": field '" + key + "' is not finite");
    return d;
}

}  // namespace

ModelCapabilities capabilities_from_json(const json& j) {
    constexpr const char* what = "capabilities";
    ModelCapabilities c;
    c.model_id = get_string(j, "model_id", what);
    c.supports_text_only = get_bool(j, "supports_text_only", what);
    c.supports_image_only = get_bool(j, "supports_image_only", what);
    c.supports_attention = get_bool(j, "supports_attention", what);
    if (j.contains("attention_aggregation")) c.attention_aggregation = get_string(j, "attention_aggregation", what);
    return c;
}

json to_json(const PredictRequest& r) {
    json j = {{"request_id", r.request_id},
              {"instruction", r.instruction},
              {"text", r.text ? json(*r.text) : json(nullptr)},
              {"candidate_tokens", r.candidate_tokens},
              {"return_attention", r.return_attention}};
    if (r.image) {
        if (r.image->mode == ImagePayload::Mode::Path)
            j["image"] = {{"mode", "path"}, {"media_type", r.image->media_type}, {"path", r.image->path}};
        else
            j["image"] = {{"mode", "inline-base64"},
                          {"media_type", r.image->media_type},
                          {"data", base64_encode(r.image->bytes)}};
    } else {
        j["image"] = nullptr;
    }
    return j;
}

PredictRequest request_from_json(const json& j) {
    constexpr const char* what = "request";
    PredictRequest r;
    r.request_id = get_string(j, "request_id", what);
    r.instruction = get_string(j, "instruction", what);
    if (auto it = j.find("text"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw ProtocolError("request: field 'text' must be a string or null");
        r.text = it->get<std::string>();
    }
    if (auto it = j.find("image"); it != j.end() && !it->is_null()) {
        ImagePayload img;
        auto mode = get_string(*it, "mode", "request.image");
        if (it->contains("media_type")) img.media_type = get_string(*it, "media_type", "request.image");
        if (mode == "path") {
            img.mode = ImagePayload::Mode::Path;
            img.path = get_string(*it, "path", "request.image");
        } else if (mode == "inline-base64") {
            img.mode = ImagePayload::Mode::Inline;
            img.bytes = base64_decode(get_string(*it, "data", "request.image"));
        } else {
            throw ProtocolError("request.image: unknown mode '" + mode + "'");
        }
        r.image = std::move(img);
    }
    if (auto it = j.find("candidate_tokens"); it != j.end()) {
        if (!it->is_array() || it->size() != 2 || !(*it)[0].is_string() || !(*it)[1].is_string())
            throw ProtocolError("request: candidate_tokens must be two strings");
        r.candidate_tokens = {(*it)[0].get<std::string>(), (*it)[1].get<std::string>()};
    }
    if (j.contains("return_attention")) r.return_attention = get_bool(j, "return_attention", what);
    return r;
}

json to_json(const ModelResponse& r) {
    return {{"request_id", r.request_id},
            {"generated_text", r.generated_text},
            {"first_token_logits", {{"yes", r.first_token_logits.yes}, {"no", r.first_token_logits.no}}},
            {"attention", r.attention ? to_json(*r.attention) : json(nullptr)}};
}

ModelResponse response_from_json(const json& j) {
    constexpr const char* what = "response";
    ModelResponse r;
    r.request_id = get_string(j, "request_id", what);
    r.generated_text = get_string(j, "generated_text", what);
    const auto& logits = field(j, "first_token_logits", what);
    r.first_token_logits.yes = get_finite(logits, "yes", "response.first_token_logits");
    r.first_token_logits.no = get_finite(logits, "no", "response.first_token_logits");
    if (auto it = j.find("attention"); it != j.end() && !it->is_null()) r.attention = attention_from_json(*it);
    return r;
}

std::string image_bytes(const ImagePayload& image) {
    if (image.mode == ImagePayload::Mode::Inline) return image.bytes;
    std::ifstream in(image.path, std::ios::binary);
    if (!in) throw DataError("cannot read image " + image.path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw DataError("failed reading image " + image.path);
    return buf.str();
}

std::string canonical_request(const PredictRequest& r) {
    json j = {{"candidate_tokens", r.candidate_tokens},
              {"instruction", r.instruction},
              {"text", r.text ? json(*r.text) : json(nullptr)},
              {"image", r.image ? json{{"sha256", sha256_hex(image_bytes(*r.image))}} : json(nullptr)}};
    return canonical_dump(j);
}

std::string canonical_hash(const PredictRequest& r) { return sha256_hex(canonical_request(r)); }

std::string sha256_hex(std::string_view data) {
    unsigned char digest[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * SHA256_DIGEST_LENGTH);
    for (unsigned char b : digest) {
        out += hex[b >> 4];
        out += hex[b & 0xf];
    }
    return out;
}

std::string base64_encode(std::string_view data) {
    std::string out(4 * ((data.size() + 2) / 3), '\0');
    int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                            reinterpret_cast<const unsigned char*>(data.data()), static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw ProtocolError("base64: length is not a multiple of 4");
    std::string out(3 * (text.size() / 4), '\0');
    int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                            reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
    if (n < 0) throw ProtocolError("base64: invalid data");
    // EVP_DecodeBlock counts padding as zero bytes.
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=') ++pad;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

}  // namespace smsprobe
