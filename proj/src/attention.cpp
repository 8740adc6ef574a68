#include "smsprobe/attention.hpp"

#include <algorithm>
#include <cmath>

#include "smsprobe/canonical_json.hpp"
#include "smsprobe/error.hpp"

namespace smsprobe {

namespace {

std::string_view role_name(TokenRole r) {
    switch (r) {
        case TokenRole::Text: return "text";
        case TokenRole::Image: return "image";
        case TokenRole::Bos: return "bos";
    }
    return "?";
}

TokenRole parse_role(const std::string& s) {
    if (s == "text") return TokenRole::Text;
    if (s == "image") return TokenRole::Image;
    if (s == "bos") return TokenRole::Bos;
    throw ProtocolError("attention: unknown token role '" + s + "'");
}

}  // namespace

void validate(const AttentionBundle& b) {
    std::size_t n_text = 0, n_image = 0;
    for (auto r : b.roles) {
        if (r == TokenRole::Text) ++n_text;
        if (r == TokenRole::Image) ++n_image;
    }
    if (n_text != b.n_text || n_image != b.n_image)
        throw ProtocolError("attention: n_text/n_image disagree with roles");
    if (b.tokens.size() != b.rows.size())
        throw ProtocolError("attention: tokens and rows differ in length");
    for (std::size_t t = 0; t < b.rows.size(); ++t) {
        if (b.rows[t].size() != b.roles.size())
            throw ProtocolError("attention: row " + std::to_string(t) + " length differs from roles");
        for (double w : b.rows[t])
            if (!std::isfinite(w) || w < 0.0)
                throw ProtocolError("attention: row " + std::to_string(t) + " has a negative or non-finite weight");
    }
}

nlohmann::json to_json(const AttentionBundle& b) {
    nlohmann::json roles = nlohmann::json::array();
    for (auto r : b.roles) roles.push_back(std::string(role_name(r)));
    return {{"n_text", b.n_text}, {"n_image", b.n_image}, {"roles", roles}, {"rows", b.rows}, {"tokens", b.tokens}};
}

AttentionBundle attention_from_json(const nlohmann::json& j) {
    AttentionBundle b;
    try {
        b.n_text = j.at("n_text").get<std::size_t>();
        b.n_image = j.at("n_image").get<std::size_t>();
        for (const auto& r : j.at("roles")) b.roles.push_back(parse_role(r.get<std::string>()));
        b.rows = j.at("rows").get<std::vector<std::vector<double>>>();
        b.tokens = j.at("tokens").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("attention: ") + e.what());
    }
    validate(b);
    return b;
}

std::vector<double> zero_bos(std::span<const double> row, std::span<const TokenRole> roles) {
    if (row.size() != roles.size()) throw DataError("zero_bos: row and roles differ in length");
    std::vector<double> out(row.begin(), row.end());
    for (std::size_t i = 0; i < out.size(); ++i)
        if (roles[i] == TokenRole::Bos) out[i] = 0.0;
    return out;
}

std::vector<ModalityShare> modality_shares(const AttentionBundle& b) {
    std::vector<ModalityShare> out;
    out.reserve(b.rows.size());
    for (std::size_t t = 0; t < b.rows.size(); ++t) {
        auto row = zero_bos(b.rows[t], b.roles);
        double text = 0.0, image = 0.0;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (b.roles[i] == TokenRole::Text) text += row[i];
            else if (b.roles[i] == TokenRole::Image) image += row[i];
        }
        ModalityShare s;
        s.t = t;
        const double total = text + image;
        if (total > 0.0) {
            s.text_share = text / total;
            s.image_share = image / total;
        } else {
            s.degenerate = true;
        }
        out.push_back(s);
    }
    return out;
}

namespace {

ShareStats summarize(const std::vector<double>& xs) {
    ShareStats s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    double sq = 0.0;
    for (double x : xs) sq += (x - s.mean) * (x - s.mean);
    s.variance = sq / static_cast<double>(xs.size());
    auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    s.min = *lo;
    s.max = *hi;
    // Floating summation can push the mean a ulp past the extremes.
    s.mean = std::clamp(s.mean, s.min, s.max);
    return s;
}

}  // namespace

StabilityStats stability(std::span<const ModalityShare> shares) {
    std::vector<double> text, image;
    for (const auto& s : shares) {
        if (s.degenerate) continue;
        text.push_back(s.text_share);
        image.push_back(s.image_share);
    }
    if (text.empty()) throw DataError("stability: no non-degenerate attention rows");
    return StabilityStats{text.size(), summarize(text), summarize(image)};
}

std::string attention_csv(const AttentionBundle& b) {
    std::string out = "t,token,text_share,image_share,degenerate\n";
    auto shares = modality_shares(b);
    for (const auto& s : shares) {
        const std::string token = csv_field(b.tokens[s.t]);
        out += std::to_string(s.t) + "," + token + ",";
        if (s.degenerate) out += ",,1\n";
        else out += format_double(s.text_share) + "," + format_double(s.image_share) + ",0\n";
    }
    return out;
}

}  // namespace smsprobe
