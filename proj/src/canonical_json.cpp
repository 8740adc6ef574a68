#include "smsprobe/canonical_json.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace smsprobe {

std::string format_double(double value) {
    if (!std::isfinite(value)) return "null";
    if (value == 0.0) return "0";  // also folds -0
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

std::string csv_field(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

namespace {

void write(const nlohmann::json& v, std::string& out) {
    using value_t = nlohmann::json::value_t;
    switch (v.type()) {
        case value_t::object: {
            // nlohmann's default object type is a std::map, already key-sorted.
            out += '{';
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) out += ',';
                first = false;
                out += nlohmann::json(it.key()).dump();
                out += ':';
                write(it.value(), out);
            }
            out += '}';
            break;
        }
        case value_t::array: {
            out += '[';
            bool first = true;
            for (const auto& item : v) {
                if (!first) out += ',';
                first = false;
                write(item, out);
            }
            out += ']';
            break;
        }
        case value_t::number_float:
            out += format_double(v.get<double>());
            break;
        default:
            out += v.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
            break;
    }
}

}  // namespace

std::string canonical_dump(const nlohmann::json& value) {
    std::string out;
    write(value, out);
    return out;
}

}  // namespace smsprobe
