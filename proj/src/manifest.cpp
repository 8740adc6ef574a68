#include "smsprobe/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "smsprobe/canonical_json.hpp"
#include "smsprobe/error.hpp"

namespace smsprobe {

using nlohmann::json;

const SampleRecord* Manifest::find(const std::string& id) const {
    for (const auto& r : records)
        if (r.id == id) return &r;
    return nullptr;
}

std::filesystem::path Manifest::resolve_image(const SampleRecord& record) const {
    std::filesystem::path p(record.image_ref);
    if (p.is_absolute() || base_dir.empty()) return p;
    return base_dir / p;
}

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
    throw DataError("manifest line " + std::to_string(line) + ": " + what);
}

std::string require_string(const json& obj, const char* key, std::size_t line, bool required) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        if (required) fail(line, std::string("missing field '") + key + "'");
        return {};
    }
    if (!it->is_string()) fail(line, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

void apply_header(Manifest& m, const json& header, std::size_t line) {
    if (!header.is_object()) fail(line, "'manifest' header must be an object");
    for (auto it = header.begin(); it != header.end(); ++it) {
        const auto& key = it.key();
        if (key == "dataset_name" || key == "prompt_template_id") {
            if (!it->is_string()) fail(line, "header field '" + key + "' must be a string");
            (key == "dataset_name" ? m.dataset_name : m.prompt_template_id) = it->get<std::string>();
        } else if (key == "allow_empty_text" || key == "allow_empty_image") {
            if (!it->is_boolean()) fail(line, "header field '" + key + "' must be a boolean");
            (key == "allow_empty_text" ? m.allow_empty_text : m.allow_empty_image) = it->get<bool>();
        } else {
            fail(line, "unknown header field '" + key + "'");
        }
    }
}

SampleRecord parse_record(const json& obj, std::size_t line) {
    SampleRecord r;
    r.id = require_string(obj, "id", line, true);
    if (r.id.empty()) fail(line, "empty id");
    r.image_ref = require_string(obj, "image_ref", line, false);
    r.text = require_string(obj, "text", line, false);

    auto label = obj.find("label");
    if (label == obj.end()) fail(line, "missing field 'label'");
    if (!label->is_number_integer() || (label->get<long long>() != 0 && label->get<long long>() != 1))
        fail(line, "label must be 0 or 1, got " + label->dump());
    r.label = label->get<int>();

    if (auto meta = obj.find("meta"); meta != obj.end()) {
        if (!meta->is_object()) fail(line, "field 'meta' must be an object");
        for (auto it = meta->begin(); it != meta->end(); ++it) {
            if (!it->is_string()) fail(line, "meta value '" + it.key() + "' must be a string");
            r.meta[it.key()] = it->get<std::string>();
        }
    }
    static const std::set<std::string> known{"id", "image_ref", "text", "label", "meta"};
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (known.count(it.key())) continue;
        if (r.meta.count(it.key())) fail(line, "field '" + it.key() + "' collides with a meta key");
        r.meta[it.key()] = it->is_string() ? it->get<std::string>() : canonical_dump(*it);
    }
    return r;
}

}  // namespace

Manifest parse_manifest(const std::string& content, const std::string& default_name) {
    Manifest m;
    m.dataset_name = default_name;
    std::set<std::string> seen;
    std::istringstream in(content);
    std::string text;
    std::size_t line = 0;
    bool first_content = true;
    while (std::getline(in, text)) {
        ++line;
        if (!text.empty() && text.back() == '\r') text.pop_back();
        if (text.find_first_not_of(" \t") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(text);
        } catch (const json::parse_error& e) {
            fail(line, std::string("malformed JSON: ") + e.what());
        }
        if (!obj.is_object()) fail(line, "expected a JSON object");
        if (first_content && obj.size() == 1 && obj.contains("manifest")) {
            apply_header(m, obj["manifest"], line);
            first_content = false;
            continue;
        }
        first_content = false;
        SampleRecord r = parse_record(obj, line);
        if (r.text.empty() && !m.allow_empty_text) fail(line, "empty text for '" + r.id + "'");
        if (r.image_ref.empty() && !m.allow_empty_image) fail(line, "empty image_ref for '" + r.id + "'");
        if (!seen.insert(r.id).second) fail(line, "duplicate id '" + r.id + "'");
        m.records.push_back(std::move(r));
    }
    return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open manifest " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw DataError("failed reading manifest " + path.string());
    Manifest m = parse_manifest(buf.str(), path.stem().string());
    m.base_dir = path.parent_path();
    return m;
}

std::string serialize_manifest(const Manifest& m) {
    std::string out;
    json header = {{"manifest",
                    {{"dataset_name", m.dataset_name},
                     {"prompt_template_id", m.prompt_template_id},
                     {"allow_empty_text", m.allow_empty_text},
                     {"allow_empty_image", m.allow_empty_image}}}};
    out += canonical_dump(header) + "\n";
    for (const auto& r : m.records) {
        json obj = {{"id", r.id}, {"image_ref", r.image_ref}, {"text", r.text}, {"label", r.label}};
        if (!r.meta.empty()) obj["meta"] = r.meta;
        out += canonical_dump(obj) + "\n";
    }
    return out;
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write manifest " + path.string());
    out << serialize_manifest(m);
    if (!out) throw DataError("failed writing manifest " + path.string());
}

ValidationReport validate_for_sms(const Manifest& m) {
    ValidationReport report;
    for (const auto& r : m.records) (r.label == 1 ? report.count_positive : report.count_negative)++;
    if (m.records.empty()) {
        report.defects.push_back("empty");
        return report;
    }
    if (report.count_negative == 0) report.defects.push_back("no-opposite-donor for class 1");
    if (report.count_positive == 0) report.defects.push_back("no-opposite-donor for class 0");
    return report;
}

}  // namespace smsprobe
