#include "smsprobe/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "smsprobe/error.hpp"

namespace smsprobe {

TemplateSet TemplateSet::defaults() {
    TemplateSet t;
    t.templates_["default"] =
        "You are assisting with a diagnostic review. Consider the medical image and the clinical text "
        "provided, when present. Does the patient present abnormal findings? Answer Yes or No.";
    t.templates_["glaucoma"] =
        "You are assisting with an ophthalmology review. Consider the fundus image and the clinical notes "
        "provided, when present. Does the patient have glaucoma? Answer Yes or No.";
    return t;
}

TemplateSet TemplateSet::parse(std::string_view json_text) {
    TemplateSet t;
    try {
        auto j = nlohmann::json::parse(json_text);
        if (!j.is_object()) throw DataError("template file must be a JSON object");
        for (auto it = j.begin(); it != j.end(); ++it) t.templates_[it.key()] = it->get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed template file: ") + e.what());
    }
    if (t.templates_.empty()) throw DataError("template file defines no templates");
    return t;
}

TemplateSet TemplateSet::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open template file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

const std::string& TemplateSet::instruction(const std::string& id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) throw DataError("unknown prompt template '" + id + "'");
    return it->second;
}

std::string compose_text(const MetaMap& meta, const std::string& text) {
    std::string out;
    for (const auto& [k, v] : meta) out += k + ": " + v + "\n";
    return out + text;
}

std::string media_type_for(const std::string& image_ref) {
    auto dot = image_ref.rfind('.');
    if (dot == std::string::npos) return "application/octet-stream";
    std::string ext = image_ref.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == "png") return "image/png";
    if (ext == "jpg" || ext == "jpeg") return "image/jpeg";
    if (ext == "dcm") return "application/dicom";
    return "application/octet-stream";
}

PredictRequest build_request(const Manifest& manifest, const ProbeInstance& instance,
                             const std::string& instruction, const RequestOptions& options) {
    PredictRequest r;
    r.request_id = std::string(to_string(instance.condition)) + "/" + instance.sample_id;
    r.instruction = instruction;
    r.return_attention = options.return_attention;
    if (instance.text) r.text = compose_text(instance.text_meta, *instance.text);
    if (instance.image_ref) {
        ImagePayload img;
        img.media_type = media_type_for(*instance.image_ref);
        SampleRecord ref;
        ref.image_ref = *instance.image_ref;
        img.path = manifest.resolve_image(ref).string();
        if (options.inline_images) {
            img.bytes = image_bytes(img);
            img.mode = ImagePayload::Mode::Inline;
            img.path.clear();
        }
        r.image = std::move(img);
    }
    return r;
}

}  // namespace smsprobe
