#pragma once

#include <map>
#include <string>
#include <string_view>

#include "smsprobe/manifest.hpp"
#include "smsprobe/protocol.hpp"
#include "smsprobe/sms.hpp"

namespace smsprobe {

// Instruction templates keyed by id. The file form is a flat JSON object
// {"<id>": "<instruction>", ...}.
class TemplateSet {
public:
    static TemplateSet defaults();
    static TemplateSet load(const std::string& path);
    static TemplateSet parse(std::string_view json_text);

    // DataError if the id is unknown.
    const std::string& instruction(const std::string& id) const;

private:
    std::map<std::string, std::string> templates_;
};

// Meta entries as "key: value" lines in key order, followed by the text.
std::string compose_text(const MetaMap& meta, const std::string& text);

std::string media_type_for(const std::string& image_ref);

struct RequestOptions {
    bool inline_images = true;
    bool return_attention = false;
};

// request_id is "<condition>/<sample_id>", stable across resends and runs.
PredictRequest build_request(const Manifest& manifest, const ProbeInstance& instance,
                             const std::string& instruction, const RequestOptions& options);

}  // namespace smsprobe
