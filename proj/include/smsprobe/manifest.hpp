#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace smsprobe {

using MetaMap = std::map<std::string, std::string>;

struct SampleRecord {
    std::string id;
    std::string image_ref;  // path (relative to the manifest) or URI
    std::string text;
    int label = 0;          // 0 or 1
    MetaMap meta;

    friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

// A loaded dataset. Record order is file order; pairing depends on it.
struct Manifest {
    std::string dataset_name;
    std::string prompt_template_id = "default";
    bool allow_empty_text = false;
    bool allow_empty_image = false;
    std::filesystem::path base_dir;  // directory relative image_refs resolve against
    std::vector<SampleRecord> records;

    const SampleRecord* find(const std::string& id) const;
    std::filesystem::path resolve_image(const SampleRecord& record) const;

    friend bool operator==(const Manifest& a, const Manifest& b) {
        return a.dataset_name == b.dataset_name && a.prompt_template_id == b.prompt_template_id &&
               a.allow_empty_text == b.allow_empty_text && a.allow_empty_image == b.allow_empty_image &&
               a.records == b.records;
    }
};

// Parses a line-delimited manifest. An optional first line of the form
// {"manifest": {"dataset_name": ..., "prompt_template_id": ...,
//               "allow_empty_text": bool, "allow_empty_image": bool}}
// sets dataset-level fields; every other non-blank line is one record.
// Unknown record fields are kept in meta (non-string values as their JSON text).
// Throws DataError with the 1-based line number on any defect.
Manifest parse_manifest(const std::string& content, const std::string& default_name = "dataset");
Manifest load_manifest(const std::filesystem::path& path);

// Inverse of parse_manifest: header line followed by one record per line.
std::string serialize_manifest(const Manifest& manifest);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

struct ValidationReport {
    std::size_t count_negative = 0;
    std::size_t count_positive = 0;
    std::vector<std::string> defects;

    bool ok() const { return defects.empty(); }
};

ValidationReport validate_for_sms(const Manifest& manifest);

}  // namespace smsprobe
