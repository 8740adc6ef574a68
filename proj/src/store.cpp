#include "smsprobe/store.hpp"

#include <fstream>
#include <sstream>

#include "smsprobe/canonical_json.hpp"
#include "smsprobe/error.hpp"

namespace smsprobe {

ResponseStore::ResponseStore(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;  // a fresh store

    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    const bool ends_with_newline = [&] {
        in.clear();
        in.seekg(0, std::ios::end);
        if (in.tellg() <= 0) return true;
        in.seekg(-1, std::ios::end);
        return in.get() == '\n';
    }();

    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const bool last = i + 1 == lines.size();
        try {
            auto j = nlohmann::json::parse(lines[i]);
            if (j.contains("capabilities")) {
                caps_ = capabilities_from_json(j.at("capabilities"));
                continue;
            }
            auto hash = j.at("hash").get<std::string>();
            auto resp = response_from_json(j.at("response"));
            if (!index_.count(hash)) {
                index_[hash] = entries_.size();
                entries_.emplace_back(std::move(hash), std::move(resp));
            }
        } catch (const std::exception& e) {
            if (last && !ends_with_newline) break;  // interrupted append
            throw DataError("response store " + path_.string() + " line " + std::to_string(i + 1) + ": " +
                            e.what());
        }
    }
    if (!ends_with_newline && !lines.empty()) {
        // Drop the partial tail so the next append starts on a fresh line.
        std::string kept;
        for (std::size_t i = 0; i + 1 < lines.size(); ++i) kept += lines[i] + "\n";
        in.close();
        std::ofstream out(path_, std::ios::binary | std::ios::trunc);
        out << kept;
        if (!out) throw DataError("cannot repair response store " + path_.string());
    }
}

void ResponseStore::append_line(const std::string& line) {
    if (path_.empty()) return;
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    out << line << '\n';
    out.flush();
    if (!out) throw DataError("cannot append to response store " + path_.string());
}

void ResponseStore::record_hash(const std::string& hash, const ModelResponse& response) {
    std::lock_guard lock(mutex_);
    if (index_.count(hash)) return;
    append_line(canonical_dump({{"hash", hash}, {"response", to_json(response)}}));
    index_[hash] = entries_.size();
    entries_.emplace_back(hash, response);
}

void ResponseStore::record(const PredictRequest& request, const ModelResponse& response) {
    record_hash(canonical_hash(request), response);
}

std::optional<ModelResponse> ResponseStore::find_hash(const std::string& hash) const {
    std::lock_guard lock(mutex_);
    auto it = index_.find(hash);
    if (it == index_.end()) return std::nullopt;
    return entries_[it->second].second;
}

std::optional<ModelResponse> ResponseStore::find(const PredictRequest& request) const {
    return find_hash(canonical_hash(request));
}

ModelResponse ResponseStore::replay(const PredictRequest& request) const {
    auto hash = canonical_hash(request);
    auto hit = find_hash(hash);
    if (!hit) throw DataError("cache miss for request '" + request.request_id + "' (digest " + hash + ")");
    return *hit;
}

void ResponseStore::set_capabilities(const ModelCapabilities& caps) {
    std::lock_guard lock(mutex_);
    if (caps_ && *caps_ == caps) return;
    append_line(canonical_dump({{"capabilities", to_json(caps)}}));
    caps_ = caps;
}

std::optional<ModelCapabilities> ResponseStore::capabilities() const {
    std::lock_guard lock(mutex_);
    return caps_;
}

std::size_t ResponseStore::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::vector<std::pair<std::string, ModelResponse>> ResponseStore::entries() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

}  // namespace smsprobe
