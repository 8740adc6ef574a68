#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "smsprobe/protocol.hpp"

namespace smsprobe {

// Content-addressed response cache persisted as an append-only JSON-lines
// file. Each line is either {"hash": <hex>, "response": {...}} or
// {"capabilities": {...}}. A truncated final line (an interrupted write) is
// ignored on load; any other malformed line is a DataError.
class ResponseStore {
public:
    ResponseStore() = default;  // in-memory only
    explicit ResponseStore(std::filesystem::path path);

    ResponseStore(const ResponseStore&) = delete;
    ResponseStore& operator=(const ResponseStore&) = delete;

    // Appends and flushes. Recording a hash twice keeps the first response.
    void record(const PredictRequest& request, const ModelResponse& response);
    void record_hash(const std::string& hash, const ModelResponse& response);

    // The stored response exactly as recorded.
    std::optional<ModelResponse> find(const PredictRequest& request) const;
    std::optional<ModelResponse> find_hash(const std::string& hash) const;

    // Like find, but a miss throws DataError naming the digest.
    ModelResponse replay(const PredictRequest& request) const;

    void set_capabilities(const ModelCapabilities& caps);
    std::optional<ModelCapabilities> capabilities() const;

    std::size_t size() const;
    // (hash, response) pairs in insertion order.
    std::vector<std::pair<std::string, ModelResponse>> entries() const;

    const std::filesystem::path& path() const { return path_; }

private:
    void append_line(const std::string& line);

    std::filesystem::path path_;
    mutable std::mutex mutex_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::pair<std::string, ModelResponse>> entries_;
    std::optional<ModelCapabilities> caps_;
};

}  // namespace smsprobe
