#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "smsprobe/backend.hpp"
#include "smsprobe/manifest.hpp"

namespace smsprobe {

inline constexpr const char* kPositiveCue = "finding:positive";
inline constexpr const char* kNegativeCue = "finding:negative";

struct SyntheticManifestSpec {
    std::size_t n_per_class = 1;
    std::uint64_t seed = 0;
    std::string dataset_name = "synthetic";
};

// Writes `<dir>/manifest.jsonl` and `<dir>/images/<id>.bin` stub payloads.
// Labels go 1,1,..,0,0; each text carries the matching cue token and each
// stub carries the matching cue byte. Output depends only on the spec.
Manifest generate_manifest(const SyntheticManifestSpec& spec, const std::filesystem::path& dir);

// Stub image layout: 8-byte magic "SMSSTUB1", one cue byte (0 or 1), padding.
std::string make_image_stub(int label, std::uint64_t padding_seed);
std::optional<int> image_cue(std::string_view bytes);
// Cue token found in the text; if both appear the first one wins.
std::optional<int> text_cue(std::string_view text);

enum class OracleKind { Text, Image, Fusion, CalibratedNoise, Inverted };

struct OracleSpec {
    OracleKind kind = OracleKind::Text;
    double w_text = 0.5;     // Fusion only
    std::uint64_t seed = 0;  // Fusion / CalibratedNoise / Inverted
    double margin = 4.0;     // logit gap for confident answers
    ModelCapabilities capabilities{"mock-text", true, true, true,
                                   "fixture: fixed synthetic attention rows"};
};

// "text", "image", "fusion:<w>", "noise", "inverted".
OracleSpec parse_oracle(std::string_view name, std::uint64_t seed);

// Deterministic unit-interval draws keyed by (seed, request digest, stream).
// Concurrency and request order cannot change them.
double keyed_uniform(std::uint64_t seed, std::string_view digest, unsigned stream);

// True when the fusion oracle answers from the text for the request with
// this canonical digest.
bool fusion_consults_text(std::uint64_t seed, double w_text, std::string_view digest);

// The oracle as an in-process backend. Thread-safe.
class MockBackend : public Backend {
public:
    explicit MockBackend(OracleSpec spec);

    ModelCapabilities capabilities() override;
    ModelResponse predict(const PredictRequest& request) override;

    // Every predict that reached the backend, and the ones it answered.
    std::size_t predict_calls() const { return predict_calls_.load(); }
    std::size_t answered() const { return answered_.load(); }

    // After `n` answered predicts every further predict throws TransportError
    // (503 over HTTP). Used to simulate an aborted run.
    void fail_after(std::optional<std::size_t> n);

    const OracleSpec& spec() const { return spec_; }

private:
    OracleSpec spec_;
    std::atomic<std::size_t> predict_calls_{0};
    std::atomic<std::size_t> answered_{0};
    std::atomic<long long> fail_after_{-1};
};

// MockBackend served over HTTP: GET /capabilities, POST /predict, GET /calls.
class MockServer {
public:
    explicit MockServer(OracleSpec spec);
    ~MockServer();

    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    // Binds 127.0.0.1 (port 0 picks a free one) and serves on a background
    // thread. Returns the bound port. Throws TransportError on bind failure.
    int start(int port = 0, const std::string& host = "127.0.0.1");
    // Serves on the calling thread until stop() is called elsewhere.
    void listen_blocking(int port, const std::string& host = "0.0.0.0");
    void stop();

    std::string endpoint() const;
    MockBackend& backend() { return *backend_; }

private:
    void install_routes();

    std::unique_ptr<MockBackend> backend_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
    int port_ = 0;
    std::string host_;
};

}  // namespace smsprobe
