#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "smsprobe/protocol.hpp"

namespace smsprobe {

// Anything that answers the inference protocol: an HTTP endpoint or an
// in-process mock.
class Backend {
public:
    virtual ~Backend() = default;
    virtual ModelCapabilities capabilities() = 0;
    // Must be safe to call concurrently.
    virtual ModelResponse predict(const PredictRequest& request) = 0;
};

struct ClientOptions {
    std::chrono::milliseconds timeout{30000};
    int retries = 2;  // resends after the first attempt
    std::chrono::milliseconds retry_backoff{50};
};

// Speaks `GET /capabilities` and `POST /predict` against `endpoint`
// (e.g. "http://127.0.0.1:8080"). Each predict call validates the request,
// checks it against the capabilities fetched at construction time, and only
// then sends it. Retries resend the identical body.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(std::string endpoint, ClientOptions options = {});

    ModelCapabilities capabilities() override;
    ModelResponse predict(const PredictRequest& request) override;

    const std::string& endpoint() const { return endpoint_; }

private:
    std::string endpoint_;
    ClientOptions options_;
    ModelCapabilities caps_;
};

// One-shot capability fetch. TransportError if unreachable, ProtocolError if
// the body is malformed or lacks a field.
ModelCapabilities fetch_capabilities(const std::string& endpoint, ClientOptions options = {});

// One-shot predict with validation. No capability check (see HttpBackend).
ModelResponse predict(const std::string& endpoint, const PredictRequest& request,
                      ClientOptions options = {});

// Predict with an explicit capability check before sending.
ModelResponse predict(const std::string& endpoint, const PredictRequest& request,
                      const ModelCapabilities& caps, ClientOptions options = {});

}  // namespace smsprobe
