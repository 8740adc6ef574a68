#include "smsprobe/backend.hpp"

#include <thread>

#include "httplib.h"
#include "smsprobe/canonical_json.hpp"
#include "smsprobe/error.hpp"

namespace smsprobe {

namespace {

httplib::Client make_client(const std::string& endpoint, const ClientOptions& opt) {
    httplib::Client cli(endpoint);
    if (!cli.is_valid()) throw TransportError("invalid endpoint '" + endpoint + "'");
    auto sec = std::chrono::duration_cast<std::chrono::seconds>(opt.timeout);
    auto usec = std::chrono::duration_cast<std::chrono::microseconds>(opt.timeout - sec);
    cli.set_connection_timeout(sec.count(), usec.count());
    cli.set_read_timeout(sec.count(), usec.count());
    cli.set_write_timeout(sec.count(), usec.count());
    return cli;
}

nlohmann::json parse_body(const std::string& body, const std::string& what) {
    try {
        return nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw ProtocolError(what + ": malformed JSON body: " + e.what());
    }
}

// Issues `call` up to 1 + retries times. Transport failures and 5xx statuses
// are retried; 4xx statuses are protocol errors and are not.
template <typename Call>
std::string with_retries(const std::string& what, const ClientOptions& opt, Call&& call) {
    std::string last;
    for (int attempt = 0; attempt <= opt.retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(opt.retry_backoff * attempt);
        httplib::Result res = call();
        if (!res) {
            last = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) return res->body;
        if (res->status >= 400 && res->status < 500)
            throw ProtocolError(what + ": HTTP " + std::to_string(res->status) + ": " + res->body);
        last = "HTTP " + std::to_string(res->status);
    }
    throw TransportError(what + ": " + last + " after " + std::to_string(opt.retries + 1) + " attempt(s)");
}

}  // namespace

ModelCapabilities fetch_capabilities(const std::string& endpoint, ClientOptions options) {
    auto body = with_retries("GET " + endpoint + "/capabilities", options, [&] {
        auto cli = make_client(endpoint, options);
        return cli.Get("/capabilities");
    });
    return capabilities_from_json(parse_body(body, "capabilities"));
}

ModelResponse predict(const std::string& endpoint, const PredictRequest& request, ClientOptions options) {
    validate(request);
    const std::string payload = canonical_dump(to_json(request));
    auto body = with_retries("POST " + endpoint + "/predict", options, [&] {
        auto cli = make_client(endpoint, options);
        return cli.Post("/predict", payload, "application/json");
    });
    ModelResponse resp = response_from_json(parse_body(body, "predict"));
    if (resp.request_id != request.request_id)
        throw ProtocolError("predict: response request_id '" + resp.request_id + "' does not echo '" +
                            request.request_id + "'");
    return resp;
}

ModelResponse predict(const std::string& endpoint, const PredictRequest& request, const ModelCapabilities& caps,
                      ClientOptions options) {
    validate(request);
    check_capabilities(request, caps);
    return predict(endpoint, request, options);
}

HttpBackend::HttpBackend(std::string endpoint, ClientOptions options)
    : endpoint_(std::move(endpoint)), options_(options), caps_(fetch_capabilities(endpoint_, options_)) {}

ModelCapabilities HttpBackend::capabilities() { return caps_; }

ModelResponse HttpBackend::predict(const PredictRequest& request) {
    return smsprobe::predict(endpoint_, request, caps_, options_);
}

}  // namespace smsprobe
