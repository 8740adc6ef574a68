#include "smsprobe/oracles.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "httplib.h"
#include "smsprobe/canonical_json.hpp"
#include "smsprobe/error.hpp"

namespace smsprobe {

namespace {

constexpr std::string_view kStubMagic = "SMSSTUB1";
constexpr std::size_t kStubPadding = 23;

constexpr std::array<std::string_view, 8> kFindings{
    "Lungs are clear bilaterally.",      "Mild cardiomegaly is noted.",
    "Small left pleural effusion.",      "Patchy opacity in the right base.",
    "Optic disc cupping is documented.", "Intraocular pressure was recorded.",
    "Heart size within normal limits.",  "Follow-up imaging was requested.",
};

double to_unit(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

}  // namespace

std::string make_image_stub(int label, std::uint64_t padding_seed) {
    std::string out(kStubMagic);
    out += static_cast<char>(label ? 1 : 0);
    std::mt19937_64 rng(padding_seed);
    for (std::size_t i = 0; i < kStubPadding; ++i) out += static_cast<char>(rng() & 0xff);
    return out;
}

std::optional<int> image_cue(std::string_view bytes) {
    if (bytes.size() <= kStubMagic.size() || bytes.substr(0, kStubMagic.size()) != kStubMagic) return std::nullopt;
    auto cue = static_cast<unsigned char>(bytes[kStubMagic.size()]);
    if (cue > 1) return std::nullopt;
    return static_cast<int>(cue);
}

std::optional<int> text_cue(std::string_view text) {
    auto pos = text.find(kPositiveCue);
    auto neg = text.find(kNegativeCue);
    if (pos == std::string_view::npos && neg == std::string_view::npos) return std::nullopt;
    return pos < neg ? 1 : 0;
}

Manifest generate_manifest(const SyntheticManifestSpec& spec, const std::filesystem::path& dir) {
    if (spec.n_per_class == 0) throw DataError("synthetic manifest needs at least one record per class");
    std::error_code ec;
    std::filesystem::create_directories(dir / "images", ec);
    if (ec) throw DataError("cannot create " + (dir / "images").string() + ": " + ec.message());

    Manifest m;
    m.dataset_name = spec.dataset_name;
    m.base_dir = dir;
    std::mt19937_64 rng(spec.seed);
    const std::size_t total = 2 * spec.n_per_class;
    for (std::size_t i = 0; i < total; ++i) {
        SampleRecord r;
        char id[32];
        std::snprintf(id, sizeof id, "s%05zu", i);
        r.id = id;
        r.label = i < spec.n_per_class ? 1 : 0;
        r.image_ref = "images/" + r.id + ".bin";
        r.text = "Clinical note. " + std::string(kFindings[rng() % kFindings.size()]) + " " +
                 std::string(kFindings[rng() % kFindings.size()]) + " " +
                 (r.label ? kPositiveCue : kNegativeCue) + ".";
        r.meta["age"] = std::to_string(40 + rng() % 45);
        r.meta["sex"] = (rng() & 1) ? "F" : "M";

        auto path = dir / r.image_ref;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << make_image_stub(r.label, rng());
        if (!out) throw DataError("cannot write image stub " + path.string());
        m.records.push_back(std::move(r));
    }
    save_manifest(m, dir / "manifest.jsonl");
    return m;
}

OracleSpec parse_oracle(std::string_view name, std::uint64_t seed) {
    OracleSpec spec;
    spec.seed = seed;
    if (name == "text") {
        spec.kind = OracleKind::Text;
    } else if (name == "image") {
        spec.kind = OracleKind::Image;
    } else if (name == "noise") {
        spec.kind = OracleKind::CalibratedNoise;
    } else if (name == "inverted") {
        spec.kind = OracleKind::Inverted;
    } else if (name.substr(0, 7) == "fusion:") {
        spec.kind = OracleKind::Fusion;
        std::string w(name.substr(7));
        char* end = nullptr;
        spec.w_text = std::strtod(w.c_str(), &end);
        if (w.empty() || *end != '\0' || !(spec.w_text >= 0.0 && spec.w_text <= 1.0))
            throw DataError("fusion weight must be in [0, 1], got '" + w + "'");
    } else {
        throw DataError("unknown oracle '" + std::string(name) + "' (text|image|fusion:<w>|noise|inverted)");
    }
    spec.capabilities.model_id = "mock-" + std::string(name);
    return spec;
}

double keyed_uniform(std::uint64_t seed, std::string_view digest, unsigned stream) {
    std::uint64_t key = 0;
    const auto prefix = digest.substr(0, 16);
    for (char c : prefix) {
        key <<= 4;
        if (c >= '0' && c <= '9') key |= static_cast<std::uint64_t>(c - '0');
        else if (c >= 'a' && c <= 'f') key |= static_cast<std::uint64_t>(c - 'a' + 10);
    }
    std::mt19937_64 rng(seed ^ key);
    std::uint64_t x = rng();
    for (unsigned i = 0; i < stream; ++i) x = rng();
    return to_unit(x);
}

bool fusion_consults_text(std::uint64_t seed, double w_text, std::string_view digest) {
    return keyed_uniform(seed, digest, 0) < w_text;
}

MockBackend::MockBackend(OracleSpec spec) : spec_(std::move(spec)) {}

ModelCapabilities MockBackend::capabilities() { return spec_.capabilities; }

void MockBackend::fail_after(std::optional<std::size_t> n) {
    fail_after_ = n ? static_cast<long long>(*n) : -1;
}

namespace {

AttentionBundle fixture_attention(const PredictRequest& req, const std::string& generated, OracleKind kind) {
    AttentionBundle b;
    b.roles.push_back(TokenRole::Bos);
    if (req.text) {
        std::istringstream words(*req.text);
        std::string w;
        while (b.n_text < 8 && words >> w) {
            b.roles.push_back(TokenRole::Text);
            ++b.n_text;
        }
    }
    if (req.image) {
        for (int i = 0; i < 4; ++i) b.roles.push_back(TokenRole::Image);
        b.n_image = 4;
    }
    std::istringstream gen(generated);
    std::string tok;
    while (b.tokens.size() < 6 && gen >> tok) b.tokens.push_back(tok);

    const double base = kind == OracleKind::Text ? 0.8 : kind == OracleKind::Image ? 0.2 : 0.6;
    for (std::size_t t = 0; t < b.tokens.size(); ++t) {
        double text_frac = base + 0.05 * (static_cast<double>(t % 3) - 1.0);
        if (b.n_image == 0) text_frac = 1.0;
        if (b.n_text == 0) text_frac = 0.0;
        std::vector<double> row;
        for (auto role : b.roles) {
            if (role == TokenRole::Bos) row.push_back(0.3);
            else if (role == TokenRole::Text) row.push_back(0.7 * text_frac / static_cast<double>(b.n_text));
            else row.push_back(0.7 * (1.0 - text_frac) / static_cast<double>(b.n_image));
        }
        b.rows.push_back(std::move(row));
    }
    return b;
}

}  // namespace

ModelResponse MockBackend::predict(const PredictRequest& req) {
    ++predict_calls_;
    validate(req);
    check_capabilities(req, spec_.capabilities);
    if (fail_after_ >= 0) {
        // Reserve a slot first so concurrent callers cannot overshoot the budget.
        auto slot = answered_++;
        if (static_cast<long long>(slot) >= fail_after_.load()) {
            --answered_;
            throw TransportError("mock: injected failure");
        }
    } else {
        ++answered_;
    }

    const std::string digest = canonical_hash(req);
    std::optional<int> from_text = req.text ? text_cue(*req.text) : std::nullopt;
    std::optional<int> from_image = req.image ? image_cue(image_bytes(*req.image)) : std::nullopt;

    std::optional<int> answer;
    double margin = spec_.margin;
    switch (spec_.kind) {
        case OracleKind::Text:
            answer = from_text;
            break;
        case OracleKind::Image:
            answer = from_image;
            break;
        case OracleKind::Fusion: {
            bool use_text = fusion_consults_text(spec_.seed, spec_.w_text, digest);
            answer = use_text ? (from_text ? from_text : from_image) : (from_image ? from_image : from_text);
            break;
        }
        case OracleKind::CalibratedNoise:
        case OracleKind::Inverted: {
            auto truth = from_text ? from_text : from_image;
            if (!truth) break;
            const double c = 0.5 + 0.49 * keyed_uniform(spec_.seed, digest, 1);
            const double p_correct = spec_.kind == OracleKind::CalibratedNoise ? c : 1.0 - c;
            const bool correct = keyed_uniform(spec_.seed, digest, 2) < p_correct;
            answer = correct ? *truth : 1 - *truth;
            margin = std::log(c / (1.0 - c));
            break;
        }
    }

    ModelResponse resp;
    resp.request_id = req.request_id;
    if (!answer) {
        resp.generated_text = "Unable to determine from the provided input.";
    } else if (*answer == 1) {
        resp.generated_text = "Yes, the patient presents abnormal findings.";
        resp.first_token_logits = {margin, 0.0};
    } else {
        resp.generated_text = "No, there are no abnormal findings.";
        resp.first_token_logits = {0.0, margin};
    }
    if (req.return_attention) resp.attention = fixture_attention(req, resp.generated_text, spec_.kind);
    return resp;
}

struct MockServer::Impl {
    httplib::Server server;
};

MockServer::MockServer(OracleSpec spec)
    : backend_(std::make_unique<MockBackend>(std::move(spec))), impl_(std::make_unique<Impl>()) {
    install_routes();
}

MockServer::~MockServer() { stop(); }

void MockServer::install_routes() {
    auto& srv = impl_->server;
    auto json_reply = [](httplib::Response& res, int status, const nlohmann::json& body) {
        res.status = status;
        res.set_content(canonical_dump(body), "application/json");
    };
    srv.Get("/capabilities", [this, json_reply](const httplib::Request&, httplib::Response& res) {
        json_reply(res, 200, to_json(backend_->capabilities()));
    });
    srv.Get("/calls", [this, json_reply](const httplib::Request&, httplib::Response& res) {
        json_reply(res, 200, {{"predict", backend_->predict_calls()}, {"answered", backend_->answered()}});
    });
    srv.Post("/predict", [this, json_reply](const httplib::Request& req, httplib::Response& res) {
        try {
            auto request = request_from_json(nlohmann::json::parse(req.body));
            json_reply(res, 200, to_json(backend_->predict(request)));
        } catch (const nlohmann::json::exception& e) {
            json_reply(res, 400, {{"error", std::string("malformed JSON: ") + e.what()}});
        } catch (const ValidationError& e) {
            json_reply(res, 422, {{"error", e.what()}});
        } catch (const TransportError& e) {
            json_reply(res, 503, {{"error", e.what()}});
        } catch (const Error& e) {
            json_reply(res, 400, {{"error", e.what()}});
        }
    });
}

int MockServer::start(int port, const std::string& host) {
    auto& srv = impl_->server;
    host_ = host;
    if (port == 0) {
        port_ = srv.bind_to_any_port(host);
        if (port_ < 0) throw TransportError("mock: cannot bind " + host);
    } else {
        if (!srv.bind_to_port(host, port)) throw TransportError("mock: cannot bind " + host + ":" + std::to_string(port));
        port_ = port;
    }
    thread_ = std::thread([&srv] { srv.listen_after_bind(); });
    srv.wait_until_ready();
    return port_;
}

void MockServer::listen_blocking(int port, const std::string& host) {
    host_ = host;
    port_ = port;
    if (!impl_->server.listen(host, port))
        throw TransportError("mock: cannot listen on " + host + ":" + std::to_string(port));
}

void MockServer::stop() {
    if (impl_) impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

std::string MockServer::endpoint() const {
    const std::string host = host_ == "0.0.0.0" ? "127.0.0.1" : host_;
    return "http://" + host + ":" + std::to_string(port_);
}

}  // namespace smsprobe
