// sms-probe: selective modality shifting diagnostics for binary multimodal classifiers.

#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "smsprobe/backend.hpp"
#include "smsprobe/error.hpp"
#include "smsprobe/manifest.hpp"
#include "smsprobe/oracles.hpp"
#include "smsprobe/report.hpp"
#include "smsprobe/sms.hpp"
#include "smsprobe/store.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kTransport = 3 };

struct Globals {
    std::uint64_t seed = 0;
    std::string out_dir = "sms-out";
    std::string patterns;
    std::string templates;
};

struct EvalArgs {
    std::string manifest;
    std::string plan;
    std::string conditions = "no_shift,text_shift,image_shift,only_text,only_image";
    std::string endpoint;
    std::string record;
    std::string replay;
    std::string store;
    std::size_t parallel = 4;
    long timeout_ms = 30000;
    int retries = 2;
    bool attention = false;
    bool path_images = false;
};

smsprobe::RunConfig make_config(const Globals& g, const EvalArgs& a) {
    smsprobe::RunConfig cfg;
    cfg.conditions = smsprobe::parse_condition_list(a.conditions);
    if (!g.patterns.empty()) cfg.patterns = smsprobe::PatternConfig::load(g.patterns);
    if (!g.templates.empty()) cfg.templates = smsprobe::TemplateSet::load(g.templates);
    cfg.parallel = a.parallel;
    cfg.request_attention = a.attention;
    cfg.inline_images = !a.path_images;
    return cfg;
}

std::optional<smsprobe::PairPlan> maybe_plan(const std::string& path) {
    if (path.empty()) return std::nullopt;
    return smsprobe::load_plan(path);
}

void print_summary(const smsprobe::RunReport& report, const smsprobe::RunStats& stats) {
    std::cerr << "model " << report.model_id << ", dataset " << report.dataset_name << ": " << stats.requests
              << " requests, " << stats.cache_hits << " from store, " << stats.backend_calls << " backend calls\n";
    for (const auto& [c, r] : report.results) {
        std::cerr << "  " << smsprobe::to_string(c) << ": accuracy " << r.metrics.accuracy << ", f1 " << r.metrics.f1
                  << ", ece " << r.calibration.ece;
        if (auto it = report.nfr.find(c); it != report.nfr.end()) std::cerr << ", nfr " << it->second.nfr_paper;
        std::cerr << "\n";
    }
    for (const auto& s : report.skipped)
        std::cerr << "  " << smsprobe::to_string(s.condition) << ": skipped (" << s.reason << ")\n";
}

void add_eval_options(CLI::App* cmd, EvalArgs& a) {
    cmd->add_option("--manifest", a.manifest, "Line-delimited manifest")->required();
    cmd->add_option("--plan", a.plan, "Pair plan JSON from `pairs`");
    cmd->add_option("--conditions", a.conditions, "Comma-separated conditions");
    cmd->add_flag("--attention", a.attention, "Request attention bundles when the backend supports them");
    cmd->add_flag("--path-images", a.path_images, "Send image paths instead of inline bytes");
    cmd->add_option("--parallel", a.parallel, "Maximum in-flight requests")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Selective modality shifting diagnostics for multimodal binary classifiers"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Seed for pairing and mock oracles")->capture_default_str();
    app.add_option("--out-dir", g.out_dir, "Directory for report outputs")->capture_default_str();
    app.add_option("--patterns", g.patterns, "Answer pattern file (<verdict>\\t<pattern> per line)");
    app.add_option("--template", g.templates, "Instruction template JSON file");
    app.fallthrough();

    // pairs
    auto* pairs = app.add_subcommand("pairs", "Build a donor pair plan");
    std::string pairs_manifest, pairs_out, recipients = "all";
    pairs->add_option("--manifest", pairs_manifest)->required();
    pairs->add_option("--recipients", recipients, "all|positive")->check(CLI::IsMember({"all", "positive"}));
    pairs->add_option("--out", pairs_out, "Plan output path")->required();

    // run
    EvalArgs run_args;
    auto* run = app.add_subcommand("run", "Evaluate against a backend, recording responses");
    add_eval_options(run, run_args);
    run->add_option("--endpoint", run_args.endpoint, "Backend base URL, e.g. http://127.0.0.1:8080");
    run->add_option("--record", run_args.record, "Response store to append to");
    run->add_option("--replay", run_args.replay, "Answer only from this store; no network");
    run->add_option("--timeout-ms", run_args.timeout_ms)->check(CLI::PositiveNumber);
    run->add_option("--retries", run_args.retries)->check(CLI::NonNegativeNumber);

    // report / replay
    EvalArgs report_args;
    auto* report = app.add_subcommand("report", "Recompute report files from a response store");
    add_eval_options(report, report_args);
    report->add_option("--store", report_args.store)->required();

    EvalArgs replay_args;
    auto* replay = app.add_subcommand("replay", "Re-evaluate from a store and print the report JSON");
    add_eval_options(replay, replay_args);
    replay->add_option("--store", replay_args.store)->required();

    // serve-mock
    auto* serve = app.add_subcommand("serve-mock", "Serve an oracle backend over HTTP");
    std::string oracle = "text", host = "127.0.0.1";
    int port = 8080;
    bool no_text_only = false, no_image_only = false, no_attention = false;
    serve->add_option("--oracle", oracle, "text|image|fusion:<w>|noise|inverted")->capture_default_str();
    serve->add_option("--port", port)->capture_default_str();
    serve->add_option("--host", host)->capture_default_str();
    serve->add_flag("--no-text-only", no_text_only, "Declare text-only input unsupported");
    serve->add_flag("--no-image-only", no_image_only, "Declare image-only input unsupported");
    serve->add_flag("--no-attention", no_attention, "Declare attention unsupported");

    // synth
    auto* synth = app.add_subcommand("synth", "Write a synthetic cue-bearing manifest");
    std::size_t n_per_class = 100;
    std::string synth_dir;
    synth->add_option("--n-per-class", n_per_class)->capture_default_str();
    synth->add_option("--dir", synth_dir)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*pairs) {
            auto m = smsprobe::load_manifest(pairs_manifest);
            auto check = smsprobe::validate_for_sms(m);
            for (const auto& d : check.defects) std::cerr << "manifest defect: " << d << "\n";
            auto plan = smsprobe::build_pair_plan(m, g.seed, smsprobe::parse_recipient_mode(recipients));
            smsprobe::save_plan(plan, pairs_out);
            std::cerr << "wrote " << plan.assignments.size() << " assignments to " << pairs_out << "\n";
        } else if (*run) {
            auto m = smsprobe::load_manifest(run_args.manifest);
            auto plan = maybe_plan(run_args.plan);
            auto cfg = make_config(g, run_args);
            smsprobe::RunStats stats;
            smsprobe::RunReport rep;
            if (!run_args.replay.empty()) {
                smsprobe::ResponseStore store(run_args.replay);
                rep = smsprobe::run_evaluation(m, plan ? &*plan : nullptr, nullptr, &store, cfg, &stats);
            } else {
                if (run_args.endpoint.empty()) {
                    std::cerr << "run: --endpoint is required unless --replay is given\n";
                    return kUsage;
                }
                smsprobe::ClientOptions opts;
                opts.timeout = std::chrono::milliseconds(run_args.timeout_ms);
                opts.retries = run_args.retries;
                smsprobe::HttpBackend backend(run_args.endpoint, opts);
                std::unique_ptr<smsprobe::ResponseStore> store =
                    run_args.record.empty() ? std::make_unique<smsprobe::ResponseStore>()
                                            : std::make_unique<smsprobe::ResponseStore>(run_args.record);
                rep = smsprobe::run_evaluation(m, plan ? &*plan : nullptr, &backend, store.get(), cfg, &stats);
            }
            smsprobe::emit(rep, g.out_dir);
            print_summary(rep, stats);
        } else if (*report || *replay) {
            const EvalArgs& a = *report ? report_args : replay_args;
            auto m = smsprobe::load_manifest(a.manifest);
            auto plan = maybe_plan(a.plan);
            smsprobe::ResponseStore store(a.store);
            smsprobe::RunStats stats;
            auto rep = smsprobe::run_evaluation(m, plan ? &*plan : nullptr, nullptr, &store, make_config(g, a), &stats);
            if (*report) {
                for (const auto& p : smsprobe::emit(rep, g.out_dir)) std::cout << p.string() << "\n";
            } else {
                std::cout << smsprobe::report_json_text(rep);
            }
        } else if (*serve) {
            auto spec = smsprobe::parse_oracle(oracle, g.seed);
            spec.capabilities.supports_text_only = !no_text_only;
            spec.capabilities.supports_image_only = !no_image_only;
            spec.capabilities.supports_attention = !no_attention;
            smsprobe::MockServer server(spec);
            std::cerr << "serving " << spec.capabilities.model_id << " on " << host << ":" << port << "\n";
            server.listen_blocking(port, host);
        } else if (*synth) {
            smsprobe::SyntheticManifestSpec spec;
            spec.n_per_class = n_per_class;
            spec.seed = g.seed;
            auto m = smsprobe::generate_manifest(spec, synth_dir);
            std::cerr << "wrote " << m.records.size() << " records to " << synth_dir << "/manifest.jsonl\n";
        }
    } catch (const smsprobe::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    } catch (const smsprobe::TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return kTransport;
    } catch (const smsprobe::ProtocolError& e) {
        std::cerr << "protocol error: " << e.what() << "\n";
        return kTransport;
    }
    return kOk;
}
