#include "smsprobe/report.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <memory>
#include <map>
#include <mutex>
#include <thread>

#include "smsprobe/canonical_json.hpp"
#include "smsprobe/error.hpp"

namespace smsprobe {

using nlohmann::json;

bool RunReport::has_attention() const {
    return std::any_of(results.begin(), results.end(), [](const auto& kv) { return kv.second.attention.has_value(); });
}

namespace {

struct Job {
    Condition condition;
    std::size_t index;  // into that condition's instance list
    PredictRequest request;
    std::string hash;
    std::optional<ModelResponse> response;
};

// Runs every job that has no response yet against `live`, at most `parallel`
// at a time. Identical requests share one backend call. The first failure
// stops new work from starting; it is rethrown once in-flight calls return.
void execute(std::vector<Job>& jobs, Backend& live, ResponseStore* store, std::size_t parallel, RunStats& stats) {
    std::map<std::string, std::size_t> first_by_hash;
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (jobs[i].response) continue;
        if (first_by_hash.emplace(jobs[i].hash, i).second) pending.push_back(i);
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::atomic<std::size_t> calls{0};

    auto worker = [&] {
        while (!abort) {
            const std::size_t k = next++;
            if (k >= pending.size()) return;
            Job& job = jobs[pending[k]];
            try {
                ++calls;
                ModelResponse resp = live.predict(job.request);
                if (resp.attention) validate(*resp.attention);
                if (store) store->record_hash(job.hash, resp);
                job.response = std::move(resp);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                abort = true;
            }
        }
    };

    const std::size_t n_threads = std::clamp<std::size_t>(parallel, 1, std::max<std::size_t>(pending.size(), 1));
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
    worker();
    for (auto& th : threads) th.join();
    stats.backend_calls += calls.load();
    if (failure) std::rethrow_exception(failure);

    for (auto& job : jobs)
        if (!job.response) job.response = jobs[first_by_hash.at(job.hash)].response;
}

std::optional<AttentionSummary> summarize_attention(const std::vector<SampleOutcome>& samples) {
    AttentionSummary summary;
    std::vector<ModalityShare> pooled;
    for (const auto& s : samples) {
        if (!s.attention) continue;
        ++summary.bundles;
        for (const auto& share : modality_shares(*s.attention)) {
            if (share.degenerate) ++summary.degenerate_rows;
            pooled.push_back(share);
        }
    }
    if (summary.bundles == 0) return std::nullopt;
    if (std::any_of(pooled.begin(), pooled.end(), [](const auto& s) { return !s.degenerate; }))
        summary.pooled = stability(pooled);
    return summary;
}

ConditionResult evaluate_condition(Condition c, const std::vector<ProbeInstance>& instances,
                                   const std::vector<const ModelResponse*>& responses, const PatternConfig& patterns) {
    ConditionResult result;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const ModelResponse& resp = *responses[i];
        SampleOutcome s;
        s.sample_id = instances[i].sample_id;
        s.label = instances[i].label;
        s.verdict = map_answer(resp.generated_text, patterns);
        s.y_hat = to_label(s.verdict.verdict);
        s.first_token = softmax2(resp.first_token_logits.yes, resp.first_token_logits.no);
        s.attention = resp.attention;
        result.samples.push_back(std::move(s));
    }
    std::sort(result.samples.begin(), result.samples.end(),
              [](const SampleOutcome& a, const SampleOutcome& b) { return a.sample_id < b.sample_id; });

    std::vector<PredictionRecord> records;
    std::vector<FirstTokenProb> probs;
    std::vector<NormalizedAnswer> verdicts;
    std::vector<int> first_token_pred;
    std::unique_ptr<bool[]> correct(new bool[result.samples.size()]);
    for (std::size_t i = 0; i < result.samples.size(); ++i) {
        const auto& s = result.samples[i];
        records.push_back(make_prediction(s.sample_id, c, s.verdict, s.label));
        probs.push_back(s.first_token);
        verdicts.push_back(s.verdict);
        first_token_pred.push_back(s.first_token.predicted);
        correct[i] = s.first_token.predicted == s.label;
    }
    result.metrics = metric_set(records);
    result.calibration = ece(probs, std::span<const bool>(correct.get(), result.samples.size()));
    result.agreement = agreement_rate(first_token_pred, verdicts);
    result.attention = summarize_attention(result.samples);
    return result;
}

std::vector<PredictionRecord> records_of(Condition c, const ConditionResult& r) {
    std::vector<PredictionRecord> out;
    for (const auto& s : r.samples) out.push_back(make_prediction(s.sample_id, c, s.verdict, s.label));
    return out;
}

}  // namespace

RunReport run_evaluation(const Manifest& manifest, const PairPlan* plan, Backend* live, ResponseStore* store,
                         const RunConfig& config, RunStats* stats_out) {
    ModelCapabilities caps;
    if (live) {
        caps = live->capabilities();
        if (store) store->set_capabilities(caps);
    } else if (store && store->capabilities()) {
        caps = *store->capabilities();
    } else {
        throw DataError("no backend and no recorded capabilities in the response store");
    }

    std::vector<Condition> conditions{Condition::NoShift};
    for (Condition c : kAllConditions)
        if (c != Condition::NoShift &&
            std::find(config.conditions.begin(), config.conditions.end(), c) != config.conditions.end())
            conditions.push_back(c);
    const bool needs_plan = std::any_of(conditions.begin(), conditions.end(), requires_plan);
    if (needs_plan && !plan) throw DataError("shift conditions requested but no pair plan supplied");
    if (plan) check_plan(manifest, *plan);
    if (manifest.records.empty()) throw DataError("manifest has no records");

    RunReport report;
    report.model_id = caps.model_id;
    report.dataset_name = manifest.dataset_name;
    report.attention_aggregation = caps.attention_aggregation;
    if (plan) {
        report.seed = plan->seed;
        report.recipient_mode = plan->recipient_mode;
    }

    const std::string& instruction = config.templates.instruction(manifest.prompt_template_id);
    RequestOptions options;
    options.inline_images = config.inline_images;
    options.return_attention = config.request_attention && caps.supports_attention;

    std::map<Condition, std::vector<ProbeInstance>> instances;
    std::vector<Job> jobs;
    for (Condition c : conditions) {
        if (c == Condition::OnlyText && !caps.supports_text_only) {
            report.skipped.push_back({c, "capability"});
            continue;
        }
        if (c == Condition::OnlyImage && !caps.supports_image_only) {
            report.skipped.push_back({c, "capability"});
            continue;
        }
        auto& list = instances[c] = materialize(manifest, plan, c);
        for (std::size_t i = 0; i < list.size(); ++i) {
            Job job{c, i, build_request(manifest, list[i], instruction, options), {}, {}};
            validate(job.request);
            check_capabilities(job.request, caps);
            job.hash = canonical_hash(job.request);
            jobs.push_back(std::move(job));
        }
    }

    RunStats stats;
    stats.requests = jobs.size();
    for (auto& job : jobs) {
        if (store) job.response = store->find_hash(job.hash);
        if (job.response) {
            ++stats.cache_hits;
        } else if (!live) {
            throw DataError("cache miss for request '" + job.request.request_id + "' (digest " + job.hash + ")");
        }
    }
    if (live) execute(jobs, *live, store, config.parallel, stats);
    if (stats_out) *stats_out = stats;

    std::map<Condition, std::vector<const ModelResponse*>> responses;
    for (auto& [c, list] : instances) responses[c].resize(list.size());
    for (const auto& job : jobs) responses[job.condition][job.index] = &*job.response;

    for (const auto& [c, list] : instances)
        report.results[c] = evaluate_condition(c, list, responses[c], config.patterns);

    const auto base = records_of(Condition::NoShift, report.results.at(Condition::NoShift));
    for (const auto& [c, result] : report.results) {
        if (c == Condition::NoShift) continue;
        report.nfr[c] = nfr(base, records_of(c, result));
    }
    return report;
}

namespace {

json stats_json(const ShareStats& s) {
    return {{"mean", s.mean}, {"variance", s.variance}, {"min", s.min}, {"max", s.max}};
}

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json report_to_json(const RunReport& report) {
    json conditions = json::object();
    json attention = json::object();
    for (const auto& [c, r] : report.results) {
        const auto& m = r.metrics;
        json bins = json::array();
        std::size_t ties = 0;
        for (const auto& s : r.samples)
            if (s.first_token.p_yes == s.first_token.p_no) ++ties;
        for (const auto& b : r.calibration.bins)
            bins.push_back({{"index", b.index},
                            {"lower", b.lower},
                            {"upper", b.upper},
                            {"count", b.count},
                            {"conf", b.count ? json(b.confidence) : json(nullptr)},
                            {"acc", b.count ? json(b.accuracy) : json(nullptr)}});
        json points = json::array();
        for (const auto& [conf, acc] : r.calibration.reliability_points) points.push_back({conf, acc});
        conditions[std::string(to_string(c))] = {
            {"metrics",
             {{"n", m.n}, {"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}, {"unparseable", m.unparseable},
              {"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}}},
            {"calibration",
             {{"ece", r.calibration.ece}, {"n", r.calibration.n}, {"bins", bins},
              {"reliability_points", points}, {"ties_predicted_no", ties}}},
            {"agreement",
             {{"rate", nullable(r.agreement.rate)},
              {"n_compared", r.agreement.n_compared},
              {"n_excluded", r.agreement.n_excluded}}}};
        if (r.attention) {
            json a = {{"bundles", r.attention->bundles}, {"degenerate_rows", r.attention->degenerate_rows}};
            if (r.attention->pooled) {
                a["rows"] = r.attention->pooled->rows;
                a["text"] = stats_json(r.attention->pooled->text);
                a["image"] = stats_json(r.attention->pooled->image);
            } else {
                a["rows"] = 0;
                a["text"] = nullptr;
                a["image"] = nullptr;
            }
            attention[std::string(to_string(c))] = a;
        }
    }
    json nfr_json = json::object();
    for (const auto& [c, n] : report.nfr)
        nfr_json[std::string(to_string(c))] = {{"n", n.n},
                                               {"base_correct", n.base_correct},
                                               {"flipped", n.flipped},
                                               {"nfr_paper", n.nfr_paper},
                                               {"nfr_conditional", nullable(n.nfr_conditional)}};
    json skipped = json::array();
    for (const auto& s : report.skipped)
        skipped.push_back({{"condition", std::string(to_string(s.condition))}, {"reason", s.reason}});

    return {{"model_id", report.model_id},
            {"dataset_name", report.dataset_name},
            {"seed", report.seed ? json(*report.seed) : json(nullptr)},
            {"recipient_mode",
             report.recipient_mode ? json(std::string(to_string(*report.recipient_mode))) : json(nullptr)},
            {"conditions", conditions},
            {"nfr", nfr_json},
            {"skipped", skipped},
            {"attention", attention.empty() ? json(nullptr)
                                            : json{{"aggregation", report.attention_aggregation},
                                                   {"per_condition", attention}}}};
}

std::string report_json_text(const RunReport& report) { return canonical_dump(report_to_json(report)) + "\n"; }

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

std::string metrics_csv(const RunReport& report) {
    std::string out = "condition,n,accuracy,precision,recall,f1,unparseable,nfr_paper,nfr_conditional\n";
    for (const auto& [c, r] : report.results) {
        const auto& m = r.metrics;
        out += std::string(to_string(c)) + "," + std::to_string(m.n) + "," + format_double(m.accuracy) + "," +
               format_double(m.precision) + "," + format_double(m.recall) + "," + format_double(m.f1) + "," +
               std::to_string(m.unparseable) + ",,\n";
    }
    for (const auto& [c, n] : report.nfr)
        out += "nfr:" + std::string(to_string(c)) + "," + std::to_string(n.n) + ",,,,,," + format_double(n.nfr_paper) +
               "," + opt(n.nfr_conditional) + "\n";
    return out;
}

std::string ece_csv(const RunReport& report) {
    std::string out = "condition,n,ece,agreement_rate,agreement_excluded\n";
    for (const auto& [c, r] : report.results)
        out += std::string(to_string(c)) + "," + std::to_string(r.calibration.n) + "," +
               format_double(r.calibration.ece) + "," + opt(r.agreement.rate) + "," +
               std::to_string(r.agreement.n_excluded) + "\n";
    return out;
}

std::string reliability_csv(const EceResult& result) {
    std::string out = "bin_lower,bin_upper,count,conf,acc\n";
    for (const auto& b : result.bins) {
        out += format_double(b.lower) + "," + format_double(b.upper) + "," + std::to_string(b.count) + ",";
        if (b.count) out += format_double(b.confidence) + "," + format_double(b.accuracy);
        else out += ",";
        out += "\n";
    }
    return out;
}

std::string bars_csv(const RunReport& report) {
    std::string out = "metric,condition,value\n";
    auto row = [&](const char* metric, Condition c, double v) {
        out += std::string(metric) + "," + std::string(to_string(c)) + "," + format_double(v) + "\n";
    };
    for (const auto& [c, r] : report.results) {
        row("accuracy", c, r.metrics.accuracy);
        row("precision", c, r.metrics.precision);
        row("recall", c, r.metrics.recall);
        row("f1", c, r.metrics.f1);
        row("ece", c, r.calibration.ece);
    }
    for (const auto& [c, n] : report.nfr) row("nfr_paper", c, n.nfr_paper);
    return out;
}

namespace {

std::string predictions_csv(const RunReport& report) {
    std::string out = "condition,sample_id,label,verdict,y_hat,p_yes,first_token_predicted\n";
    for (const auto& [c, r] : report.results)
        for (const auto& s : r.samples)
            out += std::string(to_string(c)) + "," + csv_field(s.sample_id) + "," + std::to_string(s.label) + "," +
                   std::string(to_string(s.verdict.verdict)) + "," + (s.y_hat ? std::to_string(*s.y_hat) : "") +
                   "," + format_double(s.first_token.p_yes) + "," + std::to_string(s.first_token.predicted) + "\n";
    return out;
}

std::string attention_rows_csv(const ConditionResult& r) {
    std::string out = "sample_id,t,token,text_share,image_share,degenerate\n";
    for (const auto& s : r.samples) {
        if (!s.attention) continue;
        for (const auto& share : modality_shares(*s.attention)) {
            out += csv_field(s.sample_id) + "," + std::to_string(share.t) + "," +
                   csv_field(s.attention->tokens[share.t]) + ",";
            if (share.degenerate) out += ",,1\n";
            else out += format_double(share.text_share) + "," + format_double(share.image_share) + ",0\n";
        }
    }
    return out;
}

// Per-input-token weights after BOS zeroing, for highlighted-text renderings.
std::string attention_weights_csv(const ConditionResult& r) {
    std::string out = "sample_id,t,input_index,role,weight\n";
    for (const auto& s : r.samples) {
        if (!s.attention) continue;
        const auto& b = *s.attention;
        for (std::size_t t = 0; t < b.rows.size(); ++t) {
            auto row = zero_bos(b.rows[t], b.roles);
            for (std::size_t i = 0; i < row.size(); ++i) {
                const char* role = b.roles[i] == TokenRole::Text ? "text" : b.roles[i] == TokenRole::Image ? "image" : "bos";
                out += csv_field(s.sample_id) + "," + std::to_string(t) + "," + std::to_string(i) + "," + role + "," +
                       format_double(row[i]) + "\n";
            }
        }
    }
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& content,
                std::vector<std::filesystem::path>& written) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
    if (!out) throw DataError("failed writing " + path.string());
    written.push_back(path);
}

}  // namespace

std::vector<std::filesystem::path> emit(const RunReport& report, const std::filesystem::path& out_dir,
                                        EmitFormats formats) {
    std::vector<std::filesystem::path> written;
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create output directory " + out_dir.string() + ": " + ec.message());

    if (formats.json) write_file(out_dir / "report.json", report_json_text(report), written);
    if (formats.csv) {
        write_file(out_dir / "metrics.csv", metrics_csv(report), written);
        write_file(out_dir / "ece.csv", ece_csv(report), written);
        write_file(out_dir / "predictions.csv", predictions_csv(report), written);
    }
    if (formats.plotdata) {
        const auto dir = out_dir / "plotdata";
        std::filesystem::create_directories(dir, ec);
        if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
        write_file(dir / "bars.csv", bars_csv(report), written);
        for (const auto& [c, r] : report.results)
            write_file(dir / ("reliability_" + std::string(to_string(c)) + ".csv"), reliability_csv(r.calibration),
                       written);
        for (const auto& [c, r] : report.results) {
            if (!r.attention) continue;
            write_file(dir / ("attention_" + std::string(to_string(c)) + ".csv"), attention_rows_csv(r), written);
            write_file(dir / ("attention_weights_" + std::string(to_string(c)) + ".csv"), attention_weights_csv(r),
                       written);
        }
    }
    return written;
}

}  // namespace smsprobe
