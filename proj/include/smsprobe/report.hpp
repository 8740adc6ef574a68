#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smsprobe/attention.hpp"
#include "smsprobe/backend.hpp"
#include "smsprobe/calibration.hpp"
#include "smsprobe/metrics.hpp"
#include "smsprobe/normalize.hpp"
#include "smsprobe/prompt.hpp"
#include "smsprobe/sms.hpp"
#include "smsprobe/store.hpp"

namespace smsprobe {

struct RunConfig {
    std::vector<Condition> conditions{std::begin(kAllConditions), std::end(kAllConditions)};
    PatternConfig patterns = PatternConfig::defaults();
    TemplateSet templates = TemplateSet::defaults();
    std::size_t parallel = 4;
    bool request_attention = false;
    bool inline_images = true;
};

struct SampleOutcome {
    std::string sample_id;
    int label = 0;
    NormalizedAnswer verdict;
    std::optional<int> y_hat;
    FirstTokenProb first_token;
    std::optional<AttentionBundle> attention;
};

struct AttentionSummary {
    std::size_t bundles = 0;
    std::size_t degenerate_rows = 0;
    std::optional<StabilityStats> pooled;  // over every non-degenerate row
};

struct ConditionResult {
    MetricSet metrics;
    EceResult calibration;
    AgreementResult agreement;
    std::optional<AttentionSummary> attention;
    std::vector<SampleOutcome> samples;  // sorted by sample_id
};

struct SkippedCondition {
    Condition condition;
    std::string reason;
};

struct RunReport {
    std::string model_id;
    std::string dataset_name;
    std::optional<std::uint64_t> seed;
    std::optional<RecipientMode> recipient_mode;
    std::string attention_aggregation;
    std::map<Condition, ConditionResult> results;
    std::map<Condition, NfrResult> nfr;  // every evaluated non-base condition vs NoShift
    std::vector<SkippedCondition> skipped;

    bool has_attention() const;
};

struct RunStats {
    std::size_t requests = 0;
    std::size_t cache_hits = 0;
    std::size_t backend_calls = 0;
};

// Evaluates every runnable condition (NoShift is always added). Responses come
// from `store` when present there, otherwise from `live`, and new responses
// are recorded to `store`. With no live backend a cache miss is a DataError.
// Capabilities come from `live`, else from the store's recorded capabilities.
// A transport failure propagates after in-flight requests finish; everything
// already answered stays in the store for a later resume.
RunReport run_evaluation(const Manifest& manifest, const PairPlan* plan, Backend* live,
                         ResponseStore* store, const RunConfig& config, RunStats* stats = nullptr);

nlohmann::json report_to_json(const RunReport& report);
std::string report_json_text(const RunReport& report);  // canonical bytes plus newline

// `condition,n,accuracy,precision,recall,f1,unparseable,nfr_paper,nfr_conditional`:
// one row per evaluated condition, then one `nfr:<condition>` row per shift.
std::string metrics_csv(const RunReport& report);
// `condition,n,ece,agreement_rate,agreement_excluded`.
std::string ece_csv(const RunReport& report);
// `bin_lower,bin_upper,count,conf,acc`, all bins; conf/acc empty for empty bins.
std::string reliability_csv(const EceResult& result);
// Long-format grouped-bar data: `metric,condition,value`.
std::string bars_csv(const RunReport& report);

struct EmitFormats {
    bool json = true;
    bool csv = true;
    bool plotdata = true;
};

// Writes report.json, metrics.csv, ece.csv and plotdata/ under `out_dir`.
// Returns the written paths in a fixed order. DataError if not writable.
std::vector<std::filesystem::path> emit(const RunReport& report, const std::filesystem::path& out_dir,
                                        EmitFormats formats = {});

}  // namespace smsprobe
