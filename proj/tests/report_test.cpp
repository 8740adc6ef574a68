#include "smsprobe/report.hpp"

#include <gtest/gtest.h>

#include "smsprobe/error.hpp"
#include "smsprobe/oracles.hpp"
#include "test_util.hpp"

using namespace smsprobe;

namespace {

struct Fixture {
    testutil::TempDir dir;
    Manifest manifest;
    PairPlan plan;

    explicit Fixture(std::size_t n_per_class = 10, RecipientMode mode = RecipientMode::AllSamples) {
        manifest = generate_manifest({n_per_class, 3, "synthetic"}, dir.path());
        plan = build_pair_plan(manifest, 42, mode);
    }
};

// What a text-cue oracle must answer for each instance, read straight off
// the materialized inputs.
std::size_t brute_force_text_oracle_correct(const Manifest& m, const PairPlan& plan, Condition c) {
    std::size_t correct = 0;
    for (const auto& inst : materialize(m, &plan, c))
        if (inst.text && text_cue(*inst.text) == inst.label) ++correct;
    return correct;
}

}  // namespace

TEST(RunEvaluation, TextOracleOverAllConditions) {
    Fixture f;
    MockBackend backend(parse_oracle("text", 0));
    RunStats stats;
    auto report = run_evaluation(f.manifest, &f.plan, &backend, nullptr, RunConfig{}, &stats);

    ASSERT_EQ(report.results.size(), 5u);
    EXPECT_EQ(report.results.at(Condition::NoShift).metrics.accuracy, 1.0);
    EXPECT_EQ(report.results.at(Condition::TextShift).metrics.accuracy, 0.0);
    EXPECT_EQ(report.results.at(Condition::ImageShift).metrics.accuracy, 1.0);
    for (Condition c : kAllConditions) {
        const auto& m = report.results.at(c).metrics;
        EXPECT_EQ(m.tp + m.tn, brute_force_text_oracle_correct(f.manifest, f.plan, c)) << to_string(c);
        EXPECT_EQ(m.n, f.manifest.records.size());
    }
    EXPECT_EQ(report.nfr.at(Condition::TextShift).nfr_paper, 1.0);
    EXPECT_EQ(report.nfr.at(Condition::ImageShift).nfr_paper, 0.0);
    EXPECT_EQ(report.results.at(Condition::OnlyImage).metrics.unparseable, f.manifest.records.size());
    EXPECT_EQ(stats.requests, 5 * f.manifest.records.size());
    EXPECT_TRUE(report.skipped.empty());
    EXPECT_EQ(report.model_id, "mock-text");
    EXPECT_EQ(report.seed, 42u);
}

TEST(RunEvaluation, PositiveOnlyRestrictsEveryCondition) {
    Fixture f(6, RecipientMode::PositiveOnly);
    MockBackend backend(parse_oracle("image", 0));
    auto report = run_evaluation(f.manifest, &f.plan, &backend, nullptr, RunConfig{});
    for (const auto& [c, r] : report.results) EXPECT_EQ(r.metrics.n, 6u) << to_string(c);
    EXPECT_EQ(report.results.at(Condition::ImageShift).metrics.accuracy, 0.0);
    EXPECT_EQ(report.nfr.at(Condition::ImageShift).nfr_paper, 1.0);
}

TEST(RunEvaluation, NoShiftIsAlwaysEvaluated) {
    Fixture f(3);
    MockBackend backend(parse_oracle("text", 0));
    RunConfig cfg;
    cfg.conditions = {Condition::TextShift};
    auto report = run_evaluation(f.manifest, &f.plan, &backend, nullptr, cfg);
    EXPECT_EQ(report.results.size(), 2u);
    EXPECT_TRUE(report.results.count(Condition::NoShift));
    EXPECT_EQ(report.nfr.size(), 1u);
}

TEST(RunEvaluation, UnsupportedTextOnlyIsSkipped) {
    Fixture f(4);
    auto spec = parse_oracle("image", 0);
    spec.capabilities.supports_text_only = false;
    MockBackend backend(spec);
    auto report = run_evaluation(f.manifest, &f.plan, &backend, nullptr, RunConfig{});
    ASSERT_EQ(report.skipped.size(), 1u);
    EXPECT_EQ(report.skipped[0].condition, Condition::OnlyText);
    EXPECT_EQ(report.skipped[0].reason, "capability");
    EXPECT_FALSE(report.results.count(Condition::OnlyText));
    EXPECT_EQ(report.results.size(), 4u);
    EXPECT_FALSE(report.nfr.count(Condition::OnlyText));
    auto j = report_to_json(report);
    EXPECT_EQ(j["skipped"][0]["condition"], "only_text");
}

TEST(RunEvaluation, ShiftWithoutPlanFails) {
    Fixture f(2);
    MockBackend backend(parse_oracle("text", 0));
    EXPECT_THROW(run_evaluation(f.manifest, nullptr, &backend, nullptr, RunConfig{}), DataError);
    RunConfig ablations;
    ablations.conditions = {Condition::OnlyText, Condition::OnlyImage};
    EXPECT_NO_THROW(run_evaluation(f.manifest, nullptr, &backend, nullptr, ablations));
}

TEST(RunEvaluation, ReplayNeedsEveryResponse) {
    Fixture f(3);
    ResponseStore empty;
    EXPECT_THROW(run_evaluation(f.manifest, &f.plan, nullptr, &empty, RunConfig{}), DataError);

    MockBackend backend(parse_oracle("text", 0));
    ResponseStore store;
    RunConfig no_text_shift;
    no_text_shift.conditions = {Condition::ImageShift};
    run_evaluation(f.manifest, &f.plan, &backend, &store, no_text_shift);
    try {
        run_evaluation(f.manifest, &f.plan, nullptr, &store, RunConfig{});
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("cache miss"), std::string::npos);
    }
}

TEST(RunEvaluation, ReplayIsByteIdenticalAndOffline) {
    Fixture f(8);
    auto path = f.dir / "store.jsonl";
    MockBackend backend(parse_oracle("fusion:0.5", 9));
    RunConfig cfg;
    cfg.request_attention = true;
    std::string live_json;
    {
        ResponseStore store(path);
        live_json = report_json_text(run_evaluation(f.manifest, &f.plan, &backend, &store, cfg));
    }
    const auto calls = backend.predict_calls();
    ResponseStore a(path), b(path);
    RunStats stats;
    auto first = report_json_text(run_evaluation(f.manifest, &f.plan, nullptr, &a, cfg, &stats));
    auto second = report_json_text(run_evaluation(f.manifest, &f.plan, nullptr, &b, cfg));
    EXPECT_EQ(first, second);
    EXPECT_EQ(first, live_json);
    EXPECT_EQ(backend.predict_calls(), calls);
    EXPECT_EQ(stats.cache_hits, stats.requests);
}

TEST(RunEvaluation, ParallelismDoesNotChangeResults) {
    Fixture f(15);
    std::string reference;
    for (std::size_t parallel : {1u, 3u, 8u}) {
        MockBackend backend(parse_oracle("noise", 5));
        RunConfig cfg;
        cfg.parallel = parallel;
        auto text = report_json_text(run_evaluation(f.manifest, &f.plan, &backend, nullptr, cfg));
        if (reference.empty()) reference = text;
        EXPECT_EQ(text, reference) << parallel;
    }
}

TEST(RunEvaluation, ResumeMakesNoDuplicateCalls) {
    Fixture f(10);
    auto path = f.dir / "store.jsonl";
    MockBackend backend(parse_oracle("text", 0));
    backend.fail_after(37);
    RunConfig cfg;
    cfg.parallel = 4;
    {
        ResponseStore store(path);
        EXPECT_THROW(run_evaluation(f.manifest, &f.plan, &backend, &store, cfg), TransportError);
        EXPECT_EQ(store.size(), 37u);
    }
    backend.fail_after(std::nullopt);
    ResponseStore store(path);
    RunStats stats;
    run_evaluation(f.manifest, &f.plan, &backend, &store, cfg, &stats);
    EXPECT_EQ(stats.cache_hits, 37u);
    EXPECT_EQ(backend.answered(), stats.requests);
    EXPECT_EQ(store.size(), stats.requests);
}

TEST(RunEvaluation, AttentionSummaryWhenRequested) {
    Fixture f(3);
    MockBackend backend(parse_oracle("text", 0));
    RunConfig cfg;
    cfg.request_attention = true;
    auto report = run_evaluation(f.manifest, &f.plan, &backend, nullptr, cfg);
    ASSERT_TRUE(report.has_attention());
    const auto& a = *report.results.at(Condition::NoShift).attention;
    EXPECT_EQ(a.bundles, 6u);
    ASSERT_TRUE(a.pooled);
    EXPECT_GT(a.pooled->text.mean, 0.7);
    // Text-only inputs put all attention on text.
    EXPECT_EQ(report.results.at(Condition::OnlyText).attention->pooled->text.mean, 1.0);
}

TEST(Emit, FilesAndRowCounts) {
    Fixture f(5);
    MockBackend backend(parse_oracle("text", 0));
    auto report = run_evaluation(f.manifest, &f.plan, &backend, nullptr, RunConfig{});
    auto files = emit(report, f.dir / "out");
    auto csv = testutil::read_text(f.dir / "out/metrics.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 5 + 4);
    EXPECT_NE(csv.find("nfr:text_shift,10,,,,,,1,1\n"), std::string::npos) << csv;
    EXPECT_NE(csv.find("no_shift,10,1,1,1,1,0,,\n"), std::string::npos) << csv;

    EXPECT_FALSE(std::filesystem::exists(f.dir / "out/plotdata/attention_no_shift.csv"));
    auto j = nlohmann::json::parse(testutil::read_text(f.dir / "out/report.json"));
    EXPECT_TRUE(j.at("attention").is_null());

    auto rel = testutil::read_text(f.dir / "out/plotdata/reliability_no_shift.csv");
    EXPECT_EQ(std::count(rel.begin(), rel.end(), '\n'), 11);
    EXPECT_EQ(rel.substr(0, rel.find('\n')), "bin_lower,bin_upper,count,conf,acc");

    std::vector<std::string> first;
    for (const auto& p : files) first.push_back(testutil::read_text(p));
    auto again = emit(report, f.dir / "out");
    ASSERT_EQ(again, files);
    for (std::size_t i = 0; i < files.size(); ++i) EXPECT_EQ(testutil::read_text(files[i]), first[i]);
}

TEST(Emit, AttentionFilesWhenPresent) {
    Fixture f(2);
    MockBackend backend(parse_oracle("image", 0));
    RunConfig cfg;
    cfg.request_attention = true;
    auto report = run_evaluation(f.manifest, &f.plan, &backend, nullptr, cfg);
    emit(report, f.dir / "out");
    auto csv = testutil::read_text(f.dir / "out/plotdata/attention_image_shift.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "sample_id,t,token,text_share,image_share,degenerate");
    EXPECT_TRUE(std::filesystem::exists(f.dir / "out/plotdata/attention_weights_image_shift.csv"));
    auto j = report_to_json(report);
    EXPECT_EQ(j["attention"]["aggregation"], "fixture: fixed synthetic attention rows");
}

TEST(Emit, UnwritableDirectory) {
    Fixture f(1);
    MockBackend backend(parse_oracle("text", 0));
    auto report = run_evaluation(f.manifest, &f.plan, &backend, nullptr, RunConfig{});
    testutil::write_text(f.dir / "file", "x");
    EXPECT_THROW(emit(report, f.dir / "file/sub"), DataError);
}
