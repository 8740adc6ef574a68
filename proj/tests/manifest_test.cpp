#include "smsprobe/manifest.hpp"

#include <gtest/gtest.h>

#include <random>

#include "smsprobe/error.hpp"
#include "test_util.hpp"

using namespace smsprobe;

namespace {

std::string expect_data_error(const std::string& content) {
    try {
        parse_manifest(content);
    } catch (const DataError& e) {
        return e.what();
    }
    ADD_FAILURE() << "expected DataError";
    return {};
}

}  // namespace

TEST(Manifest, ParsesRecordsInFileOrder) {
    auto m = parse_manifest(
        R"({"id":"a","image_ref":"a.png","text":"t1","label":1})"
        "\n"
        R"({"id":"b","image_ref":"b.png","text":"t2","label":0})"
        "\n");
    ASSERT_EQ(m.records.size(), 2u);
    EXPECT_EQ(m.records[0].id, "a");
    EXPECT_EQ(m.records[0].label, 1);
    EXPECT_EQ(m.records[1].id, "b");
    EXPECT_EQ(m.records[1].label, 0);
}

TEST(Manifest, DuplicateIdNamesIdAndLine) {
    auto msg = expect_data_error(
        R"({"id":"a","image_ref":"x","text":"t","label":1})"
        "\n"
        R"({"id":"b","image_ref":"x","text":"t","label":0})"
        "\n"
        R"({"id":"a","image_ref":"x","text":"t","label":0})"
        "\n");
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'a'"), std::string::npos) << msg;
}

TEST(Manifest, RejectsLabelOutsideDomain) {
    auto msg = expect_data_error(R"({"id":"a","image_ref":"x","text":"t","label":2})");
    EXPECT_NE(msg.find("label"), std::string::npos) << msg;
    expect_data_error(R"({"id":"a","image_ref":"x","text":"t","label":"1"})");
    expect_data_error(R"({"id":"a","image_ref":"x","text":"t","label":0.5})");
}

TEST(Manifest, MalformedLineReportsLineNumber) {
    auto msg = expect_data_error(R"({"id":"a","image_ref":"x","text":"t","label":1})"
                                 "\n{not json\n");
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
}

TEST(Manifest, EmptyModalitiesNeedHeaderPermission) {
    expect_data_error(R"({"id":"a","image_ref":"","text":"t","label":1})");
    expect_data_error(R"({"id":"a","image_ref":"x","label":1})");
    auto m = parse_manifest(R"({"manifest":{"allow_empty_text":true,"dataset_name":"d"}})"
                            "\n"
                            R"({"id":"a","image_ref":"x","label":1})");
    EXPECT_EQ(m.dataset_name, "d");
    EXPECT_TRUE(m.records[0].text.empty());
}

TEST(Manifest, UnknownFieldsGoToMeta) {
    auto m = parse_manifest(R"({"id":"a","image_ref":"x","text":"t","label":1,"age":63,"race":"Asian","meta":{"sex":"F"}})");
    const auto& meta = m.records[0].meta;
    EXPECT_EQ(meta.at("age"), "63");
    EXPECT_EQ(meta.at("race"), "Asian");
    EXPECT_EQ(meta.at("sex"), "F");
}

TEST(Manifest, LoadReportsMissingFile) {
    EXPECT_THROW(load_manifest("/nonexistent/manifest.jsonl"), DataError);
}

TEST(Manifest, RoundTripPreservesEveryField) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        Manifest m;
        m.dataset_name = "ds" + std::to_string(trial);
        m.prompt_template_id = trial % 2 ? "glaucoma" : "default";
        m.allow_empty_text = trial % 3 == 0;
        const int n = 1 + static_cast<int>(rng() % 12);
        for (int i = 0; i < n; ++i) {
            SampleRecord r;
            r.id = "id-" + std::to_string(i) + (rng() % 2 ? "\"q\"" : "é");
            r.image_ref = "img/" + std::to_string(rng() % 1000) + ".png";
            r.text = m.allow_empty_text && rng() % 2 ? "" : "note, with \"quotes\"\nand lines " + std::to_string(rng());
            r.label = static_cast<int>(rng() % 2);
            if (rng() % 2) r.meta["age"] = std::to_string(rng() % 90);
            m.records.push_back(r);
        }
        testutil::TempDir dir;
        save_manifest(m, dir / "m.jsonl");
        EXPECT_EQ(load_manifest(dir / "m.jsonl"), m);
    }
}

TEST(ValidateForSms, CountsClasses) {
    Manifest m;
    for (int label : {1, 0, 1}) m.records.push_back({"r" + std::to_string(m.records.size()), "x", "t", label, {}});
    auto report = validate_for_sms(m);
    EXPECT_EQ(report.count_positive, 2u);
    EXPECT_EQ(report.count_negative, 1u);
    EXPECT_TRUE(report.ok());
    EXPECT_EQ(report.count_positive + report.count_negative, m.records.size());
}

TEST(ValidateForSms, FlagsMissingOppositeClass) {
    Manifest m;
    m.records.push_back({"a", "x", "t", 1, {}});
    m.records.push_back({"b", "x", "t", 1, {}});
    auto report = validate_for_sms(m);
    ASSERT_EQ(report.defects.size(), 1u);
    EXPECT_EQ(report.defects[0], "no-opposite-donor for class 1");
}

TEST(ValidateForSms, FlagsEmptyManifest) {
    auto report = validate_for_sms(Manifest{});
    ASSERT_EQ(report.defects.size(), 1u);
    EXPECT_EQ(report.defects[0], "empty");
}
