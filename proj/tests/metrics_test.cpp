#include "smsprobe/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "smsprobe/error.hpp"

using namespace smsprobe;

namespace {

PredictionRecord rec(std::string id, int label, Verdict v, Condition c = Condition::NoShift) {
    NormalizedAnswer a;
    a.verdict = v;
    if (v != Verdict::Unparseable) a.matched_span = std::make_pair(std::size_t{0}, std::size_t{2});
    return make_prediction(std::move(id), c, a, label);
}

Verdict of(int y) { return y ? Verdict::Yes : Verdict::No; }

std::vector<PredictionRecord> random_records(std::mt19937_64& rng, std::size_t n, Condition c) {
    std::vector<PredictionRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        auto r = rng() % 5;
        Verdict v = r == 0 ? Verdict::Unparseable : of(static_cast<int>(r % 2));
        out.push_back(rec("s" + std::to_string(i), static_cast<int>(rng() % 2), v, c));
    }
    return out;
}

}  // namespace

TEST(MetricSet, PerfectPredictions) {
    std::vector<PredictionRecord> rs{rec("a", 1, Verdict::Yes), rec("b", 0, Verdict::No), rec("c", 1, Verdict::Yes),
                                     rec("d", 0, Verdict::No)};
    auto m = metric_set(rs);
    EXPECT_EQ(m.accuracy, 1.0);
    EXPECT_EQ(m.f1, 1.0);
}

TEST(MetricSet, HandComputedPrecisionRecall) {
    // tp=2, fp=1, fn=1, tn=0
    std::vector<PredictionRecord> rs{rec("a", 1, Verdict::Yes), rec("b", 1, Verdict::Yes), rec("c", 0, Verdict::Yes),
                                     rec("d", 1, Verdict::No)};
    auto m = metric_set(rs);
    EXPECT_EQ(m.tp, 2u);
    EXPECT_EQ(m.fp, 1u);
    EXPECT_EQ(m.fn, 1u);
    EXPECT_EQ(m.tn, 0u);
    EXPECT_DOUBLE_EQ(m.precision, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.recall, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.f1, 2.0 / 3.0);
}

TEST(MetricSet, UnparseableCountsAsIncorrect) {
    std::vector<PredictionRecord> rs{rec("a", 1, Verdict::Yes), rec("b", 1, Verdict::Unparseable),
                                     rec("c", 0, Verdict::No)};
    auto m = metric_set(rs);
    EXPECT_DOUBLE_EQ(m.accuracy, 2.0 / 3.0);
    EXPECT_EQ(m.unparseable, 1u);
    EXPECT_EQ(m.tp + m.fp + m.tn + m.fn + m.unparseable, m.n);
}

TEST(MetricSet, Errors) {
    EXPECT_THROW(metric_set({}), DataError);
    std::vector<PredictionRecord> dup{rec("a", 1, Verdict::Yes), rec("a", 0, Verdict::No)};
    EXPECT_THROW(metric_set(dup), DataError);
    std::vector<PredictionRecord> mixed{rec("a", 1, Verdict::Yes), rec("b", 0, Verdict::No, Condition::TextShift)};
    EXPECT_THROW(metric_set(mixed), DataError);
}

TEST(MetricSet, ZeroDenominatorsGiveZero) {
    std::vector<PredictionRecord> rs{rec("a", 0, Verdict::No), rec("b", 0, Verdict::No)};
    auto m = metric_set(rs);
    EXPECT_EQ(m.precision, 0.0);
    EXPECT_EQ(m.recall, 0.0);
    EXPECT_EQ(m.f1, 0.0);
    EXPECT_EQ(m.accuracy, 1.0);
}

TEST(MetricSet, InvariantsOnRandomInputs) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        auto rs = random_records(rng, 1 + rng() % 60, Condition::NoShift);
        auto m = metric_set(rs);
        EXPECT_EQ(m.tp + m.fp + m.tn + m.fn + m.unparseable, m.n);
        EXPECT_NEAR(m.accuracy * static_cast<double>(m.n), static_cast<double>(m.tp + m.tn), 1e-9);
        if (m.precision + m.recall > 0)
            EXPECT_NEAR(m.f1, 2 * m.precision * m.recall / (m.precision + m.recall), 1e-15);

        auto shuffled = rs;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        auto s = metric_set(shuffled);
        EXPECT_EQ(s.accuracy, m.accuracy);
        EXPECT_EQ(s.f1, m.f1);

        // Partial counts merged in any split equal the serial result.
        ConfusionCounts left, right;
        const std::size_t cut = rng() % (rs.size() + 1);
        for (std::size_t i = 0; i < rs.size(); ++i) (i < cut ? left : right).add(rs[i]);
        left += right;
        auto merged = finalize(left);
        EXPECT_EQ(merged.accuracy, m.accuracy);
        EXPECT_EQ(merged.precision, m.precision);
        EXPECT_EQ(merged.recall, m.recall);
        EXPECT_EQ(merged.f1, m.f1);
    }
}

TEST(Nfr, FullFlip) {
    std::vector<PredictionRecord> base{rec("a", 1, Verdict::Yes), rec("b", 0, Verdict::No)};
    std::vector<PredictionRecord> shifted{rec("a", 1, Verdict::No), rec("b", 0, Verdict::Yes)};
    auto r = nfr(base, shifted);
    EXPECT_EQ(r.nfr_paper, 1.0);
    EXPECT_EQ(r.nfr_conditional, 1.0);
}

TEST(Nfr, NoBaseCorrect) {
    std::vector<PredictionRecord> base{rec("a", 1, Verdict::No), rec("b", 0, Verdict::Unparseable)};
    std::vector<PredictionRecord> shifted{rec("a", 1, Verdict::No), rec("b", 0, Verdict::Yes)};
    auto r = nfr(base, shifted);
    EXPECT_EQ(r.flipped, 0u);
    EXPECT_EQ(r.nfr_paper, 0.0);
    EXPECT_FALSE(r.nfr_conditional);
}

TEST(Nfr, HandEnumeration) {
    // N=4, base correct on s1..s3, shifted wrong on s1 and s2 only.
    std::vector<PredictionRecord> base{rec("s1", 1, Verdict::Yes), rec("s2", 0, Verdict::No), rec("s3", 1, Verdict::Yes),
                                       rec("s4", 0, Verdict::Yes)};
    std::vector<PredictionRecord> shifted{rec("s1", 1, Verdict::No), rec("s2", 0, Verdict::Unparseable),
                                          rec("s3", 1, Verdict::Yes), rec("s4", 0, Verdict::No)};
    auto r = nfr(base, shifted);
    EXPECT_EQ(r.n, 4u);
    EXPECT_EQ(r.base_correct, 3u);
    EXPECT_EQ(r.flipped, 2u);
    EXPECT_DOUBLE_EQ(r.nfr_paper, 0.5);
    EXPECT_DOUBLE_EQ(*r.nfr_conditional, 2.0 / 3.0);
}

TEST(Nfr, IdMismatchListsSymmetricDifference) {
    std::vector<PredictionRecord> base{rec("a", 1, Verdict::Yes), rec("b", 0, Verdict::No)};
    std::vector<PredictionRecord> shifted{rec("a", 1, Verdict::Yes), rec("c", 0, Verdict::No)};
    try {
        nfr(base, shifted);
        FAIL();
    } catch (const DataError& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("only in base: b"), std::string::npos) << msg;
        EXPECT_NE(msg.find("only in shifted: c"), std::string::npos) << msg;
    }
}

TEST(Nfr, PropertiesOnRandomInputs) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 50;
        auto base = random_records(rng, n, Condition::NoShift);
        auto shifted = random_records(rng, n, Condition::TextShift);
        for (std::size_t i = 0; i < n; ++i) shifted[i].label = base[i].label;

        EXPECT_EQ(nfr(base, base).flipped, 0u);
        auto r = nfr(base, shifted);
        EXPECT_LE(r.flipped, r.base_correct);
        EXPECT_GE(r.nfr_paper, 0.0);
        if (r.nfr_conditional) {
            EXPECT_LE(r.nfr_paper, *r.nfr_conditional);
            EXPECT_LE(*r.nfr_conditional, 1.0);
        }
        std::shuffle(shifted.begin(), shifted.end(), rng);
        EXPECT_EQ(nfr(base, shifted).flipped, r.flipped);

        // Turning a correct shifted answer into Unparseable never lowers flips
        // and never raises accuracy.
        for (auto& s : shifted) {
            if (!s.correct()) continue;
            auto before_acc = metric_set(shifted).accuracy;
            s = rec(s.sample_id, s.label, Verdict::Unparseable, Condition::TextShift);
            EXPECT_GE(nfr(base, shifted).flipped, r.flipped);
            EXPECT_LE(metric_set(shifted).accuracy, before_acc);
            break;
        }
    }
}
