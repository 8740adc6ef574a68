#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smsprobe/manifest.hpp"

namespace smsprobe {

enum class Condition { NoShift, TextShift, ImageShift, OnlyText, OnlyImage };

inline constexpr Condition kAllConditions[] = {Condition::NoShift, Condition::TextShift,
                                               Condition::ImageShift, Condition::OnlyText,
                                               Condition::OnlyImage};

// Wire / CLI spelling: no_shift, text_shift, image_shift, only_text, only_image.
std::string_view to_string(Condition c);
Condition parse_condition(std::string_view name);
std::vector<Condition> parse_condition_list(std::string_view comma_separated);

enum class RecipientMode { AllSamples, PositiveOnly };

std::string_view to_string(RecipientMode m);  // "all" / "positive"
RecipientMode parse_recipient_mode(std::string_view name);

struct PairPlan {
    std::uint64_t seed = 0;
    RecipientMode recipient_mode = RecipientMode::AllSamples;
    std::map<std::string, std::string> assignments;  // recipient id -> donor id

    friend bool operator==(const PairPlan&, const PairPlan&) = default;
};

bool is_eligible(const SampleRecord& record, RecipientMode mode);

// One donor per eligible recipient, drawn uniformly with replacement from the
// opposite-label pool. Draws happen in manifest order from a single
// mt19937_64 stream, so the plan depends only on (manifest order, seed, mode).
PairPlan build_pair_plan(const Manifest& manifest, std::uint64_t seed, RecipientMode mode);

// Checks that every assignment references manifest records with opposite
// labels and that the keys are exactly the eligible recipients.
void check_plan(const Manifest& manifest, const PairPlan& plan);

std::string plan_to_json(const PairPlan& plan);  // canonical bytes
PairPlan plan_from_json(const std::string& text);
void save_plan(const PairPlan& plan, const std::string& path);
PairPlan load_plan(const std::string& path);

struct ProbeInstance {
    std::string sample_id;
    Condition condition = Condition::NoShift;
    std::optional<std::string> image_ref;  // absent for OnlyText
    std::optional<std::string> text;       // absent for OnlyImage
    MetaMap text_meta;                     // meta of the record that supplied the text
    int label = 0;                         // always the recipient's label
    std::optional<std::string> donor_id;   // TextShift / ImageShift only

    friend bool operator==(const ProbeInstance&, const ProbeInstance&) = default;
};

inline bool requires_plan(Condition c) {
    return c == Condition::TextShift || c == Condition::ImageShift;
}

// Instances for one condition, in manifest order. With a plan, only its
// eligible recipients are emitted, for every condition, so all conditions
// cover the same sample set. Without a plan every record is emitted; a
// shift condition without a plan throws DataError.
std::vector<ProbeInstance> materialize(const Manifest& manifest, const PairPlan* plan, Condition c);

}  // namespace smsprobe
