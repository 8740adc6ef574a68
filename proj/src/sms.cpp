#include "smsprobe/sms.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"
#include "smsprobe/canonical_json.hpp"
#include "smsprobe/error.hpp"

namespace smsprobe {

std::string_view to_string(Condition c) {
    switch (c) {
        case Condition::NoShift: return "no_shift";
        case Condition::TextShift: return "text_shift";
        case Condition::ImageShift: return "image_shift";
        case Condition::OnlyText: return "only_text";
        case Condition::OnlyImage: return "only_image";
    }
    return "unknown";
}

Condition parse_condition(std::string_view name) {
    for (Condition c : kAllConditions)
        if (to_string(c) == name) return c;
    throw DataError("unknown condition '" + std::string(name) + "'");
}

std::vector<Condition> parse_condition_list(std::string_view list) {
    std::vector<Condition> out;
    std::size_t pos = 0;
    while (pos <= list.size()) {
        auto comma = list.find(',', pos);
        auto item = list.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        if (!item.empty()) {
            Condition c = parse_condition(item);
            if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
        }
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw DataError("no conditions given");
    return out;
}

std::string_view to_string(RecipientMode m) {
    return m == RecipientMode::AllSamples ? "all" : "positive";
}

RecipientMode parse_recipient_mode(std::string_view name) {
    if (name == "all") return RecipientMode::AllSamples;
    if (name == "positive") return RecipientMode::PositiveOnly;
    throw DataError("unknown recipient mode '" + std::string(name) + "' (expected all|positive)");
}

bool is_eligible(const SampleRecord& record, RecipientMode mode) {
    return mode == RecipientMode::AllSamples || record.label == 1;
}

namespace {

// Uniform index in [0, n) by rejection on the raw 64-bit stream; unlike
// std::uniform_int_distribution this is identical across standard libraries.
std::size_t draw_index(std::mt19937_64& rng, std::size_t n) {
    const std::uint64_t bound = n;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
}

}  // namespace

PairPlan build_pair_plan(const Manifest& manifest, std::uint64_t seed, RecipientMode mode) {
    std::vector<const SampleRecord*> pools[2];
    for (const auto& r : manifest.records) pools[r.label].push_back(&r);

    PairPlan plan;
    plan.seed = seed;
    plan.recipient_mode = mode;
    std::mt19937_64 rng(seed);
    for (const auto& r : manifest.records) {
        if (!is_eligible(r, mode)) continue;
        const auto& pool = pools[1 - r.label];
        if (pool.empty())
            throw DataError("no-opposite-donor for class " + std::to_string(r.label) + " (recipient '" +
                            r.id + "')");
        plan.assignments[r.id] = pool[draw_index(rng, pool.size())]->id;
    }
    return plan;
}

void check_plan(const Manifest& manifest, const PairPlan& plan) {
    std::size_t eligible = 0;
    for (const auto& r : manifest.records) {
        if (!is_eligible(r, plan.recipient_mode)) continue;
        ++eligible;
        if (!plan.assignments.count(r.id))
            throw DataError("plan has no donor for eligible recipient '" + r.id + "'");
    }
    for (const auto& [recipient, donor] : plan.assignments) {
        const auto* rec = manifest.find(recipient);
        if (!rec) throw DataError("plan recipient '" + recipient + "' is not in the manifest");
        if (!is_eligible(*rec, plan.recipient_mode))
            throw DataError("plan recipient '" + recipient + "' is not eligible under mode " +
                            std::string(to_string(plan.recipient_mode)));
        const auto* don = manifest.find(donor);
        if (!don) throw DataError("plan donor '" + donor + "' is not in the manifest");
        if (don->label == rec->label)
            throw DataError("plan pairs '" + recipient + "' with same-label donor '" + donor + "'");
    }
    if (eligible != plan.assignments.size()) throw DataError("plan recipients do not match the manifest");
}

std::string plan_to_json(const PairPlan& plan) {
    nlohmann::json j = {{"seed", plan.seed},
                        {"recipient_mode", std::string(to_string(plan.recipient_mode))},
                        {"assignments", plan.assignments}};
    return canonical_dump(j) + "\n";
}

PairPlan plan_from_json(const std::string& text) {
    PairPlan plan;
    try {
        auto j = nlohmann::json::parse(text);
        const auto& seed = j.at("seed");
        if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
            throw DataError("plan seed must be an unsigned integer");
        plan.seed = seed.get<std::uint64_t>();
        plan.recipient_mode = parse_recipient_mode(j.at("recipient_mode").get<std::string>());
        for (auto it = j.at("assignments").begin(); it != j.at("assignments").end(); ++it)
            plan.assignments[it.key()] = it->get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed plan: ") + e.what());
    }
    return plan;
}

void save_plan(const PairPlan& plan, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write plan " + path);
    out << plan_to_json(plan);
    if (!out) throw DataError("failed writing plan " + path);
}

PairPlan load_plan(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open plan " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return plan_from_json(buf.str());
}

std::vector<ProbeInstance> materialize(const Manifest& manifest, const PairPlan* plan, Condition c) {
    if (requires_plan(c) && !plan)
        throw DataError("condition " + std::string(to_string(c)) + " requires a pair plan");

    std::vector<ProbeInstance> out;
    for (const auto& r : manifest.records) {
        if (plan && !is_eligible(r, plan->recipient_mode)) continue;

        ProbeInstance p;
        p.sample_id = r.id;
        p.condition = c;
        p.label = r.label;
        p.image_ref = r.image_ref;
        p.text = r.text;
        p.text_meta = r.meta;

        if (requires_plan(c)) {
            auto it = plan->assignments.find(r.id);
            if (it == plan->assignments.end())
                throw DataError("plan has no donor for recipient '" + r.id + "'");
            const auto* donor = manifest.find(it->second);
            if (!donor) throw DataError("donor '" + it->second + "' missing from manifest");
            p.donor_id = donor->id;
            if (c == Condition::TextShift) {
                p.text = donor->text;
                p.text_meta = donor->meta;
            } else {
                p.image_ref = donor->image_ref;
            }
        } else if (c == Condition::OnlyText) {
            p.image_ref.reset();
        } else if (c == Condition::OnlyImage) {
            p.text.reset();
            p.text_meta.clear();
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace smsprobe
