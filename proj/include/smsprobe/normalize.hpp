#pragma once

#include <cstddef>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace smsprobe {

enum class Verdict { Yes, No, Unparseable };

std::string_view to_string(Verdict v);

struct NormalizedAnswer {
    Verdict verdict = Verdict::Unparseable;
    // Byte offsets [first, second) into the generated text; set iff parsed.
    std::optional<std::pair<std::size_t, std::size_t>> matched_span;

    friend bool operator==(const NormalizedAnswer&, const NormalizedAnswer&) = default;
};

// Ordered (verdict, pattern) rules, matched case-insensitively. The earliest
// match in the text wins; on a tie at the same offset the earlier rule wins.
class PatternConfig {
public:
    struct Rule {
        Verdict verdict;
        std::string pattern;
        std::regex compiled;
    };

    // Whole-word "yes" and "no".
    static PatternConfig defaults();

    // One rule per line, `<verdict>\t<pattern>`, verdict "yes" or "no".
    // Blank lines and lines starting with '#' are skipped.
    static PatternConfig parse(std::string_view content);
    static PatternConfig load(const std::string& path);

    // Throws DataError if the pattern does not compile.
    void add(Verdict verdict, std::string pattern);

    const std::vector<Rule>& rules() const { return rules_; }

private:
    std::vector<Rule> rules_;
};

NormalizedAnswer map_answer(std::string_view generated_text, const PatternConfig& cfg);

// Yes -> 1, No -> 0, Unparseable -> nullopt.
std::optional<int> to_label(Verdict v);

}  // namespace smsprobe
