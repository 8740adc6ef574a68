#include "smsprobe/normalize.hpp"

#include <fstream>
#include <sstream>

#include "smsprobe/error.hpp"

namespace smsprobe {

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Yes: return "yes";
        case Verdict::No: return "no";
        case Verdict::Unparseable: return "unparseable";
    }
    return "unparseable";
}

std::optional<int> to_label(Verdict v) {
    if (v == Verdict::Yes) return 1;
    if (v == Verdict::No) return 0;
    return std::nullopt;
}

void PatternConfig::add(Verdict verdict, std::string pattern) {
    if (verdict == Verdict::Unparseable) throw DataError("pattern rule must map to yes or no");
    try {
        std::regex compiled(pattern, std::regex::ECMAScript | std::regex::icase);
        rules_.push_back(Rule{verdict, std::move(pattern), std::move(compiled)});
    } catch (const std::regex_error& e) {
        throw DataError("invalid pattern '" + pattern + "': " + e.what());
    }
}

PatternConfig PatternConfig::defaults() {
    PatternConfig cfg;
    cfg.add(Verdict::Yes, R"(\byes\b)");
    cfg.add(Verdict::No, R"(\bno\b)");
    return cfg;
}

PatternConfig PatternConfig::parse(std::string_view content) {
    PatternConfig cfg;
    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError("pattern line " + std::to_string(lineno) + ": expected <verdict>\\t<pattern>");
        std::string verdict = line.substr(0, tab);
        for (auto& c : verdict) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        Verdict v;
        if (verdict == "yes") v = Verdict::Yes;
        else if (verdict == "no") v = Verdict::No;
        else throw DataError("pattern line " + std::to_string(lineno) + ": verdict must be yes or no");
        cfg.add(v, line.substr(tab + 1));
    }
    if (cfg.rules_.empty()) throw DataError("pattern file has no rules");
    return cfg;
}

PatternConfig PatternConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open pattern file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

NormalizedAnswer map_answer(std::string_view text, const PatternConfig& cfg) {
    NormalizedAnswer best;
    std::size_t best_pos = text.size() + 1;
    for (const auto& rule : cfg.rules()) {
        std::match_results<std::string_view::const_iterator> m;
        if (!std::regex_search(text.begin(), text.end(), m, rule.compiled)) continue;
        auto pos = static_cast<std::size_t>(m.position(0));
        // Strictly earlier only: equal offsets keep the earlier rule.
        if (pos < best_pos) {
            best_pos = pos;
            best.verdict = rule.verdict;
            best.matched_span = std::make_pair(pos, pos + static_cast<std::size_t>(m.length(0)));
        }
    }
    return best;
}

}  // namespace smsprobe
