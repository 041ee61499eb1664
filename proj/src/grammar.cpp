#include "adaptcs/grammar.hpp"

#include <stdexcept>

#include "adaptcs/errors.hpp"

namespace adaptcs {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& what) {
    throw ParseError("grammar line " + std::to_string(line) + ": " + what);
}

struct RawRule {
    std::string name;
    std::string rhs;
    int line = 0;
};

Production tokenize(std::string_view alt, int line) {
    Production out;
    std::size_t at = 0;
    while (at < alt.size()) {
        const auto open = alt.find('<', at);
        const auto literal = trim(alt.substr(at, open == std::string_view::npos ? std::string_view::npos : open - at));
        if (!literal.empty()) out.push_back({true, std::string(literal)});
        if (open == std::string_view::npos) break;
        const auto close = alt.find('>', open);
        if (close == std::string_view::npos) fail(line, "unterminated nonterminal");
        const auto name = trim(alt.substr(open + 1, close - open - 1));
        if (name.empty()) fail(line, "empty nonterminal name");
        out.push_back({false, std::string(name)});
        at = close + 1;
    }
    return out;
}

}  // namespace

Grammar parse_bnf(std::string_view text) {
    std::vector<RawRule> raw;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        if (trim(line).empty()) continue;

        const auto def = line.find("::=");
        if (def == std::string_view::npos) {
            if (raw.empty()) fail(line_no, "continuation line before any rule");
            raw.back().rhs += ' ';
            raw.back().rhs += line;
            continue;
        }
        const auto lhs = trim(line.substr(0, def));
        if (lhs.size() < 3 || lhs.front() != '<' || lhs.back() != '>') fail(line_no, "left-hand side must be <name>");
        const auto name = trim(lhs.substr(1, lhs.size() - 2));
        if (name.empty()) fail(line_no, "empty nonterminal name");
        for (const auto& r : raw)
            if (r.name == name) fail(line_no, "duplicate definition of <" + std::string(name) + ">");
        raw.push_back({std::string(name), std::string(line.substr(def + 3)), line_no});
    }
    if (raw.empty()) throw ParseError("grammar: no rules");

    Grammar g;
    g.start = raw.front().name;
    for (const auto& r : raw) {
        g.nonterminals.push_back(r.name);
        auto& alts = g.rules[r.name];
        std::string_view rhs = r.rhs;
        std::size_t at = 0;
        while (true) {
            const auto bar = rhs.find('|', at);
            const auto alt = trim(rhs.substr(at, bar == std::string_view::npos ? std::string_view::npos : bar - at));
            if (alt.empty()) fail(r.line, "empty alternative in <" + r.name + ">");
            alts.push_back(tokenize(alt, r.line));
            if (bar == std::string_view::npos) break;
            at = bar + 1;
        }
    }
    for (const auto& r : raw)
        for (const auto& alt : g.rules[r.name])
            for (const auto& sym : alt)
                if (!sym.terminal && !g.rules.count(sym.text)) fail(r.line, "undefined nonterminal <" + sym.text + ">");
    return g;
}

Derivation decode(const Genotype& genotype, const Grammar& grammar) {
    if (genotype.codons.empty()) throw std::invalid_argument("decode: empty genotype");
    constexpr int kExpansionBudget = 100000;
    const auto len = static_cast<int>(genotype.codons.size());
    const int limit = len * (genotype.wrap_limit + 1);

    Derivation d;
    std::vector<const GrammarSymbol*> stack;
    const GrammarSymbol start{false, grammar.start};
    stack.push_back(&start);
    int expansions = 0;
    while (!stack.empty()) {
        const GrammarSymbol* s = stack.back();
        stack.pop_back();
        if (s->terminal) {
            d.text += s->text;
            continue;
        }
        if (++expansions > kExpansionBudget) return d;
        const auto& alts = grammar.alternatives(s->text);
        std::size_t choice = 0;
        if (alts.size() > 1) {
            if (d.codons_used >= limit) return d;
            const int codon = genotype.codons[static_cast<std::size_t>(d.codons_used % len)];
            d.wraps = d.codons_used / len;
            ++d.codons_used;
            choice = static_cast<std::size_t>(codon) % alts.size();
        }
        const auto& prod = alts[choice];
        for (auto it = prod.rbegin(); it != prod.rend(); ++it) stack.push_back(&*it);
    }
    d.valid = true;
    return d;
}

}  // namespace adaptcs
