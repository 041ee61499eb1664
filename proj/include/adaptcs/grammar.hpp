#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace adaptcs {

struct GrammarSymbol {
    bool terminal = true;
    std::string text;  // literal for terminals, bare name for nonterminals

    bool operator==(const GrammarSymbol&) const = default;
};

using Production = std::vector<GrammarSymbol>;

struct Grammar {
    std::string start;
    /// Nonterminals in definition order.
    std::vector<std::string> nonterminals;
    /// Alternatives per nonterminal, in source order (decoding depends on it).
    std::map<std::string, std::vector<Production>> rules;

    const std::vector<Production>& alternatives(const std::string& nt) const { return rules.at(nt); }
};

/// Parses rules of the form `<sym> ::= alt | alt`. A line without `::=`
/// continues the previous rule, `#` starts a comment, and the first rule's
/// left-hand side is the start symbol. Terminals are the literal text between
/// nonterminal references with surrounding whitespace removed. Undefined
/// references, empty alternatives and duplicate definitions raise ParseError
/// naming the line.
Grammar parse_bnf(std::string_view text);

struct Genotype {
    std::vector<int> codons;  // each in [0, 255]
    int wrap_limit = 3;
};

struct Derivation {
    bool valid = false;
    std::string text;      // concatenated terminals
    int codons_used = 0;   // choice points consumed
    int wraps = 0;
};

/// Leftmost derivation. At a nonterminal with r > 1 alternatives the next
/// codon c selects alternative c mod r; single-alternative rules consume
/// nothing. Reading past the end wraps to the first codon at most wrap_limit
/// times; running out, or exceeding the expansion budget, yields an invalid
/// derivation.
Derivation decode(const Genotype& genotype, const Grammar& grammar);

}  // namespace adaptcs
