#pragma once

#include <string>

#include "cfgeq/grammar.hpp"

namespace test {

inline std::string data(const std::string& name) { return std::string(CFGEQ_TEST_DATA) + "/" + name; }

inline cfgeq::Grammar load(const std::string& name) { return cfgeq::load_grammar_file(data(name + ".cfg")); }

}  // namespace test

#include <random>
#include <vector>

namespace test {

struct RandomGrammarShape {
  std::size_t max_nonterminals = 3;
  std::size_t max_alternatives = 3;
  std::size_t max_rhs = 4;
  std::string letters = "abc";
  bool allow_renaming = false;
  bool allow_epsilon = false;
};

// Every nonterminal gets one single-letter alternative first, so every
// variable is productive; the others mix letters and nonterminals.
inline cfgeq::Grammar random_grammar(std::mt19937_64& rng, const RandomGrammarShape& shape = {}) {
  using cfgeq::Symbol;
  std::uniform_int_distribution<std::size_t> n_nt(1, shape.max_nonterminals);
  const std::size_t n = n_nt(rng);
  std::vector<std::string> nts{"S"};
  for (std::size_t i = 1; i < n; ++i) nts.push_back("N" + std::to_string(i));
  std::vector<std::string> ts;
  for (char c : shape.letters) ts.emplace_back(1, c);

  auto pick = [&](std::size_t k) { return std::uniform_int_distribution<std::size_t>(0, k - 1)(rng); };
  std::vector<cfgeq::Production> prods;
  for (std::size_t i = 0; i < n; ++i) {
    auto has = [&](const std::vector<Symbol>& rhs) {
      for (const auto& p : prods)
        if (p.lhs == nts[i] && p.rhs == rhs) return true;
      return false;
    };
    prods.push_back({nts[i], {Symbol::terminal(ts[pick(ts.size())])}});
    const std::size_t alts = pick(shape.max_alternatives) + 1;
    for (std::size_t a = 1; a < alts; ++a) {
      std::vector<Symbol> rhs;
      if (shape.allow_epsilon && pick(6) == 0) {
        // empty alternative
      } else if (shape.allow_renaming && pick(6) == 0) {
        const std::size_t j = i + 1 + pick(n);  // only forward edges: acyclic
        if (j < n) rhs.push_back(Symbol::nonterminal(nts[j]));
        else rhs.push_back(Symbol::terminal(ts[pick(ts.size())]));
      } else {
        const std::size_t len = 2 + pick(shape.max_rhs - 1);
        bool terminal = false;
        for (std::size_t k = 0; k < len; ++k) {
          if (pick(2) == 0) {
            rhs.push_back(Symbol::nonterminal(nts[pick(n)]));
          } else {
            rhs.push_back(Symbol::terminal(ts[pick(ts.size())]));
            terminal = true;
          }
        }
        if (!terminal) rhs[pick(rhs.size())] = Symbol::terminal(ts[pick(ts.size())]);
      }
      if (!has(rhs)) prods.push_back({nts[i], rhs});
    }
  }
  return cfgeq::Grammar(nts, ts, prods);
}

}  // namespace test
