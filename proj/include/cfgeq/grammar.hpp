#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace cfgeq {

enum class SymbolKind { Terminal, Nonterminal };

struct Symbol {
  SymbolKind kind = SymbolKind::Terminal;
  std::string name;

  static Symbol terminal(std::string n) { return {SymbolKind::Terminal, std::move(n)}; }
  static Symbol nonterminal(std::string n) { return {SymbolKind::Nonterminal, std::move(n)}; }

  bool is_terminal() const { return kind == SymbolKind::Terminal; }
  bool is_nonterminal() const { return kind == SymbolKind::Nonterminal; }

  auto operator<=>(const Symbol&) const = default;
};

/// One alternative `lhs -> rhs`. An empty rhs is the empty word.
struct Production {
  std::string lhs;
  std::vector<Symbol> rhs;

  bool is_epsilon() const { return rhs.empty(); }
  bool is_renaming() const { return rhs.size() == 1 && rhs.front().is_nonterminal(); }
  std::size_t nonterminal_count() const;

  auto operator<=>(const Production&) const = default;
};

/// An immutable, validated context-free grammar.
///
/// Nonterminals are kept in order of first definition, so the axiom is
/// always `nonterminals().front()`. Terminals are kept sorted by name.
class Grammar {
 public:
  /// Validates and builds. Throws GrammarValidationError when the axiom is
  /// undefined, a nonterminal has no production, a rhs symbol is unknown,
  /// the namespaces overlap, or an (lhs, rhs) pair repeats.
  Grammar(std::vector<std::string> nonterminals, std::vector<std::string> terminals,
          std::vector<Production> productions);

  const std::vector<std::string>& nonterminals() const { return nonterminals_; }
  const std::vector<std::string>& terminals() const { return terminals_; }
  const std::vector<Production>& productions() const { return productions_; }
  const std::string& axiom() const { return nonterminals_.front(); }

  bool has_nonterminal(std::string_view name) const;
  bool has_terminal(std::string_view name) const;

  /// Productions of `lhs` in declaration order.
  std::vector<const Production*> productions_of(std::string_view lhs) const;

  /// Canonical text: one rule per nonterminal, alternatives in order.
  std::string to_string() const;

 private:
  std::vector<std::string> nonterminals_;
  std::vector<std::string> terminals_;
  std::vector<Production> productions_;
};

Grammar parse_grammar(std::string_view text);
Grammar load_grammar_file(const std::string& path);

struct StructureReport {
  std::set<std::string> nullable;
  std::set<std::pair<std::string, std::string>> renaming_edges;
  bool renaming_cyclic = false;
  std::size_t nbar = 0;
  bool has_unit_length_nt_words = false;
};

StructureReport analyze_structure(const Grammar& g);

/// Throws RenamingCycleError if the renaming graph has a cycle.
void require_renaming_acyclic(const Grammar& g);

struct ProbeConverged {
  std::map<std::string, double> values;
  std::size_t iterations = 0;
};

struct ProbeDiverged {
  std::size_t iteration = 0;
  bool hit_blowup = false;  // false: never stabilized within max_iter
};

using ProbeResult = std::variant<ProbeConverged, ProbeDiverged>;

struct ProbeOptions {
  std::size_t max_iter = 10000;
  double blowup = 1e6;
  double tol = 1e-13;
};

/// Solves the grammar's system with every terminal replaced by the scalar
/// `mu`. Divergence at small `mu` means unbounded ambiguity (second class).
ProbeResult scalar_class_probe(const Grammar& g, double mu, const ProbeOptions& opts = {});

/// A scalar small enough that every first-class grammar converges in
/// practice: 0.9 / (max(nbar, 1) * max(|terminals|, 1)).
double default_probe_mu(const Grammar& g);

}  // namespace cfgeq
