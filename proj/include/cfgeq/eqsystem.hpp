#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cfgeq/grammar.hpp"

namespace cfgeq {

/// Noncommuting product of symbols. The empty product is the identity
/// (the image of the empty word).
struct Monomial {
  std::vector<Symbol> factors;

  bool is_identity() const { return factors.empty(); }
  bool is_bare_nonterminal() const { return factors.size() == 1 && factors.front().is_nonterminal(); }
  std::size_t nonterminal_count() const;

  auto operator<=>(const Monomial&) const = default;
};

/// A multiset of monomials. Repeated monomials are kept as repeats: their
/// multiplicity is an ambiguity count and must never be merged away.
struct Polynomial {
  std::vector<Monomial> terms;

  std::size_t count(const Monomial& m) const;
  /// Multiset equality (order-insensitive).
  bool same_terms(const Polynomial& other) const;
};

/// One equation per nonterminal:
///
///     X = rhs[X] + sum of linear_part[X]
///
/// `linear_part` holds the renaming (bare nonterminal) terms once they have
/// been split off. A variable listed in `shifted` stands for X - I, i.e. its
/// solution must have the identity added back.
struct EquationSystem {
  std::vector<std::string> variables;
  std::string axiom;
  std::vector<std::string> terminals;
  std::map<std::string, Polynomial> rhs;
  std::map<std::string, std::vector<std::string>> linear_part;
  std::set<std::string> shifted;
  bool is_linear_split = false;
  bool is_epsilon_shifted = false;

  bool is_shifted(const std::string& v) const { return shifted.count(v) != 0; }
  std::size_t index_of(const std::string& v) const;

  /// One equation per line, `+`-separated, linear terms in braces, shifted
  /// variables primed: `S = S a A' + S a + b`.
  std::string to_string() const;
};

EquationSystem build_system(const Grammar& g);

/// Moves every bare-nonterminal monomial into `linear_part`. Idempotent.
EquationSystem split_linear(const EquationSystem& sys);

/// Substitutes X = X' + I for every variable whose rhs contains the identity
/// monomial, expands, cancels identities and re-splits bare variables.
/// Throws NonCancellingConstantError when an identity term survives and
/// RenamingCycleError when the expansion creates a renaming cycle.
EquationSystem epsilon_shift(const EquationSystem& sys);

/// build_system -> split_linear -> epsilon_shift.
EquationSystem compile(const Grammar& g);

struct ContractionParams {
  std::size_t nbar = 0;
  double delta_max = 0.5;
};

/// nbar: nonterminal occurrences over rhs monomials that contain one.
/// delta_max = 0.9 / nbar (0.5 when nbar = 0).
ContractionParams contraction_params(const EquationSystem& sys);

/// Topological order of the renaming DAG (dependencies first). Throws
/// RenamingCycleError on a cycle.
std::vector<std::string> linear_topological_order(const EquationSystem& sys);

}  // namespace cfgeq
