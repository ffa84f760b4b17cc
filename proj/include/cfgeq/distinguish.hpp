#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfgeq/linalg.hpp"
#include "json.hpp"

namespace cfgeq {

/// Multiset of words of one common length. Letters are single characters;
/// the terminal name of letter c is std::string(1, c).
class WordSet {
 public:
  WordSet() = default;
  explicit WordSet(std::vector<std::string> words);

  /// Comma-separated words, e.g. "aab,bab".
  static WordSet parse(const std::string& csv);

  const std::vector<std::string>& words() const { return words_; }  // sorted
  std::size_t size() const { return words_.size(); }
  /// Common word length (0 for the empty set).
  std::size_t length() const;
  std::string to_string() const;  // comma-separated, sorted

  bool operator==(const WordSet&) const = default;
  auto operator<=>(const WordSet&) const = default;

 private:
  std::vector<std::string> words_;
};

/// Sorted distinct letters of both sets, as terminal names.
std::vector<std::string> letters_of(const WordSet& u, const WordSet& v);

/// Shift-operator substitution on the suffixes of U and V: basis e0 plus one
/// vector per suffix, mu_x e0 = e_x, mu_x e_s = e_{xs} when xs is a suffix and
/// 0 otherwise. Hence w(mu) e0 = e_w for every word of the sets.
struct Lemma1Result {
  Substitution substitution;
  std::size_t vector_index = 0;      // apply the matrices to this basis vector
  std::vector<std::string> suffixes;  // basis vector i + 1 is suffixes[i]
};

Lemma1Result lemma1_substitution(const WordSet& u, const WordSet& v);

/// sum over w in W of w(mu) applied to basis vector `index`.
std::vector<double> apply_word_sum(const WordSet& w, const Substitution& mu, std::size_t index);

/// sum over w in W of w(mu).
Matrix word_sum(const WordSet& w, const Substitution& mu);

enum class CondPMode { Set, Multiset };

/// Monomials of the triangular 2x2 product: for a word x1..xN with
/// mu_x = [[u_x, v_x], [0, 1]], entry (1,2) is sum_l u_{x1}..u_{x(l-1)} v_{xl}
/// and entry (1,1) is u_{x1}..u_{xN}. Both kinds are collected.
struct CondPMonomial {
  std::vector<std::size_t> u_exponents;  // per letter of the alphabet
  std::optional<std::size_t> v_index;    // nullopt: the pure-u diagonal product

  auto operator<=>(const CondPMonomial&) const = default;
  std::string to_string(const std::vector<std::string>& alphabet) const;
};

std::vector<CondPMonomial> condp_monomials(const WordSet& w, const std::vector<std::string>& alphabet);

/// True when the monomial collections of U and V differ.
bool condition_p(const WordSet& u, const WordSet& v, CondPMode mode = CondPMode::Multiset);

struct NumericCheck {
  bool always_equal = true;
  std::size_t trials_run = 0;
  double max_relative_diff = 0.0;
  std::optional<Substitution> separating;  // first substitution over separate_tol
};

/// Compares sum U(mu) and sum V(mu) for `trials` random dense dim x dim
/// substitutions (trial t seeded by derive_seed(seed, dim, t)). The relative
/// difference is max|U - V| / max(max|U|, max|V|).
NumericCheck numeric_identity_check(const WordSet& u, const WordSet& v, std::size_t trials, std::uint64_t seed,
                                    std::size_t dim = 2, double separate_tol = 1e-9);

struct CensusParams {
  std::string alphabet = "abc";
  std::size_t min_words = 1;
  std::size_t max_words = 3;
  std::size_t min_len = 1;
  std::size_t max_len = 5;
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  bool dedup_permutations = false;  // keep one pair per letter-permutation class
  std::size_t threads = 0;          // 0: hardware concurrency
};

struct CensusEntry {
  WordSet u, v;
  bool condition_p = false;
  std::size_t trials = 0;
  bool always_equal = false;
  double max_relative_diff = 0.0;

  const char* verdict() const { return always_equal ? "AlwaysEqual" : "Distinguished"; }
  nlohmann::json to_json() const;
};

struct CensusReport {
  std::size_t sets_enumerated = 0;
  std::size_t candidates = 0;      // disjoint pairs failing condition (P)
  std::vector<CensusEntry> entries;  // every candidate, canonical order

  std::vector<CensusEntry> indistinguishable() const;
};

/// Enumerates sets of distinct words within the bounds (alphabet <= 3
/// letters, <= 3 words, length <= 5), groups them by condition-(P)
/// signature, and checks each disjoint same-signature pair numerically with
/// 2x2 matrices. Pairs sharing a word are skipped: they reduce to a smaller
/// pair that is enumerated on its own. Deterministic for any thread count.
CensusReport census_sweep(const CensusParams& params);

}  // namespace cfgeq
