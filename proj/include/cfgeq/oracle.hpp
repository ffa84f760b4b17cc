#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cfgeq/eqsystem.hpp"
#include "cfgeq/grammar.hpp"

namespace cfgeq {

/// A word over an indexed alphabet: byte i is the index of the i-th letter.
/// Ordering by (length, bytes) is shortlex order over the sorted alphabet.
using Word = std::string;

bool shortlex_less(const Word& a, const Word& b);

/// Renders letters joined directly when every terminal is one character,
/// otherwise with '.' between letters. The empty word renders as "eps".
std::string render_word(const Word& w, const std::vector<std::string>& alphabet);

/// Inverse of render_word. Accepts "eps" for the empty word.
Word parse_word(const std::string& text, const std::vector<std::string>& alphabet);

/// Exact coefficients phi(P) of the axiom for all words up to max_len.
struct SeriesSlice {
  std::vector<std::string> alphabet;
  std::size_t max_len = 0;
  std::map<Word, std::uint64_t> coefficients;  // only nonzero entries
  bool stabilized = false;
  std::size_t iterations = 0;

  std::uint64_t coefficient(const Word& w) const;
  /// Entries sorted by (length, lex).
  std::vector<std::pair<Word, std::uint64_t>> sorted() const;
  std::string render(const Word& w) const { return render_word(w, alphabet); }
};

struct OracleOptions {
  std::size_t max_len_guard = 12;     // explicit enumeration refuses longer slices
  std::size_t term_budget = 400000;   // total stored words across all variables
  std::size_t work_budget = 20000000;  // word-pair products per slice
  std::optional<std::size_t> iter_cap;  // default: max_len * (1 + #nonterminals) * 4
  std::uint64_t fingerprint_seed = 0x5eed0f1a9e;
  std::function<void(std::size_t, const SeriesSlice&)> on_iteration;  // test hook
};

std::size_t default_iter_cap(std::size_t max_len, std::size_t nonterminals);

/// Iterates `sys` in the semiring of word polynomials truncated at max_len,
/// from zero, until no variable changes (stabilized) or iter_cap. Renaming
/// terms and shifted variables are honoured, so transformed systems give the
/// same series as the raw one. Throws OracleBudgetExceeded.
SeriesSlice symbolic_slice(const EquationSystem& sys, const std::vector<std::string>& alphabet,
                           std::size_t max_len, const OracleOptions& opts = {});

/// symbolic_slice of the grammar's raw system over its own alphabet.
SeriesSlice series_slice(const Grammar& g, std::size_t max_len, const OracleOptions& opts = {});

/// phi(word): the number of derivations. Exact; the iteration only keeps
/// factors of `word`, so cost is polynomial in its length.
std::uint64_t membership(const Grammar& g, const std::vector<std::string>& letters);
std::uint64_t membership(const Grammar& g, const std::string& rendered);

struct WitnessReport {
  std::string word;  // rendered
  std::size_t length = 0;
  std::uint64_t coeff_left = 0;
  std::uint64_t coeff_right = 0;
};

enum class OracleMethod { Enumeration, Fingerprint };
const char* to_string(OracleMethod m);

struct DistinguishingResult {
  std::optional<WitnessReport> witness;  // nullopt: NoneFound
  OracleMethod method = OracleMethod::Enumeration;
  std::size_t max_len = 0;
};

/// Shortest, then lexicographically least, word whose coefficients differ.
///
/// Uses explicit enumeration when it fits in the guard and budget. Otherwise
/// each length stratum is compared through exact modular evaluation at
/// generic nilpotent matrices (a difference there is certain; an accidental
/// agreement has probability below max_len / 2^61 per stratum), and the
/// witness is recovered letter by letter and re-counted exactly.
DistinguishingResult min_distinguishing_word(const Grammar& g1, const Grammar& g2, std::size_t max_len,
                                             const OracleOptions& opts = {});

/// Per-length fingerprints of the axiom series at one random point; exposed
/// for tests. Entry l is sum over |w| = l of phi(w) * prod x[w_i][i] mod 2^61-1.
std::vector<std::uint64_t> stratum_fingerprints(const Grammar& g, const std::vector<std::string>& alphabet,
                                                std::size_t max_len, std::uint64_t seed,
                                                const OracleOptions& opts = {});

std::vector<std::string> union_alphabet(const Grammar& g1, const Grammar& g2);

}  // namespace cfgeq
