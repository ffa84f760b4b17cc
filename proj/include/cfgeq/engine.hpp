#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfgeq/grammar.hpp"
#include "cfgeq/linalg.hpp"
#include "cfgeq/oracle.hpp"
#include "cfgeq/solver.hpp"
#include "json.hpp"

namespace cfgeq {

enum class Outcome { ProbablyEquivalent, Different, Inconclusive, ClassMismatch };

const char* to_string(Outcome o);
/// 0 ProbablyEquivalent, 1 Different, 2 Inconclusive, 3 ClassMismatch.
int exit_code(Outcome o);

struct CompareConfig {
  std::vector<std::size_t> dims{2, 3};
  std::size_t trials_per_dim = 10;
  std::uint64_t seed = 0;
  double equal_tol = 1e-10;
  double different_tol = 1e-7;
  std::size_t oracle_len = 8;
  std::optional<double> delta_override;
  // Without an override, each trial first tries norms above the guaranteed
  // bound (largest first) and keeps the first one at which both systems
  // converge geometrically; the guaranteed bound is the fallback.
  bool explore_delta = true;
  double explore_cap = 2.0;
  std::size_t threads = 0;  // 0: hardware concurrency

  /// Throws InvalidArgument.
  void validate() const;
  nlohmann::json to_json() const;
};

struct TrialRecord {
  std::size_t dim = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double delta = 0.0;  // Frobenius envelope actually used
  double diff = 0.0;   // max|S1 - S2| / max(1, max|S1|, max|S2|)
  SolveStatus status_left = SolveStatus::MaxIterExceeded;
  SolveStatus status_right = SolveStatus::MaxIterExceeded;
  std::size_t iterations_left = 0;
  std::size_t iterations_right = 0;

  bool converged() const { return status_left == SolveStatus::Converged && status_right == SolveStatus::Converged; }
  nlohmann::json to_json() const;
};

struct GrammarSummary {
  std::string hash;  // FNV-1a of the canonical text, hex
  std::size_t nonterminals = 0;
  std::size_t productions = 0;
  bool first_class = false;
  std::optional<double> probe_value;  // axiom value of the scalar probe
  std::size_t nbar = 0;
  double delta_max = 0.0;        // 0.9 / nbar
  double delta_certified = 0.0;  // majorant-certified envelope, <= delta_max
};

struct Verdict {
  Outcome outcome = Outcome::Inconclusive;
  std::string reason;
  CompareConfig config;
  GrammarSummary left, right;
  double shared_delta = 0.0;  // min of both certified envelopes
  std::vector<std::string> alphabet;
  std::vector<TrialRecord> trials;
  std::optional<std::size_t> witness_trial;  // index into trials
  std::optional<Substitution> witness_substitution;
  std::optional<DistinguishingResult> oracle;
  double wall_ms = 0.0;

  std::size_t trials_run() const { return trials.size(); }
  /// With include_timing = false the document is a pure function of the
  /// inputs and configuration.
  nlohmann::json to_json(bool include_timing = true) const;
};

/// FNV-1a 64 of the grammar's canonical text, as 16 hex digits.
std::string grammar_hash(const Grammar& g);

/// Normalized difference of two axiom values.
double normalized_diff(const Matrix& a, const Matrix& b);

Verdict compare(const Grammar& g1, const Grammar& g2, const CompareConfig& cfg = {});

/// Solves one recorded trial again with the substitution regenerated from
/// (alphabet, dim, delta, seed).
TrialRecord run_trial(const EquationSystem& s1, const EquationSystem& s2, const std::vector<std::string>& alphabet,
                      std::size_t dim, std::size_t trial, std::uint64_t seed, double delta);

struct ReplayResult {
  std::vector<TrialRecord> trials;
  bool identical = true;  // every diff equals the recorded one bit for bit
};

/// Re-runs every trial of a verdict document against the given grammars.
/// Throws ReplayMismatch when the grammars are not the ones recorded.
ReplayResult replay(const nlohmann::json& verdict, const Grammar& g1, const Grammar& g2);

}  // namespace cfgeq
