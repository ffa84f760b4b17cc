#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cfgeq/eqsystem.hpp"
#include "cfgeq/linalg.hpp"
#include "json.hpp"

namespace cfgeq {

using Assignment = std::map<std::string, Matrix>;

enum class SolveStatus { Converged, Diverged, MaxIterExceeded };

const char* to_string(SolveStatus s);

struct SolveOptions {
  double tol = 1e-13;  // absolute, on the max entry difference between iterates
  std::size_t max_iter = 100000;
  double blowup = 1e6;
  // Give up early (MaxIterExceeded) when, after `stall_window` steps, the
  // residual shrinks slower than this ratio per step. Used when probing
  // substitutions outside the guaranteed-convergence ball.
  std::optional<double> stall_ratio;
  std::size_t stall_window = 12;
  bool record_trace = false;
};

struct Solution {
  Assignment assignment;  // shifted variables already have I added back
  std::size_t iterations = 0;
  double residual = 0.0;
  SolveStatus status = SolveStatus::MaxIterExceeded;
  // Largest step-to-step residual ratio over the tail of the run.
  double contraction_estimate = 0.0;
  // Per step k: max over variables of max|X^{k+1} - X^k| and of the
  // Frobenius norm of the same difference. Filled when record_trace is set.
  std::vector<double> residual_trace;
  std::vector<double> frobenius_trace;
};

/// Sum over monomials of ordered matrix products. Terminals are looked up in
/// `sub`, nonterminals in `values`; the identity monomial contributes I.
Matrix evaluate_polynomial(const Polynomial& p, const Substitution& sub, const Assignment& values);

/// Solves (I - L) Y = values by back-substitution over the renaming DAG:
/// Y_i = values_i + sum of Y_j for j in linear_part[i].
Assignment apply_linear_inverse(const std::map<std::string, std::vector<std::string>>& linear_part,
                                const Assignment& values);

/// F(X) without the linear part, one matrix per variable.
Assignment evaluate_rhs(const EquationSystem& sys, const Substitution& sub, const Assignment& x);

/// (I - L)^-1 F(X): one step of the iteration.
Assignment fixed_point_map(const EquationSystem& sys, const Substitution& sub, const Assignment& x);

/// X^{k+1} = (I - L)^-1 F(X^k) from X^0 = 0, variables in declaration order.
Solution iterate(const EquationSystem& sys, const Substitution& sub, const SolveOptions& opts = {});

/// Strips the identity from shifted variables, giving the iteration's
/// internal coordinates back.
Assignment internal_values(const EquationSystem& sys, const Assignment& solution);

/// Largest envelope in {upper, upper/sqrt2, upper/2, ...} at which the
/// scalar majorant (every terminal replaced by the number delta) converges
/// with contraction at most 0.9. The Frobenius norm is submultiplicative
/// and every coefficient is nonnegative, so each matrix iterate difference is
/// bounded by the majorant's; iteration then converges for every
/// substitution whose matrices have norm <= delta. Unlike the bare bound
/// 0.9 / nbar this also covers renaming sums and constant terms.
double certified_delta(const EquationSystem& sys, double upper);

nlohmann::json to_json(const Solution& s);

}  // namespace cfgeq
