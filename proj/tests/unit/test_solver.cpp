#include <cmath>
#include <random>

#include "cfgeq/eqsystem.hpp"
#include "cfgeq/error.hpp"
#include "cfgeq/oracle.hpp"
#include "cfgeq/solver.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cfgeq;

namespace {

Substitution scalar_sub(const std::vector<std::string>& terminals, double t) {
  Substitution s;
  s.dim = 1;
  s.norm_bound = t;
  for (const auto& a : terminals) s.map.emplace(a, Matrix(1, {t}));
  return s;
}

Matrix scaled_random(std::mt19937_64& rng, std::size_t n, double norm) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> e(n * n);
  for (auto& x : e) x = u(rng);
  Matrix m(n, e);
  return mat_scale(m, norm / frobenius_norm(m));
}

double closed_form(double t) { return t + t * t / (1 - t); }

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("evaluate a monomial at scalars") {
    const Grammar g = parse_grammar("S -> a A b ; A -> c ;");
    const EquationSystem sys = build_system(g);
    const Assignment x{{"A", Matrix(1, {0.5})}, {"S", Matrix(1, {0.0})}};
    const Matrix v = evaluate_polynomial(sys.rhs.at("S"), scalar_sub(g.terminals(), 0.1), x);
    CHECK(v(0, 0) == doctest::Approx(0.005).epsilon(1e-15));
  }

  TEST_CASE("the identity term contributes I") {
    const Grammar g = test::load("intro");
    const EquationSystem sys = build_system(g);
    const Assignment x{{"A", Matrix(1)}, {"S", Matrix(1)}};
    CHECK(evaluate_polynomial(sys.rhs.at("A"), scalar_sub(g.terminals(), 0.1), x)(0, 0) == 1.0);
  }

  TEST_CASE("first iterate is the image of the constant letters") {
    const Grammar g = test::load("c3");
    const EquationSystem sys = build_system(g);
    const Substitution sub = random_substitution(g.terminals(), 3, 0.3, 1);
    const Assignment zero{{"S", Matrix(3)}, {"A", Matrix(3)}};
    CHECK(evaluate_polynomial(sys.rhs.at("S"), sub, zero) == sub.at("a"));
    const Assignment step = fixed_point_map(sys, sub, zero);
    CHECK(step.at("S") == sub.at("a"));
    CHECK(step.at("A") == sub.at("b"));
  }

  TEST_CASE("missing image") {
    const EquationSystem sys = build_system(test::load("c3"));
    CHECK_THROWS_AS(evaluate_polynomial(sys.rhs.at("A"), scalar_sub({"a"}, 0.1), {{"S", Matrix(1)}, {"A", Matrix(1)}}),
                    InvalidArgument);
  }

  TEST_CASE("linear inverse by back substitution") {
    const Matrix vs(2, {1, 2, 3, 4}), va(2, {5, 6, 7, 8});
    const Assignment out = apply_linear_inverse({{"S", {"A"}}}, {{"S", vs}, {"A", va}});
    CHECK(out.at("A") == va);
    CHECK(out.at("S") == mat_add(vs, va));

    const Assignment same = apply_linear_inverse({}, {{"S", vs}, {"A", va}});
    CHECK(same.at("S") == vs);
    CHECK(same.at("A") == va);

    const Matrix m(2, {0.5, -1, 0.25, 2});
    const Assignment chain = apply_linear_inverse({{"S", {"A"}}, {"A", {"B"}}}, {{"S", m}, {"A", m}, {"B", m}});
    CHECK(chain.at("B") == m);
    CHECK(chain.at("A") == mat_scale(m, 2));
    CHECK(chain.at("S") == mat_scale(m, 3));

    CHECK_THROWS_AS(apply_linear_inverse({{"S", {"A"}}, {"A", {"S"}}}, {{"S", m}, {"A", m}}), RenamingCycleError);
  }

  TEST_CASE("introductory grammar at a scalar") {
    const Grammar g = test::load("intro");
    for (double t : {0.01, 0.05, 0.1, 0.3}) {
      const Solution s = iterate(compile(g), scalar_sub(g.terminals(), t));
      REQUIRE(s.status == SolveStatus::Converged);
      CHECK(std::abs(s.assignment.at("S")(0, 0) - closed_form(t)) <= 1e-12);
      CHECK(std::abs(s.assignment.at("A")(0, 0) - 1 / (1 - t)) <= 1e-12);
    }
  }

  TEST_CASE("zero substitution") {
    const Grammar g = test::load("c3");
    Substitution zero = scalar_sub(g.terminals(), 0.0);
    const Solution s = iterate(compile(g), zero);
    CHECK(s.status == SolveStatus::Converged);
    // X1 = F(0) = 0 already equals X0, so the first step confirms the fixed
    // point. Counting the confirming evaluation F(X1) separately would give 2.
    CHECK(s.iterations == 1);
    CHECK(s.assignment.at("S")(0, 0) == 0.0);
    CHECK(s.assignment.at("A")(0, 0) == 0.0);
    CHECK(s.residual == 0.0);
  }

  TEST_CASE("divergence and iteration limits") {
    const Grammar g = parse_grammar("S -> S S | a ;");
    CHECK(iterate(compile(g), scalar_sub({"a"}, 1.0)).status == SolveStatus::Diverged);
    SolveOptions few;
    few.max_iter = 3;
    CHECK(iterate(compile(g), scalar_sub({"a"}, 0.1), few).status == SolveStatus::MaxIterExceeded);
    // Critical point t = 1/4: the iteration creeps towards 1/2 sublinearly.
    SolveOptions stall;
    stall.stall_ratio = 0.9;
    CHECK(iterate(compile(g), scalar_sub({"a"}, 0.25), stall).status == SolveStatus::MaxIterExceeded);
  }

  TEST_CASE("shifted variables get the identity back") {
    const Grammar g = test::load("eps_shift");
    const EquationSystem sys = compile(g);
    const Substitution sub = random_substitution(g.terminals(), 2, 0.2, 4);
    const Solution s = iterate(sys, sub);
    REQUIRE(s.status == SolveStatus::Converged);
    const Assignment inner = internal_values(sys, s.assignment);
    CHECK(max_abs_diff(mat_add(inner.at("A"), Matrix::identity(2)), s.assignment.at("A")) == 0.0);
    // A = c S d + I holds for the returned values.
    const Matrix rhs_a = mat_add(mat_mul(mat_mul(sub.at("c"), s.assignment.at("S")), sub.at("d")), Matrix::identity(2));
    CHECK(max_abs_diff(rhs_a, s.assignment.at("A")) < 1e-12);
  }

  TEST_CASE("F is a contraction under the hypothesis") {
    std::mt19937_64 rng(21);
    int checked = 0;
    while (checked < 100) {
      const Grammar g = test::random_grammar(rng);
      const EquationSystem sys = compile(g);
      const ContractionParams cp = contraction_params(sys);
      if (cp.nbar == 0) continue;
      std::uniform_real_distribution<double> frac(0.1, 1.0);
      const double delta = cp.delta_max * frac(rng);
      const std::size_t dim = 1 + rng() % 4;
      const Substitution sub = random_substitution(g.terminals(), dim, delta, rng());
      Assignment x, y;
      double gap = 0.0;
      for (const auto& v : sys.variables) {
        x.emplace(v, scaled_random(rng, dim, delta * frac(rng)));
        y.emplace(v, scaled_random(rng, dim, delta * frac(rng)));
        gap = std::max(gap, frobenius_norm(mat_sub(x.at(v), y.at(v))));
      }
      const Assignment fx = evaluate_rhs(sys, sub, x), fy = evaluate_rhs(sys, sub, y);
      double lhs = 0.0;
      for (const auto& v : sys.variables) lhs = std::max(lhs, frobenius_norm(mat_sub(fx.at(v), fy.at(v))));
      const double bound = static_cast<double>(cp.nbar) * delta * gap;
      CHECK(lhs <= bound * (1 + 1e-12));
      ++checked;
    }
  }

  TEST_CASE("solution is a fixed point") {
    for (const std::string name : {"c3", "g8", "g9", "g10", "g11", "intro", "eps_shift"}) {
      CAPTURE(name);
      const Grammar g = test::load(name);
      const EquationSystem sys = compile(g);
      for (std::size_t dim : {1u, 2u, 3u}) {
        const Substitution sub = random_substitution(g.terminals(), dim, contraction_params(sys).delta_max, dim);
        const Solution s = iterate(sys, sub);
        REQUIRE(s.status == SolveStatus::Converged);
        const Assignment inner = internal_values(sys, s.assignment);
        const Assignment again = fixed_point_map(sys, sub, inner);
        for (const auto& v : sys.variables) CHECK(max_abs_diff(again.at(v), inner.at(v)) <= 10 * SolveOptions{}.tol);
      }
    }
  }

  TEST_CASE("solver agrees with the truncated series") {
    const double t = 0.05;
    const std::size_t L = 8;
    for (const std::string name : {"c3", "g8", "g9", "g10", "g11", "intro", "eps_shift"}) {
      CAPTURE(name);
      const Grammar g = test::load(name);
      const Solution s = iterate(compile(g), scalar_sub(g.terminals(), t));
      REQUIRE(s.status == SolveStatus::Converged);
      const SeriesSlice slice = series_slice(g, L);
      REQUIRE(slice.stabilized);
      double sum = 0.0;
      std::uint64_t max_coeff = 0;
      for (const auto& [w, c] : slice.coefficients) {
        sum += static_cast<double>(c) * std::pow(t, static_cast<double>(w.size()));
        max_coeff = std::max(max_coeff, c);
      }
      const double q = static_cast<double>(g.terminals().size()) * t;
      const double tail = 2.0 * static_cast<double>(max_coeff) * std::pow(q, L + 1) / (1 - q);
      CHECK(std::abs(s.assignment.at(g.axiom())(0, 0) - sum) <= tail);
    }
  }

  TEST_CASE("certified envelope") {
    const EquationSystem c3 = compile(test::load("c3"));
    const double d = certified_delta(c3, contraction_params(c3).delta_max);
    CHECK(d > 0.0);
    CHECK(d <= 0.3);
    // The renaming sum of 30 letters needs an envelope near 1/30.
    const EquationSystem r3 = compile(test::load("r3"));
    const double dr = certified_delta(r3, contraction_params(r3).delta_max);
    CHECK(dr < 1.0 / 30);
    CHECK(dr > 0.5 / 30);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Solution s = iterate(r3, random_substitution(r3.terminals, 2, dr, seed));
      CHECK(s.status == SolveStatus::Converged);
    }
  }

  TEST_CASE("solution JSON") {
    const Grammar g = test::load("c3");
    const nlohmann::json j = to_json(iterate(compile(g), scalar_sub(g.terminals(), 0.1)));
    CHECK(j.at("status") == "Converged");
    CHECK(j.at("assignment").contains("S"));
    CHECK(j.at("iterations").get<std::size_t>() > 0);
  }
}
