#include <cctype>
#include <random>

#include "cfgeq/eqsystem.hpp"
#include "cfgeq/error.hpp"
#include "cfgeq/oracle.hpp"
#include "cfgeq/solver.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cfgeq;

namespace {

Monomial mono(std::initializer_list<const char*> names) {
  Monomial m;
  for (const char* n : names)
    m.factors.push_back(std::isupper(static_cast<unsigned char>(n[0])) ? Symbol::nonterminal(n) : Symbol::terminal(n));
  return m;
}

Substitution scalar_sub(const std::vector<std::string>& terminals, double t) {
  Substitution s;
  s.dim = 1;
  s.norm_bound = t;
  for (const auto& a : terminals) s.map.emplace(a, Matrix(1, {t}));
  return s;
}

}  // namespace

TEST_SUITE("eqsystem") {
  TEST_CASE("system of c3") {
    const EquationSystem sys = build_system(test::load("c3"));
    CHECK(sys.to_string() == "S = S a A + a\nA = c S d + b\n");
    CHECK(sys.linear_part.empty());
  }

  TEST_CASE("system of the introductory grammar keeps the identity") {
    const EquationSystem sys = build_system(test::load("intro"));
    CHECK(sys.to_string() == "S = a A b + c\nA = c A + I\n");
  }

  TEST_CASE("system of a single production") {
    CHECK(build_system(parse_grammar("S -> a ;")).to_string() == "S = a\n");
  }

  TEST_CASE("split moves renaming terms") {
    const EquationSystem sys = split_linear(build_system(test::load("g8")));
    CHECK(sys.to_string() == "S = S a A + {A}\nA = c S d + b\n");
    CHECK(sys.rhs.at("S").terms == std::vector<Monomial>{mono({"S", "a", "A"})});
    CHECK(sys.linear_part.at("S") == std::vector<std::string>{"A"});
    CHECK(sys.linear_part.count("A") == 0);
  }

  TEST_CASE("split leaves a system without renaming alone") {
    const EquationSystem raw = build_system(test::load("c3"));
    const EquationSystem sys = split_linear(raw);
    CHECK(sys.to_string() == raw.to_string());
    CHECK(sys.linear_part.empty());
  }

  TEST_CASE("split keeps multiplicity") {
    EquationSystem sys;
    sys.variables = {"S", "A"};
    sys.axiom = "S";
    sys.terminals = {"b"};
    sys.rhs["S"].terms = {mono({"A"}), mono({"A"})};
    sys.rhs["A"].terms = {mono({"b"})};
    const EquationSystem s = split_linear(sys);
    CHECK(s.linear_part.at("S") == std::vector<std::string>{"A", "A"});
    CHECK(s.rhs.at("S").terms.empty());
    const Solution sol = iterate(s, scalar_sub({"b"}, 0.25));
    CHECK(sol.assignment.at("S")(0, 0) == doctest::Approx(0.5));
    const SeriesSlice slice = symbolic_slice(s, {"b"}, 3);
    CHECK(slice.coefficient(std::string(1, '\0')) == 2);
  }

  TEST_CASE("epsilon shift") {
    const EquationSystem sys = compile(test::load("eps_shift"));
    CHECK(sys.to_string() == "S = S a A' + S a + b\nA' = c S d\n");
    CHECK(sys.is_shifted("A"));
    CHECK_FALSE(sys.is_shifted("S"));
    CHECK(sys.is_epsilon_shifted);
  }

  TEST_CASE("epsilon shift leaves epsilon-free systems alone") {
    const EquationSystem sys = split_linear(build_system(test::load("c3")));
    const EquationSystem shifted = epsilon_shift(sys);
    CHECK(shifted.to_string() == sys.to_string());
    CHECK(shifted.shifted.empty());
  }

  TEST_CASE("nullable through composition is refused") {
    const Grammar g = parse_grammar("S -> A A ; A -> a | eps ;");
    CHECK_THROWS_AS(compile(g), NonCancellingConstantError);
    // The series itself is fine: the empty word has one derivation.
    const SeriesSlice s = series_slice(g, 2);
    CHECK(s.coefficient("") == 1);
  }

  TEST_CASE("contraction parameters") {
    const ContractionParams c3 = contraction_params(compile(test::load("c3")));
    CHECK(c3.nbar == 3);
    CHECK(c3.delta_max == doctest::Approx(0.3));
    const ContractionParams one = contraction_params(compile(parse_grammar("S -> a ;")));
    CHECK(one.nbar == 0);
    CHECK(one.delta_max == 0.5);
    const ContractionParams e1 = contraction_params(compile(test::load("g8")));
    CHECK(e1.nbar == 3);
    CHECK(e1.delta_max == doctest::Approx(0.3));
  }

  TEST_CASE("split and shift are idempotent") {
    std::mt19937_64 rng(3);
    test::RandomGrammarShape shape;
    shape.allow_epsilon = true;
    shape.allow_renaming = true;
    int checked = 0;
    for (int i = 0; i < 300; ++i) {
      const Grammar g = test::random_grammar(rng, shape);
      const EquationSystem split = split_linear(build_system(g));
      CHECK(split_linear(split).to_string() == split.to_string());
      try {
        const EquationSystem shifted = epsilon_shift(split);
        CHECK(epsilon_shift(shifted).to_string() == shifted.to_string());
        for (const auto& [v, p] : shifted.rhs)
          for (const auto& m : p.terms) {
            CHECK_FALSE(m.is_identity());
            CHECK_FALSE(m.is_bare_nonterminal());
          }
        ++checked;
      } catch (const NonCancellingConstantError&) {
      } catch (const RenamingCycleError&) {
      }
    }
    CHECK(checked > 100);
  }

  TEST_CASE("transformed systems keep the series") {
    std::mt19937_64 rng(5);
    test::RandomGrammarShape shape;
    shape.allow_epsilon = true;
    shape.allow_renaming = true;
    shape.letters = "ab";
    int checked = 0;
    for (int i = 0; i < 120; ++i) {
      const Grammar g = test::random_grammar(rng, shape);
      EquationSystem sys;
      try {
        sys = compile(g);
      } catch (const NonCancellingConstantError&) {
        continue;
      } catch (const RenamingCycleError&) {
        continue;  // nullable factors create infinite ambiguity
      }
      for (std::size_t len : {3u, 5u, 7u}) {
        const SeriesSlice raw = series_slice(g, len);
        const SeriesSlice transformed = symbolic_slice(sys, g.terminals(), len);
        if (!raw.stabilized) continue;
        CHECK(transformed.stabilized);
        CHECK(transformed.coefficients == raw.coefficients);
      }
      ++checked;
    }
    for (const std::string name : {"intro", "eps_shift", "g8", "g11"}) {
      const Grammar g = test::load(name);
      CHECK(symbolic_slice(compile(g), g.terminals(), 7).coefficients == series_slice(g, 7).coefficients);
    }
    CHECK(checked > 40);
  }

  TEST_CASE("shifted and unshifted systems have the same scalar fixed point") {
    std::mt19937_64 rng(9);
    test::RandomGrammarShape shape;
    shape.allow_epsilon = true;
    shape.allow_renaming = true;
    int checked = 0;
    for (int i = 0; i < 200; ++i) {
      const Grammar g = test::random_grammar(rng, shape);
      EquationSystem shifted;
      try {
        shifted = compile(g);
      } catch (const NonCancellingConstantError&) {
        continue;
      } catch (const RenamingCycleError&) {
        continue;  // nullable factors create infinite ambiguity
      }
      const EquationSystem plain = split_linear(build_system(g));
      const Substitution sub = scalar_sub(g.terminals(), 0.03);
      const Solution a = iterate(plain, sub);
      const Solution b = iterate(shifted, sub);
      if (a.status != SolveStatus::Converged) continue;
      REQUIRE(b.status == SolveStatus::Converged);
      for (const auto& v : g.nonterminals())
        CHECK(a.assignment.at(v)(0, 0) == doctest::Approx(b.assignment.at(v)(0, 0)).epsilon(1e-12));
      ++checked;
    }
    CHECK(checked > 50);
  }
}
