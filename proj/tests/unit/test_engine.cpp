#include <algorithm>
#include <random>

#include "cfgeq/engine.hpp"
#include "cfgeq/error.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cfgeq;

namespace {

CompareConfig seeded(std::uint64_t seed) {
  CompareConfig c;
  c.seed = seed;
  return c;
}

Grammar shuffled(const Grammar& g, std::mt19937_64& rng) {
  std::vector<Production> prods = g.productions();
  std::shuffle(prods.begin(), prods.end(), rng);
  return Grammar(g.nonterminals(), g.terminals(), prods);
}

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("verdicts on the small grammars") {
    const Grammar g8 = test::load("g8"), g9 = test::load("g9"), g10 = test::load("g10"), g11 = test::load("g11");

    const Verdict same = compare(g8, g9);
    CHECK(same.outcome == Outcome::ProbablyEquivalent);
    CHECK(same.trials_run() == 20);
    for (const auto& t : same.trials) CHECK(t.diff < 1e-10);

    const Verdict wrong = compare(g8, g10);
    CHECK(wrong.outcome == Outcome::Different);
    REQUIRE(wrong.witness_trial);
    CHECK(wrong.trials[*wrong.witness_trial].diff > 1e-7);
    REQUIRE(wrong.witness_substitution);
    REQUIRE(wrong.oracle);
    REQUIRE(wrong.oracle->witness);
    CHECK(wrong.oracle->witness->word == "cbabd");

    const Verdict ambiguous = compare(g8, g11);
    CHECK(ambiguous.outcome == Outcome::Different);
    REQUIRE(ambiguous.witness_trial);
    REQUIRE(ambiguous.oracle->witness);
    CHECK(ambiguous.oracle->witness->word == "babab");
  }

  TEST_CASE("exit codes") {
    CHECK(exit_code(Outcome::ProbablyEquivalent) == 0);
    CHECK(exit_code(Outcome::Different) == 1);
    CHECK(exit_code(Outcome::Inconclusive) == 2);
    CHECK(exit_code(Outcome::ClassMismatch) == 3);
  }

  TEST_CASE("a grammar is equivalent to itself") {
    for (const std::string name : {"c3", "g8", "g9", "g10", "g11", "intro", "eps_shift", "long_a"}) {
      CAPTURE(name);
      const Grammar g = test::load(name);
      for (std::uint64_t seed = 0; seed < 100; ++seed) {
        CompareConfig cfg = seeded(seed);
        cfg.oracle_len = 6;
        const Verdict v = compare(g, g, cfg);
        CHECK(v.outcome == Outcome::ProbablyEquivalent);
      }
    }
  }

  TEST_CASE("verdicts ignore production order") {
    std::mt19937_64 rng(43);
    const Grammar g8 = test::load("g8"), g9 = test::load("g9"), g10 = test::load("g10"), g11 = test::load("g11");
    for (int i = 0; i < 5; ++i) {
      CHECK(compare(shuffled(g8, rng), shuffled(g9, rng)).outcome == Outcome::ProbablyEquivalent);
      CHECK(compare(shuffled(g8, rng), shuffled(g10, rng)).outcome == Outcome::Different);
      CHECK(compare(shuffled(g8, rng), shuffled(g11, rng)).outcome == Outcome::Different);
    }
  }

  TEST_CASE("verdicts are deterministic") {
    const Grammar g8 = test::load("g8"), g9 = test::load("g9"), g10 = test::load("g10");
    for (std::size_t threads : {1u, 3u}) {
      CompareConfig cfg = seeded(5);
      cfg.threads = threads;
      CHECK(compare(g8, g9, cfg).to_json(false) == compare(g8, g9, seeded(5)).to_json(false));
      CHECK(compare(g8, g10, cfg).to_json(false) == compare(g8, g10, seeded(5)).to_json(false));
    }
    CHECK(compare(g8, g9, seeded(5)).to_json(false)["trials"] != compare(g8, g9, seeded(6)).to_json(false)["trials"]);
  }

  TEST_CASE("replay reproduces a Different verdict") {
    const Grammar g8 = test::load("g8"), g10 = test::load("g10"), g9 = test::load("g9");
    const Verdict v = compare(g8, g10, seeded(42));
    const nlohmann::json doc = nlohmann::json::parse(v.to_json().dump());
    const ReplayResult r = replay(doc, g8, g10);
    CHECK(r.identical);
    REQUIRE(r.trials.size() == v.trials.size());
    for (std::size_t i = 0; i < r.trials.size(); ++i) CHECK(r.trials[i].diff == v.trials[i].diff);
    CHECK(r.trials.back().diff > v.config.different_tol);
    CHECK_THROWS_AS(replay(doc, g8, g9), ReplayMismatch);
    CHECK_THROWS_AS(replay(nlohmann::json::object(), g8, g10), ReplayMismatch);
  }

  TEST_CASE("replay of an equivalent verdict") {
    const Grammar g8 = test::load("g8"), g9 = test::load("g9");
    const Verdict v = compare(g8, g9, seeded(3));
    const ReplayResult r = replay(nlohmann::json::parse(v.to_json().dump()), g8, g9);
    CHECK(r.identical);
    CHECK(r.trials.size() == 20);
  }

  TEST_CASE("more trials never undo a difference") {
    const Grammar g8 = test::load("g8"), g10 = test::load("g10"), a = test::load("long_a"), b = test::load("long_b");
    for (std::size_t n = 1; n <= 12; ++n) {
      CompareConfig cfg = seeded(9);
      cfg.trials_per_dim = n;
      CHECK(compare(g8, g10, cfg).outcome == Outcome::Different);
      CHECK(compare(a, b, cfg).outcome == Outcome::Different);
    }
  }

  TEST_CASE("every matrix difference is confirmed or flagged") {
    const std::pair<const char*, const char*> pairs[] = {{"g8", "g10"}, {"g8", "g11"}, {"long_a", "long_b"}};
    for (const auto& [l, r] : pairs) {
      CAPTURE(l);
      const Grammar gl = test::load(l), gr = test::load(r);
      const Verdict v = compare(gl, gr);
      REQUIRE(v.outcome == Outcome::Different);
      REQUIRE(v.witness_trial);
      REQUIRE(v.oracle);
      if (v.oracle->witness) {
        CHECK(v.oracle->witness->coeff_left != v.oracle->witness->coeff_right);
      } else {
        // Long-witness regime: matrix-only evidence, and no word up to 12 differs.
        CHECK(v.reason.find("oracle") == std::string::npos);
        CHECK_FALSE(min_distinguishing_word(gl, gr, 12).witness);
      }
    }
  }

  TEST_CASE("renaming sums hide long words") {
    CompareConfig cfg;
    cfg.dims = {2};
    const Verdict v = compare(test::load("r3"), test::load("r31"), cfg);
    CHECK(v.outcome == Outcome::ProbablyEquivalent);
    for (const auto& t : v.trials) CHECK(t.converged());
  }

  TEST_CASE("class probes") {
    const Grammar infinite = parse_grammar("S -> S A | a ; A -> eps ;");
    const Grammar finite = parse_grammar("S -> a ;");
    const Verdict mismatch = compare(finite, infinite);
    CHECK(mismatch.outcome == Outcome::ClassMismatch);
    CHECK_FALSE(mismatch.right.first_class);
    CHECK(mismatch.left.first_class);
    CHECK(compare(infinite, infinite).outcome == Outcome::Inconclusive);
  }

  TEST_CASE("dead band") {
    CompareConfig cfg;
    cfg.different_tol = 10.0;  // nothing counts as a difference
    cfg.oracle_len = 8;
    const Verdict v = compare(test::load("long_a"), test::load("long_b"), cfg);
    CHECK(v.outcome == Outcome::Inconclusive);
    CHECK_FALSE(v.witness_trial);
  }

  TEST_CASE("alphabets are merged") {
    const Verdict v = compare(parse_grammar("S -> a S | b ;"), parse_grammar("S -> a S | c ;"));
    CHECK(v.alphabet == std::vector<std::string>{"a", "b", "c"});
    CHECK(v.outcome == Outcome::Different);
  }

  TEST_CASE("delta override") {
    CompareConfig cfg;
    cfg.delta_override = 0.05;
    const Verdict v = compare(test::load("g8"), test::load("g9"), cfg);
    CHECK(v.outcome == Outcome::ProbablyEquivalent);
    for (const auto& t : v.trials) CHECK(t.delta == 0.05);
  }

  TEST_CASE("errors carry the side") {
    CHECK_THROWS_WITH_AS(compare(test::load("g8"), parse_grammar("S -> A A ; A -> a | eps ;")),
                         doctest::Contains("right grammar"), NonCancellingConstantError);
    CHECK_THROWS_AS(compare(parse_grammar("S -> A ; A -> S ;"), test::load("g8")), RenamingCycleError);
  }

  TEST_CASE("configuration is validated") {
    CompareConfig cfg;
    cfg.dims = {};
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.trials_per_dim = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.equal_tol = 1e-6;
    cfg.different_tol = 1e-7;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.delta_override = -1.0;
    CHECK_THROWS_AS(compare(test::load("g8"), test::load("g9"), cfg), InvalidArgument);
  }

  TEST_CASE("normalized difference") {
    CHECK(normalized_diff(Matrix(1, {0.5}), Matrix(1, {0.25})) == 0.25);
    CHECK(normalized_diff(Matrix(1, {4.0}), Matrix(1, {2.0})) == 0.5);
  }

  TEST_CASE("grammar hash") {
    const std::string h = grammar_hash(test::load("g8"));
    CHECK(h.size() == 16);
    CHECK(h == grammar_hash(parse_grammar(test::load("g8").to_string())));
    CHECK(h != grammar_hash(test::load("g9")));
  }
}
