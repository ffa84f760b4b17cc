#include <algorithm>

#include "cfgeq/eqsystem.hpp"
#include "cfgeq/error.hpp"
#include "cfgeq/grammar.hpp"
#include "cfgeq/solver.hpp"

namespace cfgeq {

ProbeResult scalar_class_probe(const Grammar& g, double mu, const ProbeOptions& opts) {
  if (!(mu > 0.0 && mu < 1.0)) throw InvalidArgument("scalar probe needs 0 < mu < 1");
  require_renaming_acyclic(g);
  // The identity is just 1 here, so no epsilon shift is needed.
  const EquationSystem sys = split_linear(build_system(g));

  Substitution sub;
  sub.dim = 1;
  sub.norm_bound = mu;
  for (const auto& t : g.terminals()) sub.map.emplace(t, Matrix(1, {mu}));

  SolveOptions so;
  so.tol = opts.tol;
  so.max_iter = opts.max_iter;
  so.blowup = opts.blowup;
  Solution s = iterate(sys, sub, so);

  if (s.status == SolveStatus::Converged) {
    ProbeConverged c;
    c.iterations = s.iterations;
    for (const auto& [v, m] : s.assignment) c.values[v] = m(0, 0);
    return c;
  }
  return ProbeDiverged{s.iterations, s.status == SolveStatus::Diverged};
}

double default_probe_mu(const Grammar& g) {
  const auto r = analyze_structure(g);
  const double nbar = static_cast<double>(std::max<std::size_t>(r.nbar, 1));
  const double width = static_cast<double>(std::max<std::size_t>(g.terminals().size(), 1));
  return 0.9 / (nbar * width);
}

}  // namespace cfgeq
