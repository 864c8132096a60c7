#include "uncover/oracle.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace uncover {

const char* violation_name(CoherenceViolation v) {
  return v == CoherenceViolation::Memoizing ? "memoizing" : "early-assume";
}

bool oracle_feasible(const Execution& rho, const Signature& sig, int num_ghosts,
                     std::span<const MethodSig> methods) {
  CompEval eval(sig, num_ghosts, methods);
  eval.run(rho);
  std::vector<TermId> terms = eval.term_set();
  Congruence cc = congruence_closure(eval.arena(), terms, eval.alpha());
  for (const auto& [a, b] : eval.beta())
    if (cc.same(a, b)) return false;
  return true;
}

namespace {

// Classes of the closure restricted to the arena, plus reachability in the
// immediate-superterm relation lifted to classes.
struct ClassGraph {
  const Congruence* cc;
  std::unordered_map<TermId, std::vector<TermId>> supers;  // class rep -> parent class reps

  explicit ClassGraph(const TermArena& arena, const Congruence& closure) : cc(&closure) {
    for (TermId t : closure.term_set()) {
      if (arena.is_init(t)) continue;
      TermId parent_rep = closure.find(t);
      for (TermId c : arena.children(t)) supers[closure.find(c)].push_back(parent_rep);
    }
  }

  // Reflexive-transitive closure from the classes of the given seeds.
  std::set<TermId> reachable(std::span<const TermId> seeds) const {
    std::set<TermId> seen;
    std::vector<TermId> stack;
    for (TermId s : seeds) {
      TermId r = cc->find(s);
      if (seen.insert(r).second) stack.push_back(r);
    }
    while (!stack.empty()) {
      TermId u = stack.back();
      stack.pop_back();
      auto it = supers.find(u);
      if (it == supers.end()) continue;
      for (TermId v : it->second)
        if (seen.insert(v).second) stack.push_back(v);
    }
    return seen;
  }
};

}  // namespace

CoherenceReport oracle_coherent(const Execution& rho, const Signature& sig, int num_ghosts,
                                std::span<const MethodSig> methods) {
  CompEval eval(sig, num_ghosts, methods);
  int total_vars = sig.num_vars() + num_ghosts;

  for (size_t i = 0; i < rho.size(); ++i) {
    const ExecLetter& l = rho[i];
    if (l.kind == ExecLetter::Kind::AssignFn) {
      // Memoizing: if the computed term, up to the congruence so far, was
      // already computed, some variable must still hold it.
      std::vector<TermId> args;
      for (int32_t z : l.args) {
        TermId t = eval.value(z);
        if (t == kNoTerm) throw std::invalid_argument("read of unassigned variable");
        args.push_back(t);
      }
      int before = eval.arena().size();
      // The closure runs over Terms(sigma) plus the candidate term, which
      // stays subterm closed.
      TermId t = eval.intern_apply(l.fn, args);
      const TermArena& arena = eval.arena();
      std::vector<TermId> terms(static_cast<size_t>(arena.size()));
      for (int k = 0; k < arena.size(); ++k) terms[static_cast<size_t>(k)] = k;
      Congruence cc = congruence_closure(arena, terms, eval.alpha());

      bool recomputed = false;
      TermId trep = cc.find(t);
      for (int k = 0; k < before && !recomputed; ++k)
        if (cc.find(k) == trep) recomputed = true;
      if (recomputed) {
        bool held = false;
        for (int v = 0; v < total_vars && !held; ++v) {
          TermId tv = eval.value(v);
          if (tv != kNoTerm && cc.find(tv) == trep) held = true;
        }
        if (!held)
          return {false, static_cast<int>(i), CoherenceViolation::Memoizing};
      }
    } else if (l.kind == ExecLetter::Kind::AssumeEq) {
      // Early assumes: every computed superterm (modulo the congruence so
      // far) of the two sides must still be held by some variable.
      std::vector<TermId> terms(static_cast<size_t>(eval.arena().size()));
      for (int k = 0; k < eval.arena().size(); ++k) terms[static_cast<size_t>(k)] = k;
      Congruence cc = congruence_closure(eval.arena(), terms, eval.alpha());
      TermId tx = eval.value(l.a), ty = eval.value(l.b);
      if (tx == kNoTerm || ty == kNoTerm) throw std::invalid_argument("read of unassigned variable");
      ClassGraph graph(eval.arena(), cc);
      std::array<TermId, 2> seeds{tx, ty};
      std::set<TermId> reach = graph.reachable(seeds);

      std::set<TermId> held_classes;
      for (int v = 0; v < total_vars; ++v) {
        TermId tv = eval.value(v);
        if (tv != kNoTerm) held_classes.insert(cc.find(tv));
      }
      for (TermId c : reach)
        if (!held_classes.count(c))
          return {false, static_cast<int>(i), CoherenceViolation::EarlyAssume};
    }
    eval.step(l);
  }
  return {};
}

}  // namespace uncover
