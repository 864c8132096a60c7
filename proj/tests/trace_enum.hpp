#pragma once

// Exhaustive trace enumeration over small alphabets, and the three-clause
// consistency check of automaton states against the term-model oracle.

#include <functional>
#include <string>
#include <vector>

#include "uncover/exec.hpp"
#include "uncover/oracle.hpp"
#include "uncover/scc.hpp"
#include "uncover/terms.hpp"

namespace testutil {

inline uncover::Signature small_sig() {
  uncover::Signature sig;
  sig.vars = {"x", "y", "z"};
  sig.funs = {{"f", 1}, {"g", 2}};
  return sig;
}

// The full alphabet over a signature: every assignment, function
// application, and (dis)equality assume.
inline std::vector<uncover::ExecLetter> full_alphabet(const uncover::Signature& sig) {
  using uncover::ExecLetter;
  std::vector<ExecLetter> out;
  int n = sig.num_vars();
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) out.push_back(ExecLetter::assign(x, y));
  for (int f = 0; f < sig.num_funs(); ++f) {
    std::vector<int32_t> args(static_cast<size_t>(sig.arity(f)), 0);
    std::function<void(int, int)> gen = [&](int pos, int target) {
      if (pos == sig.arity(f)) {
        out.push_back(ExecLetter::apply(target, f, args));
        return;
      }
      for (int v = 0; v < n; ++v) {
        args[static_cast<size_t>(pos)] = v;
        gen(pos + 1, target);
      }
    };
    for (int x = 0; x < n; ++x) gen(0, x);
  }
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      out.push_back(ExecLetter::assume_eq(x, y));
      out.push_back(ExecLetter::assume_neq(x, y));
    }
  return out;
}

// A slimmer alphabet for deeper exhaustive tiers.
inline std::vector<uncover::ExecLetter> deep_alphabet(const uncover::Signature& sig) {
  using uncover::ExecLetter;
  (void)sig;
  return {
      ExecLetter::assign(0, 1),            // x := y
      ExecLetter::assign(2, 0),            // z := x
      ExecLetter::apply(1, 0, {0}),        // y := f(x)
      ExecLetter::apply(0, 0, {0}),        // x := f(x)
      ExecLetter::apply(2, 1, {0, 1}),     // z := g(x,y)
      ExecLetter::assume_eq(0, 1),         // assume(x = y)
      ExecLetter::assume_eq(1, 2),         // assume(y = z)
      ExecLetter::assume_neq(0, 2),        // assume(x != z)
  };
}

// A six-letter alphabet small enough for exhaustive length-8 tiers.
inline std::vector<uncover::ExecLetter> tiny_alphabet(const uncover::Signature& sig) {
  using uncover::ExecLetter;
  (void)sig;
  return {
      ExecLetter::assign(0, 1),         // x := y
      ExecLetter::apply(1, 0, {0}),     // y := f(x)
      ExecLetter::apply(0, 0, {0}),     // x := f(x)
      ExecLetter::apply(2, 1, {0, 1}),  // z := g(x,y)
      ExecLetter::assume_eq(0, 1),      // assume(x = y)
      ExecLetter::assume_neq(0, 2),     // assume(x != z)
  };
}

// Depth-first enumeration of words up to maxlen. `visit` returns false to
// prune the subtree below the current word.
inline void enumerate_words(const std::vector<uncover::ExecLetter>& alphabet, int maxlen,
                            const std::function<bool(const uncover::Execution&)>& visit) {
  uncover::Execution word;
  std::function<void()> rec = [&]() {
    if (!visit(word)) return;
    if (static_cast<int>(word.size()) == maxlen) return;
    for (const uncover::ExecLetter& l : alphabet) {
      word.push_back(l);
      rec();
      word.pop_back();
    }
  };
  rec();
}

// Checks the three consistency clauses of an automaton state against the
// term-model semantics of rho. Returns an empty string when consistent.
inline std::string check_consistency(const uncover::SccState& q, const uncover::Execution& rho,
                                     const uncover::Signature& sig, int num_ghosts = 0) {
  using namespace uncover;
  if (q.rejected()) return "state is rejecting";
  CompEval eval(sig, num_ghosts);
  eval.run(rho);
  int total = sig.num_vars() + num_ghosts;

  // Intern every candidate application so one closure answers clause (c).
  std::vector<std::vector<TermId>> fn_terms(static_cast<size_t>(sig.num_funs()));
  std::vector<std::vector<std::vector<int>>> fn_tuples(static_cast<size_t>(sig.num_funs()));
  for (int f = 0; f < sig.num_funs(); ++f) {
    std::vector<int> tuple(static_cast<size_t>(sig.arity(f)), 0);
    std::function<void(int)> gen = [&](int pos) {
      if (pos == sig.arity(f)) {
        std::vector<TermId> args;
        for (int v : tuple) {
          if (eval.value(v) == kNoTerm) return;
          args.push_back(eval.value(v));
        }
        fn_terms[static_cast<size_t>(f)].push_back(eval.intern_apply(f, args));
        fn_tuples[static_cast<size_t>(f)].push_back(tuple);
        return;
      }
      for (int v = 0; v < total; ++v) {
        tuple[static_cast<size_t>(pos)] = v;
        gen(pos + 1);
      }
    };
    gen(0);
  }
  std::vector<TermId> terms = eval.term_set();
  Congruence cc = congruence_closure(eval.arena(), terms, eval.alpha());

  // (a) variable equivalence matches term-model equality.
  for (int x = 0; x < total; ++x)
    for (int y = 0; y < total; ++y) {
      if (eval.value(x) == kNoTerm || eval.value(y) == kNoTerm) continue;
      bool model_eq = cc.same(eval.value(x), eval.value(y));
      if (q.same_class(x, y) != model_eq)
        return "clause (a) fails for variables " + std::to_string(x) + "," + std::to_string(y);
    }

  // (b) recorded disequalities match beta pairs up to congruence.
  for (int x = 0; x < total; ++x)
    for (int y = 0; y < total; ++y) {
      if (eval.value(x) == kNoTerm || eval.value(y) == kNoTerm) continue;
      bool expected = false;
      for (auto [t1, t2] : eval.beta()) {
        if ((cc.same(t1, eval.value(x)) && cc.same(t2, eval.value(y))) ||
            (cc.same(t1, eval.value(y)) && cc.same(t2, eval.value(x))))
          expected = true;
      }
      if (q.has_diseq(x, y) != expected)
        return "clause (b) fails for variables " + std::to_string(x) + "," + std::to_string(y);
    }

  // (c) the partial interpretation matches congruence on applications.
  for (int f = 0; f < sig.num_funs(); ++f) {
    for (size_t i = 0; i < fn_terms[static_cast<size_t>(f)].size(); ++i) {
      TermId app = fn_terms[static_cast<size_t>(f)][i];
      const std::vector<int>& tuple = fn_tuples[static_cast<size_t>(f)][i];
      int holder = -1;
      for (int v = 0; v < total && holder < 0; ++v)
        if (eval.value(v) != kNoTerm && cc.same(app, eval.value(v))) holder = v;
      int got = q.lookup_fn(f, tuple);
      if ((holder >= 0) != (got >= 0))
        return "clause (c) definedness fails for function " + std::to_string(f);
      if (holder >= 0 && q.class_of(holder) != got)
        return "clause (c) target fails for function " + std::to_string(f);
    }
  }
  return {};
}

}  // namespace testutil
