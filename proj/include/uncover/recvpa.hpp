#pragma once

#include <memory>
#include <optional>

#include "uncover/scc.hpp"
#include "uncover/syntax.hpp"
#include "uncover/verifier.hpp"

namespace uncover {

// Visibly pushdown automaton over the recursive execution alphabet.
// Stack symbols are call sites: the called method, the variables assigned
// by the matching return, and the continuation state.
struct Vpa {
  struct InternalE {
    ExecLetter letter;
    int to;
  };
  struct CallE {
    int method;
    int sym;
    int to;
  };
  struct RetE {
    int sym;
    int to;
  };
  struct SymInfo {
    int method;
    std::vector<int32_t> targets;
    int cont;
  };

  std::vector<std::vector<InternalE>> internal;
  std::vector<std::vector<CallE>> calls;
  std::vector<std::vector<RetE>> rets;
  std::vector<SymInfo> syms;
  std::vector<char> accepting;
  int start = 0;
  bool require_empty_stack = true;  // complete mode; partial accepts any stack

  int num_states() const { return static_cast<int>(internal.size()); }
  ExecLetter ret_letter(int sym) const { return ExecLetter::ret(syms[static_cast<size_t>(sym)].targets); }
};

// Accepts Exec(P) (Complete: at the main exit with an empty stack) or
// PExec(P) (Partial: every state, any stack). Size quadratic in |P|.
Vpa build_exec_vpa(const Program& p, ExecMode mode);

bool vpa_accepts(const Vpa& vpa, const Execution& word);
// Accepted words of length <= maxlen (call depth <= maxdepth when >= 0),
// stopping once `cap` words were produced. Sorted.
std::vector<Execution> vpa_language_upto(const Vpa& vpa, int maxlen, int maxdepth = -1,
                                         size_t cap = SIZE_MAX);

// Synchronized product (paired states and stack symbols).
Vpa vpa_intersect(const Vpa& a, const Vpa& b);

struct VpaEmptiness {
  bool empty = true;
  Execution witness;
  long states_explored = 0;
};
VpaEmptiness vpa_empty(const Vpa& vpa, long max_states = 1'000'000);

// --- Recursive feasibility automaton -------------------------------------
//
// State over V and a shadow copy V' of caller-at-call values; internal
// letters run the streaming congruence closure, calls push the state and
// restrict to V, returns merge the pushed state back (SccState::call_entry
// and SccState::return_merge implement the two stack transitions).

SccState rfeas_initial(const Signature& sig);

struct RfeasRun {
  SccState final_state;
  int reject_position = -1;
  bool accepted() const { return reject_position < 0; }
};
// Runs the automaton on a flat execution (a prefix of a well-matched word).
RfeasRun rfeas_run(const Execution& rho, const Signature& sig, std::span<const MethodSig> methods);

// Emptiness of Exec(P) intersected with the recursive feasibility automaton;
// returns the witness execution when nonempty.
struct RecFeasibility {
  bool empty = true;
  Execution witness;
  long states_explored = 0;
};
RecFeasibility recursive_feasible_witness(const Program& core, const VerifyOptions& opts = {});

// Verification of recursive programs with coherent executions. Coherence is
// gated by an oracle spot-check over bounded executions (the check is sound
// on what it enumerates, not a decision procedure).
Verdict verify_recursive(const Program& p, std::optional<Postcondition> phi = std::nullopt,
                         const VerifyOptions& opts = {});

}  // namespace uncover
