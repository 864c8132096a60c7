#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uncover/exec.hpp"
#include "uncover/signature.hpp"

namespace uncover {

enum class StepVerdict { Ok, Reject, MemoizingViolation, EarlyAssumeViolation };

// State of the streaming congruence-closure automaton: an equivalence over
// the defined variables, a set of disequalities over its classes, and a
// partial interpretation P of the function symbols on classes. A second
// keyed table tracks which (f, class tuple) applications were ever computed;
// the coherence transition uses it, the feasibility transition ignores it.
//
// A class that loses its last variable but still appears as an argument of a
// live table entry is kept as an anonymous class: later equality assumes may
// collapse two held applications that share such a dropped argument, and
// forgetting it would miss the congruence. Anonymous classes never gain
// members (new equalities only relate variable-held terms on coherent
// executions), and entries whose result class is dropped are collected, so
// the window stays small.
//
// Canonical form: held classes are numbered by smallest member slot, then
// anonymous classes by occurrence in the sorted tables; transitions return
// canonical states, so structural equality and hashing are state identity.
class SccState {
 public:
  SccState() = default;
  // Slots [0, num_defined) start as singleton classes; the rest (ghosts,
  // shadow copies) start undefined.
  static SccState initial(int num_defined, int num_total);

  bool rejected() const { return reject_; }
  int num_slots() const { return static_cast<int>(var_class_.size()); }
  bool defined(int v) const { return var_class_[static_cast<size_t>(v)] >= 0; }
  int class_of(int v) const { return var_class_[static_cast<size_t>(v)]; }
  bool same_class(int x, int y) const {
    return defined(x) && defined(y) && class_of(x) == class_of(y);
  }
  // Is (class(x), class(y)) recorded as a disequality?
  bool has_diseq(int x, int y) const;
  // Class interpreted as f(classes of arg_vars), or -1 when undefined.
  int lookup_fn(int fn, std::span<const int> arg_vars) const;
  // Was f ever computed on the classes of arg_vars (the coherence table)?
  bool computed_flag(int fn, std::span<const int> arg_vars) const;

  // Feasibility transition; Call/Return letters are rejected here (the VPA
  // wrapper drives them through call_entry / return_merge).
  StepVerdict step_feasible(const ExecLetter& l);
  // Coherence transition: skips disequality assumes, maintains the
  // computed-ever table, and reports memoizing / early-assume violations.
  // On a violation the state is left untouched (callers treat the verdict
  // as an absorbing reject).
  StepVerdict step_coherent(const ExecLetter& l);

  // Call transition of the recursive automaton: keeps only the classes of
  // the first `num_program_vars` slots and places each shadow v' in the
  // class of v. (The caller keeps *this as the pushed stack symbol.)
  SccState call_entry(int num_program_vars) const;

  // Return transition: merges the pushed caller state with the callee state
  // at the return, rebinding `targets` to the callee's out variables and
  // every other program variable to its caller-at-call class.
  static SccState return_merge(const SccState& caller_at_call, const SccState& callee_at_return,
                               std::span<const int> out_vars, std::span<const int32_t> targets,
                               int num_program_vars);

  std::string dump(const VarNames& names) const;
  bool operator==(const SccState&) const = default;
  auto operator<=>(const SccState&) const = default;
  size_t hash() const;

 private:
  struct FnEntry {
    int32_t fn;
    std::vector<int32_t> args;
    int32_t out;
    auto operator<=>(const FnEntry&) const = default;
  };
  struct SeenEntry {
    int32_t fn;
    std::vector<int32_t> args;
    auto operator<=>(const SeenEntry&) const = default;
  };

  std::vector<int32_t> var_class_;                // slot -> class id; -1 undefined
  int32_t num_classes_ = 0;                       // class ids live in [0, num_classes_)
  std::vector<std::pair<int32_t, int32_t>> dis_;  // (a, b) with a < b, held classes
  std::vector<FnEntry> fns_;                      // P, sorted
  std::vector<SeenEntry> seen_;                   // E, sorted
  bool reject_ = false;

  void make_reject();
  // Merges the given class pairs with local congruence closure over the
  // function table; returns false when a disequality becomes reflexive.
  bool merge_classes(std::vector<std::pair<int32_t, int32_t>> pairs);
  // Garbage-collects unusable entries and renumbers classes canonically.
  void normalize();
  StepVerdict do_assign_fn(const ExecLetter& l, bool coherent);
  StepVerdict do_assume_eq(const ExecLetter& l, bool coherent);
  int read_class(int v) const;
  std::vector<char> held_mask() const;
};

struct SccRunReport {
  SccState final_state;
  int reject_position = -1;  // index of the first rejecting letter, -1 if accepting
  std::vector<SccState> trace;

  bool accepted() const { return reject_position < 0; }
};

SccState scc_initial(const Signature& sig, int num_ghosts = 0);
SccRunReport scc_run(const Execution& rho, const Signature& sig, int num_ghosts = 0,
                     bool keep_trace = false);

}  // namespace uncover
