#pragma once

#include <optional>

#include "uncover/oracle.hpp"
#include "uncover/scc.hpp"
#include "uncover/syntax.hpp"

namespace uncover {

struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// State of the coherence DFA: the (equivalence, P, E) window plus an
// absorbing violation status. Disequality assumes are ignored, so the
// window's d component stays empty.
struct CohState {
  enum class Status : uint8_t { Coherent, Memoizing, EarlyAssume };
  SccState window;
  Status status = Status::Coherent;

  bool ok() const { return status == Status::Coherent; }
  CoherenceViolation violation() const {
    return status == Status::Memoizing ? CoherenceViolation::Memoizing
                                       : CoherenceViolation::EarlyAssume;
  }
  bool operator==(const CohState&) const = default;
  auto operator<=>(const CohState&) const = default;
  size_t hash() const { return window.hash() * 3 + static_cast<size_t>(status); }
};

CohState coh_initial(const Signature& sig, int num_ghosts = 0);
// Total, deterministic transition; violations absorb.
CohState coh_step(CohState q, const ExecLetter& l);
// Fold of coh_step: true iff every prefix is coherent.
bool coherent_language_member(const Execution& rho, const Signature& sig, int num_ghosts = 0);

struct CoherenceDecision {
  bool coherent = true;
  Execution witness;  // shortest non-coherent partial execution
  CoherenceViolation kind = CoherenceViolation::Memoizing;
  long states_explored = 0;
};

// Decides coherence of a core-form non-recursive program by searching the
// product of its partial-execution NFA with the coherence DFA; returns a
// minimal-length witness on failure.
CoherenceDecision program_is_coherent(const Program& p, long max_states = 1'000'000);

}  // namespace uncover
