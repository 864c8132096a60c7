#pragma once

#include <optional>
#include <string>

#include "uncover/coherence.hpp"
#include "uncover/scc.hpp"
#include "uncover/syntax.hpp"

namespace uncover {

struct SearchStats {
  long states_explored = 0;
  long subset_states = 0;
  double time_ms = 0.0;
};

struct Verdict {
  enum class Kind { Verified, Violated, NotCoherent, NotKCoherent };
  Kind kind = Kind::Verified;
  Execution witness;        // Violated: feasible complete execution;
                            // NotCoherent/NotKCoherent: offending execution
  Execution ghost_witness;  // Violated under --k: coherent interleaving over Pi(G)
  CoherenceViolation coherence_kind = CoherenceViolation::Memoizing;
  int k = 0;
  bool lowering_broke_coherence = false;
  std::string detail;
  SccState final_state;  // Violated: automaton state after the witness
  SearchStats stats;
};

const char* verdict_name(Verdict::Kind k);

struct VerifyOptions {
  long max_states = 1'000'000;
  long max_subset_states = 100'000;
  int threads = 1;
};

// Decision procedure for non-recursive programs: lowers the postcondition,
// gates on coherence of the lowered program, then searches the product of
// its complete-execution NFA with the feasibility automaton. `phi` defaults
// to the program's own postcondition, or bottom when absent.
Verdict verify(const Program& p, std::optional<Postcondition> phi = std::nullopt,
               const VerifyOptions& opts = {});

// Shortest complete (or partial) execution of a core-form program accepted
// by the feasibility automaton. Exact for coherent programs.
std::optional<Execution> shortest_feasible_execution(const Program& core_program,
                                                     ExecMode mode = ExecMode::Complete,
                                                     const VerifyOptions& opts = {});

// Shared product search: shortest NFA word accepted jointly with a
// non-rejecting automaton state. Exposed for the k-coherence layer.
std::optional<std::pair<Execution, SccState>> feasible_product_search(const Nfa& nfa,
                                                                      const Signature& sig,
                                                                      const VerifyOptions& opts,
                                                                      SearchStats& stats);

}  // namespace uncover
