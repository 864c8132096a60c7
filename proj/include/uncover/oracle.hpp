#pragma once

#include <span>
#include <string>

#include "uncover/exec.hpp"
#include "uncover/terms.hpp"

namespace uncover {

// Brute-force reference semantics used as ground truth by the automata test
// suites: feasibility via congruence closure in the initial term model, and
// the direct evaluation of the coherence definition over every prefix.

// True iff the congruence closure of alpha(rho) over Terms(rho) separates
// every beta(rho) pair.
bool oracle_feasible(const Execution& rho, const Signature& sig, int num_ghosts = 0,
                     std::span<const MethodSig> methods = {});

enum class CoherenceViolation { Memoizing, EarlyAssume };

struct CoherenceReport {
  bool coherent = true;
  int position = -1;  // index of the first violating letter
  CoherenceViolation kind = CoherenceViolation::Memoizing;
};

CoherenceReport oracle_coherent(const Execution& rho, const Signature& sig, int num_ghosts = 0,
                                std::span<const MethodSig> methods = {});

const char* violation_name(CoherenceViolation v);

}  // namespace uncover
