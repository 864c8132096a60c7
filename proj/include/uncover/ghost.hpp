#pragma once

#include <optional>

#include "uncover/coherence.hpp"
#include "uncover/verifier.hpp"

namespace uncover {

struct GhostConfig {
  int k = 0;
  std::vector<std::string> names;  // |names| == k, disjoint from program variables

  static GhostConfig of(int k) { return {k, default_ghost_names(k)}; }
};

// Deterministic view (subset construction) of the nondeterministic automaton
// for k-coherent executions over the program alphabet: the coherence
// automaton over V plus k ghosts, with ghost assignments taken as epsilon
// moves. A word is k-coherent iff its subset stays nonempty.
class KccMachine {
 public:
  KccMachine(const Signature& sig, const GhostConfig& ghosts);

  using Subset = std::vector<CohState>;  // sorted, deduplicated, violations dropped

  Subset initial() const;
  Subset step(const Subset& s, const ExecLetter& program_letter) const;
  static bool member_alive(const Subset& s) { return !s.empty(); }
  bool accepts(const Execution& word) const;

  const Signature& sig() const { return *sig_; }
  int k() const { return ghosts_.k; }

 private:
  const Signature* sig_;
  GhostConfig ghosts_;
  std::vector<ExecLetter> ghost_letters_;
  void close(Subset& s) const;
};

struct KCoherenceDecision {
  bool k_coherent = true;
  Execution witness;  // shortest execution no ghost interleaving keeps coherent
  SearchStats stats;
};

// Language-inclusion check Exec(p) within the k-coherent executions, via the
// subset construction over the partial-execution NFA.
KCoherenceDecision is_k_coherent(const Program& p, int k, const VerifyOptions& opts = {});

// Verification of k-coherent programs: emptiness of the complete-execution
// NFA against the projection of (coherent and feasible) ghost executions.
// Violated verdicts carry both the program-alphabet counterexample and one
// coherent ghost interleaving of it.
Verdict verify_k(const Program& p, std::optional<Postcondition> phi, int k,
                 const VerifyOptions& opts = {});

// Recovers a coherent ghost interleaving of `word` using at most k ghosts;
// nullopt when none exists (i.e. the word is not k-coherent).
std::optional<Execution> ghost_interleaving(const Signature& sig, int k, const Execution& word);

}  // namespace uncover
