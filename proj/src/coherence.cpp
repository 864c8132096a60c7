#include "uncover/coherence.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>

namespace uncover {

CohState coh_initial(const Signature& sig, int num_ghosts) {
  return CohState{scc_initial(sig, num_ghosts), CohState::Status::Coherent};
}

CohState coh_step(CohState q, const ExecLetter& l) {
  if (!q.ok()) return q;
  StepVerdict v = q.window.step_coherent(l);
  switch (v) {
    case StepVerdict::Ok:
      return q;
    case StepVerdict::MemoizingViolation:
      return CohState{SccState::initial(0, q.window.num_slots()), CohState::Status::Memoizing};
    case StepVerdict::EarlyAssumeViolation:
      return CohState{SccState::initial(0, q.window.num_slots()), CohState::Status::EarlyAssume};
    case StepVerdict::Reject:
      break;
  }
  throw std::logic_error("coherence automaton cannot reject");
}

bool coherent_language_member(const Execution& rho, const Signature& sig, int num_ghosts) {
  CohState q = coh_initial(sig, num_ghosts);
  for (const ExecLetter& l : rho) {
    q = coh_step(std::move(q), l);
    if (!q.ok()) return false;
  }
  return true;
}

namespace {

struct NodeKey {
  int q;
  CohState c;
  bool operator==(const NodeKey&) const = default;
};
struct NodeKeyHash {
  size_t operator()(const NodeKey& k) const {
    return k.c.hash() * 1000003u + static_cast<size_t>(k.q);
  }
};

}  // namespace

CoherenceDecision program_is_coherent(const Program& p, long max_states) {
  if (p.is_recursive())
    throw std::invalid_argument("program_is_coherent handles non-recursive programs");
  if (!p.is_core()) throw std::invalid_argument("program_is_coherent requires core form");

  Nfa nfa = build_exec_nfa(p, ExecMode::Partial);
  CoherenceDecision out;

  struct Node {
    int q;
    CohState c;
    int parent;
    ExecLetter via;
  };
  std::vector<Node> nodes;
  std::unordered_map<NodeKey, int, NodeKeyHash> visited;
  std::deque<int> frontier;

  CohState c0 = coh_initial(p.sig);
  nodes.push_back({nfa.start, c0, -1, {}});
  visited.emplace(NodeKey{nfa.start, std::move(c0)}, 0);
  frontier.push_back(0);

  auto witness_of = [&nodes](int idx) {
    Execution w;
    for (int i = idx; nodes[static_cast<size_t>(i)].parent >= 0; i = nodes[static_cast<size_t>(i)].parent)
      w.push_back(nodes[static_cast<size_t>(i)].via);
    std::reverse(w.begin(), w.end());
    return w;
  };

  while (!frontier.empty()) {
    int idx = frontier.front();
    frontier.pop_front();
    Node node = nodes[static_cast<size_t>(idx)];
    for (const Nfa::Edge& e : nfa.adj[static_cast<size_t>(node.q)]) {
      CohState next = coh_step(node.c, e.letter);
      if (!next.ok()) {
        out.coherent = false;
        out.kind = next.violation();
        out.witness = witness_of(idx);
        out.witness.push_back(e.letter);
        out.states_explored = static_cast<long>(nodes.size());
        return out;
      }
      NodeKey key{e.to, next};
      auto [it, fresh] = visited.emplace(std::move(key), static_cast<int>(nodes.size()));
      if (!fresh) continue;
      nodes.push_back({e.to, std::move(next), idx, e.letter});
      if (static_cast<long>(nodes.size()) > max_states)
        throw BudgetExceeded("coherence search exceeded the state budget");
      frontier.push_back(static_cast<int>(nodes.size()) - 1);
    }
  }
  out.states_explored = static_cast<long>(nodes.size());
  return out;
}

}  // namespace uncover
