#include "uncover/verifier.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <thread>
#include <unordered_map>

namespace uncover {

const char* verdict_name(Verdict::Kind k) {
  switch (k) {
    case Verdict::Kind::Verified:
      return "verified";
    case Verdict::Kind::Violated:
      return "violated";
    case Verdict::Kind::NotCoherent:
      return "not-coherent";
    case Verdict::Kind::NotKCoherent:
      return "not-k-coherent";
  }
  return "?";
}

namespace {

struct NodeKey {
  int q;
  SccState s;
  bool operator==(const NodeKey&) const = default;
};
struct NodeKeyHash {
  size_t operator()(const NodeKey& k) const {
    return k.s.hash() * 1000003u + static_cast<size_t>(k.q);
  }
};

struct Node {
  int q;
  SccState s;
  int parent;
  ExecLetter via;
};

}  // namespace

// Layered BFS; with opts.threads > 1 each layer's expansion is fanned out
// and merged back in frontier order, so results do not depend on the
// schedule.
std::optional<std::pair<Execution, SccState>> feasible_product_search(const Nfa& nfa,
                                                                      const Signature& sig,
                                                                      const VerifyOptions& opts,
                                                                      SearchStats& stats) {
  std::vector<Node> nodes;
  std::unordered_map<NodeKey, int, NodeKeyHash> visited;
  std::vector<int> frontier;

  SccState s0 = scc_initial(sig);
  nodes.push_back({nfa.start, s0, -1, {}});
  visited.emplace(NodeKey{nfa.start, std::move(s0)}, 0);
  frontier.push_back(0);

  auto witness_of = [&nodes](int idx) {
    Execution w;
    for (int i = idx; nodes[static_cast<size_t>(i)].parent >= 0; i = nodes[static_cast<size_t>(i)].parent)
      w.push_back(nodes[static_cast<size_t>(i)].via);
    std::reverse(w.begin(), w.end());
    return w;
  };

  auto finish = [&](int idx) {
    stats.states_explored += static_cast<long>(nodes.size());
    return std::make_pair(witness_of(idx), nodes[static_cast<size_t>(idx)].s);
  };

  // A node is a hit when the NFA accepts and the automaton state is alive.
  if (nfa.accepting[static_cast<size_t>(nfa.start)]) return finish(0);

  struct Candidate {
    int parent;
    ExecLetter via;
    int q;
    SccState s;
  };

  while (!frontier.empty()) {
    std::vector<Candidate> layer;
    auto expand = [&](int idx, std::vector<Candidate>& out) {
      const Node& node = nodes[static_cast<size_t>(idx)];
      for (const Nfa::Edge& e : nfa.adj[static_cast<size_t>(node.q)]) {
        SccState next = node.s;
        if (next.step_feasible(e.letter) == StepVerdict::Reject) continue;
        out.push_back({idx, e.letter, e.to, std::move(next)});
      }
    };
    if (opts.threads <= 1 || frontier.size() < 64) {
      for (int idx : frontier) expand(idx, layer);
    } else {
      int nthreads = std::min<int>(opts.threads, static_cast<int>(frontier.size()));
      std::vector<std::vector<Candidate>> chunks(static_cast<size_t>(nthreads));
      std::vector<std::thread> workers;
      size_t per = (frontier.size() + static_cast<size_t>(nthreads) - 1) / static_cast<size_t>(nthreads);
      for (int t = 0; t < nthreads; ++t) {
        workers.emplace_back([&, t]() {
          size_t lo = static_cast<size_t>(t) * per;
          size_t hi = std::min(frontier.size(), lo + per);
          for (size_t i = lo; i < hi; ++i) expand(frontier[i], chunks[static_cast<size_t>(t)]);
        });
      }
      for (auto& w : workers) w.join();
      for (auto& c : chunks)
        layer.insert(layer.end(), std::make_move_iterator(c.begin()), std::make_move_iterator(c.end()));
    }

    frontier.clear();
    for (Candidate& c : layer) {
      NodeKey key{c.q, c.s};
      auto [it, fresh] = visited.emplace(std::move(key), static_cast<int>(nodes.size()));
      if (!fresh) continue;
      int idx = static_cast<int>(nodes.size());
      nodes.push_back({c.q, std::move(c.s), c.parent, std::move(c.via)});
      if (static_cast<long>(nodes.size()) > opts.max_states)
        throw BudgetExceeded("feasibility search exceeded the state budget");
      if (nfa.accepting[static_cast<size_t>(c.q)]) return finish(idx);
      frontier.push_back(idx);
    }
  }
  stats.states_explored += static_cast<long>(nodes.size());
  return std::nullopt;
}

std::optional<Execution> shortest_feasible_execution(const Program& core_program, ExecMode mode,
                                                     const VerifyOptions& opts) {
  Nfa nfa = build_exec_nfa(core_program, mode);
  SearchStats stats;
  auto hit = feasible_product_search(nfa, core_program.sig, opts, stats);
  if (!hit) return std::nullopt;
  return hit->first;
}

Verdict verify(const Program& p, std::optional<Postcondition> phi, const VerifyOptions& opts) {
  auto t0 = std::chrono::steady_clock::now();
  Verdict verdict;
  Program core = normalize(p);
  Postcondition post = phi   ? *phi
                       : p.post ? *p.post
                                : Cond::truth(false);
  Program lowered = lower_postcondition(core, post);

  CoherenceDecision coh = program_is_coherent(lowered, opts.max_states);
  verdict.stats.states_explored = coh.states_explored;
  if (!coh.coherent) {
    verdict.kind = Verdict::Kind::NotCoherent;
    verdict.witness = std::move(coh.witness);
    verdict.coherence_kind = coh.kind;
    CoherenceDecision orig = program_is_coherent(core, opts.max_states);
    if (orig.coherent) {
      verdict.lowering_broke_coherence = true;
      verdict.detail =
          "the program is coherent but its postcondition instrumentation is not; "
          "consider re-running with a ghost budget (--k)";
    } else {
      verdict.detail = "program has a non-coherent execution";
    }
    return verdict;
  }

  Nfa nfa = build_exec_nfa(lowered, ExecMode::Complete);
  auto hit = feasible_product_search(nfa, lowered.sig, opts, verdict.stats);
  if (hit) {
    verdict.kind = Verdict::Kind::Violated;
    verdict.witness = std::move(hit->first);
    verdict.final_state = std::move(hit->second);
  } else {
    verdict.kind = Verdict::Kind::Verified;
  }
  verdict.stats.time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return verdict;
}

}  // namespace uncover
