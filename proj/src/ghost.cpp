#include "uncover/ghost.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <set>
#include <unordered_map>

namespace uncover {

KccMachine::KccMachine(const Signature& sig, const GhostConfig& ghosts)
    : sig_(&sig), ghosts_(ghosts) {
  int nv = sig.num_vars();
  for (int g = 0; g < ghosts_.k; ++g)
    for (int x = 0; x < nv; ++x) ghost_letters_.push_back(ExecLetter::assign(nv + g, x));
}

void KccMachine::close(Subset& s) const {
  std::set<CohState> set(s.begin(), s.end());
  std::deque<CohState> queue(s.begin(), s.end());
  while (!queue.empty()) {
    CohState cur = std::move(queue.front());
    queue.pop_front();
    for (const ExecLetter& gl : ghost_letters_) {
      CohState next = coh_step(cur, gl);
      if (!next.ok()) continue;
      if (set.insert(next).second) queue.push_back(std::move(next));
    }
  }
  s.assign(set.begin(), set.end());
}

KccMachine::Subset KccMachine::initial() const {
  Subset s{coh_initial(*sig_, ghosts_.k)};
  close(s);
  return s;
}

KccMachine::Subset KccMachine::step(const Subset& s, const ExecLetter& l) const {
  std::set<CohState> out;
  for (const CohState& q : s) {
    CohState next = coh_step(q, l);
    if (next.ok()) out.insert(std::move(next));
  }
  Subset v(out.begin(), out.end());
  close(v);
  return v;
}

bool KccMachine::accepts(const Execution& word) const {
  Subset s = initial();
  for (const ExecLetter& l : word) {
    s = step(s, l);
    if (s.empty()) return false;
  }
  return !s.empty();
}

namespace {

size_t subset_hash(const std::vector<CohState>& s) {
  size_t h = 0xabcdef;
  for (const CohState& q : s) h = h * 1000003u + q.hash();
  return h;
}

}  // namespace

KCoherenceDecision is_k_coherent(const Program& p, int k, const VerifyOptions& opts) {
  auto t0 = std::chrono::steady_clock::now();
  if (p.is_recursive())
    throw std::invalid_argument("k-coherence checking handles non-recursive programs");
  Program core = normalize(p);
  Nfa nfa = build_exec_nfa(core, ExecMode::Partial);
  KccMachine machine(core.sig, GhostConfig::of(k));

  struct Node {
    int q;
    KccMachine::Subset s;
    int parent;
    ExecLetter via;
  };
  struct Key {
    int q;
    KccMachine::Subset s;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    size_t operator()(const Key& key) const {
      return subset_hash(key.s) * 31 + static_cast<size_t>(key.q);
    }
  };

  std::vector<Node> nodes;
  std::unordered_map<Key, int, KeyHash> visited;
  std::deque<int> frontier;
  KccMachine::Subset s0 = machine.initial();
  nodes.push_back({nfa.start, s0, -1, {}});
  visited.emplace(Key{nfa.start, std::move(s0)}, 0);
  frontier.push_back(0);

  KCoherenceDecision out;
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
    // Copy: nodes may reallocate while expanding.
    Node node = nodes[static_cast<size_t>(idx)];
    for (const Nfa::Edge& e : nfa.adj[static_cast<size_t>(node.q)]) {
      KccMachine::Subset next = machine.step(node.s, e.letter);
      if (next.empty()) {
        out.k_coherent = false;
        out.witness = witness_of(idx);
        out.witness.push_back(e.letter);
        out.stats.subset_states = static_cast<long>(nodes.size());
        out.stats.time_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        return out;
      }
      Key key{e.to, next};
      auto [it, fresh] = visited.emplace(std::move(key), static_cast<int>(nodes.size()));
      if (!fresh) continue;
      nodes.push_back({e.to, std::move(next), idx, e.letter});
      if (static_cast<long>(nodes.size()) > opts.max_subset_states)
        throw BudgetExceeded("k-coherence subset construction exceeded the state budget");
      frontier.push_back(static_cast<int>(nodes.size()) - 1);
    }
  }
  out.stats.subset_states = static_cast<long>(nodes.size());
  out.stats.time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// ---------------------------------------------------------------------------
// Ghost interleaving reconstruction

std::optional<Execution> ghost_interleaving(const Signature& sig, int k, const Execution& word) {
  GhostConfig ghosts = GhostConfig::of(k);
  int nv = sig.num_vars();
  std::vector<ExecLetter> ghost_letters;
  for (int g = 0; g < k; ++g)
    for (int x = 0; x < nv; ++x) ghost_letters.push_back(ExecLetter::assign(nv + g, x));

  struct Member {
    CohState state;
    int prev;            // index into the previous step's members
    Execution letters;   // letters taken since that member (ghosts + one program letter)
  };

  auto close_members = [&](std::vector<Member>& ms) {
    std::set<CohState> set;
    for (const Member& m : ms) set.insert(m.state);
    for (size_t i = 0; i < ms.size(); ++i) {
      for (const ExecLetter& gl : ghost_letters) {
        CohState next = coh_step(ms[i].state, gl);
        if (!next.ok() || !set.insert(next).second) continue;
        Execution letters = ms[i].letters;
        letters.push_back(gl);
        ms.push_back({std::move(next), ms[i].prev, std::move(letters)});
      }
    }
  };

  std::vector<std::vector<Member>> steps;
  steps.push_back({{coh_initial(sig, k), -1, {}}});
  close_members(steps.back());

  for (const ExecLetter& l : word) {
    std::vector<Member> next;
    std::set<CohState> set;
    const std::vector<Member>& cur = steps.back();
    for (size_t j = 0; j < cur.size(); ++j) {
      CohState stepped = coh_step(cur[j].state, l);
      if (!stepped.ok() || !set.insert(stepped).second) continue;
      next.push_back({std::move(stepped), static_cast<int>(j), {l}});
    }
    if (next.empty()) return std::nullopt;
    close_members(next);
    steps.push_back(std::move(next));
  }

  // Walk any surviving member back to the root.
  Execution out;
  int member = 0;
  for (size_t i = steps.size(); i-- > 0;) {
    const Member& m = steps[i][static_cast<size_t>(member)];
    out.insert(out.begin(), m.letters.begin(), m.letters.end());
    if (m.prev < 0) break;
    member = m.prev;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Verification of k-coherent programs

namespace {

struct PairState {
  CohState coh;
  SccState feas;
  bool operator==(const PairState&) const = default;
  auto operator<=>(const PairState&) const = default;
  size_t hash() const { return coh.hash() * 131 + feas.hash(); }
};

using PairSubset = std::vector<PairState>;

size_t pair_subset_hash(const PairSubset& s) {
  size_t h = 0xfeedf00d;
  for (const PairState& q : s) h = h * 1000003u + q.hash();
  return h;
}

class PairMachine {
 public:
  PairMachine(const Signature& sig, int k) : sig_(&sig), k_(k) {
    int nv = sig.num_vars();
    for (int g = 0; g < k; ++g)
      for (int x = 0; x < nv; ++x) ghost_letters_.push_back(ExecLetter::assign(nv + g, x));
  }

  PairSubset initial() const {
    PairSubset s{{coh_initial(*sig_, k_), scc_initial(*sig_, k_)}};
    close(s);
    return s;
  }

  PairSubset step(const PairSubset& s, const ExecLetter& l) const {
    std::set<PairState> out;
    for (const PairState& q : s) {
      auto next = advance(q, l);
      if (next) out.insert(std::move(*next));
    }
    PairSubset v(out.begin(), out.end());
    close(v);
    return v;
  }

 private:
  const Signature* sig_;
  int k_;
  std::vector<ExecLetter> ghost_letters_;

  std::optional<PairState> advance(const PairState& q, const ExecLetter& l) const {
    PairState next = q;
    next.coh = coh_step(std::move(next.coh), l);
    if (!next.coh.ok()) return std::nullopt;
    if (next.feas.step_feasible(l) == StepVerdict::Reject) return std::nullopt;
    return next;
  }

  void close(PairSubset& s) const {
    std::set<PairState> set(s.begin(), s.end());
    std::deque<PairState> queue(s.begin(), s.end());
    while (!queue.empty()) {
      PairState cur = std::move(queue.front());
      queue.pop_front();
      for (const ExecLetter& gl : ghost_letters_) {
        auto next = advance(cur, gl);
        if (!next) continue;
        if (set.insert(*next).second) queue.push_back(std::move(*next));
      }
    }
    s.assign(set.begin(), set.end());
  }
};

}  // namespace

Verdict verify_k(const Program& p, std::optional<Postcondition> phi, int k,
                 const VerifyOptions& opts) {
  auto t0 = std::chrono::steady_clock::now();
  Verdict verdict;
  verdict.k = k;
  Program core = normalize(p);
  Postcondition post = phi   ? *phi
                       : p.post ? *p.post
                                : Cond::truth(false);
  Program lowered = lower_postcondition(core, post);

  KCoherenceDecision gate = is_k_coherent(lowered, k, opts);
  verdict.stats.subset_states = gate.stats.subset_states;
  if (!gate.k_coherent) {
    verdict.kind = Verdict::Kind::NotKCoherent;
    verdict.witness = std::move(gate.witness);
    verdict.detail = "no interleaving of " + std::to_string(k) +
                     " ghost assignments keeps every execution coherent";
    return verdict;
  }

  Nfa nfa = build_exec_nfa(lowered, ExecMode::Complete);
  PairMachine machine(lowered.sig, k);

  struct Node {
    int q;
    PairSubset s;
    int parent;
    ExecLetter via;
  };
  struct Key {
    int q;
    PairSubset s;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    size_t operator()(const Key& key) const {
      return pair_subset_hash(key.s) * 31 + static_cast<size_t>(key.q);
    }
  };

  std::vector<Node> nodes;
  std::unordered_map<Key, int, KeyHash> visited;
  std::deque<int> frontier;
  PairSubset s0 = machine.initial();
  nodes.push_back({nfa.start, s0, -1, {}});
  visited.emplace(Key{nfa.start, std::move(s0)}, 0);
  frontier.push_back(0);

  auto witness_of = [&nodes](int idx) {
    Execution w;
    for (int i = idx; nodes[static_cast<size_t>(i)].parent >= 0; i = nodes[static_cast<size_t>(i)].parent)
      w.push_back(nodes[static_cast<size_t>(i)].via);
    std::reverse(w.begin(), w.end());
    return w;
  };

  auto finish_violated = [&](int idx) {
    verdict.kind = Verdict::Kind::Violated;
    verdict.witness = witness_of(idx);
    auto ghost = ghost_interleaving(lowered.sig, k, verdict.witness);
    if (ghost) verdict.ghost_witness = std::move(*ghost);
    verdict.stats.subset_states += static_cast<long>(nodes.size());
    verdict.stats.time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  };

  if (nfa.accepting[static_cast<size_t>(nfa.start)] && !nodes[0].s.empty()) {
    finish_violated(0);
    return verdict;
  }

  while (!frontier.empty()) {
    int idx = frontier.front();
    frontier.pop_front();
    Node node = nodes[static_cast<size_t>(idx)];
    for (const Nfa::Edge& e : nfa.adj[static_cast<size_t>(node.q)]) {
      PairSubset next = machine.step(node.s, e.letter);
      if (next.empty()) continue;
      Key key{e.to, next};
      auto [it, fresh] = visited.emplace(std::move(key), static_cast<int>(nodes.size()));
      if (!fresh) continue;
      int nidx = static_cast<int>(nodes.size());
      nodes.push_back({e.to, std::move(next), idx, e.letter});
      if (static_cast<long>(nodes.size()) > opts.max_subset_states)
        throw BudgetExceeded("k-coherent verification exceeded the subset state budget");
      if (nfa.accepting[static_cast<size_t>(e.to)]) {
        finish_violated(nidx);
        return verdict;
      }
      frontier.push_back(nidx);
    }
  }
  verdict.kind = Verdict::Kind::Verified;
  verdict.stats.subset_states += static_cast<long>(nodes.size());
  verdict.stats.time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return verdict;
}

}  // namespace uncover
