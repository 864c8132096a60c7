#include "uncover/recvpa.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <map>
#include <set>
#include <unordered_map>

#include "uncover/oracle.hpp"

namespace uncover {

// ---------------------------------------------------------------------------
// Exec(P) as a VPA

namespace {

struct VpaBuilder {
  std::vector<std::vector<Vpa::InternalE>> internal;
  std::vector<std::vector<Vpa::CallE>> calls;
  std::vector<std::vector<Vpa::RetE>> rets;
  std::vector<std::vector<int>> eps;
  std::vector<Vpa::SymInfo> syms;

  int fresh() {
    internal.emplace_back();
    calls.emplace_back();
    rets.emplace_back();
    eps.emplace_back();
    return static_cast<int>(internal.size()) - 1;
  }
};

struct Frag {
  int in, out;
};

ExecLetter vpa_atom_letter(const Cond& c, bool negated) {
  if (!c.is_atom() || c.lhs.is_const || c.rhs.is_const)
    throw std::invalid_argument("exec_vpa requires a core-form program");
  bool neq = (c.kind == Cond::Kind::Neq) != negated;
  return neq ? ExecLetter::assume_neq(c.lhs.index, c.rhs.index)
             : ExecLetter::assume_eq(c.lhs.index, c.rhs.index);
}

Frag build_vpa_frag(VpaBuilder& b, const Stmt& s, const std::vector<int>& method_entry) {
  switch (s.kind) {
    case Stmt::Kind::Skip: {
      int q = b.fresh();
      return {q, q};
    }
    case Stmt::Kind::Assign: {
      int q0 = b.fresh(), q1 = b.fresh();
      b.internal[static_cast<size_t>(q0)].push_back({ExecLetter::assign(s.lhs, s.rhs.index), q1});
      return {q0, q1};
    }
    case Stmt::Kind::AssignFn: {
      std::vector<int32_t> zs;
      for (const Operand& o : s.args) zs.push_back(o.index);
      int q0 = b.fresh(), q1 = b.fresh();
      b.internal[static_cast<size_t>(q0)].push_back({ExecLetter::apply(s.lhs, s.fn, std::move(zs)), q1});
      return {q0, q1};
    }
    case Stmt::Kind::Assume: {
      int q0 = b.fresh(), q1 = b.fresh();
      b.internal[static_cast<size_t>(q0)].push_back({vpa_atom_letter(s.cond, false), q1});
      return {q0, q1};
    }
    case Stmt::Kind::Seq: {
      if (s.kids.empty()) {
        int q = b.fresh();
        return {q, q};
      }
      Frag acc = build_vpa_frag(b, s.kids.front(), method_entry);
      for (size_t i = 1; i < s.kids.size(); ++i) {
        Frag next = build_vpa_frag(b, s.kids[i], method_entry);
        b.eps[static_cast<size_t>(acc.out)].push_back(next.in);
        acc.out = next.out;
      }
      return acc;
    }
    case Stmt::Kind::Ite: {
      int qin = b.fresh(), qout = b.fresh();
      Frag t = build_vpa_frag(b, s.kids[0], method_entry);
      Frag e = build_vpa_frag(b, s.kids[1], method_entry);
      int qt = b.fresh(), qe = b.fresh();
      b.internal[static_cast<size_t>(qin)].push_back({vpa_atom_letter(s.cond, false), qt});
      b.eps[static_cast<size_t>(qt)].push_back(t.in);
      b.internal[static_cast<size_t>(qin)].push_back({vpa_atom_letter(s.cond, true), qe});
      b.eps[static_cast<size_t>(qe)].push_back(e.in);
      b.eps[static_cast<size_t>(t.out)].push_back(qout);
      b.eps[static_cast<size_t>(e.out)].push_back(qout);
      return {qin, qout};
    }
    case Stmt::Kind::While: {
      int qin = b.fresh(), qout = b.fresh(), qbody = b.fresh();
      Frag body = build_vpa_frag(b, s.kids[0], method_entry);
      b.internal[static_cast<size_t>(qin)].push_back({vpa_atom_letter(s.cond, false), qbody});
      b.eps[static_cast<size_t>(qbody)].push_back(body.in);
      b.eps[static_cast<size_t>(body.out)].push_back(qin);
      b.internal[static_cast<size_t>(qin)].push_back({vpa_atom_letter(s.cond, true), qout});
      return {qin, qout};
    }
    case Stmt::Kind::Call: {
      int q0 = b.fresh(), q1 = b.fresh();
      int sym = static_cast<int>(b.syms.size());
      std::vector<int32_t> targets(s.targets.begin(), s.targets.end());
      b.syms.push_back({s.method, std::move(targets), q1});
      b.calls[static_cast<size_t>(q0)].push_back({s.method, sym, method_entry[static_cast<size_t>(s.method)]});
      return {q0, q1};
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace

Vpa build_exec_vpa(const Program& p, ExecMode mode) {
  if (!p.is_recursive()) throw std::invalid_argument("exec_vpa expects a recursive program");
  if (!p.is_core()) throw std::invalid_argument("exec_vpa requires core form");

  VpaBuilder b;
  std::vector<int> entry(p.methods.size()), exit(p.methods.size());
  for (size_t m = 0; m < p.methods.size(); ++m) {
    entry[m] = b.fresh();
    exit[m] = b.fresh();
  }
  for (size_t m = 0; m < p.methods.size(); ++m) {
    Frag f = build_vpa_frag(b, p.methods[m].body, entry);
    b.eps[static_cast<size_t>(entry[m])].push_back(f.in);
    b.eps[static_cast<size_t>(f.out)].push_back(exit[m]);
  }
  for (size_t s = 0; s < b.syms.size(); ++s) {
    const Vpa::SymInfo& info = b.syms[s];
    if (static_cast<int>(info.targets.size()) !=
        static_cast<int>(p.methods[static_cast<size_t>(info.method)].out.size()))
      throw std::invalid_argument("call of " + p.methods[static_cast<size_t>(info.method)].name +
                                  " assigns the wrong number of results");
    b.rets[static_cast<size_t>(exit[static_cast<size_t>(info.method)])].push_back(
        {static_cast<int>(s), info.cont});
  }

  int n = static_cast<int>(b.internal.size());
  // Epsilon closure.
  std::vector<std::vector<int>> closure(static_cast<size_t>(n));
  for (int s = 0; s < n; ++s) {
    std::vector<char> seen(static_cast<size_t>(n), 0);
    std::vector<int> stack{s};
    seen[static_cast<size_t>(s)] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      closure[static_cast<size_t>(s)].push_back(u);
      for (int v : b.eps[static_cast<size_t>(u)])
        if (!seen[static_cast<size_t>(v)]) {
          seen[static_cast<size_t>(v)] = 1;
          stack.push_back(v);
        }
    }
  }

  int main_exit = exit[static_cast<size_t>(p.main_method)];
  Vpa out;
  out.syms = b.syms;
  out.start = entry[static_cast<size_t>(p.main_method)];
  out.require_empty_stack = (mode == ExecMode::Complete);
  out.internal.resize(static_cast<size_t>(n));
  out.calls.resize(static_cast<size_t>(n));
  out.rets.resize(static_cast<size_t>(n));
  out.accepting.assign(static_cast<size_t>(n), mode == ExecMode::Partial ? 1 : 0);
  for (int s = 0; s < n; ++s) {
    for (int u : closure[static_cast<size_t>(s)]) {
      if (mode == ExecMode::Complete && u == main_exit) out.accepting[static_cast<size_t>(s)] = 1;
      for (const auto& e : b.internal[static_cast<size_t>(u)]) out.internal[static_cast<size_t>(s)].push_back(e);
      for (const auto& e : b.calls[static_cast<size_t>(u)]) out.calls[static_cast<size_t>(s)].push_back(e);
      for (const auto& e : b.rets[static_cast<size_t>(u)]) out.rets[static_cast<size_t>(s)].push_back(e);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Membership and bounded language

namespace {

bool vpa_accepts_rec(const Vpa& vpa, const Execution& word, size_t pos, int q, std::vector<int>& stack,
                     std::set<std::tuple<size_t, int, std::vector<int>>>& seen) {
  if (!seen.emplace(pos, q, stack).second) return false;
  if (pos == word.size()) {
    if (!vpa.accepting[static_cast<size_t>(q)]) return false;
    return !vpa.require_empty_stack || stack.empty();
  }
  const ExecLetter& l = word[pos];
  if (l.kind == ExecLetter::Kind::Call) {
    for (const auto& e : vpa.calls[static_cast<size_t>(q)]) {
      if (e.method != l.method) continue;
      stack.push_back(e.sym);
      if (vpa_accepts_rec(vpa, word, pos + 1, e.to, stack, seen)) return true;
      stack.pop_back();
    }
    return false;
  }
  if (l.kind == ExecLetter::Kind::Return) {
    if (stack.empty()) return false;
    int top = stack.back();
    if (vpa.syms[static_cast<size_t>(top)].targets != l.args) return false;
    for (const auto& e : vpa.rets[static_cast<size_t>(q)]) {
      if (e.sym != top) continue;
      stack.pop_back();
      if (vpa_accepts_rec(vpa, word, pos + 1, e.to, stack, seen)) return true;
      stack.push_back(top);
    }
    return false;
  }
  for (const auto& e : vpa.internal[static_cast<size_t>(q)]) {
    if (!(e.letter == l)) continue;
    if (vpa_accepts_rec(vpa, word, pos + 1, e.to, stack, seen)) return true;
  }
  return false;
}

}  // namespace

bool vpa_accepts(const Vpa& vpa, const Execution& word) {
  std::vector<int> stack;
  std::set<std::tuple<size_t, int, std::vector<int>>> seen;
  return vpa_accepts_rec(vpa, word, 0, vpa.start, stack, seen);
}

namespace {

using Config = std::pair<int, std::vector<int>>;  // state, stack

struct LetterOrder {
  bool operator()(const ExecLetter& x, const ExecLetter& y) const {
    auto key = [](const ExecLetter& l) {
      return std::tuple(static_cast<int>(l.kind), l.a, l.b, l.fn, l.method, l.args);
    };
    return key(x) < key(y);
  }
};

void vpa_enumerate(const Vpa& vpa, const std::set<Config>& configs, Execution& word, int maxlen,
                   int maxdepth, size_t cap, std::vector<Execution>& out) {
  if (out.size() >= cap) return;
  for (const Config& c : configs) {
    if (vpa.accepting[static_cast<size_t>(c.first)] &&
        (!vpa.require_empty_stack || c.second.empty())) {
      out.push_back(word);
      break;
    }
  }
  if (static_cast<int>(word.size()) == maxlen) return;
  std::map<ExecLetter, std::set<Config>, LetterOrder> succ;
  for (const Config& c : configs) {
    for (const auto& e : vpa.internal[static_cast<size_t>(c.first)])
      succ[e.letter].emplace(e.to, c.second);
    if (maxdepth < 0 || static_cast<int>(c.second.size()) < maxdepth) {
      for (const auto& e : vpa.calls[static_cast<size_t>(c.first)]) {
        std::vector<int> st = c.second;
        st.push_back(e.sym);
        succ[ExecLetter::call(e.method)].emplace(e.to, std::move(st));
      }
    }
    if (!c.second.empty()) {
      int top = c.second.back();
      for (const auto& e : vpa.rets[static_cast<size_t>(c.first)]) {
        if (e.sym != top) continue;
        std::vector<int> st = c.second;
        st.pop_back();
        succ[vpa.ret_letter(top)].emplace(e.to, std::move(st));
      }
    }
  }
  for (auto& [letter, next] : succ) {
    word.push_back(letter);
    vpa_enumerate(vpa, next, word, maxlen, maxdepth, cap, out);
    word.pop_back();
    if (out.size() >= cap) return;
  }
}

}  // namespace

std::vector<Execution> vpa_language_upto(const Vpa& vpa, int maxlen, int maxdepth, size_t cap) {
  std::vector<Execution> out;
  Execution word;
  std::set<Config> start{{vpa.start, {}}};
  vpa_enumerate(vpa, start, word, maxlen, maxdepth, cap, out);
  return out;
}

// ---------------------------------------------------------------------------
// Product of two explicit VPAs

Vpa vpa_intersect(const Vpa& a, const Vpa& b) {
  Vpa out;
  out.require_empty_stack = a.require_empty_stack || b.require_empty_stack;
  std::map<std::pair<int, int>, int> state_id;
  std::map<std::pair<int, int>, int> sym_id;
  std::vector<std::pair<int, int>> states;

  auto intern_state = [&](int qa, int qb) {
    auto [it, fresh] = state_id.emplace(std::pair(qa, qb), static_cast<int>(states.size()));
    if (fresh) {
      states.emplace_back(qa, qb);
      out.internal.emplace_back();
      out.calls.emplace_back();
      out.rets.emplace_back();
      out.accepting.push_back(a.accepting[static_cast<size_t>(qa)] &&
                              b.accepting[static_cast<size_t>(qb)]);
    }
    return it->second;
  };
  out.start = intern_state(a.start, b.start);

  // Iterate to a fixpoint: new stack-symbol pairs can enable new return
  // edges from already-known states.
  bool changed = true;
  std::set<std::tuple<int, int, int>> have_ret;
  std::set<std::tuple<int, int, int, int>> have_call;
  while (changed) {
    changed = false;
    for (int id = 0; id < static_cast<int>(states.size()); ++id) {
      auto [qa, qb] = states[static_cast<size_t>(id)];
      for (const auto& ea : a.internal[static_cast<size_t>(qa)])
        for (const auto& eb : b.internal[static_cast<size_t>(qb)]) {
          if (!(ea.letter == eb.letter)) continue;
          int to = intern_state(ea.to, eb.to);
          bool dup = false;
          for (const auto& e : out.internal[static_cast<size_t>(id)])
            if (e.letter == ea.letter && e.to == to) dup = true;
          if (!dup) {
            out.internal[static_cast<size_t>(id)].push_back({ea.letter, to});
            changed = true;
          }
        }
      for (const auto& ca : a.calls[static_cast<size_t>(qa)])
        for (const auto& cb : b.calls[static_cast<size_t>(qb)]) {
          if (ca.method != cb.method) continue;
          auto [sit, sfresh] = sym_id.emplace(std::pair(ca.sym, cb.sym), static_cast<int>(out.syms.size()));
          if (sfresh) {
            out.syms.push_back({ca.method, a.syms[static_cast<size_t>(ca.sym)].targets, -1});
            changed = true;
          }
          int to = intern_state(ca.to, cb.to);
          if (have_call.emplace(id, ca.method, sit->second, to).second) {
            out.calls[static_cast<size_t>(id)].push_back({ca.method, sit->second, to});
            changed = true;
          }
        }
      for (const auto& ra : a.rets[static_cast<size_t>(qa)])
        for (const auto& rb : b.rets[static_cast<size_t>(qb)]) {
          if (a.syms[static_cast<size_t>(ra.sym)].targets != b.syms[static_cast<size_t>(rb.sym)].targets)
            continue;
          auto sit = sym_id.find(std::pair(ra.sym, rb.sym));
          if (sit == sym_id.end()) continue;  // pair never pushed
          int to = intern_state(ra.to, rb.to);
          if (have_ret.emplace(id, sit->second, to).second) {
            out.rets[static_cast<size_t>(id)].push_back({sit->second, to});
            changed = true;
          }
        }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reachability with call/return summaries over an abstract VPA

namespace {

class AbstractVpa {
 public:
  virtual ~AbstractVpa() = default;
  virtual int start_state() = 0;
  virtual bool accepting(int q) = 0;
  virtual bool require_empty_stack() = 0;
  struct IEdge {
    ExecLetter letter;
    int to;
  };
  struct CEdge {
    ExecLetter letter;
    int sym;
    int to;
  };
  virtual void internal_edges(int q, std::vector<IEdge>& out) = 0;
  virtual void call_edges(int q, std::vector<CEdge>& out) = 0;
  virtual void return_edges(int q, int sym, std::vector<IEdge>& out) = 0;
};

struct Reach {
  struct Rec {
    enum class Kind { Entry, Internal, Return } kind = Kind::Entry;
    int prev = -1;  // config index (Internal: predecessor; Return: caller config)
    ExecLetter letter;        // Internal letter / Return letter
    ExecLetter call_letter;   // Return only
    int callee_entry = -1;    // Return only (entry state)
    int callee_exit = -1;     // Return only (config index within callee frame)
  };

  // Discovered configurations (frame entry state, state).
  std::vector<std::pair<int, int>> configs;
  std::vector<Rec> recs;
  std::map<std::pair<int, int>, int> index;

  struct FrameParent {
    int caller_config = -1;  // config index
    ExecLetter call_letter;
  };
  std::map<int, FrameParent> frame_parent;  // entry state -> first discovery

  struct Caller {
    int caller_config;
    int sym;
    ExecLetter call_letter;
  };
  std::map<int, std::vector<Caller>> callers;     // entry -> call sites
  std::map<int, std::vector<int>> frame_configs;  // entry -> config indices
};

struct SummarySearch {
  AbstractVpa& vpa;
  long max_states;
  Reach r;
  std::deque<int> worklist;
  std::optional<int> accept_config;

  explicit SummarySearch(AbstractVpa& v, long budget) : vpa(v), max_states(budget) {}

  int discover(int entry, int state, Reach::Rec rec) {
    auto key = std::pair(entry, state);
    auto it = r.index.find(key);
    if (it != r.index.end()) return -1;
    int idx = static_cast<int>(r.configs.size());
    r.index.emplace(key, idx);
    r.configs.push_back(key);
    r.recs.push_back(std::move(rec));
    r.frame_configs[entry].push_back(idx);
    if (static_cast<long>(r.configs.size()) > max_states)
      throw BudgetExceeded("VPA reachability exceeded the state budget");
    worklist.push_back(idx);
    return idx;
  }

  void run() {
    int root = vpa.start_state();
    discover(root, root, {});
    std::vector<AbstractVpa::IEdge> iedges;
    std::vector<AbstractVpa::CEdge> cedges;
    while (!worklist.empty() && !accept_config) {
      int idx = worklist.front();
      worklist.pop_front();
      auto [entry, state] = r.configs[static_cast<size_t>(idx)];

      if (vpa.accepting(state) && (!vpa.require_empty_stack() || entry == root)) {
        accept_config = idx;
        return;
      }

      iedges.clear();
      vpa.internal_edges(state, iedges);
      for (const auto& e : iedges)
        discover(entry, e.to, {Reach::Rec::Kind::Internal, idx, e.letter, {}, -1, -1});

      cedges.clear();
      vpa.call_edges(state, cedges);
      for (const auto& c : cedges) {
        int callee_entry = c.to;
        r.callers[callee_entry].push_back({idx, c.sym, c.letter});
        if (!r.frame_parent.count(callee_entry))
          r.frame_parent[callee_entry] = {idx, c.letter};
        discover(callee_entry, callee_entry, {});
        // Replay summaries already known for this callee frame.
        auto fit = r.frame_configs.find(callee_entry);
        if (fit != r.frame_configs.end()) {
          std::vector<int> snapshot = fit->second;
          for (int cfg : snapshot) apply_return(idx, c, cfg);
        }
      }

      // New config may complete summaries for the frame's callers.
      auto cit = r.callers.find(entry);
      if (cit != r.callers.end()) {
        std::vector<Reach::Caller> snapshot = cit->second;
        for (const auto& caller : snapshot)
          apply_return(caller.caller_config, {caller.call_letter, caller.sym, entry}, idx);
      }
    }
  }

  void apply_return(int caller_config, AbstractVpa::CEdge call, int callee_cfg) {
    auto [callee_entry, callee_state] = r.configs[static_cast<size_t>(callee_cfg)];
    std::vector<AbstractVpa::IEdge> redges;
    vpa.return_edges(callee_state, call.sym, redges);
    int caller_entry = r.configs[static_cast<size_t>(caller_config)].first;
    for (const auto& e : redges)
      discover(caller_entry, e.to,
               {Reach::Rec::Kind::Return, caller_config, e.letter, call.letter, callee_entry,
                callee_cfg});
  }

  Execution path_within(int cfg) const {
    const Reach::Rec& rec = r.recs[static_cast<size_t>(cfg)];
    switch (rec.kind) {
      case Reach::Rec::Kind::Entry:
        return {};
      case Reach::Rec::Kind::Internal: {
        Execution w = path_within(rec.prev);
        w.push_back(rec.letter);
        return w;
      }
      case Reach::Rec::Kind::Return: {
        Execution w = path_within(rec.prev);
        w.push_back(rec.call_letter);
        Execution inner = path_within(rec.callee_exit);
        w.insert(w.end(), inner.begin(), inner.end());
        w.push_back(rec.letter);
        return w;
      }
    }
    return {};
  }

  Execution witness() const {
    int cfg = *accept_config;
    int entry = r.configs[static_cast<size_t>(cfg)].first;
    Execution prefix;
    // Pending-call prefix for acceptance inside a frame (partial mode).
    std::vector<std::pair<int, ExecLetter>> chain;
    int e = entry;
    while (e != vpa.start_state()) {
      const auto& fp = r.frame_parent.at(e);
      chain.emplace_back(fp.caller_config, fp.call_letter);
      e = r.configs[static_cast<size_t>(fp.caller_config)].first;
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      Execution seg = path_within(it->first);
      prefix.insert(prefix.end(), seg.begin(), seg.end());
      prefix.push_back(it->second);
    }
    Execution inner = path_within(cfg);
    prefix.insert(prefix.end(), inner.begin(), inner.end());
    return prefix;
  }
};

class ExplicitVpaView : public AbstractVpa {
 public:
  explicit ExplicitVpaView(const Vpa& v) : v_(&v) {}
  int start_state() override { return v_->start; }
  bool accepting(int q) override { return v_->accepting[static_cast<size_t>(q)]; }
  bool require_empty_stack() override { return v_->require_empty_stack; }
  void internal_edges(int q, std::vector<IEdge>& out) override {
    for (const auto& e : v_->internal[static_cast<size_t>(q)]) out.push_back({e.letter, e.to});
  }
  void call_edges(int q, std::vector<CEdge>& out) override {
    for (const auto& e : v_->calls[static_cast<size_t>(q)])
      out.push_back({ExecLetter::call(e.method), e.sym, e.to});
  }
  void return_edges(int q, int sym, std::vector<IEdge>& out) override {
    for (const auto& e : v_->rets[static_cast<size_t>(q)])
      if (e.sym == sym) out.push_back({v_->ret_letter(sym), e.to});
  }

 private:
  const Vpa* v_;
};

}  // namespace

VpaEmptiness vpa_empty(const Vpa& vpa, long max_states) {
  ExplicitVpaView view(vpa);
  SummarySearch search(view, max_states);
  search.run();
  VpaEmptiness out;
  out.states_explored = static_cast<long>(search.r.configs.size());
  if (search.accept_config) {
    out.empty = false;
    out.witness = search.witness();
  }
  return out;
}

// ---------------------------------------------------------------------------
// The recursive feasibility automaton and its product with Exec(P)

SccState rfeas_initial(const Signature& sig) {
  return SccState::initial(sig.num_vars(), 2 * sig.num_vars());
}

RfeasRun rfeas_run(const Execution& rho, const Signature& sig, std::span<const MethodSig> methods) {
  RfeasRun run;
  run.final_state = rfeas_initial(sig);
  int r = sig.num_vars();
  std::vector<SccState> stack;
  std::vector<int> called;
  for (size_t i = 0; i < rho.size(); ++i) {
    if (run.final_state.rejected()) break;
    const ExecLetter& l = rho[i];
    switch (l.kind) {
      case ExecLetter::Kind::Call:
        stack.push_back(run.final_state);
        called.push_back(l.method);
        run.final_state = run.final_state.call_entry(r);
        break;
      case ExecLetter::Kind::Return: {
        if (stack.empty()) throw std::invalid_argument("return without matching call");
        const MethodSig& m = methods[static_cast<size_t>(called.back())];
        SccState merged =
            SccState::return_merge(stack.back(), run.final_state, m.out, l.args, r);
        stack.pop_back();
        called.pop_back();
        run.final_state = std::move(merged);
        if (run.final_state.rejected()) run.reject_position = static_cast<int>(i);
        break;
      }
      default:
        if (run.final_state.step_feasible(l) == StepVerdict::Reject)
          run.reject_position = static_cast<int>(i);
        break;
    }
  }
  return run;
}

namespace {

struct SccHash {
  size_t operator()(const SccState& s) const { return s.hash(); }
};

// On-the-fly product of an execution VPA with the recursive feasibility
// automaton. States and stack symbols pair the VPA's with interned SccState
// ids; rejecting successors are pruned.
class RecProduct : public AbstractVpa {
 public:
  RecProduct(const Vpa& exec, const Signature& sig, std::vector<MethodSig> methods)
      : exec_(&exec), sig_(&sig), methods_(std::move(methods)), r_(sig.num_vars()) {}

  int start_state() override {
    return intern_config(exec_->start, intern_scc(rfeas_initial(*sig_)));
  }
  bool accepting(int q) override {
    return exec_->accepting[static_cast<size_t>(configs_[static_cast<size_t>(q)].first)];
  }
  bool require_empty_stack() override { return exec_->require_empty_stack; }

  void internal_edges(int q, std::vector<IEdge>& out) override {
    auto [eq, sid] = configs_[static_cast<size_t>(q)];
    for (const auto& e : exec_->internal[static_cast<size_t>(eq)]) {
      SccState next = scc_states_[static_cast<size_t>(sid)];
      if (next.step_feasible(e.letter) == StepVerdict::Reject) continue;
      out.push_back({e.letter, intern_config(e.to, intern_scc(std::move(next)))});
    }
  }
  void call_edges(int q, std::vector<CEdge>& out) override {
    auto [eq, sid] = configs_[static_cast<size_t>(q)];
    for (const auto& e : exec_->calls[static_cast<size_t>(eq)]) {
      int entry_sid = intern_scc(scc_states_[static_cast<size_t>(sid)].call_entry(r_));
      int sym = intern_sym(e.sym, sid);
      out.push_back({ExecLetter::call(e.method), sym, intern_config(e.to, entry_sid)});
    }
  }
  void return_edges(int q, int sym, std::vector<IEdge>& out) override {
    auto [eq, sid] = configs_[static_cast<size_t>(q)];
    auto [esym, pushed_sid] = syms_[static_cast<size_t>(sym)];
    for (const auto& e : exec_->rets[static_cast<size_t>(eq)]) {
      if (e.sym != esym) continue;
      const Vpa::SymInfo& info = exec_->syms[static_cast<size_t>(esym)];
      const MethodSig& m = methods_[static_cast<size_t>(info.method)];
      SccState merged = SccState::return_merge(scc_states_[static_cast<size_t>(pushed_sid)],
                                               scc_states_[static_cast<size_t>(sid)], m.out,
                                               info.targets, r_);
      if (merged.rejected()) continue;
      out.push_back({exec_->ret_letter(esym), intern_config(e.to, intern_scc(std::move(merged)))});
    }
  }

  long num_scc_states() const { return static_cast<long>(scc_states_.size()); }

 private:
  const Vpa* exec_;
  const Signature* sig_;
  std::vector<MethodSig> methods_;
  int r_;
  std::vector<SccState> scc_states_;
  std::unordered_map<SccState, int, SccHash> scc_ids_;
  std::vector<std::pair<int, int>> configs_;
  std::map<std::pair<int, int>, int> config_ids_;
  std::vector<std::pair<int, int>> syms_;
  std::map<std::pair<int, int>, int> sym_ids_;

  int intern_scc(SccState s) {
    auto it = scc_ids_.find(s);
    if (it != scc_ids_.end()) return it->second;
    int id = static_cast<int>(scc_states_.size());
    scc_ids_.emplace(s, id);
    scc_states_.push_back(std::move(s));
    return id;
  }
  int intern_config(int eq, int sid) {
    auto [it, fresh] = config_ids_.emplace(std::pair(eq, sid), static_cast<int>(configs_.size()));
    if (fresh) configs_.emplace_back(eq, sid);
    return it->second;
  }
  int intern_sym(int esym, int sid) {
    auto [it, fresh] = sym_ids_.emplace(std::pair(esym, sid), static_cast<int>(syms_.size()));
    if (fresh) syms_.emplace_back(esym, sid);
    return it->second;
  }
};

}  // namespace

RecFeasibility recursive_feasible_witness(const Program& core, const VerifyOptions& opts) {
  if (!core.is_recursive())
    throw std::invalid_argument("recursive_feasible_witness expects a recursive program");
  Vpa exec = build_exec_vpa(core, ExecMode::Complete);
  RecProduct product(exec, core.sig, core.method_sigs());
  SummarySearch search(product, opts.max_states);
  search.run();
  RecFeasibility out;
  out.states_explored = static_cast<long>(search.r.configs.size());
  if (search.accept_config) {
    out.empty = false;
    out.witness = search.witness();
  }
  return out;
}

Verdict verify_recursive(const Program& p, std::optional<Postcondition> phi,
                         const VerifyOptions& opts) {
  auto t0 = std::chrono::steady_clock::now();
  Verdict verdict;
  Program core = normalize(p);
  if (!core.is_recursive()) throw std::invalid_argument("verify_recursive expects methods");
  Postcondition post = phi   ? *phi
                       : p.post ? *p.post
                                : Cond::truth(false);
  Program lowered = lower_postcondition(core, post);

  // Coherence spot-check: oracle over a bounded slice of Exec(lowered).
  {
    Vpa complete = build_exec_vpa(lowered, ExecMode::Complete);
    auto sigs = lowered.method_sigs();
    std::vector<Execution> sample = vpa_language_upto(complete, 14, 2, 4000);
    for (const Execution& word : sample) {
      CoherenceReport rep = oracle_coherent(word, lowered.sig, 0, sigs);
      if (!rep.coherent) {
        verdict.kind = Verdict::Kind::NotCoherent;
        verdict.coherence_kind = rep.kind;
        verdict.witness.assign(word.begin(), word.begin() + rep.position + 1);
        verdict.detail = "bounded oracle check found a non-coherent execution";
        return verdict;
      }
    }
  }

  RecFeasibility feas = recursive_feasible_witness(lowered, opts);
  verdict.stats.states_explored = feas.states_explored;
  if (!feas.empty) {
    verdict.kind = Verdict::Kind::Violated;
    verdict.witness = std::move(feas.witness);
    verdict.final_state =
        rfeas_run(verdict.witness, lowered.sig, lowered.method_sigs()).final_state;
  } else {
    verdict.kind = Verdict::Kind::Verified;
  }
  verdict.stats.time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return verdict;
}

}  // namespace uncover
