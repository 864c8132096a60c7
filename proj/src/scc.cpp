#include "uncover/scc.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <stdexcept>

namespace uncover {

SccState SccState::initial(int num_defined, int num_total) {
  SccState s;
  s.var_class_.assign(static_cast<size_t>(num_total), -1);
  for (int i = 0; i < num_defined; ++i) s.var_class_[static_cast<size_t>(i)] = i;
  s.num_classes_ = num_defined;
  return s;
}

void SccState::make_reject() {
  var_class_.assign(var_class_.size(), -1);
  num_classes_ = 0;
  dis_.clear();
  fns_.clear();
  seen_.clear();
  reject_ = true;
}

std::vector<char> SccState::held_mask() const {
  std::vector<char> held(static_cast<size_t>(num_classes_), 0);
  for (int32_t c : var_class_)
    if (c >= 0) held[static_cast<size_t>(c)] = 1;
  return held;
}

int SccState::read_class(int v) const {
  if (v < 0 || v >= num_slots() || var_class_[static_cast<size_t>(v)] < 0)
    throw std::invalid_argument("letter reads an undefined variable");
  return var_class_[static_cast<size_t>(v)];
}

bool SccState::has_diseq(int x, int y) const {
  if (!defined(x) || !defined(y)) return false;
  int32_t a = var_class_[static_cast<size_t>(x)], b = var_class_[static_cast<size_t>(y)];
  if (a > b) std::swap(a, b);
  return std::binary_search(dis_.begin(), dis_.end(), std::pair(a, b));
}

int SccState::lookup_fn(int fn, std::span<const int> arg_vars) const {
  std::vector<int32_t> args;
  args.reserve(arg_vars.size());
  for (int v : arg_vars) {
    if (!defined(v)) return -1;
    args.push_back(var_class_[static_cast<size_t>(v)]);
  }
  for (const FnEntry& e : fns_)
    if (e.fn == fn && e.args == args) return e.out;
  return -1;
}

bool SccState::computed_flag(int fn, std::span<const int> arg_vars) const {
  std::vector<int32_t> args;
  args.reserve(arg_vars.size());
  for (int v : arg_vars) {
    if (!defined(v)) return false;
    args.push_back(var_class_[static_cast<size_t>(v)]);
  }
  for (const SeenEntry& e : seen_)
    if (e.fn == fn && e.args == args) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Normal form

void SccState::normalize() {
  // Collect unusable entries. Anonymous classes never merge with anything
  // (new equalities only relate variable-held terms on coherent runs), so:
  // an entry whose result lost every variable can never be observed again;
  // an entry with no held argument can neither collide with another key nor
  // extend the superterm cone of a held class.
  std::vector<char> held = held_mask();
  std::erase_if(fns_, [&](const FnEntry& e) {
    if (!held[static_cast<size_t>(e.out)]) return true;
    return std::none_of(e.args.begin(), e.args.end(),
                        [&](int32_t a) { return held[static_cast<size_t>(a)]; });
  });
  std::erase_if(seen_, [&](const SeenEntry& e) {
    return std::none_of(e.args.begin(), e.args.end(),
                        [&](int32_t a) { return held[static_cast<size_t>(a)]; });
  });
  std::erase_if(dis_, [&](const std::pair<int32_t, int32_t>& d) {
    return !held[static_cast<size_t>(d.first)] || !held[static_cast<size_t>(d.second)];
  });

  // Deduplicate anonymous classes with isomorphic surroundings: when the
  // entries referencing anon `a` mention no other anon and are, up to
  // renaming a to b, exactly the entries referencing anon `b`, the two
  // record the same congruence and cone information.
  {
    std::map<int32_t, std::vector<std::string>> profile;
    auto tag = [&](int32_t c, int32_t self) {
      if (held[static_cast<size_t>(c)]) return "h" + std::to_string(c);
      return std::string(c == self ? "*" : "?");
    };
    auto add_profiles = [&](auto const& entries, const char* kind, auto out_of) {
      for (const auto& e : entries) {
        for (int32_t a : e.args) {
          if (held[static_cast<size_t>(a)]) continue;
          std::string p = std::string(kind) + std::to_string(e.fn);
          bool other_anon = false;
          for (int32_t b : e.args) {
            if (!held[static_cast<size_t>(b)] && b != a) other_anon = true;
            p += "," + tag(b, a);
          }
          int32_t out = out_of(e);
          if (out >= 0) p += "->" + tag(out, a);
          if (other_anon) p += "!";  // poison: groups with shared anons are kept
          profile[a].push_back(std::move(p));
        }
      }
    };
    add_profiles(fns_, "P", [](const FnEntry& e) { return e.out; });
    add_profiles(seen_, "E", [](const SeenEntry&) { return int32_t{-1}; });
    std::map<std::vector<std::string>, int32_t> keep;
    std::map<int32_t, int32_t> drop;  // anon -> representative
    for (auto& [anon, prof] : profile) {
      std::sort(prof.begin(), prof.end());
      bool poisoned = false;
      for (const std::string& p : prof)
        if (!p.empty() && p.back() == '!') poisoned = true;
      if (poisoned) continue;
      auto [it, fresh] = keep.emplace(prof, anon);
      if (!fresh) drop.emplace(anon, it->second);
    }
    if (!drop.empty()) {
      auto mentions_dropped = [&](std::span<const int32_t> args) {
        return std::any_of(args.begin(), args.end(),
                           [&](int32_t a) { return drop.count(a) != 0; });
      };
      std::erase_if(fns_, [&](const FnEntry& e) { return mentions_dropped(e.args); });
      std::erase_if(seen_, [&](const SeenEntry& e) { return mentions_dropped(e.args); });
    }
  }

  // Renumber: held classes in smallest-member order, then anonymous classes
  // by occurrence in the sorted tables (two rounds make the numbering stable
  // under the final ordering).
  std::vector<int32_t> newid(static_cast<size_t>(num_classes_), -1);
  int32_t next = 0;
  for (int32_t c : var_class_)
    if (c >= 0 && newid[static_cast<size_t>(c)] < 0) newid[static_cast<size_t>(c)] = next++;
  int32_t held_count = next;

  for (int round = 0; round < 2; ++round) {
    std::vector<int32_t> order = newid;
    auto rank = [&](int32_t c) {
      return order[static_cast<size_t>(c)] >= 0 ? order[static_cast<size_t>(c)]
                                                : num_classes_ + c;
    };
    auto fn_key = [&](const FnEntry& e) {
      std::vector<int32_t> k{e.fn};
      for (int32_t a : e.args) k.push_back(rank(a));
      k.push_back(rank(e.out));
      return k;
    };
    auto seen_key = [&](const SeenEntry& e) {
      std::vector<int32_t> k{e.fn};
      for (int32_t a : e.args) k.push_back(rank(a));
      return k;
    };
    std::sort(fns_.begin(), fns_.end(),
              [&](const FnEntry& a, const FnEntry& b) { return fn_key(a) < fn_key(b); });
    std::sort(seen_.begin(), seen_.end(),
              [&](const SeenEntry& a, const SeenEntry& b) { return seen_key(a) < seen_key(b); });
    next = held_count;
    for (size_t i = 0; i < static_cast<size_t>(num_classes_); ++i)
      if (newid[i] >= held_count) newid[i] = -1;
    for (const FnEntry& e : fns_)
      for (int32_t a : e.args)
        if (newid[static_cast<size_t>(a)] < 0) newid[static_cast<size_t>(a)] = next++;
    for (const SeenEntry& e : seen_)
      for (int32_t a : e.args)
        if (newid[static_cast<size_t>(a)] < 0) newid[static_cast<size_t>(a)] = next++;
  }

  for (int32_t& c : var_class_)
    if (c >= 0) c = newid[static_cast<size_t>(c)];
  for (auto& [a, b] : dis_) {
    a = newid[static_cast<size_t>(a)];
    b = newid[static_cast<size_t>(b)];
    if (a > b) std::swap(a, b);
  }
  for (FnEntry& e : fns_) {
    for (int32_t& a : e.args) a = newid[static_cast<size_t>(a)];
    e.out = newid[static_cast<size_t>(e.out)];
  }
  for (SeenEntry& e : seen_) {
    for (int32_t& a : e.args) a = newid[static_cast<size_t>(a)];
  }
  num_classes_ = next;

  std::sort(dis_.begin(), dis_.end());
  dis_.erase(std::unique(dis_.begin(), dis_.end()), dis_.end());
  std::sort(fns_.begin(), fns_.end());
  fns_.erase(std::unique(fns_.begin(), fns_.end()), fns_.end());
  std::sort(seen_.begin(), seen_.end());
  seen_.erase(std::unique(seen_.begin(), seen_.end()), seen_.end());
}

// ---------------------------------------------------------------------------
// Merging

bool SccState::merge_classes(std::vector<std::pair<int32_t, int32_t>> pairs) {
  std::vector<int32_t> uf(static_cast<size_t>(num_classes_));
  std::iota(uf.begin(), uf.end(), 0);
  auto find = [&uf](int32_t x) {
    while (uf[static_cast<size_t>(x)] != x) {
      uf[static_cast<size_t>(x)] = uf[static_cast<size_t>(uf[static_cast<size_t>(x)])];
      x = uf[static_cast<size_t>(x)];
    }
    return x;
  };
  std::deque<std::pair<int32_t, int32_t>> queue(pairs.begin(), pairs.end());
  while (!queue.empty()) {
    auto [a, b] = queue.front();
    queue.pop_front();
    int32_t ra = find(a), rb = find(b);
    if (ra == rb) continue;
    uf[static_cast<size_t>(ra)] = rb;
    // Entries whose argument tuples collapse to one key must agree.
    std::map<std::pair<int32_t, std::vector<int32_t>>, int32_t> table;
    for (const FnEntry& e : fns_) {
      std::vector<int32_t> key;
      key.reserve(e.args.size());
      for (int32_t x : e.args) key.push_back(find(x));
      auto [it, fresh] = table.emplace(std::pair(e.fn, std::move(key)), find(e.out));
      if (!fresh && it->second != find(e.out)) queue.emplace_back(it->second, find(e.out));
    }
  }
  bool ok = true;
  for (int32_t& c : var_class_)
    if (c >= 0) c = find(c);
  for (auto& [a, b] : dis_) {
    a = find(a);
    b = find(b);
    if (a == b) ok = false;
  }
  for (FnEntry& e : fns_) {
    for (int32_t& a : e.args) a = find(a);
    e.out = find(e.out);
  }
  for (SeenEntry& e : seen_)
    for (int32_t& a : e.args) a = find(a);
  return ok;
}

// ---------------------------------------------------------------------------
// Transitions

StepVerdict SccState::do_assign_fn(const ExecLetter& l, bool coherent) {
  std::vector<int32_t> argcls;
  argcls.reserve(l.args.size());
  for (int32_t z : l.args) argcls.push_back(static_cast<int32_t>(read_class(z)));

  int32_t out = -1;
  for (const FnEntry& e : fns_)
    if (e.fn == l.fn && e.args == argcls) {
      out = e.out;
      break;
    }
  if (coherent) {
    bool computed_before = false;
    for (const SeenEntry& e : seen_)
      if (e.fn == l.fn && e.args == argcls) {
        computed_before = true;
        break;
      }
    if (computed_before && out < 0) return StepVerdict::MemoizingViolation;
    seen_.push_back({l.fn, argcls});
  }
  if (out >= 0) {
    var_class_[static_cast<size_t>(l.a)] = out;
  } else {
    int32_t fresh = num_classes_++;
    var_class_[static_cast<size_t>(l.a)] = fresh;
    fns_.push_back({l.fn, std::move(argcls), fresh});
  }
  normalize();
  return StepVerdict::Ok;
}

StepVerdict SccState::do_assume_eq(const ExecLetter& l, bool coherent) {
  int32_t cx = static_cast<int32_t>(read_class(l.a));
  int32_t cy = static_cast<int32_t>(read_class(l.b));
  if (coherent) {
    // Classes holding superterms of x and y, reflexive-transitively via P.
    std::vector<char> reach(static_cast<size_t>(num_classes_), 0);
    reach[static_cast<size_t>(cx)] = reach[static_cast<size_t>(cy)] = 1;
    bool grew = true;
    while (grew) {
      grew = false;
      for (const FnEntry& e : fns_) {
        if (reach[static_cast<size_t>(e.out)]) continue;
        for (int32_t a : e.args)
          if (reach[static_cast<size_t>(a)]) {
            reach[static_cast<size_t>(e.out)] = 1;
            grew = true;
            break;
          }
      }
    }
    // Not early iff some computed application touching the superterm cone
    // was dropped (computed flag set, no current interpretation).
    for (const SeenEntry& e : seen_) {
      bool touches = false;
      for (int32_t a : e.args)
        if (reach[static_cast<size_t>(a)]) {
          touches = true;
          break;
        }
      if (!touches) continue;
      bool interpreted = false;
      for (const FnEntry& f : fns_)
        if (f.fn == e.fn && f.args == e.args) {
          interpreted = true;
          break;
        }
      if (!interpreted) return StepVerdict::EarlyAssumeViolation;
    }
  }
  if (cx == cy) return StepVerdict::Ok;
  if (!merge_classes({{cx, cy}})) {
    make_reject();
    return StepVerdict::Reject;
  }
  normalize();
  return StepVerdict::Ok;
}

StepVerdict SccState::step_feasible(const ExecLetter& l) {
  if (reject_) return StepVerdict::Reject;
  switch (l.kind) {
    case ExecLetter::Kind::AssignVar:
      var_class_[static_cast<size_t>(l.a)] = static_cast<int32_t>(read_class(l.b));
      normalize();
      return StepVerdict::Ok;
    case ExecLetter::Kind::AssignFn:
      return do_assign_fn(l, false);
    case ExecLetter::Kind::AssumeEq:
      return do_assume_eq(l, false);
    case ExecLetter::Kind::AssumeNeq: {
      int32_t cx = static_cast<int32_t>(read_class(l.a));
      int32_t cy = static_cast<int32_t>(read_class(l.b));
      if (cx == cy) {
        make_reject();
        return StepVerdict::Reject;
      }
      dis_.emplace_back(std::min(cx, cy), std::max(cx, cy));
      normalize();
      return StepVerdict::Ok;
    }
    case ExecLetter::Kind::Call:
    case ExecLetter::Kind::Return:
      throw std::invalid_argument("call/return letters require the VPA transitions");
  }
  return StepVerdict::Ok;
}

StepVerdict SccState::step_coherent(const ExecLetter& l) {
  if (reject_) return StepVerdict::Reject;
  switch (l.kind) {
    case ExecLetter::Kind::AssignVar:
      var_class_[static_cast<size_t>(l.a)] = static_cast<int32_t>(read_class(l.b));
      normalize();
      return StepVerdict::Ok;
    case ExecLetter::Kind::AssignFn:
      return do_assign_fn(l, true);
    case ExecLetter::Kind::AssumeEq:
      return do_assume_eq(l, true);
    case ExecLetter::Kind::AssumeNeq:
      return StepVerdict::Ok;  // the coherence automaton ignores disequalities
    case ExecLetter::Kind::Call:
    case ExecLetter::Kind::Return:
      throw std::invalid_argument("call/return letters require the VPA transitions");
  }
  return StepVerdict::Ok;
}

SccState SccState::call_entry(int num_program_vars) const {
  SccState s = *this;
  for (int v = num_program_vars; v < s.num_slots(); ++v)
    s.var_class_[static_cast<size_t>(v)] = -1;
  s.normalize();
  for (int v = num_program_vars; v < s.num_slots(); ++v)
    s.var_class_[static_cast<size_t>(v)] = s.var_class_[static_cast<size_t>(v - num_program_vars)];
  s.normalize();
  return s;
}

SccState SccState::return_merge(const SccState& caller_at_call, const SccState& callee_at_return,
                                std::span<const int> out_vars, std::span<const int32_t> targets,
                                int num_program_vars) {
  int r = num_program_vars;
  int n2 = 2 * r;
  if (caller_at_call.num_slots() != n2 || callee_at_return.num_slots() != n2)
    throw std::invalid_argument("return_merge expects states over V and its shadow copy");
  if (out_vars.size() != targets.size())
    throw std::invalid_argument("return vector length does not match the method out tuple");

  // Disjoint union over 4r slots: callee first, caller's classes shifted.
  SccState comb;
  int32_t shift = callee_at_return.num_classes_;
  comb.num_classes_ = shift + caller_at_call.num_classes_;
  comb.var_class_.assign(static_cast<size_t>(4 * r), -1);
  for (int v = 0; v < n2; ++v)
    comb.var_class_[static_cast<size_t>(v)] = callee_at_return.var_class_[static_cast<size_t>(v)];
  for (int v = 0; v < n2; ++v) {
    int32_t c = caller_at_call.var_class_[static_cast<size_t>(v)];
    comb.var_class_[static_cast<size_t>(n2 + v)] = c < 0 ? -1 : c + shift;
  }
  comb.dis_ = callee_at_return.dis_;
  for (auto [a, b] : caller_at_call.dis_) comb.dis_.emplace_back(a + shift, b + shift);
  comb.fns_ = callee_at_return.fns_;
  for (FnEntry e : caller_at_call.fns_) {
    for (int32_t& a : e.args) a += shift;
    e.out += shift;
    comb.fns_.push_back(std::move(e));
  }
  comb.seen_ = callee_at_return.seen_;
  for (SeenEntry e : caller_at_call.seen_) {
    for (int32_t& a : e.args) a += shift;
    comb.seen_.push_back(std::move(e));
  }

  // Identify the callee's shadow of v with the caller's v at call time.
  std::vector<std::pair<int32_t, int32_t>> pairs;
  for (int i = 0; i < r; ++i) {
    int32_t a = comb.var_class_[static_cast<size_t>(r + i)];
    int32_t b = comb.var_class_[static_cast<size_t>(n2 + i)];
    if (a >= 0 && b >= 0 && a != b) pairs.emplace_back(a, b);
  }
  if (!comb.merge_classes(std::move(pairs))) {
    SccState rejected = initial(0, n2);
    rejected.make_reject();
    return rejected;
  }

  // Rebind: returned targets take the callee's out classes, every other
  // program variable its caller-at-call class, and the shadows recover the
  // caller's shadows.
  std::vector<int32_t> bind(static_cast<size_t>(n2), -1);
  for (int i = 0; i < r; ++i) bind[static_cast<size_t>(i)] = comb.var_class_[static_cast<size_t>(n2 + i)];
  for (size_t k = 0; k < targets.size(); ++k)
    bind[static_cast<size_t>(targets[k])] =
        comb.var_class_[static_cast<size_t>(out_vars[k])];
  for (int i = 0; i < r; ++i)
    bind[static_cast<size_t>(r + i)] = comb.var_class_[static_cast<size_t>(n2 + r + i)];

  comb.var_class_.assign(bind.begin(), bind.end());
  comb.normalize();
  return comb;
}

// ---------------------------------------------------------------------------

std::string SccState::dump(const VarNames& names) const {
  if (reject_) return "REJECT";
  std::vector<std::vector<int>> members(static_cast<size_t>(num_classes_));
  for (int v = 0; v < num_slots(); ++v)
    if (var_class_[static_cast<size_t>(v)] >= 0)
      members[static_cast<size_t>(var_class_[static_cast<size_t>(v)])].push_back(v);
  auto class_str = [&](int32_t c) {
    if (members[static_cast<size_t>(c)].empty()) return "#" + std::to_string(c);
    std::string s = "{";
    bool first = true;
    for (int v : members[static_cast<size_t>(c)]) {
      if (!first) s += ",";
      s += names.name(v);
      first = false;
    }
    return s + "}";
  };
  std::string out;
  bool first = true;
  for (int32_t c = 0; c < num_classes_; ++c) {
    if (members[static_cast<size_t>(c)].empty()) continue;
    if (!first) out += " ";
    out += class_str(c);
    first = false;
  }
  out += " | d:";
  for (auto [a, b] : dis_) out += " (" + class_str(a) + "," + class_str(b) + ")";
  out += " | P:";
  for (const FnEntry& e : fns_) {
    out += " " + names.sig->fun_name(e.fn) + "(<";
    for (size_t i = 0; i < e.args.size(); ++i)
      out += std::string(i ? "," : "") + class_str(e.args[i]);
    out += ">)=" + class_str(e.out);
  }
  if (!seen_.empty()) {
    out += " | E:";
    for (const SeenEntry& e : seen_) {
      out += " " + names.sig->fun_name(e.fn) + "(<";
      for (size_t i = 0; i < e.args.size(); ++i)
        out += std::string(i ? "," : "") + class_str(e.args[i]);
      out += ">)";
    }
  }
  return out;
}

size_t SccState::hash() const {
  size_t h = reject_ ? 0x12345 : 0x54321;
  auto mix = [&h](int64_t v) {
    h ^= static_cast<size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  };
  mix(num_classes_);
  for (int32_t v : var_class_) mix(v);
  mix(-7);
  for (auto [a, b] : dis_) {
    mix(a);
    mix(b);
  }
  mix(-8);
  for (const FnEntry& e : fns_) {
    mix(e.fn);
    for (int32_t a : e.args) mix(a);
    mix(e.out);
    mix(-9);
  }
  for (const SeenEntry& e : seen_) {
    mix(e.fn);
    for (int32_t a : e.args) mix(a);
    mix(-10);
  }
  return h;
}

SccState scc_initial(const Signature& sig, int num_ghosts) {
  return SccState::initial(sig.num_vars(), sig.num_vars() + num_ghosts);
}

SccRunReport scc_run(const Execution& rho, const Signature& sig, int num_ghosts, bool keep_trace) {
  SccRunReport report;
  report.final_state = scc_initial(sig, num_ghosts);
  if (keep_trace) report.trace.push_back(report.final_state);
  for (size_t i = 0; i < rho.size(); ++i) {
    StepVerdict v = report.final_state.step_feasible(rho[i]);
    if (keep_trace) report.trace.push_back(report.final_state);
    if (v == StepVerdict::Reject && report.reject_position < 0)
      report.reject_position = static_cast<int>(i);
  }
  return report;
}

}  // namespace uncover
