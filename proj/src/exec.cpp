#include "uncover/exec.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "uncover/syntax.hpp"

namespace uncover {

size_t hash_value(const ExecLetter& l) {
  size_t h = static_cast<size_t>(l.kind);
  auto mix = [&h](int32_t v) {
    h ^= static_cast<size_t>(static_cast<uint32_t>(v)) + 0x9e3779b9ull + (h << 6) + (h >> 2);
  };
  mix(l.a);
  mix(l.b);
  mix(l.fn);
  mix(l.method);
  for (int32_t v : l.args) mix(v);
  return h;
}

static bool letter_less(const ExecLetter& x, const ExecLetter& y) {
  auto key = [](const ExecLetter& l) {
    return std::tuple(static_cast<int>(l.kind), l.a, l.b, l.fn, l.method, l.args);
  };
  return key(x) < key(y);
}

std::string letter_to_string(const ExecLetter& l, const VarNames& names,
                             std::span<const MethodSig> methods) {
  auto v = [&](int32_t i) { return names.name(i); };
  switch (l.kind) {
    case ExecLetter::Kind::AssignVar:
      return v(l.a) + " := " + v(l.b);
    case ExecLetter::Kind::AssignFn: {
      std::string s = v(l.a) + " := " + names.sig->fun_name(l.fn) + "(";
      for (size_t i = 0; i < l.args.size(); ++i) {
        if (i) s += ",";
        s += v(l.args[i]);
      }
      return s + ")";
    }
    case ExecLetter::Kind::AssumeEq:
      return "assume(" + v(l.a) + " = " + v(l.b) + ")";
    case ExecLetter::Kind::AssumeNeq:
      return "assume(" + v(l.a) + " != " + v(l.b) + ")";
    case ExecLetter::Kind::Call:
      return "call " + methods[static_cast<size_t>(l.method)].name;
    case ExecLetter::Kind::Return: {
      std::string s = "<";
      for (size_t i = 0; i < l.args.size(); ++i) {
        if (i) s += ",";
        s += v(l.args[i]);
      }
      return s + "> := return";
    }
  }
  return {};
}

namespace {

struct LetterScanner {
  const std::string& s;
  size_t pos = 0;

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eat(const char* tok) {
    skip_ws();
    size_t n = std::string_view(tok).size();
    if (s.compare(pos, n, tok) == 0) {
      pos += n;
      return true;
    }
    return false;
  }
  // Like eat, but requires a word boundary after the token.
  bool eat_word(const char* tok) {
    skip_ws();
    size_t n = std::string_view(tok).size();
    if (s.compare(pos, n, tok) != 0) return false;
    if (pos + n < s.size()) {
      char c = s[pos + n];
      if (c == '_' || c == '$' || std::isalnum(static_cast<unsigned char>(c))) return false;
    }
    pos += n;
    return true;
  }
  int number() {
    skip_ws();
    size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (start == pos) throw std::invalid_argument("expected number in: " + s);
    return std::stoi(s.substr(start, pos - start));
  }
  bool peek(char c) {
    skip_ws();
    return pos < s.size() && s[pos] == c;
  }
  std::string ident() {
    skip_ws();
    size_t start = pos;
    if (pos < s.size() && (s[pos] == '$' || s[pos] == '_' || std::isalpha(static_cast<unsigned char>(s[pos]))))
      ++pos;
    while (pos < s.size() &&
           (s[pos] == '_' || s[pos] == '$' || std::isalnum(static_cast<unsigned char>(s[pos]))))
      ++pos;
    if (start == pos) throw std::invalid_argument("expected identifier in letter: " + s);
    return s.substr(start, pos - start);
  }
  void expect(const char* tok) {
    if (!eat(tok)) throw std::invalid_argument(std::string("expected '") + tok + "' in letter: " + s);
  }
  bool at_end() {
    skip_ws();
    return pos == s.size();
  }
};

}  // namespace

ExecLetter parse_letter(const std::string& line, const VarNames& names,
                        std::span<const MethodSig> methods) {
  LetterScanner sc{line};
  auto var_of = [&](const std::string& n) {
    int i = names.index_of(n);
    if (i < 0) throw std::invalid_argument("undeclared variable '" + n + "' in letter: " + line);
    return i;
  };

  if (sc.eat_word("assume")) {
    sc.expect("(");
    int x = var_of(sc.ident());
    bool neq = sc.eat("!=");
    if (!neq) sc.expect("=");
    int y = var_of(sc.ident());
    sc.expect(")");
    if (!sc.at_end()) throw std::invalid_argument("trailing input in letter: " + line);
    return neq ? ExecLetter::assume_neq(x, y) : ExecLetter::assume_eq(x, y);
  }
  if (sc.eat_word("call")) {
    std::string m = sc.ident();
    for (size_t i = 0; i < methods.size(); ++i)
      if (methods[i].name == m) {
        if (!sc.at_end()) throw std::invalid_argument("trailing input in letter: " + line);
        return ExecLetter::call(static_cast<int>(i));
      }
    throw std::invalid_argument("unknown method '" + m + "' in letter: " + line);
  }
  if (sc.eat("<")) {
    std::vector<int32_t> targets;
    if (!sc.peek('>')) {
      targets.push_back(var_of(sc.ident()));
      while (sc.eat(",")) targets.push_back(var_of(sc.ident()));
    }
    sc.expect(">");
    sc.expect(":=");
    if (!sc.eat_word("return")) throw std::invalid_argument("expected 'return' in letter: " + line);
    if (!sc.at_end()) throw std::invalid_argument("trailing input in letter: " + line);
    return ExecLetter::ret(std::move(targets));
  }

  int x = var_of(sc.ident());
  sc.expect(":=");
  std::string rhs = sc.ident();
  if (sc.eat("(")) {
    int fn = names.sig->fun_index(rhs);
    if (fn < 0) throw std::invalid_argument("unknown function '" + rhs + "' in letter: " + line);
    std::vector<int32_t> args;
    if (!sc.peek(')')) {
      args.push_back(var_of(sc.ident()));
      while (sc.eat(",")) args.push_back(var_of(sc.ident()));
    }
    sc.expect(")");
    if (!sc.at_end()) throw std::invalid_argument("trailing input in letter: " + line);
    if (static_cast<int>(args.size()) != names.sig->arity(fn))
      throw std::invalid_argument("arity mismatch for '" + rhs + "' in letter: " + line);
    return ExecLetter::apply(x, fn, std::move(args));
  }
  if (!sc.at_end()) throw std::invalid_argument("trailing input in letter: " + line);
  return ExecLetter::assign(x, var_of(rhs));
}

Execution project_program_letters(const Execution& rho, int num_program_vars) {
  Execution out;
  out.reserve(rho.size());
  for (const auto& l : rho)
    if (!l.is_ghost_assign(num_program_vars)) out.push_back(l);
  return out;
}

CompEval::CompEval(const Signature& sig, int num_ghosts, std::span<const MethodSig> methods)
    : sig_(&sig), methods_(methods.begin(), methods.end()), arena_(sig) {
  env_.assign(static_cast<size_t>(sig.num_vars() + num_ghosts), kNoTerm);
  for (int v = 0; v < sig.num_vars(); ++v) env_[static_cast<size_t>(v)] = arena_.init_value(v);
}

void CompEval::step(const ExecLetter& l) {
  auto read = [&](int v) {
    TermId t = env_[static_cast<size_t>(v)];
    if (t == kNoTerm) throw std::invalid_argument("read of unassigned variable");
    return t;
  };
  switch (l.kind) {
    case ExecLetter::Kind::AssignVar:
      env_[static_cast<size_t>(l.a)] = read(l.b);
      break;
    case ExecLetter::Kind::AssignFn: {
      std::vector<TermId> args;
      args.reserve(l.args.size());
      for (int32_t z : l.args) args.push_back(read(z));
      env_[static_cast<size_t>(l.a)] = arena_.apply(l.fn, args);
      break;
    }
    case ExecLetter::Kind::AssumeEq:
      alpha_.emplace_back(read(l.a), read(l.b));
      break;
    case ExecLetter::Kind::AssumeNeq:
      beta_.emplace_back(read(l.a), read(l.b));
      break;
    case ExecLetter::Kind::Call:
      stack_.push_back({l.method, env_});
      break;
    case ExecLetter::Kind::Return: {
      if (stack_.empty()) throw std::invalid_argument("return without matching call");
      Frame frame = std::move(stack_.back());
      stack_.pop_back();
      const MethodSig& m = methods_[static_cast<size_t>(frame.method)];
      if (m.out.size() != l.args.size())
        throw std::invalid_argument("return vector length does not match method " + m.name);
      std::vector<TermId> callee = std::move(env_);
      env_ = std::move(frame.saved);
      for (size_t i = 0; i < l.args.size(); ++i)
        env_[static_cast<size_t>(l.args[i])] = callee[static_cast<size_t>(m.out[i])];
      break;
    }
  }
}

void CompEval::run(const Execution& rho) {
  for (const auto& l : rho) step(l);
}

std::vector<TermId> CompEval::term_set() const {
  std::vector<TermId> out(static_cast<size_t>(arena_.size()));
  for (int i = 0; i < arena_.size(); ++i) out[static_cast<size_t>(i)] = i;
  return out;
}

TermId comp(const Execution& rho, int v, const Signature& sig, int num_ghosts,
            std::span<const MethodSig> methods) {
  CompEval eval(sig, num_ghosts, methods);
  eval.run(rho);
  return eval.value(v);
}

// ---------------------------------------------------------------------------
// Exec(s) as an NFA

namespace {

struct NfaBuilder {
  std::vector<std::vector<Nfa::Edge>> adj;
  std::vector<std::vector<int>> eps;

  int fresh() {
    adj.emplace_back();
    eps.emplace_back();
    return static_cast<int>(adj.size()) - 1;
  }
  void edge(int from, ExecLetter l, int to) { adj[static_cast<size_t>(from)].push_back({std::move(l), to}); }
  void eedge(int from, int to) { eps[static_cast<size_t>(from)].push_back(to); }
};

struct Frag {
  int in, out;
};

ExecLetter atom_letter(const Cond& c, bool negated) {
  if (!c.is_atom() || c.lhs.is_const || c.rhs.is_const)
    throw std::invalid_argument("exec_nfa requires a core-form program");
  bool neq = (c.kind == Cond::Kind::Neq) != negated;
  return neq ? ExecLetter::assume_neq(c.lhs.index, c.rhs.index)
             : ExecLetter::assume_eq(c.lhs.index, c.rhs.index);
}

Frag build_frag(NfaBuilder& b, const Stmt& s) {
  switch (s.kind) {
    case Stmt::Kind::Skip: {
      int q = b.fresh();
      return {q, q};
    }
    case Stmt::Kind::Assign: {
      if (s.rhs.is_const) throw std::invalid_argument("exec_nfa requires a core-form program");
      int q0 = b.fresh(), q1 = b.fresh();
      b.edge(q0, ExecLetter::assign(s.lhs, s.rhs.index), q1);
      return {q0, q1};
    }
    case Stmt::Kind::AssignFn: {
      std::vector<int32_t> zs;
      for (const Operand& o : s.args) {
        if (o.is_const) throw std::invalid_argument("exec_nfa requires a core-form program");
        zs.push_back(o.index);
      }
      int q0 = b.fresh(), q1 = b.fresh();
      b.edge(q0, ExecLetter::apply(s.lhs, s.fn, std::move(zs)), q1);
      return {q0, q1};
    }
    case Stmt::Kind::Assume: {
      int q0 = b.fresh(), q1 = b.fresh();
      b.edge(q0, atom_letter(s.cond, false), q1);
      return {q0, q1};
    }
    case Stmt::Kind::Seq: {
      if (s.kids.empty()) {
        int q = b.fresh();
        return {q, q};
      }
      Frag acc = build_frag(b, s.kids.front());
      for (size_t i = 1; i < s.kids.size(); ++i) {
        Frag next = build_frag(b, s.kids[i]);
        b.eedge(acc.out, next.in);
        acc.out = next.out;
      }
      return acc;
    }
    case Stmt::Kind::Ite: {
      int qin = b.fresh(), qout = b.fresh();
      Frag t = build_frag(b, s.kids[0]);
      Frag e = build_frag(b, s.kids[1]);
      int qt = b.fresh(), qe = b.fresh();
      b.edge(qin, atom_letter(s.cond, false), qt);
      b.eedge(qt, t.in);
      b.edge(qin, atom_letter(s.cond, true), qe);
      b.eedge(qe, e.in);
      b.eedge(t.out, qout);
      b.eedge(e.out, qout);
      return {qin, qout};
    }
    case Stmt::Kind::While: {
      int qin = b.fresh(), qout = b.fresh(), qbody = b.fresh();
      Frag body = build_frag(b, s.kids[0]);
      b.edge(qin, atom_letter(s.cond, false), qbody);
      b.eedge(qbody, body.in);
      b.eedge(body.out, qin);
      b.edge(qin, atom_letter(s.cond, true), qout);
      return {qin, qout};
    }
    case Stmt::Kind::Call:
      throw std::invalid_argument("recursive program passed to exec_nfa; use the VPA construction");
  }
  throw std::logic_error("unreachable");
}

}  // namespace

Nfa build_exec_nfa(const Program& program, ExecMode mode) {
  if (program.is_recursive())
    throw std::invalid_argument("recursive program passed to exec_nfa; use the VPA construction");
  NfaBuilder b;
  Frag f = build_frag(b, program.body);
  int n = static_cast<int>(b.adj.size());

  // Epsilon closure per state.
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

  Nfa out;
  out.adj.resize(static_cast<size_t>(n));
  out.accepting.assign(static_cast<size_t>(n), 0);
  out.start = f.in;
  for (int s = 0; s < n; ++s) {
    for (int u : closure[static_cast<size_t>(s)]) {
      if (u == f.out) out.accepting[static_cast<size_t>(s)] = 1;
      for (const auto& e : b.adj[static_cast<size_t>(u)]) out.adj[static_cast<size_t>(s)].push_back(e);
    }
  }

  // Keep only states reachable via letters from the start.
  std::vector<int> order;
  std::vector<int> remap(static_cast<size_t>(n), -1);
  order.push_back(out.start);
  remap[static_cast<size_t>(out.start)] = 0;
  for (size_t i = 0; i < order.size(); ++i) {
    for (const auto& e : out.adj[static_cast<size_t>(order[i])])
      if (remap[static_cast<size_t>(e.to)] < 0) {
        remap[static_cast<size_t>(e.to)] = static_cast<int>(order.size());
        order.push_back(e.to);
      }
  }
  Nfa trimmed;
  trimmed.start = 0;
  trimmed.adj.resize(order.size());
  trimmed.accepting.resize(order.size());
  for (size_t i = 0; i < order.size(); ++i) {
    int old = order[i];
    trimmed.accepting[i] = (mode == ExecMode::Partial) ? 1 : out.accepting[static_cast<size_t>(old)];
    for (const auto& e : out.adj[static_cast<size_t>(old)])
      trimmed.adj[i].push_back({e.letter, remap[static_cast<size_t>(e.to)]});
    // Dedup parallel edges.
    auto& edges = trimmed.adj[i];
    std::sort(edges.begin(), edges.end(), [](const Nfa::Edge& x, const Nfa::Edge& y) {
      if (letter_less(x.letter, y.letter)) return true;
      if (letter_less(y.letter, x.letter)) return false;
      return x.to < y.to;
    });
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](const Nfa::Edge& x, const Nfa::Edge& y) {
                              return x.letter == y.letter && x.to == y.to;
                            }),
                edges.end());
  }
  return trimmed;
}

bool nfa_accepts(const Nfa& nfa, const Execution& word) {
  std::set<int> cur{nfa.start};
  for (const auto& l : word) {
    std::set<int> next;
    for (int s : cur)
      for (const auto& e : nfa.adj[static_cast<size_t>(s)])
        if (e.letter == l) next.insert(e.to);
    cur = std::move(next);
    if (cur.empty()) return false;
  }
  for (int s : cur)
    if (nfa.accepting[static_cast<size_t>(s)]) return true;
  return false;
}

namespace {

void enumerate_words(const Nfa& nfa, const std::set<int>& states, Execution& word, int maxlen,
                     std::vector<Execution>& out) {
  for (int s : states)
    if (nfa.accepting[static_cast<size_t>(s)]) {
      out.push_back(word);
      break;
    }
  if (static_cast<int>(word.size()) == maxlen) return;
  std::map<std::tuple<int, int32_t, int32_t, int32_t, int32_t, std::vector<int32_t>>,
           std::pair<ExecLetter, std::set<int>>>
      succ;
  for (int s : states)
    for (const auto& e : nfa.adj[static_cast<size_t>(s)]) {
      auto key = std::tuple(static_cast<int>(e.letter.kind), e.letter.a, e.letter.b, e.letter.fn,
                            e.letter.method, e.letter.args);
      auto& slot = succ[key];
      slot.first = e.letter;
      slot.second.insert(e.to);
    }
  for (auto& [_, slot] : succ) {
    word.push_back(slot.first);
    enumerate_words(nfa, slot.second, word, maxlen, out);
    word.pop_back();
  }
}

}  // namespace

std::vector<Execution> nfa_language_upto(const Nfa& nfa, int maxlen) {
  std::vector<Execution> out;
  Execution word;
  std::set<int> start{nfa.start};
  enumerate_words(nfa, start, word, maxlen, out);
  std::sort(out.begin(), out.end(), [](const Execution& x, const Execution& y) {
    return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end(), letter_less);
  });
  return out;
}

void nfa_to_dot(const Nfa& nfa, const VarNames& names, std::ostream& os) {
  os << "digraph exec {\n  rankdir=LR;\n";
  for (int s = 0; s < nfa.num_states(); ++s) {
    os << "  q" << s << " [shape=" << (nfa.accepting[static_cast<size_t>(s)] ? "doublecircle" : "circle")
       << (s == nfa.start ? ", style=bold" : "") << "];\n";
    for (const auto& e : nfa.adj[static_cast<size_t>(s)])
      os << "  q" << s << " -> q" << e.to << " [label=\"" << letter_to_string(e.letter, names)
         << "\"];\n";
  }
  os << "}\n";
}

// ---------------------------------------------------------------------------
// Trace files

namespace {

std::string strip(const std::string& raw) {
  std::string s = raw;
  if (auto c = s.find("//"); c != std::string::npos) s.erase(c);
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

TraceFile parse_trace(const std::string& text, const std::string& filename) {
  TraceFile t;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  bool in_header = true;
  std::vector<std::pair<std::string, std::vector<std::string>>> pending_methods;
  auto fail = [&](const std::string& msg) {
    throw std::invalid_argument(filename + ":" + std::to_string(lineno) + ": " + msg);
  };
  std::vector<std::string> body_lines;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = strip(raw);
    if (line.empty()) continue;
    if (in_header) {
      LetterScanner sc{line};
      if (sc.eat_word("vars")) {
        t.sig.vars.push_back(sc.ident());
        while (sc.eat(",")) t.sig.vars.push_back(sc.ident());
        sc.expect(";");
        continue;
      }
      if (sc.eat_word("funs")) {
        do {
          std::string name = sc.ident();
          sc.expect("/");
          t.sig.funs.emplace_back(name, sc.number());
        } while (sc.eat(","));
        sc.expect(";");
        continue;
      }
      if (sc.eat_word("ghosts")) {
        t.ghosts.push_back(sc.ident());
        while (sc.eat(",")) t.ghosts.push_back(sc.ident());
        sc.expect(";");
        continue;
      }
      if (sc.eat_word("methods")) {
        do {
          std::string name = sc.ident();
          sc.expect("(");
          std::vector<std::string> outs;
          if (sc.eat_word("out")) {
            outs.push_back(sc.ident());
            while (sc.eat(",")) outs.push_back(sc.ident());
          }
          sc.expect(")");
          pending_methods.emplace_back(name, std::move(outs));
        } while (sc.eat(","));
        sc.expect(";");
        continue;
      }
      in_header = false;
    }
    body_lines.push_back(line);
  }
  if (t.sig.vars.empty()) fail("trace declares no variables");
  try {
    t.sig.validate();
  } catch (const std::exception& e) {
    fail(e.what());
  }
  for (auto& [name, outs] : pending_methods) {
    MethodSig m{name, {}};
    for (const std::string& o : outs) {
      int v = t.sig.var_index(o);
      if (v < 0) fail("method " + name + " returns undeclared variable " + o);
      m.out.push_back(v);
    }
    t.methods.push_back(std::move(m));
  }
  VarNames names = t.names();
  for (const std::string& line : body_lines) {
    try {
      t.letters.push_back(parse_letter(line, names, t.methods));
    } catch (const std::exception& e) {
      throw std::invalid_argument(filename + ": " + e.what());
    }
  }
  return t;
}

std::string trace_to_string(const TraceFile& t) {
  std::string out = "vars ";
  for (size_t i = 0; i < t.sig.vars.size(); ++i) {
    if (i) out += ", ";
    out += t.sig.vars[i];
  }
  out += ";\n";
  if (!t.sig.funs.empty()) {
    out += "funs ";
    for (size_t i = 0; i < t.sig.funs.size(); ++i) {
      if (i) out += ", ";
      out += t.sig.funs[i].first + "/" + std::to_string(t.sig.funs[i].second);
    }
    out += ";\n";
  }
  if (!t.ghosts.empty()) {
    out += "ghosts ";
    for (size_t i = 0; i < t.ghosts.size(); ++i) {
      if (i) out += ", ";
      out += t.ghosts[i];
    }
    out += ";\n";
  }
  if (!t.methods.empty()) {
    out += "methods ";
    VarNames names = t.names();
    for (size_t i = 0; i < t.methods.size(); ++i) {
      if (i) out += ", ";
      out += t.methods[i].name + "(out";
      for (size_t j = 0; j < t.methods[i].out.size(); ++j)
        out += (j ? ", " : " ") + names.name(t.methods[i].out[j]);
      out += ")";
    }
    out += ";\n";
  }
  VarNames names = t.names();
  for (const auto& l : t.letters) out += letter_to_string(l, names, t.methods) + "\n";
  return out;
}

}  // namespace uncover
