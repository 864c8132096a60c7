#include "uncover/syntax.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

namespace uncover {

Stmt Stmt::assign(int x, Operand src) {
  Stmt s;
  s.kind = Kind::Assign;
  s.lhs = x;
  s.rhs = src;
  return s;
}
Stmt Stmt::assign_fn(int x, int fn, std::vector<Operand> zs) {
  Stmt s;
  s.kind = Kind::AssignFn;
  s.lhs = x;
  s.fn = fn;
  s.args = std::move(zs);
  return s;
}
Stmt Stmt::assume(Cond c) {
  Stmt s;
  s.kind = Kind::Assume;
  s.cond = std::move(c);
  return s;
}
Stmt Stmt::seq(std::vector<Stmt> ss) {
  Stmt s;
  s.kind = Kind::Seq;
  s.kids = std::move(ss);
  return s;
}
Stmt Stmt::ite(Cond c, Stmt then_s, Stmt else_s) {
  Stmt s;
  s.kind = Kind::Ite;
  s.cond = std::move(c);
  s.kids.push_back(std::move(then_s));
  s.kids.push_back(std::move(else_s));
  return s;
}
Stmt Stmt::while_loop(Cond c, Stmt body) {
  Stmt s;
  s.kind = Kind::While;
  s.cond = std::move(c);
  s.kids.push_back(std::move(body));
  return s;
}
Stmt Stmt::call(std::vector<int> targets, int method) {
  Stmt s;
  s.kind = Kind::Call;
  s.targets = std::move(targets);
  s.method = method;
  return s;
}

namespace {

bool cond_is_core(const Cond& c) {
  return c.is_atom() && !c.lhs.is_const && !c.rhs.is_const;
}

bool stmt_is_core(const Stmt& s) {
  switch (s.kind) {
    case Stmt::Kind::Skip:
      return true;
    case Stmt::Kind::Assign:
      return !s.rhs.is_const;
    case Stmt::Kind::AssignFn:
      return std::none_of(s.args.begin(), s.args.end(), [](const Operand& o) { return o.is_const; });
    case Stmt::Kind::Assume:
    case Stmt::Kind::Ite:
    case Stmt::Kind::While:
      if (!cond_is_core(s.cond)) return false;
      [[fallthrough]];
    case Stmt::Kind::Seq:
      return std::all_of(s.kids.begin(), s.kids.end(), stmt_is_core);
    case Stmt::Kind::Call:
      return true;
  }
  return false;
}

}  // namespace

bool Program::is_core() const {
  if (!consts.empty() || !rels.empty()) return false;
  if (is_recursive())
    return std::all_of(methods.begin(), methods.end(),
                       [](const Method& m) { return stmt_is_core(m.body); });
  return stmt_is_core(body);
}

std::vector<MethodSig> Program::method_sigs() const {
  std::vector<MethodSig> out;
  out.reserve(methods.size());
  for (const Method& m : methods) out.push_back({m.name, m.out});
  return out;
}

ParseError::ParseError(const std::string& file, int line, int col, const std::string& msg)
    : std::runtime_error(file + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
      line(line),
      col(col) {}

// ---------------------------------------------------------------------------
// Lexer / parser

namespace {

const std::set<std::string> kKeywords = {"vars", "funs",  "rels", "consts", "program", "method",
                                         "out",  "post",  "if",   "else",   "while",   "skip",
                                         "assume", "call", "true", "false",  "return"};

struct Token {
  enum Type { Ident, Number, Sym, End } type = End;
  std::string text;
  int line = 0, col = 0;
};

std::vector<Token> lex(const std::string& text, const std::string& file) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (text[i + k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    i += n;
  };
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    int tl = line, tc = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
      size_t j = i;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) ||
                                 text[j] == '_' || text[j] == '$'))
        ++j;
      out.push_back({Token::Ident, text.substr(i, j - i), tl, tc});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      out.push_back({Token::Number, text.substr(i, j - i), tl, tc});
      advance(j - i);
      continue;
    }
    static const char* two[] = {":=", "!=", "||", "&&"};
    bool matched = false;
    for (const char* t : two)
      if (text.compare(i, 2, t) == 0) {
        out.push_back({Token::Sym, t, tl, tc});
        advance(2);
        matched = true;
        break;
      }
    if (matched) continue;
    if (std::string("=!(){};,<>/:").find(c) != std::string::npos) {
      out.push_back({Token::Sym, std::string(1, c), tl, tc});
      advance(1);
      continue;
    }
    throw ParseError(file, line, col, std::string("unexpected character '") + c + "'");
  }
  out.push_back({Token::End, "", line, col});
  return out;
}

class ProgramParser {
 public:
  ProgramParser(const std::string& text, std::string file)
      : file_(std::move(file)), toks_(lex(text, file_)) {}

  Program parse() {
    parse_decls();
    // Pre-register method names so calls can be resolved in one pass.
    for (size_t i = 0; i + 1 < toks_.size(); ++i)
      if (toks_[i].type == Token::Ident && toks_[i].text == "method" &&
          toks_[i + 1].type == Token::Ident)
        method_names_.push_back(toks_[i + 1].text);

    if (peek_is_ident("program")) {
      next();
      prog_.body = parse_block();
    } else if (peek_is_ident("method")) {
      while (peek_is_ident("method")) parse_method();
      for (size_t i = 0; i < prog_.methods.size(); ++i)
        if (prog_.methods[i].name == "main") prog_.main_method = static_cast<int>(i);
      if (prog_.main_method < 0) err("recursive program has no 'main' method");
    } else {
      err("expected 'program { ... }' or method definitions");
    }
    if (peek_is_ident("post")) {
      next();
      expect_sym(":");
      prog_.post = parse_formula();
      expect_sym(";");
    }
    if (cur().type != Token::End) err("unexpected trailing input");
    check_unique_names();
    prog_.sig.validate();
    return std::move(prog_);
  }

 private:
  std::string file_;
  std::vector<Token> toks_;
  size_t pos_ = 0;
  Program prog_;
  std::vector<std::string> method_names_;

  const Token& cur() const { return toks_[pos_]; }
  Token next() { return toks_[pos_++]; }
  [[noreturn]] void err(const std::string& msg) const {
    throw ParseError(file_, cur().line, cur().col, msg);
  }
  bool peek_sym(const std::string& s) const { return cur().type == Token::Sym && cur().text == s; }
  bool peek_is_ident(const std::string& s) const {
    return cur().type == Token::Ident && cur().text == s;
  }
  void expect_sym(const std::string& s) {
    if (!peek_sym(s)) err("expected '" + s + "'");
    next();
  }
  bool eat_sym(const std::string& s) {
    if (!peek_sym(s)) return false;
    next();
    return true;
  }
  std::string expect_name() {
    if (cur().type != Token::Ident) err("expected identifier");
    if (kKeywords.count(cur().text)) err("'" + cur().text + "' is a reserved word");
    return next().text;
  }
  std::string expect_fresh_name() {
    std::string n = expect_name();
    if (n[0] == '$')
      throw ParseError(file_, toks_[pos_ - 1].line, toks_[pos_ - 1].col,
                       "names starting with '$' are reserved");
    return n;
  }

  void check_unique_names() {
    std::set<std::string> seen;
    auto add = [&](const std::string& n) {
      if (!seen.insert(n).second) err("duplicate name '" + n + "'");
    };
    for (const auto& v : prog_.sig.vars) add(v);
    for (const auto& [n, _] : prog_.sig.funs) add(n);
    for (const auto& [n, _] : prog_.rels) add(n);
    for (const auto& c : prog_.consts) add(c);
    for (const auto& m : prog_.methods) add(m.name);
  }

  void parse_decls() {
    bool saw_vars = false;
    while (cur().type == Token::Ident) {
      if (cur().text == "vars") {
        next();
        do prog_.sig.vars.push_back(expect_fresh_name());
        while (eat_sym(","));
        expect_sym(";");
        saw_vars = true;
      } else if (cur().text == "funs") {
        next();
        do {
          std::string n = expect_fresh_name();
          expect_sym("/");
          if (cur().type != Token::Number) err("expected arity");
          prog_.sig.funs.emplace_back(n, std::stoi(next().text));
        } while (eat_sym(","));
        expect_sym(";");
      } else if (cur().text == "rels") {
        next();
        do {
          std::string n = expect_fresh_name();
          expect_sym("/");
          if (cur().type != Token::Number) err("expected arity");
          prog_.rels.emplace_back(n, std::stoi(next().text));
        } while (eat_sym(","));
        expect_sym(";");
      } else if (cur().text == "consts") {
        next();
        do prog_.consts.push_back(expect_fresh_name());
        while (eat_sym(","));
        expect_sym(";");
      } else {
        break;
      }
    }
    if (!saw_vars) err("expected a 'vars' declaration");
  }

  Operand parse_operand() {
    if (cur().type != Token::Ident) err("expected variable or constant");
    const Token& t = cur();
    int v = prog_.sig.var_index(t.text);
    if (v >= 0) {
      next();
      return Operand::var(v);
    }
    for (size_t i = 0; i < prog_.consts.size(); ++i)
      if (prog_.consts[i] == t.text) {
        next();
        return Operand::constant(static_cast<int>(i));
      }
    err("undeclared variable or constant '" + t.text + "'");
  }

  int parse_var() {
    Operand o = parse_operand();
    if (o.is_const) err("expected a variable, got a constant");
    return o.index;
  }

  // cond := or_cond; or := and ('||' and)*; and := unary ('&&' unary)*
  Cond parse_cond() { return parse_or(); }
  Cond parse_or() {
    Cond c = parse_and();
    while (peek_sym("||")) {
      next();
      c = Cond::disj(std::move(c), parse_and());
    }
    return c;
  }
  Cond parse_and() {
    Cond c = parse_unary();
    while (peek_sym("&&")) {
      next();
      c = Cond::conj(std::move(c), parse_unary());
    }
    return c;
  }
  Cond parse_unary() {
    if (eat_sym("!")) return Cond::negate(parse_unary());
    if (eat_sym("(")) {
      Cond c = parse_cond();
      expect_sym(")");
      return c;
    }
    if (cur().type == Token::Ident) {
      for (size_t i = 0; i < prog_.rels.size(); ++i)
        if (prog_.rels[i].first == cur().text) {
          next();
          expect_sym("(");
          std::vector<Operand> args;
          args.push_back(parse_operand());
          while (eat_sym(",")) args.push_back(parse_operand());
          expect_sym(")");
          if (static_cast<int>(args.size()) != prog_.rels[i].second)
            err("arity mismatch for relation " + prog_.rels[i].first);
          return Cond::rel_app(static_cast<int>(i), std::move(args));
        }
    }
    Operand a = parse_operand();
    if (eat_sym("=")) return Cond::eq(a, parse_operand());
    if (eat_sym("!=")) return Cond::neq(a, parse_operand());
    err("expected '=' or '!=' in condition");
  }

  // Postconditions: atoms over variables, true/false, ||, &&, !.
  Cond parse_formula() { return parse_formula_or(); }
  Cond parse_formula_or() {
    Cond c = parse_formula_and();
    while (peek_sym("||")) {
      next();
      c = Cond::disj(std::move(c), parse_formula_and());
    }
    return c;
  }
  Cond parse_formula_and() {
    Cond c = parse_formula_unary();
    while (peek_sym("&&")) {
      next();
      c = Cond::conj(std::move(c), parse_formula_unary());
    }
    return c;
  }
  Cond parse_formula_unary() {
    if (eat_sym("!")) return Cond::negate(parse_formula_unary());
    if (eat_sym("(")) {
      Cond c = parse_formula();
      expect_sym(")");
      return c;
    }
    if (peek_is_ident("true")) {
      next();
      return Cond::truth(true);
    }
    if (peek_is_ident("false")) {
      next();
      return Cond::truth(false);
    }
    int a = parse_var();
    if (eat_sym("=")) return Cond::eq(Operand::var(a), Operand::var(parse_var()));
    if (eat_sym("!=")) return Cond::neq(Operand::var(a), Operand::var(parse_var()));
    err("expected '=' or '!=' in postcondition");
  }

  Stmt parse_block() {
    expect_sym("{");
    std::vector<Stmt> ss;
    while (!peek_sym("}")) ss.push_back(parse_stmt());
    next();
    if (ss.empty()) return Stmt::skip();
    if (ss.size() == 1) return std::move(ss.front());
    return Stmt::seq(std::move(ss));
  }

  Stmt parse_block_or_stmt() {
    if (peek_sym("{")) return parse_block();
    return parse_stmt();
  }

  int resolve_method(const std::string& name) {
    for (size_t i = 0; i < method_names_.size(); ++i)
      if (method_names_[i] == name) return static_cast<int>(i);
    return -1;
  }

  Stmt parse_call(std::vector<int> targets) {
    // Targets already consumed; cursor at method name.
    if (cur().type != Token::Ident) err("expected method name");
    std::string name = cur().text;
    int m = resolve_method(name);
    if (m < 0) err("call of undefined method '" + name + "'");
    next();
    expect_sym("(");
    expect_sym(")");
    expect_sym(";");
    std::set<int> uniq(targets.begin(), targets.end());
    if (uniq.size() != targets.size()) err("call result variables must be distinct");
    return Stmt::call(std::move(targets), m);
  }

  Stmt parse_stmt() {
    if (peek_is_ident("skip")) {
      next();
      expect_sym(";");
      return Stmt::skip();
    }
    if (peek_is_ident("assume")) {
      next();
      expect_sym("(");
      Cond c = parse_cond();
      expect_sym(")");
      expect_sym(";");
      return Stmt::assume(std::move(c));
    }
    if (peek_is_ident("if")) {
      next();
      expect_sym("(");
      Cond c = parse_cond();
      expect_sym(")");
      Stmt then_s = parse_block_or_stmt();
      Stmt else_s = Stmt::skip();
      if (peek_is_ident("else")) {
        next();
        else_s = parse_block_or_stmt();
      }
      return Stmt::ite(std::move(c), std::move(then_s), std::move(else_s));
    }
    if (peek_is_ident("while")) {
      next();
      expect_sym("(");
      Cond c = parse_cond();
      expect_sym(")");
      Stmt body = parse_block_or_stmt();
      return Stmt::while_loop(std::move(c), std::move(body));
    }
    if (peek_sym("<")) {
      next();
      std::vector<int> targets;
      targets.push_back(parse_var());
      while (eat_sym(",")) targets.push_back(parse_var());
      expect_sym(">");
      expect_sym(":=");
      return parse_call(std::move(targets));
    }
    // Assignment or single-target call.
    int lhs = parse_var();
    expect_sym(":=");
    if (cur().type != Token::Ident) err("expected expression");
    std::string name = cur().text;
    // Method call: name followed by '(' ')'.
    if (resolve_method(name) >= 0 && toks_[pos_ + 1].type == Token::Sym &&
        toks_[pos_ + 1].text == "(" && toks_[pos_ + 2].type == Token::Sym &&
        toks_[pos_ + 2].text == ")") {
      return parse_call({lhs});
    }
    int fn = prog_.sig.fun_index(name);
    if (fn >= 0) {
      next();
      expect_sym("(");
      std::vector<Operand> args;
      args.push_back(parse_operand());
      while (eat_sym(",")) args.push_back(parse_operand());
      expect_sym(")");
      expect_sym(";");
      if (static_cast<int>(args.size()) != prog_.sig.arity(fn))
        err("arity mismatch for function " + name + ": expected " +
            std::to_string(prog_.sig.arity(fn)) + " arguments, got " + std::to_string(args.size()));
      return Stmt::assign_fn(lhs, fn, std::move(args));
    }
    Operand src = parse_operand();
    expect_sym(";");
    return Stmt::assign(lhs, src);
  }

  void parse_method() {
    next();  // 'method'
    std::string name = expect_fresh_name();
    for (const Method& m : prog_.methods)
      if (m.name == name) err("method '" + name + "' defined more than once");
    expect_sym("(");
    std::vector<int> out;
    if (peek_is_ident("out")) {
      next();
      out.push_back(parse_var());
      while (eat_sym(",")) out.push_back(parse_var());
    }
    expect_sym(")");
    std::set<int> uniq(out.begin(), out.end());
    if (uniq.size() != out.size()) err("output variables of method '" + name + "' must be distinct");
    Stmt body = parse_block();
    prog_.methods.push_back({name, std::move(out), std::move(body)});
  }
};

}  // namespace

Program parse_program(const std::string& text, const std::string& filename) {
  ProgramParser p(text, filename);
  Program prog = p.parse();
  // The pre-scan registers every method name; confirm the definitions match.
  if (prog.is_recursive()) {
    auto sigs = prog.method_sigs();
    std::set<std::string> names;
    for (const auto& m : sigs)
      if (!names.insert(m.name).second)
        throw ParseError(filename, 0, 0, "method '" + m.name + "' defined more than once");
  }
  return prog;
}

// ---------------------------------------------------------------------------
// Normalization

namespace {

// Negation-normal form over literals. Relation atoms stay opaque literals;
// `neg` marks a negated occurrence.
struct NnfCond {
  enum class Kind { Lit, Or, And, True, False } kind = Kind::True;
  Cond lit;  // Eq/Neq atom, or Rel (with `neg`)
  bool neg = false;
  std::vector<NnfCond> kids;

  bool is_lit() const { return kind == Kind::Lit; }
};

NnfCond nnf(const Cond& c, bool negate) {
  switch (c.kind) {
    case Cond::Kind::Eq:
    case Cond::Kind::Neq: {
      NnfCond out;
      out.kind = NnfCond::Kind::Lit;
      bool neq = (c.kind == Cond::Kind::Neq) != negate;
      out.lit = neq ? Cond::neq(c.lhs, c.rhs) : Cond::eq(c.lhs, c.rhs);
      return out;
    }
    case Cond::Kind::Rel: {
      NnfCond out;
      out.kind = NnfCond::Kind::Lit;
      out.lit = c;
      out.neg = negate;
      return out;
    }
    case Cond::Kind::Not:
      return nnf(c.kids[0], !negate);
    case Cond::Kind::Or:
    case Cond::Kind::And: {
      bool is_or = (c.kind == Cond::Kind::Or) != negate;
      NnfCond out;
      out.kind = is_or ? NnfCond::Kind::Or : NnfCond::Kind::And;
      out.kids.push_back(nnf(c.kids[0], negate));
      out.kids.push_back(nnf(c.kids[1], negate));
      return out;
    }
    case Cond::Kind::True:
    case Cond::Kind::False: {
      NnfCond out;
      bool truth = (c.kind == Cond::Kind::True) != negate;
      out.kind = truth ? NnfCond::Kind::True : NnfCond::Kind::False;
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

class Normalizer {
 public:
  explicit Normalizer(const Program& p) : in_(p) {}

  Program run() {
    out_.sig = in_.sig;
    out_.post = in_.post;
    // Constants become fresh read-only variables.
    const_var_.resize(in_.consts.size());
    for (size_t i = 0; i < in_.consts.size(); ++i)
      const_var_[i] = add_var("$c_" + in_.consts[i]);
    // One fresh result variable and one function per relation.
    rel_fun_.resize(in_.rels.size(), -1);
    rel_var_.resize(in_.rels.size(), -1);

    if (in_.is_recursive()) {
      out_.main_method = in_.main_method;
      for (const Method& m : in_.methods) out_.methods.push_back({m.name, m.out, rewrite(m.body)});
    } else {
      out_.body = rewrite(in_.body);
    }
    if (need_flag_pair_) {
      // Establish the two flag sentinels as distinct once, up front.
      Stmt guard = Stmt::assume(
          Cond::neq(Operand::var(flag_true_), Operand::var(flag_false_)));
      Stmt& main_body = out_.is_recursive()
                            ? out_.methods[static_cast<size_t>(out_.main_method)].body
                            : out_.body;
      main_body = Stmt::seq({std::move(guard), std::move(main_body)});
    }
    out_.sig.validate();
    return std::move(out_);
  }

 private:
  const Program& in_;
  Program out_;
  std::vector<int> const_var_;
  std::vector<int> rel_fun_, rel_var_;
  bool need_flag_pair_ = false;
  int flag_true_ = -1, flag_false_ = -1;
  int flag_counter_ = 0;

  int add_var(const std::string& name) {
    out_.sig.vars.push_back(name);
    return out_.sig.num_vars() - 1;
  }

  Operand fix(Operand o) const {
    if (!o.is_const) return o;
    return Operand::var(const_var_[static_cast<size_t>(o.index)]);
  }

  Cond fix_atom(const Cond& c) {
    if (c.kind == Cond::Kind::Rel) {
      std::vector<Operand> args;
      for (const Operand& o : c.args) args.push_back(fix(o));
      return Cond::rel_app(c.rel, std::move(args));
    }
    Cond out = c;
    out.lhs = fix(c.lhs);
    out.rhs = fix(c.rhs);
    return out;
  }

  int ensure_flag_pair() {
    if (!need_flag_pair_) {
      need_flag_pair_ = true;
      flag_true_ = add_var("$flagT");
      flag_false_ = add_var("$flagF");
    }
    return flag_true_;
  }

  // A positive/negative test of a literal (Eq/Neq var atom after fix, or a
  // relation literal) as a statement context: relation tests need the
  // b := f_R(args) assignment right before them.
  struct LitTest {
    Cond atom;          // core Eq/Neq atom to branch on
    std::vector<Stmt> pre;  // evaluation code emitted before the test
  };

  LitTest lower_literal(const NnfCond& lit) {
    if (lit.lit.kind != Cond::Kind::Rel) return {lit.lit, {}};
    int r = lit.lit.rel;
    if (rel_fun_[static_cast<size_t>(r)] < 0) {
      out_.sig.funs.emplace_back(in_.rels[static_cast<size_t>(r)].first,
                                 in_.rels[static_cast<size_t>(r)].second);
      rel_fun_[static_cast<size_t>(r)] = out_.sig.num_funs() - 1;
      rel_var_[static_cast<size_t>(r)] = add_var("$b_" + in_.rels[static_cast<size_t>(r)].first);
      if (top_var_ < 0) top_var_ = add_var("$true");
    }
    int b = rel_var_[static_cast<size_t>(r)];
    std::vector<Operand> args = lit.lit.args;  // already fixed
    Stmt assign = Stmt::assign_fn(b, rel_fun_[static_cast<size_t>(r)], std::move(args));
    Cond atom = lit.neg ? Cond::neq(Operand::var(b), Operand::var(top_var_))
                        : Cond::eq(Operand::var(b), Operand::var(top_var_));
    return {atom, {std::move(assign)}};
  }

  int top_var_ = -1;

  Stmt with_pre(std::vector<Stmt> pre, Stmt s) {
    if (pre.empty()) return s;
    pre.push_back(std::move(s));
    return Stmt::seq(std::move(pre));
  }

  // if-compile: decision tree over literals; duplicates branches as needed.
  Stmt compile_ite(const NnfCond& c, const Stmt& then_s, const Stmt& else_s) {
    switch (c.kind) {
      case NnfCond::Kind::True:
        return then_s;
      case NnfCond::Kind::False:
        return else_s;
      case NnfCond::Kind::Lit: {
        LitTest t = lower_literal(c);
        return with_pre(std::move(t.pre), Stmt::ite(t.atom, then_s, else_s));
      }
      case NnfCond::Kind::Or:
        return compile_ite(c.kids[0], then_s, compile_ite(c.kids[1], then_s, else_s));
      case NnfCond::Kind::And:
        return compile_ite(c.kids[0], compile_ite(c.kids[1], then_s, else_s), else_s);
    }
    throw std::logic_error("unreachable");
  }

  // assume-compile: paths certifying the condition continue; the rest hit an
  // unsatisfiable assume.
  Stmt compile_assume(const NnfCond& c) {
    switch (c.kind) {
      case NnfCond::Kind::True:
        return Stmt::skip();
      case NnfCond::Kind::False:
        return dead_end();
      case NnfCond::Kind::Lit: {
        LitTest t = lower_literal(c);
        return with_pre(std::move(t.pre), Stmt::assume(t.atom));
      }
      case NnfCond::Kind::Or:
        return compile_ite(c, Stmt::skip(), dead_end());
      case NnfCond::Kind::And:
        return Stmt::seq({compile_assume(c.kids[0]), compile_assume(c.kids[1])});
    }
    throw std::logic_error("unreachable");
  }

  Stmt dead_end() {
    return Stmt::assume(Cond::neq(Operand::var(0), Operand::var(0)));
  }

  // while-compile. Disjunctions with a literal disjunct unswitch into nested
  // loops with the same execution language; other shapes fall back to a flag
  // variable re-evaluated at the end of each iteration.
  Stmt compile_while(const NnfCond& c, const Stmt& body) {
    switch (c.kind) {
      case NnfCond::Kind::False:
        return Stmt::skip();
      case NnfCond::Kind::True: {
        // Loop that never exits; the exit assume is unsatisfiable.
        Cond guard = Cond::eq(Operand::var(0), Operand::var(0));
        return Stmt::while_loop(guard, body);
      }
      case NnfCond::Kind::Lit: {
        LitTest t = lower_literal(c);
        if (t.pre.empty()) return Stmt::while_loop(t.atom, body);
        // Re-evaluate the relation before every test.
        Stmt loop = Stmt::while_loop(t.atom, Stmt::seq({body, t.pre[0]}));
        return Stmt::seq({t.pre[0], std::move(loop)});
      }
      case NnfCond::Kind::Or: {
        const NnfCond* lit = &c.kids[0];
        const NnfCond* rest = &c.kids[1];
        if (!lit->is_lit() && rest->is_lit()) std::swap(lit, rest);
        if (lit->is_lit() && lit->lit.kind != Cond::Kind::Rel) {
          // while (l or rest) s  ==  while(l) s; while(rest) { s; while(l) s }
          Stmt first = Stmt::while_loop(lit->lit, body);
          Stmt inner_body = Stmt::seq({body, first});
          return Stmt::seq({first, compile_while(*rest, inner_body)});
        }
        return flag_while(c, body);
      }
      case NnfCond::Kind::And:
        return flag_while(c, body);
    }
    throw std::logic_error("unreachable");
  }

  Stmt flag_while(const NnfCond& c, const Stmt& body) {
    int t = ensure_flag_pair();
    int w = add_var("$w" + std::to_string(++flag_counter_));
    Stmt set = compile_ite(c, Stmt::assign(w, Operand::var(t)),
                           Stmt::assign(w, Operand::var(flag_false_)));
    Cond guard = Cond::eq(Operand::var(w), Operand::var(t));
    Stmt loop = Stmt::while_loop(guard, Stmt::seq({body, set}));
    return Stmt::seq({set, std::move(loop)});
  }

  Stmt rewrite(const Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::Skip:
        return Stmt::skip();
      case Stmt::Kind::Assign:
        return Stmt::assign(s.lhs, fix(s.rhs));
      case Stmt::Kind::AssignFn: {
        std::vector<Operand> args;
        for (const Operand& o : s.args) args.push_back(fix(o));
        return Stmt::assign_fn(s.lhs, s.fn, std::move(args));
      }
      case Stmt::Kind::Seq: {
        std::vector<Stmt> kids;
        for (const Stmt& k : s.kids) kids.push_back(rewrite(k));
        return Stmt::seq(std::move(kids));
      }
      case Stmt::Kind::Call:
        return s;
      case Stmt::Kind::Assume: {
        NnfCond c = nnf(fix_cond(s.cond), false);
        if (c.is_lit() && c.lit.kind != Cond::Kind::Rel) return Stmt::assume(c.lit);
        return compile_assume(c);
      }
      case Stmt::Kind::Ite: {
        NnfCond c = nnf(fix_cond(s.cond), false);
        Stmt then_s = rewrite(s.kids[0]);
        Stmt else_s = rewrite(s.kids[1]);
        if (c.is_lit() && c.lit.kind != Cond::Kind::Rel)
          return Stmt::ite(c.lit, std::move(then_s), std::move(else_s));
        return compile_ite(c, then_s, else_s);
      }
      case Stmt::Kind::While: {
        NnfCond c = nnf(fix_cond(s.cond), false);
        Stmt body = rewrite(s.kids[0]);
        if (c.is_lit() && c.lit.kind != Cond::Kind::Rel) return Stmt::while_loop(c.lit, body);
        return compile_while(c, body);
      }
    }
    throw std::logic_error("unreachable");
  }

  Cond fix_cond(const Cond& c) {
    switch (c.kind) {
      case Cond::Kind::Eq:
      case Cond::Kind::Neq:
      case Cond::Kind::Rel:
        return fix_atom(c);
      case Cond::Kind::True:
      case Cond::Kind::False:
        return c;
      default: {
        Cond out = c;
        for (Cond& k : out.kids) k = fix_cond(k);
        return out;
      }
    }
  }
};

}  // namespace

Program normalize(const Program& p) {
  if (p.is_core()) return p;
  Normalizer n(p);
  return n.run();
}

// ---------------------------------------------------------------------------
// Postcondition lowering

namespace {

// Literal over variables; atom stored with x <= y.
struct PostLit {
  int x, y;
  bool neq;
  auto operator<=>(const PostLit&) const = default;
};

using Clause = std::vector<PostLit>;

void dnf_of(const Cond& c, bool negate, std::vector<Clause>& out) {
  switch (c.kind) {
    case Cond::Kind::Eq:
    case Cond::Kind::Neq: {
      if (c.lhs.is_const || c.rhs.is_const)
        throw std::invalid_argument("postcondition atoms must be over variables");
      bool neq = (c.kind == Cond::Kind::Neq) != negate;
      int x = c.lhs.index, y = c.rhs.index;
      if (x > y) std::swap(x, y);
      if (x == y) {
        // x = x is true, x != x is false.
        if (!neq)
          out.push_back({});
        // unsatisfiable literal: contribute no clause
        return;
      }
      out.push_back({PostLit{x, y, neq}});
      return;
    }
    case Cond::Kind::Rel:
      throw std::invalid_argument("postconditions cannot use relations");
    case Cond::Kind::Not:
      dnf_of(c.kids[0], !negate, out);
      return;
    case Cond::Kind::Or:
    case Cond::Kind::And: {
      bool is_or = (c.kind == Cond::Kind::Or) != negate;
      std::vector<Clause> a, b;
      dnf_of(c.kids[0], negate, a);
      dnf_of(c.kids[1], negate, b);
      if (is_or) {
        out.insert(out.end(), a.begin(), a.end());
        out.insert(out.end(), b.begin(), b.end());
      } else {
        for (const Clause& ca : a)
          for (const Clause& cb : b) {
            Clause c2 = ca;
            c2.insert(c2.end(), cb.begin(), cb.end());
            out.push_back(std::move(c2));
          }
      }
      return;
    }
    case Cond::Kind::True:
      if (!negate) out.push_back({});
      return;
    case Cond::Kind::False:
      if (negate) out.push_back({});
      return;
  }
}

std::vector<Clause> tidy(std::vector<Clause> clauses) {
  std::vector<Clause> out;
  for (Clause& c : clauses) {
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    bool contradictory = false;
    for (size_t i = 0; i + 1 < c.size() && !contradictory; ++i)
      if (c[i].x == c[i + 1].x && c[i].y == c[i + 1].y && c[i].neq != c[i + 1].neq)
        contradictory = true;
    if (!contradictory) out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Stmt clause_to_assumes(const Clause& c) {
  std::vector<Stmt> ss;
  for (const PostLit& l : c) {
    Cond atom = l.neq ? Cond::neq(Operand::var(l.x), Operand::var(l.y))
                      : Cond::eq(Operand::var(l.x), Operand::var(l.y));
    ss.push_back(Stmt::assume(atom));
  }
  if (ss.empty()) return Stmt::skip();
  if (ss.size() == 1) return std::move(ss.front());
  return Stmt::seq(std::move(ss));
}

// Shannon expansion over the DNF: each model follows exactly one branch, so
// a satisfying model always reaches a feasible completion.
Stmt shannon(std::vector<Clause> clauses) {
  clauses = tidy(std::move(clauses));
  if (clauses.empty()) return Stmt::assume(Cond::neq(Operand::var(0), Operand::var(0)));
  for (const Clause& c : clauses)
    if (c.empty()) return Stmt::skip();
  if (clauses.size() == 1) return clause_to_assumes(clauses.front());

  PostLit pick = clauses.front().front();
  auto assign = [&](bool eq_holds) {
    std::vector<Clause> rest;
    for (const Clause& c : clauses) {
      Clause c2;
      bool dropped = false;
      for (const PostLit& l : c) {
        if (l.x == pick.x && l.y == pick.y) {
          bool lit_true = l.neq ? !eq_holds : eq_holds;
          if (!lit_true) {
            dropped = true;
            break;
          }
        } else {
          c2.push_back(l);
        }
      }
      if (!dropped) rest.push_back(std::move(c2));
    }
    return rest;
  };
  Cond atom = Cond::eq(Operand::var(pick.x), Operand::var(pick.y));
  return Stmt::ite(atom, shannon(assign(true)), shannon(assign(false)));
}

}  // namespace

Program lower_postcondition(const Program& p, const Postcondition& phi) {
  if (!p.is_core()) throw std::invalid_argument("lower_postcondition requires a core-form program");
  std::vector<Clause> neg_dnf;
  dnf_of(phi, /*negate=*/true, neg_dnf);
  Stmt branch = shannon(std::move(neg_dnf));

  Program out = p;
  out.post = Cond::truth(false);
  Stmt& main_body = out.is_recursive() ? out.methods[static_cast<size_t>(out.main_method)].body
                                       : out.body;
  main_body = Stmt::seq({std::move(main_body), std::move(branch)});
  return out;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string operand_str(const Operand& o, const Program& p) {
  return o.is_const ? p.consts[static_cast<size_t>(o.index)] : p.sig.vars[static_cast<size_t>(o.index)];
}

std::string cond_str(const Cond& c, const Program& p) {
  switch (c.kind) {
    case Cond::Kind::Eq:
      return operand_str(c.lhs, p) + " = " + operand_str(c.rhs, p);
    case Cond::Kind::Neq:
      return operand_str(c.lhs, p) + " != " + operand_str(c.rhs, p);
    case Cond::Kind::Rel: {
      std::string s = p.rels[static_cast<size_t>(c.rel)].first + "(";
      for (size_t i = 0; i < c.args.size(); ++i) s += (i ? ", " : "") + operand_str(c.args[i], p);
      return s + ")";
    }
    case Cond::Kind::Not:
      return "!(" + cond_str(c.kids[0], p) + ")";
    case Cond::Kind::Or:
      return "(" + cond_str(c.kids[0], p) + " || " + cond_str(c.kids[1], p) + ")";
    case Cond::Kind::And:
      return "(" + cond_str(c.kids[0], p) + " && " + cond_str(c.kids[1], p) + ")";
    case Cond::Kind::True:
      return "true";
    case Cond::Kind::False:
      return "false";
  }
  return {};
}

void stmt_str(const Stmt& s, const Program& p, std::string indent, std::string& out) {
  switch (s.kind) {
    case Stmt::Kind::Skip:
      out += indent + "skip;\n";
      return;
    case Stmt::Kind::Assign:
      out += indent + p.sig.vars[static_cast<size_t>(s.lhs)] + " := " + operand_str(s.rhs, p) + ";\n";
      return;
    case Stmt::Kind::AssignFn: {
      out += indent + p.sig.vars[static_cast<size_t>(s.lhs)] + " := " +
             p.sig.fun_name(s.fn) + "(";
      for (size_t i = 0; i < s.args.size(); ++i) out += (i ? ", " : "") + operand_str(s.args[i], p);
      out += ");\n";
      return;
    }
    case Stmt::Kind::Assume:
      out += indent + "assume(" + cond_str(s.cond, p) + ");\n";
      return;
    case Stmt::Kind::Seq:
      for (const Stmt& k : s.kids) stmt_str(k, p, indent, out);
      return;
    case Stmt::Kind::Ite:
      out += indent + "if (" + cond_str(s.cond, p) + ") {\n";
      stmt_str(s.kids[0], p, indent + "  ", out);
      out += indent + "} else {\n";
      stmt_str(s.kids[1], p, indent + "  ", out);
      out += indent + "}\n";
      return;
    case Stmt::Kind::While:
      out += indent + "while (" + cond_str(s.cond, p) + ") {\n";
      stmt_str(s.kids[0], p, indent + "  ", out);
      out += indent + "}\n";
      return;
    case Stmt::Kind::Call: {
      out += indent;
      if (s.targets.size() == 1) {
        out += p.sig.vars[static_cast<size_t>(s.targets[0])];
      } else {
        out += "<";
        for (size_t i = 0; i < s.targets.size(); ++i)
          out += (i ? ", " : "") + p.sig.vars[static_cast<size_t>(s.targets[i])];
        out += ">";
      }
      out += " := " + p.methods[static_cast<size_t>(s.method)].name + "();\n";
      return;
    }
  }
}

}  // namespace

std::string cond_to_string(const Cond& c, const Program& p) { return cond_str(c, p); }

std::string to_source(const Program& p) {
  std::string out = "vars ";
  for (size_t i = 0; i < p.sig.vars.size(); ++i) out += (i ? ", " : "") + p.sig.vars[i];
  out += ";\n";
  if (!p.sig.funs.empty()) {
    out += "funs ";
    for (size_t i = 0; i < p.sig.funs.size(); ++i)
      out += (i ? ", " : "") + p.sig.funs[i].first + "/" + std::to_string(p.sig.funs[i].second);
    out += ";\n";
  }
  if (!p.rels.empty()) {
    out += "rels ";
    for (size_t i = 0; i < p.rels.size(); ++i)
      out += (i ? ", " : "") + p.rels[i].first + "/" + std::to_string(p.rels[i].second);
    out += ";\n";
  }
  if (!p.consts.empty()) {
    out += "consts ";
    for (size_t i = 0; i < p.consts.size(); ++i) out += (i ? ", " : "") + p.consts[i];
    out += ";\n";
  }
  if (p.is_recursive()) {
    for (const Method& m : p.methods) {
      out += "method " + m.name + "(";
      if (!m.out.empty()) {
        out += "out ";
        for (size_t i = 0; i < m.out.size(); ++i)
          out += (i ? ", " : "") + p.sig.vars[static_cast<size_t>(m.out[i])];
      }
      out += ") {\n";
      stmt_str(m.body, p, "  ", out);
      out += "}\n";
    }
  } else {
    out += "program {\n";
    stmt_str(p.body, p, "  ", out);
    out += "}\n";
  }
  if (p.post) out += "post: " + cond_str(*p.post, p) + ";\n";
  return out;
}

}  // namespace uncover
