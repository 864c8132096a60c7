#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "uncover/exec.hpp"
#include "uncover/signature.hpp"

namespace uncover {

// Operand in the surface language: a variable or a declared constant.
// Normalization eliminates constants, so core-form programs use variables
// only.
struct Operand {
  bool is_const = false;
  int index = -1;

  static Operand var(int v) { return {false, v}; }
  static Operand constant(int c) { return {true, c}; }
  bool operator==(const Operand&) const = default;
};

// Conditions. Core form restricts these to Eq/Neq atoms over variables.
struct Cond {
  enum class Kind { Eq, Neq, Rel, Or, And, Not, True, False };
  Kind kind = Kind::True;
  Operand lhs, rhs;            // Eq / Neq
  int rel = -1;                // Rel
  std::vector<Operand> args;   // Rel
  std::vector<Cond> kids;      // Or / And / Not

  static Cond eq(Operand a, Operand b) { return {Kind::Eq, a, b, -1, {}, {}}; }
  static Cond neq(Operand a, Operand b) { return {Kind::Neq, a, b, -1, {}, {}}; }
  static Cond rel_app(int r, std::vector<Operand> zs) {
    return {Kind::Rel, {}, {}, r, std::move(zs), {}};
  }
  static Cond negate(Cond c) { return {Kind::Not, {}, {}, -1, {}, {std::move(c)}}; }
  static Cond disj(Cond a, Cond b) { return {Kind::Or, {}, {}, -1, {}, {std::move(a), std::move(b)}}; }
  static Cond conj(Cond a, Cond b) { return {Kind::And, {}, {}, -1, {}, {std::move(a), std::move(b)}}; }
  static Cond truth(bool b) { return {b ? Kind::True : Kind::False, {}, {}, -1, {}, {}}; }

  bool is_atom() const { return kind == Kind::Eq || kind == Kind::Neq; }
};

struct Stmt {
  enum class Kind { Skip, Assign, AssignFn, Assume, Seq, Ite, While, Call };
  Kind kind = Kind::Skip;
  int lhs = -1;                // Assign / AssignFn target variable
  Operand rhs;                 // Assign source
  int fn = -1;                 // AssignFn
  std::vector<Operand> args;   // AssignFn
  Cond cond;                   // Assume / Ite / While
  std::vector<Stmt> kids;      // Seq: n, Ite: 2, While: 1
  int method = -1;             // Call
  std::vector<int> targets;    // Call result variables

  static Stmt skip() { return {}; }
  static Stmt assign(int x, Operand src);
  static Stmt assign_fn(int x, int fn, std::vector<Operand> zs);
  static Stmt assume(Cond c);
  static Stmt seq(std::vector<Stmt> ss);
  static Stmt ite(Cond c, Stmt then_s, Stmt else_s);
  static Stmt while_loop(Cond c, Stmt body);
  static Stmt call(std::vector<int> targets, int method);
};

struct Method {
  std::string name;
  std::vector<int> out;
  Stmt body;
};

using Postcondition = Cond;

struct Program {
  Signature sig;
  std::vector<std::string> consts;                 // surface only
  std::vector<std::pair<std::string, int>> rels;   // surface only
  Stmt body;                                       // non-recursive main body
  std::vector<Method> methods;                     // recursive mode when nonempty
  int main_method = -1;
  std::optional<Postcondition> post;

  bool is_recursive() const { return !methods.empty(); }
  bool is_core() const;
  std::vector<MethodSig> method_sigs() const;
  const Stmt& main_body() const {
    return is_recursive() ? methods[static_cast<size_t>(main_method)].body : body;
  }
};

struct ParseError : std::runtime_error {
  int line, col;
  ParseError(const std::string& file, int line, int col, const std::string& msg);
};

// Parses the surface language.
//
//   vars x, y, z;
//   funs n/1, key/2;
//   rels R/1;            // optional, removed by normalize
//   consts nil;          // optional, removed by normalize
//   program {
//     assume(x != z);
//     y := n(x);
//     while (y != z) { x := n(x); y := n(y); }
//   }
//   post: x = y || !(y = z);
//
// Recursive programs replace the program block with method definitions:
//
//   method main(out b) { ... b := main(); ... <x, y> := m(); ... }
Program parse_program(const std::string& text, const std::string& filename = "<input>");

// Rewrites relations, constants and compound conditionals away; the result
// uses only atomic variable conditionals. Idempotent on core-form input.
Program normalize(const Program& p);

// Appends instrumentation so that the result (with postcondition bottom)
// has a feasible complete execution iff `p` violates `phi`. Requires core
// form.
Program lower_postcondition(const Program& p, const Postcondition& phi);

std::string to_source(const Program& p);
std::string cond_to_string(const Cond& c, const Program& p);

}  // namespace uncover
