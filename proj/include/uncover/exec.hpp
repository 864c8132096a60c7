#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uncover/terms.hpp"

namespace uncover {

struct Program;  // syntax.hpp

// One step of the execution alphabet. Variables are indices into the
// combined variable space (program variables first, then ghosts). A ghost
// assignment "g := x" is an AssignVar whose target lies in the ghost range.
struct ExecLetter {
  enum class Kind : uint8_t { AssignVar, AssignFn, AssumeEq, AssumeNeq, Call, Return };
  Kind kind = Kind::AssignVar;
  int32_t a = -1;             // target variable, or first assume operand
  int32_t b = -1;             // source variable, or second assume operand
  int32_t fn = -1;            // AssignFn
  int32_t method = -1;        // Call
  std::vector<int32_t> args;  // AssignFn arguments / Return targets

  static ExecLetter assign(int x, int y) { return {Kind::AssignVar, x, y, -1, -1, {}}; }
  static ExecLetter apply(int x, int fn, std::vector<int32_t> zs) {
    return {Kind::AssignFn, x, -1, fn, -1, std::move(zs)};
  }
  static ExecLetter assume_eq(int x, int y) { return {Kind::AssumeEq, x, y, -1, -1, {}}; }
  static ExecLetter assume_neq(int x, int y) { return {Kind::AssumeNeq, x, y, -1, -1, {}}; }
  static ExecLetter call(int m) { return {Kind::Call, -1, -1, -1, m, {}}; }
  static ExecLetter ret(std::vector<int32_t> targets) {
    return {Kind::Return, -1, -1, -1, -1, std::move(targets)};
  }

  bool operator==(const ExecLetter&) const = default;
  auto operator<=>(const ExecLetter&) const = default;
  bool is_ghost_assign(int num_program_vars) const {
    return kind == Kind::AssignVar && a >= num_program_vars;
  }
};

size_t hash_value(const ExecLetter& l);

using Execution = std::vector<ExecLetter>;

// A method interface as needed to interpret call/return letters.
struct MethodSig {
  std::string name;
  std::vector<int> out;  // variable indices returned, in order
};

std::string letter_to_string(const ExecLetter& l, const VarNames& names,
                             std::span<const MethodSig> methods = {});
ExecLetter parse_letter(const std::string& line, const VarNames& names,
                        std::span<const MethodSig> methods = {});

// Drops ghost-assignment letters (projection onto the program alphabet).
Execution project_program_letters(const Execution& rho, int num_program_vars);

// Incremental interpreter for Comp, alpha and beta. The arena accumulates
// every term computed by any prefix, including dropped ones, so after
// feeding rho its contents are exactly Terms(rho).
class CompEval {
 public:
  CompEval(const Signature& sig, int num_ghosts = 0, std::span<const MethodSig> methods = {});

  void step(const ExecLetter& l);
  void run(const Execution& rho);

  // Term currently denoted by variable v; kNoTerm for an unassigned ghost.
  TermId value(int v) const { return env_[static_cast<size_t>(v)]; }
  int num_vars() const { return static_cast<int>(env_.size()); }
  int call_depth() const { return static_cast<int>(stack_.size()); }

  const TermArena& arena() const { return arena_; }
  // Interns a term without stepping; used by checks that look one letter
  // ahead (the result is a member of Terms of the extended prefix).
  TermId intern_apply(int fn, std::span<const TermId> args) { return arena_.apply(fn, args); }
  std::vector<TermId> term_set() const;  // all arena ids
  const std::vector<std::pair<TermId, TermId>>& alpha() const { return alpha_; }
  const std::vector<std::pair<TermId, TermId>>& beta() const { return beta_; }

 private:
  const Signature* sig_;
  std::vector<MethodSig> methods_;
  TermArena arena_;
  std::vector<TermId> env_;
  struct Frame {
    int method;
    std::vector<TermId> saved;
  };
  std::vector<Frame> stack_;
  std::vector<std::pair<TermId, TermId>> alpha_, beta_;
};

// Convenience wrappers over CompEval.
TermId comp(const Execution& rho, int v, const Signature& sig, int num_ghosts = 0,
            std::span<const MethodSig> methods = {});

// NFA over the execution alphabet; letters are stored on edges symbolically.
struct Nfa {
  struct Edge {
    ExecLetter letter;
    int to;
  };
  std::vector<std::vector<Edge>> adj;
  std::vector<char> accepting;
  int start = 0;

  int num_states() const { return static_cast<int>(adj.size()); }
};

enum class ExecMode { Complete, Partial };

// Accepts Exec(s) (Complete) or PExec(s) (Partial); linear in |s|.
// Throws std::invalid_argument for recursive or non-core programs.
Nfa build_exec_nfa(const Program& program, ExecMode mode);

bool nfa_accepts(const Nfa& nfa, const Execution& word);
// All accepted words of length <= maxlen, sorted; for bounded language
// comparisons in tests.
std::vector<Execution> nfa_language_upto(const Nfa& nfa, int maxlen);
void nfa_to_dot(const Nfa& nfa, const VarNames& names, std::ostream& os);

// Trace file: header lines declaring the vocabulary, then one letter per
// line. `//` starts a comment.
struct TraceFile {
  Signature sig;
  std::vector<std::string> ghosts;
  std::vector<MethodSig> methods;
  Execution letters;

  VarNames names() const { return VarNames{&sig, ghosts}; }
};

TraceFile parse_trace(const std::string& text, const std::string& filename = "<trace>");
std::string trace_to_string(const TraceFile& t);

}  // namespace uncover
