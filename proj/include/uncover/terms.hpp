#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "uncover/signature.hpp"

namespace uncover {

using TermId = int32_t;
inline constexpr TermId kNoTerm = -1;

// Hash-consed arena of ground terms. Leaves are the initial values of
// variables (x-hat); internal nodes apply a function symbol to previously
// interned children, so the arena is subterm closed by construction.
class TermArena {
 public:
  TermArena(int num_init_vars, std::vector<int> arities);
  explicit TermArena(const Signature& sig);

  // Interns the initial-value constant of variable v.
  TermId init_value(int v);
  // Interns f(args); returns the existing id on a structural duplicate.
  // Throws std::invalid_argument on an arity mismatch.
  TermId apply(int fn, std::span<const TermId> args);

  int size() const { return static_cast<int>(nodes_.size()); }
  bool is_init(TermId t) const { return node(t).sym < 0; }
  int init_var(TermId t) const { return ~node(t).sym; }
  int fn(TermId t) const { return node(t).sym; }
  int arity(int fn) const { return arities_[static_cast<size_t>(fn)]; }
  int num_funs() const { return static_cast<int>(arities_.size()); }
  std::span<const TermId> children(TermId t) const;

  std::string to_string(TermId t, const VarNames& names) const;

 public:
  struct KeyHash {
    size_t operator()(const std::vector<int32_t>& k) const;
  };

 private:
  struct Node {
    int32_t sym;  // >= 0: function index; < 0: ~var for an init constant
    int32_t child_begin;
    int32_t child_end;
  };

  const Node& node(TermId t) const { return nodes_[static_cast<size_t>(t)]; }

  int num_init_vars_;
  std::vector<int> arities_;
  std::vector<Node> nodes_;
  std::vector<TermId> child_pool_;
  std::unordered_map<std::vector<int32_t>, TermId, KeyHash> index_;
};

// Result of closing a pair set under congruence on a finite subterm-closed
// term set. Representatives are members of the input set.
class Congruence {
 public:
  TermId find(TermId t) const;
  bool same(TermId a, TermId b) const { return find(a) == find(b); }
  bool contains(TermId t) const { return dense_.count(t) != 0; }
  const std::vector<TermId>& term_set() const { return terms_; }
  std::vector<std::vector<TermId>> classes() const;

 private:
  friend Congruence congruence_closure(const TermArena&, std::span<const TermId>,
                                       std::span<const std::pair<TermId, TermId>>);
  std::vector<TermId> terms_;                    // sorted input set
  std::unordered_map<TermId, int> dense_;        // term -> dense index
  mutable std::vector<int> parent_;              // union-find over dense indices
  int root(int i) const;
};

// Smallest congruence on `term_set` containing `eqs`. `term_set` must be
// subterm closed within the arena and `eqs` must stay inside it; violations
// throw std::invalid_argument.
Congruence congruence_closure(const TermArena& arena, std::span<const TermId> term_set,
                              std::span<const std::pair<TermId, TermId>> eqs);

}  // namespace uncover
