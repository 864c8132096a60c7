#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace uncover {

// An algebraic first-order signature: program variables (whose initial
// values act as the constants of the term language) plus function symbols
// with positive arities.
struct Signature {
  std::vector<std::string> vars;
  std::vector<std::pair<std::string, int>> funs;

  int num_vars() const { return static_cast<int>(vars.size()); }
  int num_funs() const { return static_cast<int>(funs.size()); }

  int var_index(std::string_view name) const;
  int fun_index(std::string_view name) const;
  int arity(int fn) const { return funs[static_cast<size_t>(fn)].second; }
  const std::string& fun_name(int fn) const { return funs[static_cast<size_t>(fn)].first; }

  // Throws std::invalid_argument on duplicate names, empty variable list,
  // or non-positive arities.
  void validate() const;
};

// Variable indexing used throughout: program variables occupy [0, |V|),
// ghost variables (when present) occupy [|V|, |V|+k). This table owns the
// display names for both ranges.
struct VarNames {
  const Signature* sig = nullptr;
  std::vector<std::string> ghosts;

  int total() const { return sig->num_vars() + static_cast<int>(ghosts.size()); }
  bool is_ghost(int v) const { return v >= sig->num_vars(); }
  const std::string& name(int v) const {
    return v < sig->num_vars() ? sig->vars[static_cast<size_t>(v)]
                               : ghosts[static_cast<size_t>(v - sig->num_vars())];
  }
  int index_of(std::string_view name) const;
};

// Names synthesized for the k analysis ghosts: $g1, $g2, ...
std::vector<std::string> default_ghost_names(int k);

}  // namespace uncover
