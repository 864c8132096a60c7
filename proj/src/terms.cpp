#include "uncover/terms.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace uncover {

int Signature::var_index(std::string_view name) const {
  for (size_t i = 0; i < vars.size(); ++i)
    if (vars[i] == name) return static_cast<int>(i);
  return -1;
}

int Signature::fun_index(std::string_view name) const {
  for (size_t i = 0; i < funs.size(); ++i)
    if (funs[i].first == name) return static_cast<int>(i);
  return -1;
}

void Signature::validate() const {
  if (vars.empty()) throw std::invalid_argument("signature declares no variables");
  std::vector<std::string> all = vars;
  for (const auto& [name, arity] : funs) {
    if (arity <= 0)
      throw std::invalid_argument("function " + name + " has non-positive arity");
    all.push_back(name);
  }
  std::sort(all.begin(), all.end());
  auto dup = std::adjacent_find(all.begin(), all.end());
  if (dup != all.end()) throw std::invalid_argument("duplicate name: " + *dup);
}

int VarNames::index_of(std::string_view n) const {
  int i = sig->var_index(n);
  if (i >= 0) return i;
  for (size_t g = 0; g < ghosts.size(); ++g)
    if (ghosts[g] == n) return sig->num_vars() + static_cast<int>(g);
  return -1;
}

std::vector<std::string> default_ghost_names(int k) {
  std::vector<std::string> out;
  out.reserve(static_cast<size_t>(k));
  for (int i = 1; i <= k; ++i) out.push_back("$g" + std::to_string(i));
  return out;
}

size_t TermArena::KeyHash::operator()(const std::vector<int32_t>& k) const {
  size_t h = 0x9e3779b97f4a7c15ull;
  for (int32_t v : k) h = (h ^ static_cast<size_t>(static_cast<uint32_t>(v))) * 0x100000001b3ull;
  return h;
}

TermArena::TermArena(int num_init_vars, std::vector<int> arities)
    : num_init_vars_(num_init_vars), arities_(std::move(arities)) {}

TermArena::TermArena(const Signature& sig) : num_init_vars_(sig.num_vars()) {
  arities_.reserve(sig.funs.size());
  for (const auto& [_, a] : sig.funs) arities_.push_back(a);
}

TermId TermArena::init_value(int v) {
  if (v < 0 || v >= num_init_vars_) throw std::invalid_argument("init_value: variable out of range");
  std::vector<int32_t> key{~v};
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  TermId id = static_cast<TermId>(nodes_.size());
  nodes_.push_back({~v, 0, 0});
  index_.emplace(std::move(key), id);
  return id;
}

TermId TermArena::apply(int fn, std::span<const TermId> args) {
  if (fn < 0 || fn >= num_funs()) throw std::invalid_argument("apply: unknown function");
  if (static_cast<int>(args.size()) != arities_[static_cast<size_t>(fn)])
    throw std::invalid_argument("apply: arity mismatch");
  std::vector<int32_t> key;
  key.reserve(args.size() + 1);
  key.push_back(fn);
  for (TermId a : args) {
    if (a < 0 || a >= size()) throw std::invalid_argument("apply: child not interned");
    key.push_back(a);
  }
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  TermId id = static_cast<TermId>(nodes_.size());
  int32_t begin = static_cast<int32_t>(child_pool_.size());
  child_pool_.insert(child_pool_.end(), args.begin(), args.end());
  nodes_.push_back({fn, begin, static_cast<int32_t>(child_pool_.size())});
  index_.emplace(std::move(key), id);
  return id;
}

std::span<const TermId> TermArena::children(TermId t) const {
  const Node& n = node(t);
  return {child_pool_.data() + n.child_begin, static_cast<size_t>(n.child_end - n.child_begin)};
}

std::string TermArena::to_string(TermId t, const VarNames& names) const {
  if (is_init(t)) return names.name(init_var(t)) + "^";
  std::string out = names.sig->fun_name(fn(t)) + "(";
  bool first = true;
  for (TermId c : children(t)) {
    if (!first) out += ",";
    out += to_string(c, names);
    first = false;
  }
  return out + ")";
}

int Congruence::root(int i) const {
  while (parent_[static_cast<size_t>(i)] != i) {
    parent_[static_cast<size_t>(i)] = parent_[static_cast<size_t>(parent_[static_cast<size_t>(i)])];
    i = parent_[static_cast<size_t>(i)];
  }
  return i;
}

TermId Congruence::find(TermId t) const {
  auto it = dense_.find(t);
  if (it == dense_.end()) throw std::invalid_argument("find: term outside the closed set");
  return terms_[static_cast<size_t>(root(it->second))];
}

std::vector<std::vector<TermId>> Congruence::classes() const {
  std::unordered_map<TermId, std::vector<TermId>> byrep;
  for (TermId t : terms_) byrep[find(t)].push_back(t);
  std::vector<std::vector<TermId>> out;
  out.reserve(byrep.size());
  for (auto& [_, members] : byrep) out.push_back(std::move(members));
  std::sort(out.begin(), out.end());
  return out;
}

Congruence congruence_closure(const TermArena& arena, std::span<const TermId> term_set,
                              std::span<const std::pair<TermId, TermId>> eqs) {
  Congruence cc;
  cc.terms_.assign(term_set.begin(), term_set.end());
  std::sort(cc.terms_.begin(), cc.terms_.end());
  cc.terms_.erase(std::unique(cc.terms_.begin(), cc.terms_.end()), cc.terms_.end());
  int n = static_cast<int>(cc.terms_.size());
  for (int i = 0; i < n; ++i) cc.dense_.emplace(cc.terms_[static_cast<size_t>(i)], i);
  for (TermId t : cc.terms_)
    for (TermId c : arena.children(t))
      if (!cc.dense_.count(c)) throw std::invalid_argument("term set is not subterm closed");

  cc.parent_.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) cc.parent_[static_cast<size_t>(i)] = i;

  // Per-class list of parents (terms of the set that use a member as child).
  std::vector<std::vector<int>> uses(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    TermId t = cc.terms_[static_cast<size_t>(i)];
    for (TermId c : arena.children(t)) uses[static_cast<size_t>(cc.dense_.at(c))].push_back(i);
  }

  auto sig_key = [&](int i) {
    TermId t = cc.terms_[static_cast<size_t>(i)];
    std::vector<int32_t> key{arena.fn(t)};
    for (TermId c : arena.children(t)) key.push_back(cc.root(cc.dense_.at(c)));
    return key;
  };

  std::unordered_map<std::vector<int32_t>, int, TermArena::KeyHash> table;
  std::deque<std::pair<int, int>> queue;
  for (int i = 0; i < n; ++i) {
    if (arena.is_init(cc.terms_[static_cast<size_t>(i)])) continue;
    auto [it, fresh] = table.emplace(sig_key(i), i);
    if (!fresh) queue.emplace_back(i, it->second);
  }
  for (const auto& [a, b] : eqs) {
    if (!cc.dense_.count(a) || !cc.dense_.count(b))
      throw std::invalid_argument("equation references a term outside the set");
    queue.emplace_back(cc.dense_.at(a), cc.dense_.at(b));
  }

  while (!queue.empty()) {
    auto [a, b] = queue.front();
    queue.pop_front();
    int ra = cc.root(a), rb = cc.root(b);
    if (ra == rb) continue;
    if (uses[static_cast<size_t>(ra)].size() > uses[static_cast<size_t>(rb)].size()) std::swap(ra, rb);
    cc.parent_[static_cast<size_t>(ra)] = rb;
    auto moved = std::move(uses[static_cast<size_t>(ra)]);
    uses[static_cast<size_t>(ra)].clear();
    for (int p : moved) {
      auto key = sig_key(p);
      auto [it, fresh] = table.emplace(key, p);
      if (!fresh && cc.root(it->second) != cc.root(p)) queue.emplace_back(p, it->second);
      uses[static_cast<size_t>(rb)].push_back(p);
    }
  }

  // Normalize representatives to the smallest term id in each class.
  std::vector<int> roots(static_cast<size_t>(n));
  std::unordered_map<int, int> min_of_root;
  for (int i = 0; i < n; ++i) {
    roots[static_cast<size_t>(i)] = cc.root(i);
    auto it = min_of_root.find(roots[static_cast<size_t>(i)]);
    if (it == min_of_root.end() || i < it->second) min_of_root[roots[static_cast<size_t>(i)]] = i;
  }
  for (int i = 0; i < n; ++i)
    cc.parent_[static_cast<size_t>(i)] = min_of_root.at(roots[static_cast<size_t>(i)]);
  return cc;
}

}  // namespace uncover
