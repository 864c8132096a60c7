#include "uncover/report.hpp"

namespace uncover {

Json execution_json(const Execution& rho, const ReportContext& ctx) {
  Json out = Json::array();
  VarNames names = ctx.names();
  for (const ExecLetter& l : rho) out.push_back(letter_to_string(l, names, ctx.methods));
  return out;
}

Json stats_json(const SearchStats& stats) {
  Json out;
  out["states_explored"] = stats.states_explored;
  out["subset_states"] = stats.subset_states;
  return out;
}

Json verdict_json(const Verdict& v, const ReportContext& ctx) {
  Json out;
  out["verdict"] = verdict_name(v.kind);
  switch (v.kind) {
    case Verdict::Kind::Verified:
      break;
    case Verdict::Kind::Violated:
      out["witness"] = execution_json(v.witness, ctx);
      if (!v.ghost_witness.empty()) out["ghost_witness"] = execution_json(v.ghost_witness, ctx);
      break;
    case Verdict::Kind::NotCoherent:
      out["witness"] = execution_json(v.witness, ctx);
      out["kind"] = violation_name(v.coherence_kind);
      out["lowering_broke_coherence"] = v.lowering_broke_coherence;
      break;
    case Verdict::Kind::NotKCoherent:
      out["witness"] = execution_json(v.witness, ctx);
      out["k"] = v.k;
      break;
  }
  if (!v.detail.empty()) out["detail"] = v.detail;
  out["stats"] = stats_json(v.stats);
  return out;
}

std::string execution_trace_file(const Execution& rho, const ReportContext& ctx) {
  TraceFile t;
  t.sig = *ctx.sig;
  bool uses_ghosts = false;
  for (const ExecLetter& l : rho)
    if (l.is_ghost_assign(ctx.sig->num_vars())) uses_ghosts = true;
  if (uses_ghosts) t.ghosts = ctx.ghosts;
  bool recursive = false;
  for (const ExecLetter& l : rho)
    if (l.kind == ExecLetter::Kind::Call || l.kind == ExecLetter::Kind::Return) recursive = true;
  if (recursive) t.methods = ctx.methods;
  t.letters = rho;
  return trace_to_string(t);
}

}  // namespace uncover
