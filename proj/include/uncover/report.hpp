#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "uncover/verifier.hpp"

namespace uncover {

using Json = nlohmann::ordered_json;

// Naming context for serializing executions: program variables, ghost
// names, and method signatures.
struct ReportContext {
  const Signature* sig = nullptr;
  std::vector<std::string> ghosts;
  std::vector<MethodSig> methods;

  VarNames names() const { return VarNames{sig, ghosts}; }
};

Json execution_json(const Execution& rho, const ReportContext& ctx);
Json stats_json(const SearchStats& stats);
Json verdict_json(const Verdict& v, const ReportContext& ctx);

// Full trace-file text (headers plus letters) for --witness-out.
std::string execution_trace_file(const Execution& rho, const ReportContext& ctx);

}  // namespace uncover
