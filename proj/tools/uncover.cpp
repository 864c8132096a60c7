// Command-line driver: coherence / k-coherence checking, verification, and
// trace utilities for uninterpreted programs.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <algorithm>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "uncover/coherence.hpp"
#include "uncover/ghost.hpp"
#include "uncover/oracle.hpp"
#include "uncover/recvpa.hpp"
#include "uncover/report.hpp"
#include "uncover/scc.hpp"
#include "uncover/verifier.hpp"

namespace {

constexpr int kExitHolds = 0;
constexpr int kExitFails = 1;
constexpr int kExitUsage = 2;
constexpr int kExitBudget = 3;
constexpr int kExitNotCoherent = 4;
constexpr int kExitCrossCheck = 5;

using uncover::Json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Output {
  bool json = false;
  Json report;
  std::vector<std::string> lines;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void kv(const std::string& key, const Json& value, const std::string& human) {
    report[key] = value;
    lines.push_back(human);
  }
  void emit() {
    double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (json) {
      report["time_ms"] = ms;
      std::cout << report.dump(2) << "\n";
    } else {
      for (const std::string& l : lines) std::cout << l << "\n";
    }
  }
};

void print_execution(Output& out, const std::string& key, const uncover::Execution& rho,
                     const uncover::ReportContext& ctx) {
  out.report[key] = uncover::execution_json(rho, ctx);
  out.lines.push_back(key + ":");
  uncover::VarNames names = ctx.names();
  for (const auto& l : rho)
    out.lines.push_back("  " + uncover::letter_to_string(l, names, ctx.methods));
}

void write_witness_file(const std::string& path, const uncover::Execution& rho,
                        const uncover::ReportContext& ctx) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << uncover::execution_trace_file(rho, ctx);
}

long env_max_states(long fallback) {
  if (const char* v = std::getenv("UNCOVER_MAX_STATES")) {
    char* end = nullptr;
    long parsed = std::strtol(v, &end, 10);
    if (end && *end == '\0' && parsed > 0) return parsed;
  }
  return fallback;
}

int run_check(const std::string& file, bool coherence, std::optional<int> k,
              std::optional<int> k_max, const uncover::VerifyOptions& opts, bool json,
              const std::string& witness_out, const std::string& dot_out) {
  Output out;
  out.json = json;
  out.report["schema"] = 1;
  out.report["command"] = "check";
  out.report["file"] = file;

  uncover::Program prog = uncover::parse_program(read_file(file), file);
  uncover::Program core = uncover::normalize(prog);
  uncover::ReportContext ctx{&core.sig, {}, core.method_sigs()};

  if (!dot_out.empty() && !core.is_recursive()) {
    std::ofstream f(dot_out);
    uncover::VarNames names = ctx.names();
    uncover::nfa_to_dot(uncover::build_exec_nfa(core, uncover::ExecMode::Partial), names, f);
  }

  if (core.is_recursive()) {
    out.kv("error", "coherence checking of recursive programs is trace-level only",
           "error: coherence checking of recursive programs is trace-level only");
    out.emit();
    return kExitUsage;
  }

  if (k || k_max) {
    int lo = k ? *k : 0;
    int hi = k_max ? std::max(*k_max, lo) : lo;
    for (int budget = lo; budget <= hi; ++budget) {
      uncover::KCoherenceDecision dec = uncover::is_k_coherent(core, budget, opts);
      out.report["k"] = budget;
      if (dec.k_coherent) {
        out.kv("k_coherent", true, "k-coherent: true (k=" + std::to_string(budget) + ")");
        out.report["stats"] = uncover::stats_json(dec.stats);
        out.emit();
        return kExitHolds;
      }
      if (budget == hi) {
        out.kv("k_coherent", false, "k-coherent: false (k=" + std::to_string(budget) + ")");
        print_execution(out, "witness", dec.witness, ctx);
        if (!witness_out.empty()) write_witness_file(witness_out, dec.witness, ctx);
        out.report["stats"] = uncover::stats_json(dec.stats);
        out.emit();
        return kExitFails;
      }
    }
  }

  (void)coherence;  // default mode
  uncover::CoherenceDecision dec = uncover::program_is_coherent(core, opts.max_states);
  if (dec.coherent) {
    out.kv("coherent", true, "coherent: true");
    out.emit();
    return kExitHolds;
  }
  out.kv("coherent", false, "coherent: false");
  out.kv("kind", uncover::violation_name(dec.kind),
         std::string("kind: ") + uncover::violation_name(dec.kind));
  print_execution(out, "witness", dec.witness, ctx);
  if (!witness_out.empty()) write_witness_file(witness_out, dec.witness, ctx);
  out.emit();
  return kExitFails;
}

int run_verify(const std::string& file, std::optional<int> k, const uncover::VerifyOptions& opts,
               bool json, const std::string& witness_out) {
  Output out;
  out.json = json;
  out.report["schema"] = 1;
  out.report["command"] = "verify";
  out.report["file"] = file;

  uncover::Program prog = uncover::parse_program(read_file(file), file);
  uncover::Program core = uncover::normalize(prog);
  uncover::ReportContext ctx{&core.sig,
                             k ? uncover::default_ghost_names(*k) : std::vector<std::string>{},
                             core.method_sigs()};

  uncover::Verdict verdict;
  if (core.is_recursive()) {
    if (k) {
      out.kv("error", "ghost budgets apply to non-recursive programs",
             "error: ghost budgets apply to non-recursive programs");
      out.emit();
      return kExitUsage;
    }
    verdict = uncover::verify_recursive(prog, std::nullopt, opts);
  } else if (k) {
    verdict = uncover::verify_k(prog, std::nullopt, *k, opts);
  } else {
    verdict = uncover::verify(prog, std::nullopt, opts);
  }

  Json vj = uncover::verdict_json(verdict, ctx);
  for (auto& [key, value] : vj.items()) out.report[key] = value;
  out.lines.push_back(std::string("verdict: ") + uncover::verdict_name(verdict.kind));
  if (!verdict.detail.empty()) out.lines.push_back("detail: " + verdict.detail);
  if (verdict.kind != uncover::Verdict::Kind::Verified) {
    uncover::VarNames names = ctx.names();
    out.lines.push_back("witness:");
    for (const auto& l : verdict.witness)
      out.lines.push_back("  " + uncover::letter_to_string(l, names, ctx.methods));
    if (!verdict.ghost_witness.empty()) {
      out.lines.push_back("ghost witness:");
      for (const auto& l : verdict.ghost_witness)
        out.lines.push_back("  " + uncover::letter_to_string(l, names, ctx.methods));
    }
    if (!witness_out.empty())
      write_witness_file(witness_out,
                         verdict.ghost_witness.empty() ? verdict.witness : verdict.ghost_witness,
                         ctx);
  }
  out.emit();
  switch (verdict.kind) {
    case uncover::Verdict::Kind::Verified:
      return kExitHolds;
    case uncover::Verdict::Kind::Violated:
      return kExitFails;
    default:
      return kExitNotCoherent;
  }
}

int run_trace(const std::string& file, const std::string& mode, bool json) {
  Output out;
  out.json = json;
  out.report["schema"] = 1;
  out.report["command"] = "trace";
  out.report["file"] = file;
  out.report["mode"] = mode;

  uncover::TraceFile trace = uncover::parse_trace(read_file(file), file);
  int num_ghosts = static_cast<int>(trace.ghosts.size());
  bool recursive = false;
  for (const auto& l : trace.letters)
    if (l.kind == uncover::ExecLetter::Kind::Call || l.kind == uncover::ExecLetter::Kind::Return)
      recursive = true;

  bool oracle_feas = uncover::oracle_feasible(trace.letters, trace.sig, num_ghosts, trace.methods);
  uncover::CoherenceReport coh =
      uncover::oracle_coherent(trace.letters, trace.sig, num_ghosts, trace.methods);

  bool automaton_feas;
  std::string final_dump;
  uncover::VarNames names = trace.names();
  if (recursive && num_ghosts > 0) {
    out.kv("error", "ghost letters are not supported in call/return traces",
           "error: ghost letters are not supported in call/return traces");
    out.emit();
    return kExitUsage;
  }
  if (recursive) {
    uncover::RfeasRun run = uncover::rfeas_run(trace.letters, trace.sig, trace.methods);
    automaton_feas = run.accepted();
    final_dump = run.final_state.dump(names);
  } else {
    uncover::SccRunReport run = uncover::scc_run(trace.letters, trace.sig, num_ghosts);
    automaton_feas = run.accepted();
    final_dump = run.final_state.dump(names);
  }

  out.kv("oracle_feasible", oracle_feas, std::string("oracle feasible: ") + (oracle_feas ? "true" : "false"));
  out.kv("automaton_feasible", automaton_feas,
         std::string("automaton feasible: ") + (automaton_feas ? "true" : "false"));
  out.kv("oracle_coherent", coh.coherent,
         std::string("oracle coherent: ") + (coh.coherent ? "true" : "false"));
  if (!coh.coherent) {
    out.kv("coherence_kind", uncover::violation_name(coh.kind),
           std::string("coherence kind: ") + uncover::violation_name(coh.kind));
    out.kv("coherence_position", coh.position,
           "coherence position: " + std::to_string(coh.position));
  }

  bool automaton_coherent = coh.coherent;
  if (!recursive) {
    automaton_coherent =
        uncover::coherent_language_member(trace.letters, trace.sig, num_ghosts);
    out.kv("automaton_coherent", automaton_coherent,
           std::string("automaton coherent: ") + (automaton_coherent ? "true" : "false"));
  }

  if (mode == "run-scc" || mode == "feasible") {
    out.kv("final_state", final_dump, "final state: " + final_dump);
  }

  // Cross-checks: the coherence automaton must agree with the oracle
  // everywhere; the feasibility automaton must agree on coherent traces.
  bool mismatch = false;
  if (!recursive && automaton_coherent != coh.coherent) mismatch = true;
  if (coh.coherent && automaton_feas != oracle_feas) mismatch = true;
  out.kv("cross_check", mismatch ? "mismatch" : "ok",
         std::string("cross-check: ") + (mismatch ? "MISMATCH" : "ok"));
  out.emit();
  if (mismatch) return kExitCrossCheck;
  if (mode == "coherent") return coh.coherent ? kExitHolds : kExitFails;
  return oracle_feas ? kExitHolds : kExitFails;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uncover: verification of uninterpreted programs"};
  app.require_subcommand(1);

  std::string file, witness_out, dot_out;
  bool json = false;
  long max_states = env_max_states(1'000'000);
  long max_subset_states = 100'000;
  int threads = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_flag("--json", json, "machine-readable report");
    cmd->add_option("--max-states", max_states, "product search state budget");
    cmd->add_option("--max-subset-states", max_subset_states, "subset construction budget");
    cmd->add_option("--threads", threads, "frontier-parallel search threads");
  };

  auto* check = app.add_subcommand("check", "decide coherence / k-coherence of a program");
  check->add_option("file", file, "program file (.up)")->required();
  bool coherence_flag = false;
  std::optional<int> k_opt, k_max_opt;
  check->add_flag("--coherence", coherence_flag, "decide coherence (default)");
  check->add_option("--k", k_opt, "decide k-coherence for this ghost budget");
  check->add_option("--k-max", k_max_opt, "scan ghost budgets 0..N for the first that works");
  check->add_option("--witness-out", witness_out, "write the witness trace to a file");
  check->add_option("--dot", dot_out, "dump the execution NFA in graphviz format");
  add_common(check);

  auto* verify = app.add_subcommand("verify", "verify the program against its postcondition");
  verify->add_option("file", file, "program file (.up)")->required();
  std::optional<int> verify_k_opt;
  verify->add_option("--k", verify_k_opt, "verify under a ghost budget (k-coherent programs)");
  verify->add_option("--witness-out", witness_out, "write the counterexample trace to a file");
  add_common(verify);

  auto* trace = app.add_subcommand("trace", "run the oracles and automata on a trace file");
  trace->add_option("file", file, "trace file (.trace)")->required();
  bool feasible_flag = false, coherent_flag = false, runscc_flag = false;
  trace->add_flag("--feasible", feasible_flag, "decide feasibility (default)");
  trace->add_flag("--coherent", coherent_flag, "decide coherence");
  trace->add_flag("--run-scc", runscc_flag, "run the streaming congruence closure");
  add_common(trace);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  uncover::VerifyOptions opts;
  opts.max_states = max_states;
  opts.max_subset_states = max_subset_states;
  opts.threads = threads;

  try {
    if (check->parsed())
      return run_check(file, coherence_flag, k_opt, k_max_opt, opts, json, witness_out, dot_out);
    if (verify->parsed()) return run_verify(file, verify_k_opt, opts, json, witness_out);
    if (trace->parsed()) {
      std::string mode = coherent_flag ? "coherent" : runscc_flag ? "run-scc" : "feasible";
      return run_trace(file, mode, json);
    }
  } catch (const uncover::BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return kExitBudget;
  } catch (const uncover::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
