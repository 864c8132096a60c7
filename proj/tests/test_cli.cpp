#include <doctest.h>

#include <array>
#include <cstdio>
#include <regex>
#include <string>

#include "uncover/exec.hpp"

namespace {

struct CmdResult {
  int exit_code;
  std::string out;
};

CmdResult run_cli(const std::string& args) {
  std::string cmd = std::string(UNCOVER_BIN) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf{};
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

std::string programs(const std::string& name) { return std::string(PROGRAMS_DIR) + "/" + name; }

std::string strip_time(std::string s) {
  return std::regex_replace(s, std::regex("\"time_ms\": [0-9.e+-]+"), "\"time_ms\": X");
}

}  // namespace

TEST_CASE("check classifies the three example programs") {
  CHECK(run_cli("check " + programs("p1.up") + " --coherence").exit_code == 0);
  CHECK(run_cli("check " + programs("p3.up") + " --coherence").exit_code == 0);
  CmdResult p2 = run_cli("check " + programs("p2.up") + " --coherence");
  CHECK(p2.exit_code == 1);
  CHECK(p2.out.find("memoizing") != std::string::npos);
}

TEST_CASE("check decides ghost budgets") {
  CHECK(run_cli("check " + programs("p2.up") + " --k 0").exit_code == 1);
  CHECK(run_cli("check " + programs("p2.up") + " --k 1").exit_code == 0);
  CmdResult scan = run_cli("check " + programs("p2.up") + " --k-max 2 --json");
  CHECK(scan.exit_code == 0);
  CHECK(scan.out.find("\"k\": 1") != std::string::npos);
}

TEST_CASE("verify handles the instrumented programs end to end") {
  CHECK(run_cli("verify " + programs("p3_instrumented.up")).exit_code == 0);
  CHECK(run_cli("verify " + programs("p2_instrumented.up")).exit_code == 4);
  CHECK(run_cli("verify " + programs("p2_instrumented.up") + " --k 1").exit_code == 0);
  CHECK(run_cli("verify " + programs("tree_search.up")).exit_code == 1);
}

TEST_CASE("trace subcommand runs oracles and automata together") {
  CmdResult rho1 = run_cli("trace " + programs("rho1.trace") + " --feasible --json");
  CHECK(rho1.exit_code == 0);
  CHECK(rho1.out.find("\"oracle_feasible\": true") != std::string::npos);
  CHECK(rho1.out.find("\"cross_check\": \"ok\"") != std::string::npos);

  CmdResult pi = run_cli("trace " + programs("pi_prime.trace") + " --coherent --json");
  CHECK(pi.exit_code == 1);
  CHECK(pi.out.find("\"coherence_kind\": \"memoizing\"") != std::string::npos);

  CmdResult sigma = run_cli("trace " + programs("sigma.trace") + " --coherent");
  CHECK(sigma.exit_code == 1);
  CHECK(sigma.out.find("early-assume") != std::string::npos);

  CHECK(run_cli("trace " + programs("infeasible.trace") + " --feasible").exit_code == 1);
  CHECK(run_cli("trace " + programs("rho1.trace") + " --run-scc").exit_code == 0);
}

TEST_CASE("parse errors exit with the usage code and location") {
  CmdResult r = run_cli("check " + programs("does_not_exist.up"));
  CHECK(r.exit_code == 2);
  std::string bad = programs("bad.up");
  {
    FILE* f = fopen(bad.c_str(), "w");
    fputs("vars x;\nprogram { y := x; }\n", f);
    fclose(f);
  }
  CmdResult r2 = run_cli("check " + bad);
  CHECK(r2.exit_code == 2);
  std::remove(bad.c_str());
}

TEST_CASE("budget violations exit with their own code") {
  CHECK(run_cli("verify " + programs("p3_instrumented.up") + " --max-states 3").exit_code == 3);
}

TEST_CASE("json reports are byte-identical across runs, modulo time") {
  for (std::string cmd : {"check " + programs("p2.up") + " --coherence --json",
                          "verify " + programs("p3_instrumented.up") + " --json",
                          "trace " + programs("rho1.trace") + " --feasible --json"}) {
    CmdResult a = run_cli(cmd);
    CmdResult b = run_cli(cmd);
    CHECK(strip_time(a.out) == strip_time(b.out));
    CHECK(a.exit_code == b.exit_code);
  }
}

TEST_CASE("witness files round-trip through the trace parser") {
  std::string out = programs("p2_witness.trace");
  CmdResult r = run_cli("check " + programs("p2.up") + " --coherence --witness-out " + out);
  REQUIRE(r.exit_code == 1);
  FILE* f = fopen(out.c_str(), "r");
  REQUIRE(f != nullptr);
  std::string text;
  std::array<char, 4096> buf{};
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), f)) > 0) text.append(buf.data(), n);
  fclose(f);
  uncover::TraceFile t = uncover::parse_trace(text, out);
  CHECK(!t.letters.empty());
  // The emitted witness is itself judged non-coherent by the trace command.
  CHECK(run_cli("trace " + out + " --coherent").exit_code == 1);
  std::remove(out.c_str());
}

TEST_CASE("dot dumps, env budgets and thread flags work") {
  std::string dot = programs("p2.dot");
  CmdResult r = run_cli("check " + programs("p2.up") + " --coherence --dot " + dot);
  CHECK(r.exit_code == 1);
  FILE* f = fopen(dot.c_str(), "r");
  REQUIRE(f != nullptr);
  std::string text;
  std::array<char, 4096> buf{};
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), f)) > 0) text.append(buf.data(), n);
  fclose(f);
  CHECK(text.find("digraph") != std::string::npos);
  CHECK(text.find("assume(x != z)") != std::string::npos);
  std::remove(dot.c_str());

  // Environment budget mirrors --max-states.
  std::string cmd = std::string("UNCOVER_MAX_STATES=3 ") + UNCOVER_BIN + " verify " +
                    programs("p3_instrumented.up") + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fread(buf.data(), 1, buf.size(), pipe) > 0) {
  }
  CHECK(WEXITSTATUS(pclose(pipe)) == 3);

  CHECK(run_cli("verify " + programs("p3_instrumented.up") + " --threads 4").exit_code == 0);
}

TEST_CASE("traces with ghosts and calls run through the trace command") {
  std::string ghost = programs("ghost_demo.trace");
  {
    FILE* f = fopen(ghost.c_str(), "w");
    fputs("vars x, y, z;\nfuns f/1;\nghosts g;\n"
          "z := f(x)\ng := z\nz := f(z)\nassume(x = y)\n",
          f);
    fclose(f);
  }
  CmdResult r = run_cli("trace " + ghost + " --coherent --json");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("\"oracle_coherent\": true") != std::string::npos);
  std::remove(ghost.c_str());

  std::string rec = programs("rec_demo.trace");
  {
    FILE* f = fopen(rec.c_str(), "w");
    fputs("vars x, y, z, w;\nfuns n/1;\nmethods m(out y);\n"
          "z := n(x)\ncall m\ny := n(x)\n<w> := return\nassume(w != z)\n",
          f);
    fclose(f);
  }
  CmdResult rr = run_cli("trace " + rec + " --feasible --json");
  CHECK(rr.exit_code == 1);
  CHECK(rr.out.find("\"automaton_feasible\": false") != std::string::npos);
  CHECK(rr.out.find("\"cross_check\": \"ok\"") != std::string::npos);
  std::remove(rec.c_str());
}

TEST_CASE("run-scc never trips the cross-check on the corpus traces") {
  for (const char* name : {"rho1.trace", "pi_prime.trace", "sigma.trace", "infeasible.trace"}) {
    CmdResult r = run_cli("trace " + programs(name) + " --run-scc");
    CAPTURE(name);
    CHECK(r.exit_code != 5);
    CHECK(r.out.find("cross-check: ok") != std::string::npos);
  }
}

TEST_CASE("recursive programs route through the VPA pipeline only") {
  CHECK(run_cli("check " + programs("tree_search.up") + " --coherence").exit_code == 2);
  CHECK(run_cli("verify " + programs("tree_search.up") + " --k 1").exit_code == 2);
}
