#pragma once

// Shared fixtures: the three list-walking example programs, the recursive
// tree-search program, and the hand-written traces the suites reason about.

#include <string>

#include "uncover/exec.hpp"
#include "uncover/syntax.hpp"

namespace fixtures {

inline const char* kP1 = R"(
vars T, F, b, x, y, d, k, r;
funs key/1, n/1;
program {
  assume(T != F);
  b := F;
  while (x != y) {
    d := key(x);
    if (d = k) {
      b := T;
      r := x;
    }
    x := n(x);
  }
}
)";

inline const char* kP2 = R"(
vars x, y, z;
funs n/1;
program {
  assume(x != z);
  y := n(x);
  assume(y != z);
  y := n(y);
  while (y != z) {
    x := n(x);
    y := n(y);
  }
}
)";

inline const char* kP3 = R"(
vars x, y, z, g;
funs n/1;
program {
  assume(x != z);
  y := n(x);
  g := y;
  assume(y != z);
  y := n(y);
  while (y != z) {
    x := n(x);
    g := y;
    y := n(y);
  }
}
)";

// P3 plus code computing n(n(x)) into t, so the intended postcondition can
// be stated over variables.
inline const char* kP3Instrumented = R"(
vars x, y, z, g, t;
funs n/1;
program {
  assume(x != z);
  y := n(x);
  g := y;
  assume(y != z);
  y := n(y);
  while (y != z) {
    x := n(x);
    g := y;
    y := n(y);
  }
  t := n(x);
  t := n(t);
}
post: z = t;
)";

// Recursive search over left/right pointers for a node with key k.
inline const char* kTreeSearch = R"(
vars x, k, b, d, y, T, F;
funs key/1, left/1, right/1;
method main(out b) {
  assume(T != F);
  d := key(x);
  if (d = k) {
    b := T;
  } else {
    y := x;
    x := left(x);
    b := main();
    if (b = F) {
      x := right(x);
      b := main();
    }
  }
}
)";

inline const char* kRho1Trace = R"(
vars T, F, b, x, y, d, k, r;
funs key/1, n/1;
assume(T != F)
b := F
assume(x != y)
d := key(x)
assume(d != k)
x := n(x)
assume(x != y)
d := key(x)
assume(d = k)
b := T
r := x
x := n(x)
assume(x = y)
)";

// Non-memoizing partial execution of P2.
inline const char* kPiPrimeTrace = R"(
vars x, y, z;
funs n/1;
assume(x != z)
y := n(x)
assume(y != z)
y := n(y)
assume(y != z)
x := n(x)
)";

// The matching coherent prefix of P3.
inline const char* kPiTrace = R"(
vars x, y, z, g;
funs n/1;
assume(x != z)
y := n(x)
g := y
assume(y != z)
y := n(y)
assume(y != z)
x := n(x)
)";

// Late equality assume: f(x^) was computed and dropped.
inline const char* kSigmaTrace = R"(
vars x, y, z;
funs f/1;
z := f(x)
z := f(z)
assume(x = y)
)";

inline uncover::Program parse(const char* text) { return uncover::parse_program(text, "<fixture>"); }

inline uncover::TraceFile trace(const char* text) { return uncover::parse_trace(text, "<fixture>"); }

}  // namespace fixtures
