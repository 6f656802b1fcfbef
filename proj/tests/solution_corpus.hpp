#pragma once

// Generated-solution corpus shared by the solution tests and the acceptance run.

#include <vector>

#include "frango/solutions.hpp"
#include "helpers.hpp"

namespace testing_helpers {

inline frango::Chart solution_chart() {
  return frango::Chart(2, 2, frango::Box({{0.0, 1.0}, {0.0, 1.0}, {0.2, 1.0}, {0.0, 1.0}}));
}

struct Case {
  frango::SolutionAnsatz ansatz;
  frango::SourceSpec source;
};

// Worked example: phi = v, Upsilon2 = 1, h4_0 = 1, psi = 0.
inline Case worked(const frango::Chart& c) {
  Case k;
  k.ansatz.psi = 0.0;
  k.ansatz.phi = u(c, frango::kV);
  k.ansatz.h4_0 = 1.0;
  k.source.upsilon2 = 1.0;
  k.source.upsilon4 = 0.0;
  return k;
}

// Smooth alpha = 1 corpus for the consistent generator.
inline std::vector<Case> corpus(const frango::Chart& c) {
  const auto x1 = u(c, 0), x2 = u(c, 1), v = u(c, 2);
  const frango::FracOrder one(1.0);
  std::vector<Case> out;
  out.push_back(worked(c));
  {
    Case k;
    k.ansatz.psi = 0.2 * x1 * x2;
    k.ansatz.phi = v + 0.3 * x1;
    k.ansatz.h4_0 = 2.0 + 0.1 * x2;
    k.ansatz.n1 = {0.1 * x2, 0.2};
    k.ansatz.n2 = {0.5, 0.0};
    k.source.upsilon2 = 1.0 + 0.2 * x1;
    out.push_back(k);
  }
  {
    Case k;
    k.ansatz.psi = 0.3 * sin(x1);
    k.ansatz.phi = v * v + 0.2 * x2 + 1.0;
    k.ansatz.h4_0 = 1.5;
    k.ansatz.n2 = {0.2 * x1, 0.3};
    k.source.upsilon2 = 2.0;
    out.push_back(k);
  }
  {
    Case k;
    k.ansatz.psi = 0.1 * (x1 * x1 + x2 * x2);
    k.ansatz.phi = exp(0.5 * v) + x1 * x2;
    k.ansatz.h4_0 = 1.0;
    k.ansatz.sign4 = -1;
    k.ansatz.n1 = {x1, x2};
    k.source.upsilon2 = -1.0;
    out.push_back(k);
  }
  {
    Case k;
    k.ansatz.psi = 0.2 * x1 - 0.1 * x2 * x2;
    k.ansatz.phi = 0.5 * v + 0.3 * sin(x1) + 0.1 * v * x2;
    k.ansatz.h4_0 = 3.0 + x1;
    k.ansatz.n2 = {0.3, -0.2};
    k.source.upsilon2 = 0.5 + 0.1 * v;
    out.push_back(k);
  }
  for (auto& k : out)
    k.source.upsilon4 = frango::manufacture_source(c, k.ansatz.psi, one, frango::SourceScaling::consistent);
  return out;
}


}  // namespace testing_helpers
