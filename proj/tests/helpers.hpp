#pragma once

#include <array>
#include <cstdio>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "mtlqg/model.hpp"

namespace mtlqg::testing {

inline BinaryMatrix mask(const std::vector<std::string>& rows) {
  BinaryMatrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c] == '1';
  }
  return m;
}

inline NodeSet one_based(std::initializer_list<int> s) {
  NodeSet out;
  for (int v : s) out.push_back(v - 1);
  return out;
}

/// Block-diagonal problem: A_ii = 0.9 I, B_ii and C_ii all ones, identity
/// cost and noise.
inline ProblemData simple_problem(const Dag& dag, const Dims& dims, int horizon) {
  ProblemData p = ProblemData::zeros(dag, dims, horizon);
  const BlockLayout lx = p.x_layout(), lu = p.u_layout(), ly = p.y_layout();
  for (StepData& s : p.steps) {
    for (int i = 0; i < dag.size(); ++i) {
      s.A.block(lx.offset(i), lx.offset(i), lx.dim(i), lx.dim(i)).diagonal().setConstant(0.9);
      s.B.block(lx.offset(i), lu.offset(i), lx.dim(i), lu.dim(i)).setOnes();
      s.C.block(ly.offset(i), lx.offset(i), ly.dim(i), lx.dim(i)).setOnes();
    }
    s.Q.setIdentity();
    s.R.setIdentity();
    s.W.setIdentity();
    s.V.setIdentity();
  }
  p.sigma_init.setIdentity();
  p.p_final.setIdentity();
  return p;
}

inline std::string fixture(const std::string& name) { return std::string(MTLQG_FIXTURES) + "/" + name; }

struct CliResult {
  int code = -1;
  std::string out;
};

/// Runs the CLI with the given argument string, capturing stdout.
inline CliResult run_cli(const std::string& args) {
  CliResult r;
  const std::string cmd = std::string(MTLQG_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace mtlqg::testing
