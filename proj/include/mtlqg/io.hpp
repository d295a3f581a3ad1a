// JSON problem, gains and report files.
//
// Node indices are 1-based in every file. Matrices are stored row-major as
// {"rows": r, "cols": c, "data": [...]}; per-node blocks add "block": [i, j].
// Formats are described in README.md.

#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "mtlqg/lingauss.hpp"
#include "mtlqg/model.hpp"
#include "mtlqg/oracle.hpp"
#include "mtlqg/structured.hpp"

namespace mtlqg {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kProblemSchema = "mtlqg.problem/1";
inline constexpr const char* kGainsSchema = "mtlqg.gains/1";
inline constexpr const char* kReportSchema = "mtlqg.report/1";

/// Malformed or inconsistent input file.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json matrix_to_json(const Mat& m);
Mat matrix_from_json(const Json& j, const std::string& what);

Json problem_to_json(const ProblemData& problem);
/// Throws ParseError. The result is not validated (see `validate`).
ProblemData problem_from_json(const Json& j);

Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& j);

ProblemData read_problem(const std::string& path);
void write_problem(const std::string& path, const ProblemData& problem);

/// kind "structured": K and L blocks; kind "linear": u_t = sum_s G_{t,s} y_s.
Json gains_to_json(const StructuredGains& gains);
Json gains_to_json(const LinearStrategy& strategy);
Json oracle_to_json(const OracleStrategy& strategy);

/// Throws ParseError on malformed content and std::invalid_argument when the
/// gains do not fit the problem.
StructuredGains structured_gains_from_json(const ProblemData& problem, const Json& j);
LinearStrategy linear_strategy_from_json(const ProblemData& problem, const Json& j);

/// Reads either kind; `structured` tells which one was present.
struct GainsFile {
  bool structured = false;
  StructuredGains gains;
  LinearStrategy strategy;
};
GainsFile gains_from_json(const ProblemData& problem, const Json& j);

}  // namespace mtlqg
