#include "mtlqg/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace mtlqg {

namespace {

struct MatrixSpec {
  const char* name;
  Mat StepData::*member;
  char rows, cols;  // 'x', 'u' or 'y'
};

const MatrixSpec kStepMatrices[] = {
    {"A", &StepData::A, 'x', 'x'}, {"B", &StepData::B, 'x', 'u'}, {"C", &StepData::C, 'y', 'x'},
    {"Q", &StepData::Q, 'x', 'x'}, {"R", &StepData::R, 'u', 'u'}, {"S", &StepData::S, 'x', 'u'},
    {"W", &StepData::W, 'x', 'x'}, {"V", &StepData::V, 'y', 'y'}, {"U", &StepData::U, 'y', 'x'},
};

const BlockLayout& pick(char c, const BlockLayout& lx, const BlockLayout& lu, const BlockLayout& ly) {
  return c == 'x' ? lx : (c == 'u' ? lu : ly);
}

Json blocks_to_json(const Mat& m, const BlockLayout& rows, const BlockLayout& cols) {
  Json out = Json::array();
  for (int i = 0; i < rows.nodes(); ++i) {
    for (int j = 0; j < cols.nodes(); ++j) {
      const Mat b = block(m, rows, i, cols, j);
      if (b.size() == 0 || b.cwiseAbs().maxCoeff() == 0.0) continue;
      Json e = matrix_to_json(b);
      Json with_block = {{"block", {i + 1, j + 1}}};
      with_block.update(e);
      out.push_back(with_block);
    }
  }
  return out;
}

void blocks_from_json(const Json& arr, Mat& m, const BlockLayout& rows, const BlockLayout& cols,
                      const std::string& what) {
  if (!arr.is_array()) throw ParseError(what + ": expected an array of blocks");
  std::set<std::pair<int, int>> seen;
  for (const Json& e : arr) {
    if (!e.contains("block") || !e["block"].is_array() || e["block"].size() != 2) {
      throw ParseError(what + ": every block needs \"block\": [i, j]");
    }
    const int i = e["block"][0].get<int>() - 1;
    const int j = e["block"][1].get<int>() - 1;
    const std::string where = what + " block (" + std::to_string(i + 1) + "," +
                              std::to_string(j + 1) + ")";
    if (i < 0 || i >= rows.nodes() || j < 0 || j >= cols.nodes()) {
      throw ParseError(where + ": node index out of range");
    }
    if (!seen.insert({i, j}).second) throw ParseError(where + ": given twice");
    const Mat b = matrix_from_json(e, where);
    if (b.rows() != rows.dim(i) || b.cols() != cols.dim(j)) {
      throw ParseError(where + ": expected " + std::to_string(rows.dim(i)) + "x" +
                       std::to_string(cols.dim(j)) + ", got " + std::to_string(b.rows()) + "x" +
                       std::to_string(b.cols()));
    }
    m.block(rows.offset(i), cols.offset(j), b.rows(), b.cols()) = b;
  }
}

std::vector<int> int_list(const Json& j, const std::string& what, int n) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    throw ParseError(what + ": expected a list of " + std::to_string(n) + " integers");
  }
  std::vector<int> out;
  for (const Json& e : j) {
    const int v = e.get<int>();
    if (v < 0) throw ParseError(what + ": dimensions must be nonnegative");
    out.push_back(v);
  }
  return out;
}

void require_schema(const Json& j, const char* schema) {
  if (!j.is_object()) throw ParseError("expected a JSON object");
  if (!j.contains("schema") || j["schema"] != schema) {
    throw ParseError(std::string("expected schema \"") + schema + "\"");
  }
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
}

Json indexed_matrix(const Mat& m, std::initializer_list<std::pair<const char*, int>> keys) {
  Json e = Json::object();
  for (const auto& [k, v] : keys) e[k] = v;
  e.update(matrix_to_json(m));
  return e;
}

}  // namespace

Json matrix_to_json(const Mat& m) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Mat matrix_from_json(const Json& j, const std::string& what) {
  return guarded([&] {
    if (!j.contains("rows") || !j.contains("cols") || !j.contains("data")) {
      throw ParseError(what + ": matrix needs rows, cols and data");
    }
    const int rows = j["rows"].get<int>(), cols = j["cols"].get<int>();
    const Json& data = j["data"];
    if (rows < 0 || cols < 0 || !data.is_array() ||
        static_cast<long long>(data.size()) != static_cast<long long>(rows) * cols) {
      throw ParseError(what + ": data must hold rows*cols numbers");
    }
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) m(r, c) = data[r * cols + c].get<double>();
    }
    return m;
  });
}

Json problem_to_json(const ProblemData& p) {
  const BlockLayout lx = p.x_layout(), lu = p.u_layout(), ly = p.y_layout();
  Json edges = Json::array();
  for (const auto& [a, b] : p.dag.edges()) edges.push_back({a + 1, b + 1});
  Json steps = Json::array();
  for (int t = 0; t < p.horizon; ++t) {
    Json s = {{"t", t}};
    for (const MatrixSpec& spec : kStepMatrices) {
      Json blocks = blocks_to_json(p.steps[t].*spec.member, pick(spec.rows, lx, lu, ly),
                                   pick(spec.cols, lx, lu, ly));
      if (!blocks.empty()) s[spec.name] = blocks;
    }
    steps.push_back(s);
  }
  return {{"schema", kProblemSchema},
          {"graph", {{"n", p.dag.size()}, {"edges", edges}}},
          {"horizon", p.horizon},
          {"dims", {{"x", p.dims.x}, {"u", p.dims.u}, {"y", p.dims.y}}},
          {"steps", steps},
          {"sigma_init", blocks_to_json(p.sigma_init, lx, lx)},
          {"p_final", blocks_to_json(p.p_final, lx, lx)}};
}

ProblemData problem_from_json(const Json& j) {
  return guarded([&] {
    require_schema(j, kProblemSchema);
    for (const char* key : {"graph", "horizon", "dims"}) {
      if (!j.contains(key)) throw ParseError(std::string("missing \"") + key + "\"");
    }
    const int n = j["graph"]["n"].get<int>();
    if (n < 1) throw ParseError("graph.n must be positive");
    std::vector<std::pair<int, int>> edges;
    for (const Json& e : j["graph"].value("edges", Json::array())) {
      if (!e.is_array() || e.size() != 2) throw ParseError("graph.edges: expected [from, to] pairs");
      edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    Dag dag;
    try {
      dag = Dag::from_one_based(n, edges);
    } catch (const GraphError& e) {
      throw ParseError(e.what());
    }
    const int T = j["horizon"].get<int>();
    if (T < 1) throw ParseError("horizon must be at least 1");
    Dims dims{int_list(j["dims"]["x"], "dims.x", n), int_list(j["dims"]["u"], "dims.u", n),
              int_list(j["dims"]["y"], "dims.y", n)};
    ProblemData p = ProblemData::zeros(dag, dims, T);
    const BlockLayout lx = p.x_layout(), lu = p.u_layout(), ly = p.y_layout();
    const Json steps = j.value("steps", Json::array());
    if (!steps.is_array() || static_cast<int>(steps.size()) > T) {
      throw ParseError("steps: expected at most horizon entries");
    }
    for (size_t k = 0; k < steps.size(); ++k) {
      const Json& s = steps[k];
      const int t = s.value("t", static_cast<int>(k));
      if (t != static_cast<int>(k)) {
        throw ParseError("steps[" + std::to_string(k) + "] has t=" + std::to_string(t) +
                         "; steps must be listed in time order");
      }
      for (const auto& [key, value] : s.items()) {
        if (key == "t") continue;
        const MatrixSpec* spec = nullptr;
        for (const MatrixSpec& m : kStepMatrices) {
          if (key == m.name) spec = &m;
        }
        if (!spec) throw ParseError("steps[" + std::to_string(k) + "]: unknown matrix \"" + key + "\"");
        blocks_from_json(value, p.steps[t].*spec->member, pick(spec->rows, lx, lu, ly),
                         pick(spec->cols, lx, lu, ly), key + " at t=" + std::to_string(t));
      }
    }
    if (j.contains("sigma_init")) blocks_from_json(j["sigma_init"], p.sigma_init, lx, lx, "sigma_init");
    if (j.contains("p_final")) blocks_from_json(j["p_final"], p.p_final, lx, lx, "p_final");
    return p;
  });
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

ProblemData read_problem(const std::string& path) { return problem_from_json(read_json(path)); }

void write_problem(const std::string& path, const ProblemData& p) {
  write_json(path, problem_to_json(p));
}

Json gains_to_json(const StructuredGains& g) {
  Json k = Json::array(), l = Json::array();
  for (size_t t = 0; t < g.K.size(); ++t) {
    for (size_t i = 0; i < g.K[t].size(); ++i) {
      for (size_t j = 0; j < g.K[t][i].size(); ++j) {
        const Mat& m = g.K[t][i][j];
        if (m.size() == 0) continue;
        k.push_back(indexed_matrix(m, {{"t", int(t)}, {"i", int(i) + 1}, {"j", int(j) + 1}}));
      }
    }
    for (size_t j = 0; j < g.L[t].size(); ++j) {
      l.push_back(indexed_matrix(g.L[t][j], {{"t", int(t)}, {"j", int(j) + 1}}));
    }
  }
  return {{"schema", kGainsSchema}, {"kind", "structured"}, {"horizon", g.K.size()},
          {"K", k}, {"L", l}};
}

Json gains_to_json(const LinearStrategy& f) {
  Json g = Json::array();
  for (size_t t = 0; t < f.gain.size(); ++t) {
    for (size_t s = 0; s < f.gain[t].size(); ++s) {
      g.push_back(indexed_matrix(f.gain[t][s], {{"t", int(t)}, {"s", int(s)}}));
    }
  }
  return {{"schema", kGainsSchema}, {"kind", "linear"}, {"horizon", f.gain.size()}, {"gains", g}};
}

Json oracle_to_json(const OracleStrategy& o) {
  Json g = Json::array();
  for (size_t t = 0; t < o.theta.size(); ++t) {
    for (size_t s = 0; s < o.theta[t].size(); ++s) {
      g.push_back(indexed_matrix(o.theta[t][s], {{"t", int(t)}, {"s", int(s)}}));
    }
  }
  return {{"kind", "purified"}, {"horizon", o.theta.size()}, {"theta", g}};
}

namespace {

void check_horizon(const ProblemData& p, const Json& j) {
  if (j.contains("horizon") && j["horizon"].get<int>() != p.horizon) {
    throw std::invalid_argument("gains horizon " + std::to_string(j["horizon"].get<int>()) +
                                " does not match problem horizon " + std::to_string(p.horizon));
  }
}

int time_index(const Json& e, const ProblemData& p, const std::string& what) {
  const int t = e.at("t").get<int>();
  if (t < 0 || t >= p.horizon) {
    throw std::invalid_argument(what + ": time index " + std::to_string(t) + " out of range");
  }
  return t;
}

int node_index(const Json& e, const char* key, const ProblemData& p, const std::string& what) {
  const int v = e.at(key).get<int>() - 1;
  if (v < 0 || v >= p.dag.size()) {
    throw std::invalid_argument(what + ": node " + std::to_string(v + 1) + " out of range");
  }
  return v;
}

void assign(Mat& dst, const Mat& src, const std::string& what) {
  if (dst.rows() != src.rows() || dst.cols() != src.cols()) {
    throw std::invalid_argument(what + ": expected " + std::to_string(dst.rows()) + "x" +
                                std::to_string(dst.cols()) + ", got " +
                                std::to_string(src.rows()) + "x" + std::to_string(src.cols()));
  }
  dst = src;
}

}  // namespace

StructuredGains structured_gains_from_json(const ProblemData& p, const Json& j) {
  return guarded([&] {
    require_schema(j, kGainsSchema);
    if (j.value("kind", "") != "structured") throw ParseError("expected kind \"structured\"");
    check_horizon(p, j);
    StructuredGains g = StructuredGains::zeros(p);
    for (const Json& e : j.value("K", Json::array())) {
      const int t = time_index(e, p, "K");
      const int i = node_index(e, "i", p, "K"), k = node_index(e, "j", p, "K");
      const std::string what = "K^{" + std::to_string(i + 1) + "," + std::to_string(k + 1) +
                               "} at t=" + std::to_string(t);
      if (!p.dag.reaches(k, i)) {
        throw std::invalid_argument(what + ": node " + std::to_string(k + 1) +
                                    " is not an ancestor of node " + std::to_string(i + 1));
      }
      assign(g.K[t][i][k], matrix_from_json(e, what), what);
    }
    for (const Json& e : j.value("L", Json::array())) {
      const int t = time_index(e, p, "L");
      const int k = node_index(e, "j", p, "L");
      const std::string what = "L^{" + std::to_string(k + 1) + "} at t=" + std::to_string(t);
      assign(g.L[t][k], matrix_from_json(e, what), what);
    }
    return g;
  });
}

LinearStrategy linear_strategy_from_json(const ProblemData& p, const Json& j) {
  return guarded([&] {
    require_schema(j, kGainsSchema);
    if (j.value("kind", "") != "linear") throw ParseError("expected kind \"linear\"");
    check_horizon(p, j);
    LinearStrategy f = LinearStrategy::zeros(p);
    for (const Json& e : j.value("gains", Json::array())) {
      const int t = time_index(e, p, "gains");
      const int s = e.at("s").get<int>();
      const std::string what = "gain (t=" + std::to_string(t) + ", s=" + std::to_string(s) + ")";
      if (s < 0 || s >= t) throw std::invalid_argument(what + ": needs 0 <= s < t");
      assign(f.gain[t][s], matrix_from_json(e, what), what);
    }
    check_strategy(p, f);
    return f;
  });
}

GainsFile gains_from_json(const ProblemData& p, const Json& j) {
  GainsFile out;
  const std::string kind = guarded([&] {
    require_schema(j, kGainsSchema);
    return j.value("kind", std::string());
  });
  if (kind == "structured") {
    out.structured = true;
    out.gains = structured_gains_from_json(p, j);
  } else if (kind == "linear") {
    out.strategy = linear_strategy_from_json(p, j);
  } else {
    throw ParseError("gains kind must be \"structured\" or \"linear\"");
  }
  return out;
}

}  // namespace mtlqg
