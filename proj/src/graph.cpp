#include "mtlqg/graph.hpp"

#include <algorithm>
#include <iterator>
#include <sstream>
#include <stdexcept>

namespace mtlqg {

namespace {

std::string edge_label(int a, int b) {
  std::ostringstream os;
  os << "(" << a + 1 << "," << b + 1 << ")";
  return os.str();
}

}  // namespace

Dag::Dag(int n, std::vector<std::pair<int, int>> edges) : n_(n) {
  if (n < 0) throw GraphError("node count must be nonnegative");
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) {
      throw GraphError("edge " + edge_label(a, b) + " references a node outside 1.." +
                       std::to_string(n));
    }
    if (a == b) throw GraphError("edge " + edge_label(a, b) + " is a self-loop");
    if (a > b) {
      throw GraphError("edge " + edge_label(a, b) +
                       " violates the topological labeling (tail label must be smaller)");
    }
  }
  edges_ = std::move(edges);

  // Labels are topological, so one pass in increasing order closes S.
  closure_ = BinaryMatrix::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    for (const auto& [a, b] : edges_) {
      if (b != i) continue;
      for (int k = 0; k < n; ++k) {
        if (closure_(a, k)) closure_(i, k) = 1;
      }
    }
  }
}

Dag Dag::from_one_based(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::pair<int, int>> shifted;
  shifted.reserve(edges.size());
  for (const auto& [a, b] : edges) shifted.emplace_back(a - 1, b - 1);
  return Dag(n, std::move(shifted));
}

bool Dag::has_edge(int from, int to) const {
  return std::binary_search(edges_.begin(), edges_.end(), std::make_pair(from, to));
}

BinaryMatrix sparsity(const Dag& dag) { return dag.sparsity(); }

NodeSet set_union(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

NodeSet set_intersection(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

NodeSet set_difference(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool contains(const NodeSet& s, int v) { return std::binary_search(s.begin(), s.end(), v); }

NodeSet to_one_based(const NodeSet& s) {
  NodeSet out(s);
  for (int& v : out) ++v;
  return out;
}

std::string format_set(const NodeSet& s) {
  std::ostringstream os;
  os << "{";
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k) os << ",";
    os << s[k] + 1;
  }
  os << "}";
  return os.str();
}

NodeRelations relations(const Dag& dag, int j) {
  const int n = dag.size();
  if (j < 0 || j >= n) {
    throw GraphError("node " + std::to_string(j + 1) + " is outside 1.." + std::to_string(n));
  }
  NodeRelations r;
  for (int k = 0; k < n; ++k) {
    if (dag.reaches(k, j)) r.anc.push_back(k);
    if (dag.reaches(j, k)) r.des.push_back(k);
  }
  r.sanc = set_difference(r.anc, {j});
  r.sdes = set_difference(r.des, {j});
  r.funnel = set_union(r.anc, r.des);

  NodeSet sib, cop;
  for (int a : r.anc) {
    for (int k = 0; k < n; ++k) {
      if (dag.reaches(a, k)) sib.push_back(k);
    }
  }
  for (int d : r.des) {
    for (int k = 0; k < n; ++k) {
      if (dag.reaches(k, d)) cop.push_back(k);
    }
  }
  std::sort(sib.begin(), sib.end());
  sib.erase(std::unique(sib.begin(), sib.end()), sib.end());
  std::sort(cop.begin(), cop.end());
  cop.erase(std::unique(cop.begin(), cop.end()), cop.end());
  r.siblings = set_difference(sib, r.funnel);
  r.coparents = set_difference(cop, r.funnel);

  NodeSet all(n);
  for (int k = 0; k < n; ++k) all[k] = k;
  r.nonrelatives = set_difference(all, set_union(r.funnel, set_union(r.coparents, r.siblings)));
  return r;
}

std::vector<NodeRelations> all_relations(const Dag& dag) {
  std::vector<NodeRelations> out;
  out.reserve(dag.size());
  for (int j = 0; j < dag.size(); ++j) out.push_back(relations(dag, j));
  return out;
}

std::optional<Diamond> find_diamond(const Dag& dag) {
  const int n = dag.size();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!dag.reaches(i, j)) continue;
      for (int a = i + 1; a < j; ++a) {
        if (!dag.reaches(i, a) || !dag.reaches(a, j)) continue;
        for (int b = a + 1; b < j; ++b) {
          if (!dag.reaches(i, b) || !dag.reaches(b, j)) continue;
          if (!dag.connected(a, b)) return Diamond{i, a, b, j};
        }
      }
    }
  }
  return std::nullopt;
}

std::vector<NodeSet> generations(const Dag& dag) {
  const int n = dag.size();
  std::vector<int> level(n, -1);
  std::vector<NodeSet> out;
  int assigned = 0;
  while (assigned < n) {
    NodeSet current;
    for (int i = 0; i < n; ++i) {
      if (level[i] >= 0) continue;
      bool ready = true;
      for (int k = 0; k < n && ready; ++k) {
        if (k != i && dag.reaches(i, k) && level[k] < 0) ready = false;
      }
      if (ready) current.push_back(i);
    }
    // Acyclicity guarantees progress.
    for (int i : current) level[i] = static_cast<int>(out.size());
    assigned += static_cast<int>(current.size());
    out.push_back(std::move(current));
  }
  return out;
}

int AggregatedGraph::group_of(int v) const {
  for (int g = 0; g < 6; ++g) {
    if (contains(sets[g], v)) return g;
  }
  return -1;
}

BinaryMatrix six_node_sparsity() {
  BinaryMatrix s(6, 6);
  s << 1, 0, 0, 0, 0, 0,  //
      0, 1, 0, 0, 0, 0,   //
      1, 0, 1, 0, 0, 0,   //
      0, 1, 0, 1, 0, 0,   //
      1, 1, 1, 0, 1, 0,   //
      1, 1, 0, 1, 0, 1;
  return s;
}

bool aggregated_edge_allowed(AggregationMode mode, int from, int to) {
  if (from == to) return true;
  // 0: sanc, 1: coparents, 2: center, 3: nonrelatives, 4: sdes, 5: siblings
  static constexpr std::array<std::pair<int, int>, 8> kEdges = {
      {{0, 2}, {0, 5}, {1, 4}, {2, 4}, {1, 5}, {1, 3}, {3, 5}, {0, 4}}};
  for (const auto& [a, b] : kEdges) {
    if (a == from && b == to) return true;
  }
  if (mode == AggregationMode::kA2Prime) {
    auto among = [](int g) { return g == 1 || g == 3 || g == 5; };
    return among(from) && among(to);
  }
  return false;
}

namespace {

AggregatedGraph build_aggregate(const Dag& dag, int j, AggregationMode mode,
                                const NonrelativeSplit* split) {
  if (auto d = find_diamond(dag)) {
    throw GraphError("aggregation requires a multitree; diamond " +
                     format_set({d->top, d->left, d->right, d->bottom}) + " found");
  }
  const NodeRelations r = relations(dag, j);
  AggregatedGraph g;
  g.center = j;
  g.mode = mode;
  g.sets[0] = r.sanc;
  g.sets[2] = {j};
  g.sets[4] = r.sdes;
  if (split == nullptr) {
    g.sets[1] = r.coparents;
    g.sets[3] = r.nonrelatives;
    g.sets[5] = r.siblings;
  } else {
    NodeSet joined = set_union(split->a, set_union(split->b, split->c));
    const std::size_t total = split->a.size() + split->b.size() + split->c.size();
    if (joined != r.nonrelatives || joined.size() != total) {
      throw GraphError("non-relative split of node " + std::to_string(j + 1) +
                       " is not a partition of " + format_set(r.nonrelatives));
    }
    g.sets[1] = set_union(r.coparents, split->b);
    g.sets[3] = split->a;
    g.sets[5] = set_union(r.siblings, split->c);
  }

  for (const auto& [a, b] : dag.edges()) {
    const int ga = g.group_of(a);
    const int gb = g.group_of(b);
    if (ga < 0 || gb < 0 || !aggregated_edge_allowed(mode, ga, gb)) {
      throw std::logic_error("aggregation around node " + std::to_string(j + 1) + ": edge (" +
                             std::to_string(a + 1) + "," + std::to_string(b + 1) +
                             ") joins aggregated groups " + std::to_string(ga + 1) + " -> " +
                             std::to_string(gb + 1) + " which the aggregated graph rules out");
    }
  }
  return g;
}

}  // namespace

AggregatedGraph aggregate(const Dag& dag, int j) {
  return build_aggregate(dag, j, AggregationMode::kA2, nullptr);
}

AggregatedGraph aggregate(const Dag& dag, int j, const NonrelativeSplit& split) {
  return build_aggregate(dag, j, AggregationMode::kA2Prime, &split);
}

Eigen::MatrixXd embedding(const Dag& dag, const std::vector<int>& dims, int i, int j) {
  if (static_cast<int>(dims.size()) != dag.size()) {
    throw GraphError("embedding: dimension list does not match node count");
  }
  const NodeRelations rj = relations(dag, j);
  if (!contains(rj.sdes, i)) {
    throw GraphError("embedding E^{" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                     "} requires node " + std::to_string(i + 1) +
                     " to be a strict descendant of node " + std::to_string(j + 1));
  }
  const NodeSet fi = relations(dag, i).funnel;
  const NodeSet& fj = rj.funnel;
  auto total = [&](const NodeSet& s) {
    int d = 0;
    for (int v : s) d += dims[v];
    return d;
  };
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(total(fi), total(fj));
  int row = 0;
  for (int k : fi) {
    int col = 0;
    for (int l : fj) {
      if (l == k) e.block(row, col, dims[k], dims[k]).setIdentity();
      col += dims[l];
    }
    row += dims[k];
  }
  return e;
}

}  // namespace mtlqg
