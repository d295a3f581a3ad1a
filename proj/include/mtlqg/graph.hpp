// Directed-acyclic-graph machinery for multitree information structures.
//
// Nodes are 0-based internally. Everything that is printed or serialized
// uses 1-based labels (see `to_one_based`).

#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mtlqg {

using NodeSet = std::vector<int>;  // ascending node indices
using BinaryMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A DAG whose labels are a topological ordering: every edge (i, j) has i < j.
class Dag {
 public:
  Dag() = default;

  /// Throws GraphError naming the offending edge for self-loops, out-of-range
  /// endpoints and edges that go against the label order (which also rules
  /// out cycles).
  Dag(int n, std::vector<std::pair<int, int>> edges);

  static Dag from_one_based(int n, const std::vector<std::pair<int, int>>& edges);

  int size() const { return n_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  bool has_edge(int from, int to) const;

  /// Directed path from -> to, including the length-zero path from == to.
  bool reaches(int from, int to) const { return closure_(to, from) != 0; }
  bool connected(int a, int b) const { return reaches(a, b) || reaches(b, a); }

  /// S_ij = 1 iff j -> i.
  const BinaryMatrix& sparsity() const { return closure_; }

 private:
  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;
  BinaryMatrix closure_;
};

BinaryMatrix sparsity(const Dag& dag);

/// Per-node relation lists (Table 1 plus siblings/co-parents/non-relatives).
struct NodeRelations {
  NodeSet anc, sanc, des, sdes, funnel;
  NodeSet siblings, coparents, nonrelatives;
};

NodeRelations relations(const Dag& dag, int j);

/// Relations for every node, indexed by node.
std::vector<NodeRelations> all_relations(const Dag& dag);

/// Nodes (i, a, b, j) with i -> a -> j, i -> b -> j and a, b path-disconnected.
struct Diamond {
  int top, left, right, bottom;
};

std::optional<Diamond> find_diamond(const Dag& dag);
inline bool is_multitree(const Dag& dag) { return !find_diamond(dag).has_value(); }

/// G^0 = leaves, G^k = nodes whose strict descendants all lie in G^{<k}.
/// Only the nonempty prefix is returned.
std::vector<NodeSet> generations(const Dag& dag);

enum class AggregationMode { kA2, kA2Prime };

/// Partition of nonrelatives(j) used by the modified aggregation:
/// a = decoupled cost and uncorrelated noise, b = uncorrelated noise only,
/// c = decoupled cost only.
struct NonrelativeSplit {
  NodeSet a, b, c;
};

/// Six node-sets indexed 0..5 for the aggregated nodes 1..6:
/// strict ancestors, co-parents, center, non-relatives, strict descendants,
/// siblings.
struct AggregatedGraph {
  int center = 0;
  AggregationMode mode = AggregationMode::kA2;
  std::array<NodeSet, 6> sets;

  /// Aggregated node (0..5) containing original node v.
  int group_of(int v) const;
};

/// Sparsity pattern of the six-node aggregated graph (0-based groups).
BinaryMatrix six_node_sparsity();

/// Whether an edge between aggregated groups is permitted in `mode`.
/// Edges inside one group are always permitted.
bool aggregated_edge_allowed(AggregationMode mode, int from_group, int to_group);

/// Throws GraphError if dag is not a multitree or the split is not a partition
/// of nonrelatives(j). Throws std::logic_error if an original edge connects a
/// pair of groups the aggregated graph rules out.
AggregatedGraph aggregate(const Dag& dag, int j);
AggregatedGraph aggregate(const Dag& dag, int j, const NonrelativeSplit& split);

/// Block-identity matrix selecting funnel(j)-ordered blocks into funnel(i)
/// positions; zero block rows for funnel(i) members outside funnel(j).
/// Requires i in sdes(j).
Eigen::MatrixXd embedding(const Dag& dag, const std::vector<int>& dims, int i, int j);

/// Sorted set helpers.
NodeSet set_union(const NodeSet& a, const NodeSet& b);
NodeSet set_intersection(const NodeSet& a, const NodeSet& b);
NodeSet set_difference(const NodeSet& a, const NodeSet& b);
bool contains(const NodeSet& s, int v);

NodeSet to_one_based(const NodeSet& s);
std::string format_set(const NodeSet& s);  // "{1,2,3}" with 1-based labels

}  // namespace mtlqg
