#pragma once
// Semantic path priority: s_q(e) = sigmoid(MLP(d(q,e) + f(e,a))).
//
// The accumulative cost d(q,e) sums, over every walk of length <= L_max from
// a topic entity to e, the walk's summed edge-cost vectors. A layered DP
// over (walk count, walk-cost sum) computes that exactly:
//   c_t(e) = sum over traversable edges (e',r,e) of c_{t-1}(e')
//   D_t(e) = sum over traversable edges of [D_{t-1}(e') + c_{t-1}(e') * w(e',r,e)]
//   d(q,e) = sum_{t=1..L_max} D_t(e)
// Edges are traversable in both directions; reverse traversal uses the
// reverse-tagged relation matrix. Walk counts are exact integers in doubles
// and guarded against exceeding 2^53.
//
// The estimated future cost f(e,a) = FFN([d(q,e), q]) reparameterizes the
// unknown answer through the query.

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "pathmind/encoder.hpp"

namespace pathmind {

// Edge cost w_q(e_src, r, e_dst), conditioned on the query.
// kElementwise (default): w = h_src ⊙ (W_r h_dst) ⊙ q, a d-vector.
// kBilinear: w = (h_src^T W_r h_dst) * q, the scalar-bilinear reading.
enum class EdgeCostMode { kElementwise, kBilinear };

// Ablation axes: full = d + f, accum_only = d, future_only = f.
enum class PriorityMode { kFull, kAccumOnly, kFutureOnly };

inline const char* priority_mode_name(PriorityMode m) {
  switch (m) {
    case PriorityMode::kFull: return "full";
    case PriorityMode::kAccumOnly: return "accum_only";
    case PriorityMode::kFutureOnly: return "future_only";
  }
  return "full";
}

inline PriorityMode priority_mode_from(const std::string& s) {
  if (s == "full") return PriorityMode::kFull;
  if (s == "accum_only") return PriorityMode::kAccumOnly;
  if (s == "future_only") return PriorityMode::kFutureOnly;
  throw Error("unknown priority mode: " + s);
}

constexpr double kMaxExactWalkCount = 9007199254740992.0;  // 2^53

struct CostTable {
  int l_max = 0;
  // layer t in 0..l_max; counts[t] holds c_t, layer_cost[t] holds D_t.
  // Entities without walks are simply absent (zero).
  std::vector<std::map<EntityId, double>> counts;
  std::vector<std::map<EntityId, NodeId>> layer_cost;
  std::map<EntityId, NodeId> d_vec;

  double count_at(int t, EntityId e) const {
    auto it = counts[size_t(t)].find(e);
    return it == counts[size_t(t)].end() ? 0.0 : it->second;
  }
};

namespace detail {

// Relation matrix for a traversal direction, reusing the encoder's node when
// present (directed encoders never made reverse matrices; create them here).
inline NodeId relation_node_for(Tape& tape, EncodedGraph& eg, const KnowledgeGraph& kg,
                                RelationId r, Direction dir) {
  auto it = eg.relation_nodes.find({r, dir});
  if (it != eg.relation_nodes.end()) return it->second;
  NodeId n = tape.param("rel/" + kg.relation_label(r) + "/" + direction_name(dir),
                        {eg.dim, eg.dim}, InitKind::kMatrix);
  eg.relation_nodes.emplace(std::make_pair(r, dir), n);
  return n;
}

}  // namespace detail

inline NodeId edge_cost(Tape& tape, EncodedGraph& eg, const KnowledgeGraph& kg, EntityId e_src,
                        RelationId r, EntityId e_dst, Direction dir,
                        EdgeCostMode mode = EdgeCostMode::kElementwise) {
  NodeId w_r = detail::relation_node_for(tape, eg, kg, r, dir);
  NodeId h_src = eg.node_repr.at(e_src);
  NodeId h_dst = eg.node_repr.at(e_dst);
  if (mode == EdgeCostMode::kBilinear)
    return tape.smul(tape.dot(h_src, tape.matvec(w_r, h_dst)), eg.query_repr);
  return tape.hadamard(tape.hadamard(h_src, tape.matvec(w_r, h_dst)), eg.query_repr);
}

inline CostTable accumulate_costs(Tape& tape, const QuerySubgraph& sg, EncodedGraph& eg,
                                  const KnowledgeGraph& kg, int l_max,
                                  EdgeCostMode mode = EdgeCostMode::kElementwise) {
  if (l_max < 1) throw Error("accumulate_costs: L_max must be >= 1");

  struct DirectedEdge {
    EntityId dst;
    EntityId src;
    RelationId rel;
    Direction dir;
  };
  std::vector<DirectedEdge> edges;
  edges.reserve(sg.triples.size() * 2);
  for (const Triple& t : sg.triples) {
    edges.push_back({t.tail, t.head, t.rel, Direction::kFwd});
    edges.push_back({t.head, t.tail, t.rel, Direction::kRev});
  }
  // grouped by destination in a fixed order: summation order is deterministic
  std::sort(edges.begin(), edges.end(), [](const DirectedEdge& a, const DirectedEdge& b) {
    return std::tie(a.dst, a.src, a.rel, a.dir) < std::tie(b.dst, b.src, b.rel, b.dir);
  });

  CostTable ct;
  ct.l_max = l_max;
  ct.counts.resize(size_t(l_max) + 1);
  ct.layer_cost.resize(size_t(l_max) + 1);
  for (EntityId topic : sg.topic_ids) ct.counts[0][topic] = 1.0;

  // edge-cost nodes, created only when an edge first carries walk mass
  std::map<std::tuple<EntityId, EntityId, RelationId, Direction>, NodeId> w_cache;
  auto w_node = [&](const DirectedEdge& e) {
    auto key = std::make_tuple(e.dst, e.src, e.rel, e.dir);
    auto it = w_cache.find(key);
    if (it != w_cache.end()) return it->second;
    NodeId n = edge_cost(tape, eg, kg, e.src, e.rel, e.dst, e.dir, mode);
    w_cache.emplace(key, n);
    return n;
  };

  for (int t = 1; t <= l_max; ++t) {
    auto& prev_count = ct.counts[size_t(t) - 1];
    auto& prev_cost = ct.layer_cost[size_t(t) - 1];
    std::map<EntityId, std::vector<NodeId>> terms;
    for (const DirectedEdge& e : edges) {
      auto cit = prev_count.find(e.src);
      if (cit == prev_count.end()) continue;
      double c_src = cit->second;
      ct.counts[size_t(t)][e.dst] += c_src;
      NodeId term = tape.scale(w_node(e), c_src);
      auto dit = prev_cost.find(e.src);
      if (dit != prev_cost.end()) term = tape.add(dit->second, term);
      terms[e.dst].push_back(term);
    }
    for (auto& [dst, count] : ct.counts[size_t(t)])
      if (count > kMaxExactWalkCount)
        throw Error("walk count exceeds 2^53 at layer " + std::to_string(t) +
                    "; use a smaller L_max");
    for (auto& [dst, list] : terms) ct.layer_cost[size_t(t)].emplace(dst, tape.add_many(list));
  }

  std::map<EntityId, std::vector<NodeId>> acc;
  for (int t = 1; t <= l_max; ++t)
    for (const auto& [e, node] : ct.layer_cost[size_t(t)]) acc[e].push_back(node);
  for (auto& [e, list] : acc) ct.d_vec.emplace(e, tape.add_many(list));
  return ct;
}

// f(e,a) = FFN([d(q,e), q]): Linear(2d->d), ReLU, Linear(d->d).
inline NodeId future_cost(Tape& tape, NodeId d_vec, NodeId q, size_t d) {
  NodeId w1 = tape.param("fc/w1", {d, 2 * d}, InitKind::kMatrix);
  NodeId b1 = tape.param("fc/b1", {d}, InitKind::kZero);
  NodeId w2 = tape.param("fc/w2", {d, d}, InitKind::kMatrix);
  NodeId b2 = tape.param("fc/b2", {d}, InitKind::kZero);
  NodeId hidden = tape.relu(tape.add(tape.matvec(w1, tape.concat(d_vec, q)), b1));
  return tape.add(tape.matvec(w2, hidden), b2);
}

struct PriorityScore {
  EntityId entity = -1;
  double score = 0.5;   // sigmoid(logit), strictly inside (0,1)
  NodeId logit = -1;    // pre-sigmoid scalar, the training hook
  NodeId d_vec = -1;    // accumulative cost vector
  NodeId f_vec = -1;    // estimated future cost vector (-1 in accum_only mode)
};

// Scoring head: MLP is Linear(d->d), ReLU, Linear(d->1).
inline PriorityScore priority(Tape& tape, EntityId entity, const CostTable& ct, NodeId q, size_t d,
                              PriorityMode mode = PriorityMode::kFull) {
  PriorityScore out;
  out.entity = entity;

  auto it = ct.d_vec.find(entity);
  NodeId d_vec = it != ct.d_vec.end() ? it->second : tape.zeros({d});
  out.d_vec = d_vec;

  NodeId input;
  switch (mode) {
    case PriorityMode::kFull:
      out.f_vec = future_cost(tape, d_vec, q, d);
      input = tape.add(d_vec, out.f_vec);
      break;
    case PriorityMode::kAccumOnly:
      input = d_vec;
      break;
    case PriorityMode::kFutureOnly:
      out.f_vec = future_cost(tape, d_vec, q, d);
      input = out.f_vec;
      break;
  }

  NodeId w1 = tape.param("mlp/w1", {d, d}, InitKind::kMatrix);
  NodeId b1 = tape.param("mlp/b1", {d}, InitKind::kZero);
  NodeId w2 = tape.param("mlp/w2", {1, d}, InitKind::kMatrix);
  NodeId b2 = tape.param("mlp/b2", {1}, InitKind::kZero);
  out.logit = tape.add(tape.matvec(w2, tape.relu(tape.add(tape.matvec(w1, input), b1))), b2);
  out.score = pathmind::sigmoid(tape.val(out.logit)).data[0];
  return out;
}

// Scores every subgraph entity; one shared tape pass.
inline std::map<EntityId, PriorityScore> score_entities(Tape& tape, const QuerySubgraph& sg,
                                                        const CostTable& ct, NodeId q, size_t d,
                                                        PriorityMode mode) {
  std::map<EntityId, PriorityScore> scores;
  for (EntityId e : sg.node_ids) scores.emplace(e, priority(tape, e, ct, q, d, mode));
  return scores;
}

// Debug dump: walk counts and cost-vector norms per node per layer.
inline json cost_table_to_json(const CostTable& ct, const Tape& tape, const KnowledgeGraph& kg) {
  json layers = json::array();
  for (int t = 0; t <= ct.l_max; ++t) {
    json layer = json::object();
    for (const auto& [e, c] : ct.counts[size_t(t)]) {
      json entry = {{"count", c}};
      auto it = ct.layer_cost[size_t(t)].find(e);
      entry["cost_norm"] = it != ct.layer_cost[size_t(t)].end() ? tape.val(it->second).l2_norm() : 0.0;
      layer[kg.entity_label(e)] = entry;
    }
    layers.push_back(layer);
  }
  json totals = json::object();
  for (const auto& [e, node] : ct.d_vec) totals[kg.entity_label(e)] = tape.val(node).l2_norm();
  return json{{"l_max", ct.l_max}, {"layers", layers}, {"d_vec_norms", totals}};
}

}  // namespace pathmind
