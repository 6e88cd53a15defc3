#pragma once
// Query subgraph extraction: the union of k-hop neighborhoods around the
// topic entities, with the full induced edge set and a min-hop map from
// multi-source BFS. Traversal ignores edge direction by default; a directed
// mode follows out-edges only.

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <vector>

#include "pathmind/kg.hpp"

namespace pathmind {

struct QuerySubgraph {
  std::vector<EntityId> node_ids;        // sorted
  std::vector<RelationId> relation_ids;  // sorted
  std::vector<Triple> triples;           // sorted, subset of the parent KG
  std::vector<EntityId> topic_ids;
  std::map<EntityId, int> hop_of;  // min hops from the nearest topic entity

  bool contains(EntityId e) const {
    return std::binary_search(node_ids.begin(), node_ids.end(), e);
  }

  bool contains_triple(const Triple& t) const {
    return std::binary_search(triples.begin(), triples.end(), t);
  }
};

struct SubgraphOptions {
  bool directed = false;  // default traversal treats edges as undirected
  size_t max_nodes = 0;   // 0 = no cap; otherwise keep by (hop, -degree, id)
};

inline QuerySubgraph extract_subgraph(const KnowledgeGraph& kg, const BoundQuery& bq, int k,
                                      const SubgraphOptions& opt = {}) {
  if (k < 1) throw Error("extract_subgraph: hop count must be >= 1");

  // multi-source BFS
  std::map<EntityId, int> hop_of;
  std::deque<EntityId> frontier;
  for (EntityId t : bq.topic_ids) {
    if (hop_of.emplace(t, 0).second) frontier.push_back(t);
  }
  while (!frontier.empty()) {
    EntityId e = frontier.front();
    frontier.pop_front();
    int next_hop = hop_of[e] + 1;
    if (next_hop > k) continue;
    for (const auto& [r, to] : kg.out_edges(e)) {
      (void)r;
      if (hop_of.emplace(to, next_hop).second) frontier.push_back(to);
    }
    if (!opt.directed) {
      for (const auto& [r, from] : kg.in_edges(e)) {
        (void)r;
        if (hop_of.emplace(from, next_hop).second) frontier.push_back(from);
      }
    }
  }

  QuerySubgraph sg;
  sg.topic_ids = bq.topic_ids;
  std::sort(sg.topic_ids.begin(), sg.topic_ids.end());
  sg.topic_ids.erase(std::unique(sg.topic_ids.begin(), sg.topic_ids.end()), sg.topic_ids.end());

  for (const auto& [e, hop] : hop_of) sg.node_ids.push_back(e);
  std::sort(sg.node_ids.begin(), sg.node_ids.end());

  if (opt.max_nodes > 0 && sg.node_ids.size() > opt.max_nodes) {
    // keep closest, then best-connected, then lowest id; topics always stay
    std::vector<EntityId> order = sg.node_ids;
    std::stable_sort(order.begin(), order.end(), [&](EntityId a, EntityId b) {
      bool ta = std::binary_search(sg.topic_ids.begin(), sg.topic_ids.end(), a);
      bool tb = std::binary_search(sg.topic_ids.begin(), sg.topic_ids.end(), b);
      if (ta != tb) return ta;
      int ha = hop_of.at(a), hb = hop_of.at(b);
      if (ha != hb) return ha < hb;
      size_t da = kg.degree(a), db = kg.degree(b);
      if (da != db) return da > db;
      return a < b;
    });
    order.resize(opt.max_nodes);
    std::sort(order.begin(), order.end());
    sg.node_ids = std::move(order);
  }

  sg.hop_of.clear();
  for (EntityId e : sg.node_ids) sg.hop_of.emplace(e, hop_of.at(e));

  // induced edge set: every parent-KG triple between kept nodes
  std::set<RelationId> rels;
  for (EntityId e : sg.node_ids) {
    for (const auto& [r, to] : kg.out_edges(e)) {
      if (sg.contains(to)) {
        sg.triples.push_back({e, r, to});
        rels.insert(r);
      }
    }
  }
  std::sort(sg.triples.begin(), sg.triples.end());
  sg.relation_ids.assign(rels.begin(), rels.end());

  for (EntityId t : sg.topic_ids) {
    if (kg.out_edges(t).empty() && kg.in_edges(t).empty())
      log_warn("query " + bq.query.id + ": topic entity \"" + kg.entity_label(t) +
               "\" has no incident edges");
  }
  return sg;
}

struct SubgraphStats {
  size_t node_count;
  size_t triple_count;
  size_t relation_count;
  int max_hop;
};

inline SubgraphStats subgraph_stats(const QuerySubgraph& sg) {
  int max_hop = 0;
  for (const auto& [e, hop] : sg.hop_of) max_hop = std::max(max_hop, hop);
  return {sg.node_ids.size(), sg.triples.size(), sg.relation_ids.size(), max_hop};
}

// Debug/golden-test dump with labels resolved.
inline json subgraph_to_json(const QuerySubgraph& sg, const KnowledgeGraph& kg) {
  json nodes = json::array();
  for (EntityId e : sg.node_ids) nodes.push_back(kg.entity_label(e));
  json triples = json::array();
  for (const Triple& t : sg.triples)
    triples.push_back({kg.entity_label(t.head), kg.relation_label(t.rel), kg.entity_label(t.tail)});
  json hops = json::object();
  for (const auto& [e, hop] : sg.hop_of) hops[kg.entity_label(e)] = hop;
  json topics = json::array();
  for (EntityId t : sg.topic_ids) topics.push_back(kg.entity_label(t));
  return json{{"nodes", nodes}, {"triples", triples}, {"hops", hops}, {"topics", topics}};
}

}  // namespace pathmind
