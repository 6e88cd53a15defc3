#pragma once
// Immutable knowledge graph over interned entity/relation ids, with forward
// and backward adjacency indices, plus query loading and binding.
//
// Interning is order-independent: triples are sorted before ids are assigned,
// so the same file contents always produce the same ids. Exact duplicate
// triples are dropped at load (the walk DP would double-count them).

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pathmind/util.hpp"

namespace pathmind {

using EntityId = int32_t;
using RelationId = int32_t;

enum class Direction : uint8_t { kFwd = 0, kRev = 1 };

inline const char* direction_name(Direction d) { return d == Direction::kFwd ? "fwd" : "rev"; }

struct Triple {
  EntityId head;
  RelationId rel;
  EntityId tail;

  auto operator<=>(const Triple&) const = default;
};

// One incident edge as seen from a node: kFwd means the node is the head.
struct Neighbor {
  RelationId rel;
  EntityId entity;
  Direction dir;

  auto operator<=>(const Neighbor&) const = default;
};

class KnowledgeGraph {
 public:
  // Builds from label triples: sorts, dedups, interns in first-appearance
  // order of the sorted list. Returns the number of duplicates dropped.
  static KnowledgeGraph build(std::vector<std::array<std::string, 3>> label_triples,
                              size_t* duplicates_dropped = nullptr) {
    if (label_triples.empty()) throw Error("empty knowledge graph");
    std::sort(label_triples.begin(), label_triples.end());
    size_t before = label_triples.size();
    label_triples.erase(std::unique(label_triples.begin(), label_triples.end()),
                        label_triples.end());
    size_t dropped = before - label_triples.size();
    if (duplicates_dropped) *duplicates_dropped = dropped;
    if (dropped > 0)
      log_info("dropped " + std::to_string(dropped) + " duplicate triple(s) at load");

    KnowledgeGraph kg;
    kg.triples_.reserve(label_triples.size());
    for (const auto& [h, r, t] : label_triples) {
      EntityId hid = kg.intern_entity(h);
      RelationId rid = kg.intern_relation(r);
      EntityId tid = kg.intern_entity(t);
      kg.triples_.push_back({hid, rid, tid});
    }
    kg.build_indices();
    return kg;
  }

  size_t entity_count() const { return entity_labels_.size(); }
  size_t relation_count() const { return relation_labels_.size(); }
  size_t triple_count() const { return triples_.size(); }

  const std::vector<Triple>& triples() const { return triples_; }

  const std::string& entity_label(EntityId id) const {
    check_entity(id);
    return entity_labels_[size_t(id)];
  }

  const std::string& relation_label(RelationId id) const {
    if (id < 0 || size_t(id) >= relation_labels_.size())
      throw Error("unknown relation id: " + std::to_string(id));
    return relation_labels_[size_t(id)];
  }

  std::optional<EntityId> find_entity(const std::string& label) const {
    auto it = entity_ids_.find(label);
    if (it == entity_ids_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<RelationId> find_relation(const std::string& label) const {
    auto it = relation_ids_.find(label);
    if (it == relation_ids_.end()) return std::nullopt;
    return it->second;
  }

  const std::vector<std::pair<RelationId, EntityId>>& out_edges(EntityId e) const {
    check_entity(e);
    return out_index_[size_t(e)];
  }

  const std::vector<std::pair<RelationId, EntityId>>& in_edges(EntityId e) const {
    check_entity(e);
    return in_index_[size_t(e)];
  }

  size_t degree(EntityId e) const { return out_edges(e).size() + in_edges(e).size(); }

  enum class NeighborDirection { kOut, kIn, kBoth };

  // Incident triples in the requested direction, sorted by (rel, entity, dir).
  std::vector<Neighbor> neighbors(EntityId e, NeighborDirection dir) const {
    check_entity(e);
    std::vector<Neighbor> out;
    if (dir == NeighborDirection::kOut || dir == NeighborDirection::kBoth)
      for (const auto& [r, t] : out_index_[size_t(e)]) out.push_back({r, t, Direction::kFwd});
    if (dir == NeighborDirection::kIn || dir == NeighborDirection::kBoth)
      for (const auto& [r, h] : in_index_[size_t(e)]) out.push_back({r, h, Direction::kRev});
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  void check_entity(EntityId id) const {
    if (id < 0 || size_t(id) >= entity_labels_.size())
      throw Error("unknown entity id: " + std::to_string(id));
  }

  EntityId intern_entity(const std::string& label) {
    auto it = entity_ids_.find(label);
    if (it != entity_ids_.end()) return it->second;
    EntityId id = EntityId(entity_labels_.size());
    entity_labels_.push_back(label);
    entity_ids_.emplace(label, id);
    return id;
  }

  RelationId intern_relation(const std::string& label) {
    auto it = relation_ids_.find(label);
    if (it != relation_ids_.end()) return it->second;
    RelationId id = RelationId(relation_labels_.size());
    relation_labels_.push_back(label);
    relation_ids_.emplace(label, id);
    return id;
  }

  void build_indices() {
    out_index_.assign(entity_labels_.size(), {});
    in_index_.assign(entity_labels_.size(), {});
    for (const Triple& t : triples_) {
      out_index_[size_t(t.head)].emplace_back(t.rel, t.tail);
      in_index_[size_t(t.tail)].emplace_back(t.rel, t.head);
    }
    for (auto& edges : out_index_) std::sort(edges.begin(), edges.end());
    for (auto& edges : in_index_) std::sort(edges.begin(), edges.end());
  }

  std::vector<std::string> entity_labels_;
  std::vector<std::string> relation_labels_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::unordered_map<std::string, RelationId> relation_ids_;
  std::vector<Triple> triples_;
  std::vector<std::vector<std::pair<RelationId, EntityId>>> out_index_;
  std::vector<std::vector<std::pair<RelationId, EntityId>>> in_index_;
};

// TSV loader: head<TAB>relation<TAB>tail per line, UTF-8, '#' comments skipped.
inline KnowledgeGraph load_kg(const std::string& path, size_t* duplicates_dropped = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open KG file: " + path);
  std::vector<std::array<std::string, 3>> rows;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty())
      throw Error(path + ": line " + std::to_string(lineno) +
                  ": expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    rows.push_back({std::move(fields[0]), std::move(fields[1]), std::move(fields[2])});
  }
  if (rows.empty()) throw Error("empty knowledge graph: " + path);
  KnowledgeGraph kg = KnowledgeGraph::build(std::move(rows), duplicates_dropped);
  log_info(path + ": " + std::to_string(kg.entity_count()) + " entities, " +
           std::to_string(kg.relation_count()) + " relations, " +
           std::to_string(kg.triple_count()) + " triples");
  return kg;
}

// Re-serialization partner of load_kg: sorted unique label triples.
inline void save_kg(const KnowledgeGraph& kg, const std::string& path) {
  std::vector<std::string> lines;
  lines.reserve(kg.triple_count());
  for (const Triple& t : kg.triples())
    lines.push_back(kg.entity_label(t.head) + "\t" + kg.relation_label(t.rel) + "\t" +
                    kg.entity_label(t.tail));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += "\n";
  }
  write_file(path, out);
}

// ---------------------------------------------------------------------------
// Queries.

struct Query {
  std::string id;
  std::string question;
  std::vector<std::string> topic_entities;
  std::vector<std::string> answers;  // may be empty at inference
};

struct BoundQuery {
  Query query;
  std::vector<EntityId> topic_ids;
  std::vector<EntityId> answer_ids;
  std::vector<std::string> unresolved_answers;  // recorded, never dropped silently
};

// JSONL: one object per line with id, question, topic_entities, answers (optional).
inline std::vector<Query> load_queries(const std::string& path) {
  std::vector<Query> queries;
  for (const json& row : read_jsonl(path)) {
    Query q;
    q.id = row.at("id").get<std::string>();
    q.question = row.at("question").get<std::string>();
    q.topic_entities = row.at("topic_entities").get<std::vector<std::string>>();
    if (q.topic_entities.empty())
      throw Error(path + ": query " + q.id + ": topic_entities must be non-empty");
    if (row.contains("answers")) q.answers = row["answers"].get<std::vector<std::string>>();
    queries.push_back(std::move(q));
  }
  return queries;
}

inline void save_queries(const std::vector<Query>& queries, const std::string& path) {
  std::vector<json> rows;
  rows.reserve(queries.size());
  for (const Query& q : queries)
    rows.push_back({{"id", q.id},
                    {"question", q.question},
                    {"topic_entities", q.topic_entities},
                    {"answers", q.answers}});
  write_jsonl(path, rows);
}

// Resolves topic and answer labels to ids. Unresolvable topics are an error;
// unresolvable answers are recorded on the result.
inline BoundQuery bind_query(const KnowledgeGraph& kg, const Query& q) {
  BoundQuery bound;
  bound.query = q;
  std::vector<std::string> missing;
  for (const std::string& label : q.topic_entities) {
    if (auto id = kg.find_entity(label))
      bound.topic_ids.push_back(*id);
    else
      missing.push_back(label);
  }
  if (!missing.empty()) {
    std::string msg = "query " + q.id + ": unresolvable topic entities:";
    for (const auto& m : missing) msg += " \"" + m + "\"";
    throw Error(msg);
  }
  for (const std::string& label : q.answers) {
    if (auto id = kg.find_entity(label))
      bound.answer_ids.push_back(*id);
    else
      bound.unresolved_answers.push_back(label);
  }
  if (!bound.unresolved_answers.empty())
    log_warn("query " + q.id + ": " + std::to_string(bound.unresolved_answers.size()) +
             " answer label(s) not in the KG");
  return bound;
}

}  // namespace pathmind
