#pragma once
// Reasoning-path extraction. The priority strategy runs T iterations of
// top-K expansion over one-hop extensions of the frontier, keeping one best
// backpointer per kept entity; every kept entity at every depth yields one
// path, so at most K*T paths come out. Random-walk and shortest-path
// baselines share the same path type.

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pathmind/trainer.hpp"

namespace pathmind {

struct PathStep {
  EntityId from;
  RelationId rel;
  Direction dir;
  EntityId to;

  auto operator<=>(const PathStep&) const = default;
};

struct ReasoningPath {
  std::vector<PathStep> steps;
  std::vector<double> scores;  // priority of each appended entity (0 for baselines)
  double terminal_score = 0.0;

  EntityId start() const { return steps.empty() ? terminal : steps.front().from; }
  size_t length() const { return steps.size(); }
  EntityId terminal = -1;

  bool operator==(const ReasoningPath& other) const { return steps == other.steps; }
};

enum class Strategy { kPriority, kRandom, kShortest };

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kPriority: return "priority";
    case Strategy::kRandom: return "random";
    case Strategy::kShortest: return "shortest";
  }
  return "priority";
}

inline Strategy strategy_from(const std::string& s) {
  if (s == "priority") return Strategy::kPriority;
  if (s == "random") return Strategy::kRandom;
  if (s == "shortest") return Strategy::kShortest;
  throw Error("unknown strategy: " + s);
}

struct ExtractionConfig {
  int top_k = 3;
  int max_iters = 2;
  Strategy strategy = Strategy::kPriority;
  uint64_t seed = 0;

  void validate() const {
    if (top_k < 1) throw Error("extract: K must be >= 1");
    if (max_iters < 1) throw Error("extract: T must be >= 1");
  }
};

// Every chained step must be a subgraph triple (possibly reversed), starting
// from a topic entity and no longer than max_len.
inline bool validate_path(const ReasoningPath& p, const QuerySubgraph& sg, int max_len) {
  if (p.length() == 0 || int(p.length()) > max_len) return p.length() == 0;
  if (!std::binary_search(sg.topic_ids.begin(), sg.topic_ids.end(), p.start())) return false;
  EntityId at = p.start();
  for (const PathStep& s : p.steps) {
    if (s.from != at) return false;
    Triple t = s.dir == Direction::kFwd ? Triple{s.from, s.rel, s.to}
                                        : Triple{s.to, s.rel, s.from};
    if (!sg.contains_triple(t)) return false;
    at = s.to;
  }
  return at == p.terminal;
}

// One-hop extensions inside the subgraph, both directions, sorted.
inline std::vector<Neighbor> subgraph_neighbors(const QuerySubgraph& sg, EntityId e) {
  std::vector<Neighbor> out;
  auto lo = std::lower_bound(
      sg.triples.begin(), sg.triples.end(), Triple{e, 0, 0},
      [](const Triple& t, const Triple& probe) { return t.head < probe.head; });
  for (auto it = lo; it != sg.triples.end() && it->head == e; ++it)
    out.push_back({it->rel, it->tail, Direction::kFwd});
  for (const Triple& t : sg.triples)
    if (t.tail == e) out.push_back({t.rel, t.head, Direction::kRev});
  std::sort(out.begin(), out.end());
  return out;
}

// --- priority-guided extraction ---------------------------------------------

// Beam core: iterative top-K expansion driven by a per-entity score map.
// Separated from the model so the search is testable against the exhaustive
// frontier oracle with arbitrary scores.
inline std::vector<ReasoningPath> beam_extract(const QuerySubgraph& sg,
                                               const std::map<EntityId, double>& entity_scores,
                                               const ExtractionConfig& cfg) {
  cfg.validate();
  auto score_of = [&](EntityId e) { return entity_scores.at(e); };

  struct Kept {
    EntityId entity;
    double score;         // priority of this entity
    double parent_score;  // terminal score of its backpointer parent
    int depth;
    int parent_index;  // into the kept arena; -1 when parent is a topic
    EntityId parent_entity;
    RelationId rel;
    Direction dir;
  };
  std::vector<Kept> arena;
  std::vector<int> frontier;  // arena indices; -1 sentinel entries never occur

  // depth-0 frontier: topic entities as virtual kept nodes
  std::map<EntityId, int> topic_index;
  for (EntityId t : sg.topic_ids) {
    arena.push_back({t, score_of(t), 0.0, 0, -2, -1, -1, Direction::kFwd});
    topic_index.emplace(t, int(arena.size()) - 1);
    frontier.push_back(int(arena.size()) - 1);
  }

  std::vector<int> emitted;  // arena indices of kept entities, all depths
  for (int iter = 1; iter <= cfg.max_iters && !frontier.empty(); ++iter) {
    struct Candidate {
      EntityId entity;
      double score;
      double best_parent_score;
      int parent_index;
      RelationId rel;
      Direction dir;
    };
    std::map<EntityId, Candidate> candidates;
    for (int fi : frontier) {
      const Kept& parent = arena[size_t(fi)];
      for (const Neighbor& nb :
           subgraph_neighbors(sg, parent.entity)) {
        Candidate cand{nb.entity, score_of(nb.entity), parent.score, fi, nb.rel, nb.dir};
        auto it = candidates.find(nb.entity);
        if (it == candidates.end()) {
          candidates.emplace(nb.entity, cand);
        } else {
          // better backpointer: higher parent score, then lower parent id,
          // then lower relation id, then forward before reverse
          Candidate& cur = it->second;
          auto key = [&](const Candidate& c) {
            return std::make_tuple(-c.best_parent_score, arena[size_t(c.parent_index)].entity,
                                   c.rel, c.dir == Direction::kFwd ? 0 : 1);
          };
          if (key(cand) < key(cur)) cur = cand;
        }
      }
    }

    std::vector<Candidate> pool;
    pool.reserve(candidates.size());
    for (const auto& [e, c] : candidates) pool.push_back(c);
    std::sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.best_parent_score != b.best_parent_score) return a.best_parent_score > b.best_parent_score;
      return a.entity < b.entity;
    });
    if (int(pool.size()) > cfg.top_k) pool.resize(size_t(cfg.top_k));

    frontier.clear();
    for (const Candidate& c : pool) {
      arena.push_back({c.entity, c.score, c.best_parent_score, iter, c.parent_index,
                       arena[size_t(c.parent_index)].entity, c.rel, c.dir});
      frontier.push_back(int(arena.size()) - 1);
      emitted.push_back(int(arena.size()) - 1);
    }
  }

  std::vector<ReasoningPath> paths;
  paths.reserve(emitted.size());
  for (int idx : emitted) {
    ReasoningPath p;
    p.terminal = arena[size_t(idx)].entity;
    p.terminal_score = arena[size_t(idx)].score;
    // walk backpointers to the topic
    std::vector<int> chain;
    for (int cur = idx; cur >= 0 && arena[size_t(cur)].parent_index != -2;
         cur = arena[size_t(cur)].parent_index)
      chain.push_back(cur);
    std::reverse(chain.begin(), chain.end());
    for (int cur : chain) {
      const Kept& k = arena[size_t(cur)];
      p.steps.push_back({arena[size_t(k.parent_index)].entity, k.rel, k.dir, k.entity});
      p.scores.push_back(k.score);
    }
    paths.push_back(std::move(p));
  }

  std::stable_sort(paths.begin(), paths.end(), [](const ReasoningPath& a, const ReasoningPath& b) {
    if (a.terminal_score != b.terminal_score) return a.terminal_score > b.terminal_score;
    if (a.length() != b.length()) return a.length() < b.length();
    return a.terminal < b.terminal;
  });
  return paths;
}

// Model-driven extraction: score the subgraph with the trained priority
// function, then run the beam.
inline std::vector<ReasoningPath> extract_paths(const KnowledgeGraph& kg, const QuerySubgraph& sg,
                                                ParamStore& params, const Query& query,
                                                const ModelConfig& model,
                                                const ExtractionConfig& cfg,
                                                const QueryEmbeddings* embeddings = nullptr) {
  cfg.validate();
  validate_checkpoint(params, model);
  if (sg.triples.empty()) {
    log_warn("query " + query.id + ": topic-only subgraph, no paths to extract");
    return {};
  }
  Tape tape(params);
  QueryForward fwd = run_forward(tape, kg, sg, query, model, embeddings);
  std::map<EntityId, double> scores;
  for (const auto& [e, ps] : fwd.scores) scores.emplace(e, ps.score);
  return beam_extract(sg, scores, cfg);
}

// --- baselines ----------------------------------------------------------------

// K*T seeded uniform random walks of length <= T from random topic entities.
inline std::vector<ReasoningPath> random_paths(const QuerySubgraph& sg,
                                               const ExtractionConfig& cfg) {
  cfg.validate();
  Rng rng = seeded_rng(cfg.seed, "random_paths");
  std::vector<ReasoningPath> out;
  std::set<std::vector<PathStep>> seen;
  int walks = cfg.top_k * cfg.max_iters;
  for (int i = 0; i < walks; ++i) {
    EntityId at = sg.topic_ids[size_t(rng.next_below(uint64_t(sg.topic_ids.size())))];
    int target_len = 1 + int(rng.next_below(uint64_t(cfg.max_iters)));
    ReasoningPath p;
    p.terminal = at;
    for (int step = 0; step < target_len; ++step) {
      auto nbs = subgraph_neighbors(sg, at);
      if (nbs.empty()) break;
      const Neighbor& nb = nbs[size_t(rng.next_below(uint64_t(nbs.size())))];
      p.steps.push_back({at, nb.rel, nb.dir, nb.entity});
      p.scores.push_back(0.0);
      at = nb.entity;
      p.terminal = at;
    }
    if (p.steps.empty()) continue;
    if (seen.insert(p.steps).second) out.push_back(std::move(p));
  }
  return out;
}

// All minimum-hop undirected paths from any topic entity to each reachable
// target, via BFS parent sets; capped at 10 paths per target.
inline std::vector<ReasoningPath> shortest_paths(const QuerySubgraph& sg,
                                                 const std::vector<EntityId>& targets) {
  if (targets.empty()) throw Error("shortest_paths: targets must be non-empty");
  constexpr size_t kMaxPathsPerTarget = 10;

  std::map<EntityId, int> dist;
  std::map<EntityId, std::vector<PathStep>> parents;  // step INTO the key entity
  std::vector<EntityId> frontier;
  for (EntityId t : sg.topic_ids) {
    dist.emplace(t, 0);
    frontier.push_back(t);
  }
  while (!frontier.empty()) {
    std::vector<EntityId> next;
    for (EntityId e : frontier) {
      for (const Neighbor& nb : subgraph_neighbors(sg, e)) {
        auto it = dist.find(nb.entity);
        if (it == dist.end()) {
          dist.emplace(nb.entity, dist[e] + 1);
          next.push_back(nb.entity);
          parents[nb.entity].push_back({e, nb.rel, nb.dir, nb.entity});
        } else if (it->second == dist[e] + 1) {
          parents[nb.entity].push_back({e, nb.rel, nb.dir, nb.entity});
        }
      }
    }
    frontier = std::move(next);
  }

  std::vector<ReasoningPath> out;
  bool any_reached = false;
  for (EntityId target : targets) {
    auto dit = dist.find(target);
    if (dit == dist.end()) continue;
    any_reached = true;
    if (dit->second == 0) {
      ReasoningPath p;  // target is a topic: zero-length path
      p.terminal = target;
      out.push_back(std::move(p));
      continue;
    }
    // depth-first expansion over parent sets, deterministic order
    std::vector<ReasoningPath> found;
    std::function<void(EntityId, std::vector<PathStep>&)> walk = [&](EntityId at,
                                                                     std::vector<PathStep>& suffix) {
      if (found.size() >= kMaxPathsPerTarget) return;
      if (dist.at(at) == 0) {
        ReasoningPath p;
        p.steps.assign(suffix.rbegin(), suffix.rend());
        p.scores.assign(p.steps.size(), 0.0);
        p.terminal = target;
        found.push_back(std::move(p));
        return;
      }
      for (const PathStep& step : parents.at(at)) {
        suffix.push_back(step);
        walk(step.from, suffix);
        suffix.pop_back();
        if (found.size() >= kMaxPathsPerTarget) return;
      }
    };
    std::vector<PathStep> suffix;
    walk(target, suffix);
    for (auto& p : found) out.push_back(std::move(p));
  }
  if (!any_reached) log_warn("shortest_paths: no target reachable from the topic entities");
  return out;
}

// --- rendering & serialization ---------------------------------------------------

// "e0 -> r1 -> e1 -> ..."; reversed edges render the relation with ^-1.
inline std::string verbalize_path(const ReasoningPath& p, const KnowledgeGraph& kg) {
  if (p.steps.empty()) return p.terminal >= 0 ? kg.entity_label(p.terminal) : std::string();
  std::string out = kg.entity_label(p.steps.front().from);
  for (const PathStep& s : p.steps) {
    out += " -> " + kg.relation_label(s.rel);
    if (s.dir == Direction::kRev) out += "^-1";
    out += " -> " + kg.entity_label(s.to);
  }
  return out;
}

// Paths file row: {query_id, strategy, paths:[{entities, relations, directions, scores}]}
inline json paths_to_json(const std::string& query_id, Strategy strategy,
                          const std::vector<ReasoningPath>& paths, const KnowledgeGraph& kg) {
  json rows = json::array();
  for (const ReasoningPath& p : paths) {
    json entities = json::array();
    json relations = json::array();
    json directions = json::array();
    if (!p.steps.empty()) entities.push_back(kg.entity_label(p.steps.front().from));
    else if (p.terminal >= 0) entities.push_back(kg.entity_label(p.terminal));
    for (const PathStep& s : p.steps) {
      relations.push_back(kg.relation_label(s.rel));
      directions.push_back(direction_name(s.dir));
      entities.push_back(kg.entity_label(s.to));
    }
    rows.push_back({{"entities", entities},
                    {"relations", relations},
                    {"directions", directions},
                    {"scores", p.scores},
                    {"terminal_score", p.terminal_score}});
  }
  return json{{"query_id", query_id}, {"strategy", strategy_name(strategy)}, {"paths", rows}};
}

struct StoredPaths {
  std::string query_id;
  Strategy strategy = Strategy::kPriority;
  // label-level view, independent of any particular interning
  struct StoredPath {
    std::vector<std::string> entities;
    std::vector<std::string> relations;
    std::vector<std::string> directions;
    std::vector<double> scores;
    double terminal_score = 0.0;

    const std::string& terminal_label() const { return entities.back(); }
    size_t length() const { return relations.size(); }
  };
  std::vector<StoredPath> paths;
};

inline StoredPaths stored_paths_from_json(const json& row) {
  StoredPaths out;
  out.query_id = row.at("query_id").get<std::string>();
  out.strategy = strategy_from(row.at("strategy").get<std::string>());
  for (const json& p : row.at("paths")) {
    StoredPaths::StoredPath sp;
    sp.entities = p.at("entities").get<std::vector<std::string>>();
    sp.relations = p.at("relations").get<std::vector<std::string>>();
    sp.directions = p.at("directions").get<std::vector<std::string>>();
    sp.scores = p.at("scores").get<std::vector<double>>();
    sp.terminal_score = p.value("terminal_score", 0.0);
    out.paths.push_back(std::move(sp));
  }
  return out;
}

}  // namespace pathmind
