#pragma once
// Message-passing encoder over the query subgraph plus a query text encoder.
//
// Per layer: m_e = AGG{ W_r . h_src } over incident triples, then
// h_e = ReLU(W_self . h_e + m_e). Messages pass in both directions by
// default, with distinct forward/reverse matrices per relation; a directed
// mode restricts messages to edge direction. Relation matrices are shared
// across layers unless untied.
//
// The query encoder is a deterministic hashed bag-of-words (d buckets,
// L2-normalized) followed by a trainable projection; precomputed embedding
// sidecars are supported as an alternative source.

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "pathmind/subgraph.hpp"
#include "pathmind/tape.hpp"

namespace pathmind {

enum class Aggregation { kSum, kMean };

struct EncoderConfig {
  size_t dim = 32;
  size_t layers = 2;
  Aggregation agg = Aggregation::kSum;
  uint64_t seed = 0;
  bool directed_messages = false;
  bool untie_layer_relations = false;

  void validate() const {
    if (dim < 2) throw Error("encoder: dim must be >= 2");
    if (layers < 1) throw Error("encoder: layers must be >= 1");
  }
};

struct EncodedGraph {
  std::map<EntityId, NodeId> node_repr;                               // h_e, final layer
  std::map<std::pair<RelationId, Direction>, NodeId> relation_nodes;  // W_r used for edge costs
  NodeId query_repr = -1;                                             // q
  size_t dim = 0;
};

namespace detail {

inline std::string relation_param_name(const KnowledgeGraph& kg, RelationId r, Direction dir,
                                       const EncoderConfig& cfg, size_t layer) {
  std::string name = "rel/" + kg.relation_label(r) + "/" + direction_name(dir);
  if (cfg.untie_layer_relations) name += "/l" + std::to_string(layer);
  return name;
}

}  // namespace detail

inline EncodedGraph encode_subgraph(Tape& tape, const QuerySubgraph& sg, const KnowledgeGraph& kg,
                                    const EncoderConfig& cfg) {
  cfg.validate();
  const size_t d = cfg.dim;

  EncodedGraph eg;
  eg.dim = d;

  // initial embeddings, keyed by label so ids never affect values
  std::map<EntityId, NodeId> h;
  for (EntityId e : sg.node_ids)
    h.emplace(e, tape.param("ent/" + kg.entity_label(e), {d}, InitKind::kEmbedding));

  for (size_t layer = 0; layer < cfg.layers; ++layer) {
    // relation matrices for this layer
    std::map<std::pair<RelationId, Direction>, NodeId> rel_nodes;
    for (RelationId r : sg.relation_ids) {
      rel_nodes.emplace(
          std::make_pair(r, Direction::kFwd),
          tape.param(detail::relation_param_name(kg, r, Direction::kFwd, cfg, layer), {d, d},
                     InitKind::kMatrix));
      if (!cfg.directed_messages)
        rel_nodes.emplace(
            std::make_pair(r, Direction::kRev),
            tape.param(detail::relation_param_name(kg, r, Direction::kRev, cfg, layer), {d, d},
                       InitKind::kMatrix));
    }
    NodeId w_self = tape.param("enc/self/l" + std::to_string(layer), {d, d}, InitKind::kMatrix);

    std::map<EntityId, std::vector<NodeId>> messages;
    for (const Triple& t : sg.triples) {
      messages[t.tail].push_back(tape.matvec(rel_nodes.at({t.rel, Direction::kFwd}), h.at(t.head)));
      if (!cfg.directed_messages)
        messages[t.head].push_back(
            tape.matvec(rel_nodes.at({t.rel, Direction::kRev}), h.at(t.tail)));
    }

    std::map<EntityId, NodeId> next;
    for (EntityId e : sg.node_ids) {
      NodeId self = tape.matvec(w_self, h.at(e));
      auto it = messages.find(e);
      NodeId pre;
      if (it == messages.end()) {
        pre = self;  // no incident messages: m_e is the zero vector
      } else {
        NodeId m = tape.add_many(it->second);
        if (cfg.agg == Aggregation::kMean) m = tape.scale(m, 1.0 / double(it->second.size()));
        pre = tape.add(self, m);
      }
      next.emplace(e, tape.relu(pre));
    }
    h = std::move(next);

    if (layer + 1 == cfg.layers) eg.relation_nodes = std::move(rel_nodes);
  }

  eg.node_repr = std::move(h);
  return eg;
}

// ---------------------------------------------------------------------------
// Query encoding.

// lowercase alphanumeric token runs
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      cur.push_back(char(std::tolower(static_cast<unsigned char>(ch))));
    } else if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(cur);
  return tokens;
}

// d-bucket hashed bag of words, L2-normalized. Deterministic across runs.
inline Tensor hashed_bow(const std::string& text, size_t d) {
  Tensor v({d});
  for (const std::string& tok : tokenize(text)) v.data[fnv1a64(tok) % d] += 1.0;
  double norm = v.l2_norm();
  if (norm > 0.0)
    for (double& x : v.data) x /= norm;
  return v;
}

using QueryEmbeddings = std::unordered_map<std::string, Tensor>;

// Sidecar format: JSONL of {id, vector}.
inline QueryEmbeddings load_query_embeddings(const std::string& path) {
  QueryEmbeddings out;
  for (const json& row : read_jsonl(path)) {
    std::vector<double> vec = row.at("vector").get<std::vector<double>>();
    out.emplace(row.at("id").get<std::string>(), Tensor::vec(std::move(vec)));
  }
  return out;
}

enum class QuerySource { kHashedBow, kPrecomputed };

// Encodes the question into the shared d-dim space through a trainable
// projection. Precomputed vectors of a different width pass through a
// trainable input adapter first.
inline NodeId encode_query(Tape& tape, const Query& q, const EncoderConfig& cfg,
                           QuerySource source = QuerySource::kHashedBow,
                           const QueryEmbeddings* precomputed = nullptr) {
  cfg.validate();
  const size_t d = cfg.dim;
  NodeId input;
  if (source == QuerySource::kPrecomputed) {
    if (!precomputed) throw Error("encode_query: precomputed source requires an embeddings table");
    auto it = precomputed->find(q.id);
    if (it == precomputed->end())
      throw Error("encode_query: no precomputed embedding for query " + q.id);
    input = tape.constant(it->second);
    if (it->second.size() != d) {
      NodeId adapter = tape.param("q/adapt/" + std::to_string(it->second.size()),
                                  {d, it->second.size()}, InitKind::kMatrix);
      input = tape.matvec(adapter, input);
    }
  } else {
    if (q.question.empty()) log_warn("query " + q.id + ": empty question, zero query vector");
    input = tape.constant(hashed_bow(q.question, d));
  }
  NodeId proj = tape.param("q/proj", {d, d}, InitKind::kMatrix);
  return tape.matvec(proj, input);
}

}  // namespace pathmind
