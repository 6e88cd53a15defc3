#pragma once
// Priority-function training: binary cross-entropy over answer vs non-answer
// entities in each query subgraph, full pipeline per query
// (extract -> encode -> accumulate -> score -> loss), batch-averaged
// gradients, Adam or SGD with warmup.
//
// Per-query backward passes collect gradients into private buffers that are
// folded in query order, so results do not depend on the worker count.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pathmind/optim.hpp"
#include "pathmind/priority.hpp"

namespace pathmind {

// Everything the scoring pipeline needs to rebuild itself from a checkpoint.
struct ModelConfig {
  EncoderConfig encoder;
  EdgeCostMode edge_cost = EdgeCostMode::kElementwise;
  PriorityMode mode = PriorityMode::kFull;
  int subgraph_hops = 3;
  int l_max = 2;
  QuerySource query_source = QuerySource::kHashedBow;

  json to_json() const {
    return json{{"d", encoder.dim},
                {"layers", encoder.layers},
                {"agg", encoder.agg == Aggregation::kSum ? "sum" : "mean"},
                {"directed_messages", encoder.directed_messages},
                {"untied_relations", encoder.untie_layer_relations},
                {"edge_cost", edge_cost == EdgeCostMode::kElementwise ? "elementwise" : "bilinear"},
                {"mode", priority_mode_name(mode)},
                {"hops", subgraph_hops},
                {"l_max", l_max},
                {"query_source", query_source == QuerySource::kHashedBow ? "hashed_bow" : "precomputed"}};
  }

  static ModelConfig from_json(const json& j) {
    ModelConfig cfg;
    cfg.encoder.dim = j.at("d").get<size_t>();
    cfg.encoder.layers = j.at("layers").get<size_t>();
    cfg.encoder.agg = j.value("agg", "sum") == std::string("mean") ? Aggregation::kMean
                                                                   : Aggregation::kSum;
    cfg.encoder.directed_messages = j.value("directed_messages", false);
    cfg.encoder.untie_layer_relations = j.value("untied_relations", false);
    cfg.edge_cost = j.value("edge_cost", "elementwise") == std::string("bilinear")
                        ? EdgeCostMode::kBilinear
                        : EdgeCostMode::kElementwise;
    cfg.mode = priority_mode_from(j.value("mode", "full"));
    cfg.subgraph_hops = j.at("hops").get<int>();
    cfg.l_max = j.at("l_max").get<int>();
    cfg.query_source = j.value("query_source", "hashed_bow") == std::string("precomputed")
                           ? QuerySource::kPrecomputed
                           : QuerySource::kHashedBow;
    return cfg;
  }
};

// Shapes implied by the config must match what the store carries.
inline void validate_checkpoint(const ParamStore& params, const ModelConfig& cfg) {
  const size_t d = cfg.encoder.dim;
  const std::vector<std::pair<std::string, std::vector<size_t>>> expected = {
      {"mlp/w1", {d, d}}, {"mlp/w2", {1, d}}, {"q/proj", {d, d}}};
  for (const auto& [name, shape] : expected) {
    if (!params.has(name)) continue;  // head params appear after first training pass
    if (params.get(name).shape != shape)
      throw Error("checkpoint error: " + name + " has shape " + params.get(name).shape_str() +
                  ", config expects " + Tensor(shape).shape_str());
  }
}

// --- BCE objective ----------------------------------------------------------

struct ScoredEntity {
  EntityId entity;
  double score;
  bool is_answer;
};

// L = -sum_pos log s - sum_neg log(1-s). Direct formula over given scores.
inline double bce_loss(const std::vector<ScoredEntity>& scores) {
  bool any_answer = false;
  double loss = 0.0;
  for (const ScoredEntity& s : scores) {
    if (s.score <= 0.0 || s.score >= 1.0)
      throw Error("bce_loss: scores must lie strictly inside (0,1)");
    if (s.is_answer) {
      any_answer = true;
      loss -= std::log(s.score);
    } else {
      loss -= std::log(1.0 - s.score);
    }
  }
  if (!any_answer) throw Error("bce_loss: no answer entity present");
  return loss;
}

// Tape variant built on pre-sigmoid logits (numerically stable). When
// negative_ratio > 0, the negative sum runs over a seeded uniform sample and
// is rescaled by total/sampled.
inline NodeId bce_loss_node(Tape& tape, const std::map<EntityId, PriorityScore>& scores,
                            const std::set<EntityId>& answers, int negative_ratio, Rng& rng) {
  std::vector<NodeId> pos_terms;
  std::vector<EntityId> negatives;
  for (const auto& [e, ps] : scores) {
    if (answers.count(e))
      pos_terms.push_back(tape.affine(tape.log_sigmoid(ps.logit), -1.0, 0.0));
    else
      negatives.push_back(e);
  }
  if (pos_terms.empty()) throw Error("bce_loss: no answer entity present in the subgraph");

  std::vector<EntityId> sampled = negatives;
  double rescale = 1.0;
  size_t want = negative_ratio > 0 ? size_t(negative_ratio) * pos_terms.size() : negatives.size();
  if (negative_ratio > 0 && want < negatives.size()) {
    for (size_t i = 0; i < want; ++i) {  // partial Fisher-Yates
      size_t j = i + size_t(rng.next_below(uint64_t(sampled.size() - i)));
      std::swap(sampled[i], sampled[j]);
    }
    sampled.resize(want);
    std::sort(sampled.begin(), sampled.end());
    rescale = double(negatives.size()) / double(want);
  }

  std::vector<NodeId> terms = std::move(pos_terms);
  if (!sampled.empty()) {
    std::vector<NodeId> neg_terms;
    neg_terms.reserve(sampled.size());
    for (EntityId e : sampled)
      neg_terms.push_back(tape.affine(tape.log_one_minus_sigmoid(scores.at(e).logit), -1.0, 0.0));
    NodeId neg_sum = tape.add_many(neg_terms);
    terms.push_back(rescale != 1.0 ? tape.scale(neg_sum, rescale) : neg_sum);
  }
  return tape.add_many(terms);
}

// --- per-query forward pass ---------------------------------------------------

struct QueryForward {
  EncodedGraph encoded;
  CostTable costs;
  std::map<EntityId, PriorityScore> scores;
};

inline QueryForward run_forward(Tape& tape, const KnowledgeGraph& kg, const QuerySubgraph& sg,
                                const Query& query, const ModelConfig& cfg,
                                const QueryEmbeddings* embeddings = nullptr) {
  QueryForward fwd;
  fwd.encoded = encode_subgraph(tape, sg, kg, cfg.encoder);
  fwd.encoded.query_repr = encode_query(tape, query, cfg.encoder, cfg.query_source, embeddings);
  fwd.costs = accumulate_costs(tape, sg, fwd.encoded, kg, cfg.l_max, cfg.edge_cost);
  fwd.scores = score_entities(tape, sg, fwd.costs, fwd.encoded.query_repr, cfg.encoder.dim,
                              cfg.mode);
  return fwd;
}

// Creates every parameter the forward passes will touch, so later passes
// only read the store (safe across workers).
inline void ensure_parameters(ParamStore& params, const KnowledgeGraph& kg,
                              const std::vector<QuerySubgraph>& subgraphs,
                              const ModelConfig& cfg) {
  const size_t d = cfg.encoder.dim;
  for (const QuerySubgraph& sg : subgraphs) {
    for (EntityId e : sg.node_ids)
      params.get_or_create("ent/" + kg.entity_label(e), {d}, InitKind::kEmbedding);
    for (RelationId r : sg.relation_ids) {
      for (Direction dir : {Direction::kFwd, Direction::kRev}) {
        if (cfg.encoder.untie_layer_relations) {
          for (size_t l = 0; l < cfg.encoder.layers; ++l)
            params.get_or_create(detail::relation_param_name(kg, r, dir, cfg.encoder, l), {d, d},
                                 InitKind::kMatrix);
        } else {
          params.get_or_create("rel/" + kg.relation_label(r) + "/" + direction_name(dir), {d, d},
                               InitKind::kMatrix);
        }
      }
    }
  }
  for (size_t l = 0; l < cfg.encoder.layers; ++l)
    params.get_or_create("enc/self/l" + std::to_string(l), {d, d}, InitKind::kMatrix);
  params.get_or_create("q/proj", {d, d}, InitKind::kMatrix);
  params.get_or_create("fc/w1", {d, 2 * d}, InitKind::kMatrix);
  params.get_or_create("fc/b1", {d}, InitKind::kZero);
  params.get_or_create("fc/w2", {d, d}, InitKind::kMatrix);
  params.get_or_create("fc/b2", {d}, InitKind::kZero);
  params.get_or_create("mlp/w1", {d, d}, InitKind::kMatrix);
  params.get_or_create("mlp/b1", {d}, InitKind::kZero);
  params.get_or_create("mlp/w2", {1, d}, InitKind::kMatrix);
  params.get_or_create("mlp/b2", {1}, InitKind::kZero);
}

// --- ranking & AUC ------------------------------------------------------------

// Entities by descending priority, ties broken by ascending id.
inline std::vector<std::pair<EntityId, double>> rank_entities(
    const KnowledgeGraph& kg, const QuerySubgraph& sg, ParamStore& params, const Query& query,
    const ModelConfig& cfg, const QueryEmbeddings* embeddings = nullptr) {
  validate_checkpoint(params, cfg);
  Tape tape(params);
  QueryForward fwd = run_forward(tape, kg, sg, query, cfg, embeddings);
  std::vector<std::pair<EntityId, double>> ranked;
  ranked.reserve(fwd.scores.size());
  for (const auto& [e, ps] : fwd.scores) ranked.emplace_back(e, ps.score);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return ranked;
}

// Mann-Whitney AUC with average ranks for ties; 0.5 credit means chance.
inline double ranking_auc(const std::vector<std::pair<double, bool>>& scored) {
  std::vector<std::pair<double, bool>> sorted = scored;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  size_t n_pos = 0, n_neg = 0;
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < sorted.size()) {
    size_t j = i;
    while (j < sorted.size() && sorted[j].first == sorted[i].first) ++j;
    double avg_rank = 0.5 * double(i + 1 + j);  // ranks are 1-based
    for (size_t k = i; k < j; ++k)
      if (sorted[k].second) rank_sum_pos += avg_rank;
    i = j;
  }
  for (const auto& [score, is_pos] : sorted) (is_pos ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) return 0.5;
  double u = rank_sum_pos - double(n_pos) * double(n_pos + 1) / 2.0;
  return u / (double(n_pos) * double(n_neg));
}

// --- training loop --------------------------------------------------------------

struct TrainConfig {
  int epochs = 50;
  int batch_size = 8;
  double learning_rate = 1e-3;
  double warmup_ratio = 0.03;
  int negative_ratio = 0;  // 0 = every negative, the literal objective
  uint64_t seed = 0;
  OptimKind optimizer = OptimKind::kAdam;
  size_t jobs = 1;
  ModelConfig model;

  void validate() const {
    if (epochs < 1) throw Error("train: epochs must be >= 1");
    if (batch_size < 1) throw Error("train: batch_size must be >= 1");
    if (negative_ratio < 0) throw Error("train: negative_ratio must be >= 0");
  }
};

struct TrainReport {
  std::vector<double> epoch_loss;      // mean per-query loss
  std::vector<double> epoch_auc;       // held-out macro AUC (training split if none)
  size_t skipped_queries = 0;          // no answer inside the subgraph
  size_t trained_queries = 0;
  std::string checkpoint_path;

  json to_json() const {
    return json{{"epoch_loss", epoch_loss},
                {"epoch_auc", epoch_auc},
                {"skipped_queries", skipped_queries},
                {"trained_queries", trained_queries},
                {"checkpoint_path", checkpoint_path}};
  }
};

namespace detail {

struct PreparedQuery {
  Query query;
  QuerySubgraph subgraph;
  std::set<EntityId> answers;  // answers present in the subgraph
};

inline std::vector<PreparedQuery> prepare_queries(const KnowledgeGraph& kg,
                                                  const std::vector<Query>& queries,
                                                  const ModelConfig& cfg, bool require_answers,
                                                  size_t* skipped) {
  std::vector<PreparedQuery> out;
  for (const Query& q : queries) {
    BoundQuery bq = bind_query(kg, q);
    PreparedQuery pq;
    pq.query = q;
    pq.subgraph = extract_subgraph(kg, bq, cfg.subgraph_hops);
    for (EntityId a : bq.answer_ids)
      if (pq.subgraph.contains(a)) pq.answers.insert(a);
    if (require_answers && pq.answers.empty()) {
      if (skipped) ++(*skipped);
      log_warn("query " + q.id + ": no answer entity inside the subgraph, skipped");
      continue;
    }
    out.push_back(std::move(pq));
  }
  return out;
}

}  // namespace detail

// Macro-averaged held-out AUC under the current parameters.
inline double evaluate_auc(const KnowledgeGraph& kg,
                           const std::vector<detail::PreparedQuery>& queries, ParamStore& params,
                           const ModelConfig& cfg, const QueryEmbeddings* embeddings = nullptr) {
  double total = 0.0;
  size_t counted = 0;
  for (const auto& pq : queries) {
    if (pq.answers.empty() || pq.answers.size() == pq.subgraph.node_ids.size()) continue;
    Tape tape(params);
    QueryForward fwd = run_forward(tape, kg, pq.subgraph, pq.query, cfg, embeddings);
    std::vector<std::pair<double, bool>> scored;
    scored.reserve(fwd.scores.size());
    for (const auto& [e, ps] : fwd.scores)
      scored.emplace_back(ps.score, pq.answers.count(e) > 0);
    total += ranking_auc(scored);
    ++counted;
  }
  return counted == 0 ? 0.0 : total / double(counted);
}

struct TrainResult {
  ParamStore params;
  TrainReport report;
};

inline TrainResult train_priority(const KnowledgeGraph& kg, const std::vector<Query>& train_split,
                                  const TrainConfig& cfg,
                                  const std::vector<Query>& holdout_split = {},
                                  const QueryEmbeddings* embeddings = nullptr) {
  cfg.validate();
  cfg.model.encoder.validate();

  TrainResult result{ParamStore(cfg.seed), TrainReport{}};
  ParamStore& params = result.params;
  TrainReport& report = result.report;

  auto prepared =
      detail::prepare_queries(kg, train_split, cfg.model, true, &report.skipped_queries);
  if (prepared.empty())
    throw Error("train: every query was skipped (no answers inside any subgraph)");
  report.trained_queries = prepared.size();

  auto holdout = detail::prepare_queries(kg, holdout_split, cfg.model, false, nullptr);
  const auto& auc_split = holdout.empty() ? prepared : holdout;

  std::vector<QuerySubgraph> subgraphs;
  subgraphs.reserve(prepared.size());
  for (const auto& pq : prepared) subgraphs.push_back(pq.subgraph);
  for (const auto& pq : holdout) subgraphs.push_back(pq.subgraph);
  ensure_parameters(params, kg, subgraphs, cfg.model);

  size_t steps_per_epoch = (prepared.size() + size_t(cfg.batch_size) - 1) / size_t(cfg.batch_size);
  OptimState optimizer({.kind = cfg.optimizer,
                        .learning_rate = cfg.learning_rate,
                        .warmup_ratio = cfg.warmup_ratio,
                        .total_steps = size_t(cfg.epochs) * steps_per_epoch});

  Rng shuffle_rng = seeded_rng(cfg.seed, "train/shuffle");
  Rng sample_rng = seeded_rng(cfg.seed, "train/negatives");

  std::vector<size_t> order(prepared.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[size_t(shuffle_rng.next_below(uint64_t(i)))]);

    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size(); start += size_t(cfg.batch_size)) {
      size_t end = std::min(order.size(), start + size_t(cfg.batch_size));

      // deterministic negative-sampling streams per query slot
      std::vector<uint64_t> neg_seeds(end - start);
      for (size_t i = 0; i < neg_seeds.size(); ++i) neg_seeds[i] = sample_rng.next_u64();

      auto grads = parallel_map<std::pair<double, std::map<std::string, Tensor>>>(
          cfg.jobs, end - start, [&](size_t slot) {
            const auto& pq = prepared[order[start + slot]];
            Tape tape(params);
            QueryForward fwd = run_forward(tape, kg, pq.subgraph, pq.query, cfg.model, embeddings);
            Rng rng(neg_seeds[slot]);
            NodeId loss =
                bce_loss_node(tape, fwd.scores, pq.answers, cfg.negative_ratio, rng);
            double value = tape.val(loss).data[0];
            return std::make_pair(value, tape.backward_collect(loss));
          });

      // fold in slot order, average over the batch
      for (auto& [value, gmap] : grads) {
        epoch_loss += value;
        for (auto& [name, g] : gmap) {
          Tensor& into = params.grad(name);
          for (size_t i = 0; i < g.size(); ++i) into.data[i] += g.data[i];
        }
      }
      params.mark_has_grads();
      params.scale_grads(1.0 / double(end - start));
      optimizer.step(params);
    }

    epoch_loss /= double(prepared.size());
    if (!std::isfinite(epoch_loss))
      throw Error("train: loss diverged at epoch " + std::to_string(epoch));
    report.epoch_loss.push_back(epoch_loss);
    report.epoch_auc.push_back(evaluate_auc(kg, auc_split, params, cfg.model, embeddings));
  }
  return result;
}

}  // namespace pathmind
