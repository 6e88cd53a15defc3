#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "pathmind/trainer.hpp"

using namespace pathmind;

namespace {

// Tiny learnable task: each query asks for the node reached from its topic
// through the relation named in the question. Chains share relation labels
// across queries, so held-out questions are answerable.
struct MicroBench {
  KnowledgeGraph kg;
  std::vector<Query> train;
  std::vector<Query> holdout;

  static MicroBench make(uint64_t seed, int n_queries = 24, int n_nodes = 30) {
    Rng rng(seed);
    std::vector<std::array<std::string, 3>> triples;
    std::vector<Query> queries;
    const int n_rels = 3;
    // planted one-hop facts, one relation family per query
    std::set<std::pair<std::string, std::string>> used;  // (topic, rel) out-degree 1
    for (int i = 0; i < n_queries; ++i) {
      int rel = int(rng.next_below(n_rels));
      std::string topic, relname = "fam" + std::to_string(rel);
      do {
        topic = "n" + std::to_string(rng.next_below(uint64_t(n_nodes)));
      } while (used.count({topic, relname}));
      used.insert({topic, relname});
      std::string answer = "ans" + std::to_string(rel) + "_" + std::to_string(rng.next_below(5));
      triples.push_back({topic, relname, answer});
      queries.push_back({.id = "q" + std::to_string(i),
                         .question = "find the " + relname + " target",
                         .topic_entities = {topic},
                         .answers = {answer}});
    }
    // noise edges
    for (int i = 0; i < n_nodes; ++i)
      triples.push_back({"n" + std::to_string(rng.next_below(uint64_t(n_nodes))), "noise",
                         "n" + std::to_string(rng.next_below(uint64_t(n_nodes)))});

    MicroBench mb{KnowledgeGraph::build(std::move(triples)), {}, {}};
    for (size_t i = 0; i < queries.size(); ++i)
      (i % 4 == 3 ? mb.holdout : mb.train).push_back(queries[i]);
    return mb;
  }
};

TrainConfig micro_config(uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = 25;
  cfg.batch_size = 8;
  cfg.learning_rate = 5e-3;
  cfg.seed = seed;
  cfg.model.encoder.dim = 8;
  cfg.model.encoder.layers = 1;
  cfg.model.encoder.seed = seed;
  cfg.model.subgraph_hops = 2;
  cfg.model.l_max = 2;
  return cfg;
}

}  // namespace

TEST_CASE("bce matches the closed form on symmetric scores") {
  // one positive and one negative at 0.5: L = 2 ln 2
  double loss = bce_loss({{0, 0.5, true}, {1, 0.5, false}});
  CHECK(loss == Catch::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("bce vanishes as scores approach perfection") {
  double prev = bce_loss({{0, 0.9, true}, {1, 0.1, false}});
  for (double eps : {1e-2, 1e-4, 1e-6, 1e-9}) {
    double loss = bce_loss({{0, 1.0 - eps, true}, {1, eps, false}});
    CHECK(loss < prev);
    prev = loss;
  }
  CHECK(prev < 1e-8);
}

TEST_CASE("bce on 3 positives and 5 negatives matches the hand sum") {
  std::vector<ScoredEntity> scores = {{0, 0.8, true},  {1, 0.6, true},  {2, 0.9, true},
                                      {3, 0.3, false}, {4, 0.1, false}, {5, 0.5, false},
                                      {6, 0.2, false}, {7, 0.4, false}};
  double expect = -(std::log(0.8) + std::log(0.6) + std::log(0.9)) -
                  (std::log(0.7) + std::log(0.9) + std::log(0.5) + std::log(0.8) + std::log(0.6));
  CHECK(bce_loss(scores) == Catch::Approx(expect).epsilon(1e-12));
}

TEST_CASE("bce rejects degenerate inputs") {
  CHECK_THROWS_AS(bce_loss({{0, 0.5, false}}), Error);
  CHECK_THROWS_AS(bce_loss({{0, 1.0, true}}), Error);
}

TEST_CASE("all-0.5 scores cost exactly n ln 2") {
  std::vector<ScoredEntity> scores;
  for (int i = 0; i < 17; ++i) scores.push_back({EntityId(i), 0.5, i == 0});
  CHECK(bce_loss(scores) == Catch::Approx(17.0 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("logit gradients are (s-1) for positives and s for negatives") {
  ParamStore params(1);
  Tape tape(params);
  NodeId zp = tape.param("zp", {1}, InitKind::kEmbedding);
  NodeId zn = tape.param("zn", {1}, InitKind::kEmbedding);

  std::map<EntityId, PriorityScore> scores;
  scores[0] = {.entity = 0, .score = sigmoid(tape.val(zp)).data[0], .logit = zp};
  scores[1] = {.entity = 1, .score = sigmoid(tape.val(zn)).data[0], .logit = zn};
  Rng rng(0);
  NodeId loss = bce_loss_node(tape, scores, {0}, 0, rng);
  tape.backward(loss);

  CHECK(params.grad("zp").data[0] == Catch::Approx(scores[0].score - 1.0).margin(1e-12));
  CHECK(params.grad("zn").data[0] == Catch::Approx(scores[1].score).margin(1e-12));
}

TEST_CASE("tape bce equals the pure formula, with and without sampling") {
  ParamStore params(4);
  Tape tape(params);
  std::map<EntityId, PriorityScore> scores;
  std::vector<ScoredEntity> plain;
  Rng init(9);
  for (EntityId e = 0; e < 12; ++e) {
    NodeId z = tape.constant(Tensor::scalar(init.uniform(-2, 2)));
    bool is_answer = e < 3;
    scores[e] = {.entity = e, .score = sigmoid(tape.val(z)).data[0], .logit = z};
    plain.push_back({e, scores[e].score, is_answer});
  }
  Rng rng(1);
  NodeId full = bce_loss_node(tape, scores, {0, 1, 2}, 0, rng);
  CHECK(tape.val(full).data[0] == Catch::Approx(bce_loss(plain)).epsilon(1e-12));

  // sampled negatives: 2 per positive -> 6 of 9, rescaled by 9/6
  Rng rng2(7);
  NodeId sampled = bce_loss_node(tape, scores, {0, 1, 2}, 2, rng2);
  CHECK(tape.val(sampled).data[0] > 0.0);
  Rng rng3(7);
  NodeId sampled_again = bce_loss_node(tape, scores, {0, 1, 2}, 2, rng3);
  CHECK(tape.val(sampled).data[0] == tape.val(sampled_again).data[0]);
}

TEST_CASE("gradient flows end to end through the full pipeline") {
  // encoder -> cost DP -> future cost -> priority -> BCE vs finite differences
  MicroBench mb = MicroBench::make(3, 6, 8);
  TrainConfig cfg = micro_config(3);
  cfg.model.encoder.dim = 4;

  BoundQuery bq = bind_query(mb.kg, mb.train[0]);
  QuerySubgraph sg = extract_subgraph(mb.kg, bq, cfg.model.subgraph_hops);
  std::set<EntityId> answers;
  for (EntityId a : bq.answer_ids)
    if (sg.contains(a)) answers.insert(a);
  REQUIRE_FALSE(answers.empty());

  ParamStore params(17);
  ensure_parameters(params, mb.kg, {sg}, cfg.model);

  auto loss_value = [&]() {
    Tape tape(params);
    QueryForward fwd = run_forward(tape, mb.kg, sg, mb.train[0], cfg.model);
    Rng rng(0);
    return tape.val(bce_loss_node(tape, fwd.scores, answers, 0, rng)).data[0];
  };

  {
    Tape tape(params);
    QueryForward fwd = run_forward(tape, mb.kg, sg, mb.train[0], cfg.model);
    Rng rng(0);
    tape.backward(bce_loss_node(tape, fwd.scores, answers, 0, rng));
  }

  for (const char* name : {"q/proj", "fc/w1", "mlp/w1", "enc/self/l0"}) {
    Tensor analytic = params.grad(name);
    Tensor numeric = oracle::finite_diff(params, name, loss_value);
    INFO(name);
    CHECK(oracle::relative_error(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("zero learning rate leaves parameters and loss frozen") {
  MicroBench mb = MicroBench::make(5);
  TrainConfig cfg = micro_config(5);
  cfg.epochs = 3;
  cfg.learning_rate = 0.0;
  TrainResult result = train_priority(mb.kg, mb.train, cfg);
  for (size_t i = 1; i < result.report.epoch_loss.size(); ++i)
    CHECK(result.report.epoch_loss[i] == Catch::Approx(result.report.epoch_loss[0]).epsilon(1e-14));

  ParamStore fresh(cfg.seed);
  std::vector<QuerySubgraph> sgs;
  for (const Query& q : mb.train)
    sgs.push_back(extract_subgraph(mb.kg, bind_query(mb.kg, q), cfg.model.subgraph_hops));
  ensure_parameters(fresh, mb.kg, sgs, cfg.model);
  for (const auto& [name, t] : fresh.parameters())
    CHECK(result.params.get(name).data == t.data);
}

TEST_CASE("identical seeds reproduce the training report bit for bit") {
  MicroBench mb = MicroBench::make(7);
  TrainConfig cfg = micro_config(7);
  cfg.epochs = 4;
  TrainResult a = train_priority(mb.kg, mb.train, cfg, mb.holdout);
  TrainResult b = train_priority(mb.kg, mb.train, cfg, mb.holdout);
  CHECK(a.report.epoch_loss == b.report.epoch_loss);
  CHECK(a.report.epoch_auc == b.report.epoch_auc);
  for (const auto& [name, t] : a.params.parameters())
    CHECK(b.params.get(name).data == t.data);
}

TEST_CASE("worker count does not change the result") {
  MicroBench mb = MicroBench::make(19);
  TrainConfig one = micro_config(19);
  one.epochs = 2;
  TrainConfig four = one;
  four.jobs = 4;
  TrainResult a = train_priority(mb.kg, mb.train, one);
  TrainResult b = train_priority(mb.kg, mb.train, four);
  CHECK(a.report.epoch_loss == b.report.epoch_loss);
  for (const auto& [name, t] : a.params.parameters())
    CHECK(b.params.get(name).data == t.data);
}

TEST_CASE("loss improves on separable data for every seed in the matrix") {
  for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    MicroBench mb = MicroBench::make(seed);
    TrainConfig cfg = micro_config(seed);
    cfg.epochs = 10;
    TrainResult result = train_priority(mb.kg, mb.train, cfg);
    INFO("seed " << seed);
    CHECK(result.report.epoch_loss.back() < result.report.epoch_loss.front());
    for (double l : result.report.epoch_loss) CHECK(l >= 0.0);
  }
}

TEST_CASE("micro benchmark trains to high held-out AUC") {
  MicroBench mb = MicroBench::make(11);
  TrainConfig cfg = micro_config(11);
  TrainResult result = train_priority(mb.kg, mb.train, cfg, mb.holdout);
  INFO("final AUC " << result.report.epoch_auc.back());
  CHECK(result.report.epoch_auc.back() >= 0.85);
}

TEST_CASE("training errors out when every query lacks answers") {
  MicroBench mb = MicroBench::make(13);
  std::vector<Query> broken;
  for (Query q : mb.train) {
    q.answers = {};  // answers never bind
    broken.push_back(q);
  }
  TrainConfig cfg = micro_config(13);
  CHECK_THROWS_WITH(train_priority(mb.kg, broken, cfg),
                    Catch::Matchers::ContainsSubstring("skipped"));
}

TEST_CASE("rank_entities sorts by score with id tie-breaks") {
  MicroBench mb = MicroBench::make(23);
  TrainConfig cfg = micro_config(23);

  // untrained zero-MLP model: every score 0.5, order = ascending id
  BoundQuery bq = bind_query(mb.kg, mb.train[0]);
  QuerySubgraph sg = extract_subgraph(mb.kg, bq, cfg.model.subgraph_hops);
  ParamStore params(cfg.seed);
  ensure_parameters(params, mb.kg, {sg}, cfg.model);
  for (const char* name : {"mlp/w1", "mlp/b1", "mlp/w2", "mlp/b2"})
    std::fill(params.parameters().at(name).data.begin(),
              params.parameters().at(name).data.end(), 0.0);
  auto ranked = rank_entities(mb.kg, sg, params, mb.train[0], cfg.model);
  REQUIRE(ranked.size() == sg.node_ids.size());
  for (size_t i = 0; i < ranked.size(); ++i) {
    CHECK(ranked[i].first == sg.node_ids[i]);
    CHECK(ranked[i].second == 0.5);
  }
}

TEST_CASE("positive scaling of the output head preserves the ranking") {
  MicroBench mb = MicroBench::make(29);
  TrainConfig cfg = micro_config(29);
  cfg.epochs = 3;
  TrainResult result = train_priority(mb.kg, mb.train, cfg);

  BoundQuery bq = bind_query(mb.kg, bind_query(mb.kg, mb.train[1]).query);
  QuerySubgraph sg = extract_subgraph(mb.kg, bq, cfg.model.subgraph_hops);
  auto before = rank_entities(mb.kg, sg, result.params, mb.train[1], cfg.model);

  for (const char* name : {"mlp/w2", "mlp/b2"})
    for (double& v : result.params.parameters().at(name).data) v *= 7.5;
  auto after = rank_entities(mb.kg, sg, result.params, mb.train[1], cfg.model);

  REQUIRE(before.size() == after.size());
  for (size_t i = 0; i < before.size(); ++i) CHECK(before[i].first == after[i].first);
}

TEST_CASE("checkpoint dims validation catches mismatches") {
  MicroBench mb = MicroBench::make(31);
  TrainConfig cfg = micro_config(31);
  cfg.epochs = 1;
  TrainResult result = train_priority(mb.kg, mb.train, cfg);

  ModelConfig wrong = cfg.model;
  wrong.encoder.dim = cfg.model.encoder.dim * 2;
  BoundQuery bq = bind_query(mb.kg, mb.train[0]);
  QuerySubgraph sg = extract_subgraph(mb.kg, bq, cfg.model.subgraph_hops);
  CHECK_THROWS_WITH(rank_entities(mb.kg, sg, result.params, mb.train[0], wrong),
                    Catch::Matchers::ContainsSubstring("checkpoint error"));
}

TEST_CASE("model config json round-trips") {
  ModelConfig cfg;
  cfg.encoder.dim = 16;
  cfg.encoder.layers = 3;
  cfg.encoder.agg = Aggregation::kMean;
  cfg.edge_cost = EdgeCostMode::kBilinear;
  cfg.mode = PriorityMode::kAccumOnly;
  cfg.subgraph_hops = 4;
  cfg.l_max = 3;
  ModelConfig back = ModelConfig::from_json(cfg.to_json());
  CHECK(back.encoder.dim == 16);
  CHECK(back.encoder.layers == 3);
  CHECK(back.encoder.agg == Aggregation::kMean);
  CHECK(back.edge_cost == EdgeCostMode::kBilinear);
  CHECK(back.mode == PriorityMode::kAccumOnly);
  CHECK(back.subgraph_hops == 4);
  CHECK(back.l_max == 3);
}

TEST_CASE("auc handles ties and separable extremes") {
  CHECK(ranking_auc({{0.9, true}, {0.1, false}}) == 1.0);
  CHECK(ranking_auc({{0.1, true}, {0.9, false}}) == 0.0);
  CHECK(ranking_auc({{0.5, true}, {0.5, false}}) == 0.5);
  CHECK(ranking_auc({{0.5, true}, {0.5, false}, {0.2, false}}) == Catch::Approx(0.75));
}
