// scratch diagnostic: where does the beam lose the planted chain?
#include <cstdio>

#include "pathmind/eval.hpp"
#include "pathmind/extractor.hpp"
#include "pathmind/trainer.hpp"

using namespace pathmind;

int main(int argc, char** argv) {
  uint64_t seed = argc > 1 ? uint64_t(atoll(argv[1])) : 0;
  int epochs = argc > 2 ? atoi(argv[2]) : 30;

  SyntheticBenchSpec spec;
  spec.seed = seed;
  SyntheticBench bench = generate_bench(spec);
  KnowledgeGraph kg = KnowledgeGraph::build(std::vector<std::array<std::string, 3>>(bench.triples));

  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 8;
  cfg.learning_rate = 5e-3;
  cfg.seed = seed;
  cfg.jobs = 4;
  cfg.model.encoder.dim = 16;
  cfg.model.encoder.layers = 2;
  cfg.model.encoder.seed = seed;
  cfg.model.subgraph_hops = 3;
  cfg.model.l_max = 3;
  cfg.negative_ratio = argc > 3 ? atoi(argv[3]) : 0;
  TrainResult result = train_priority(kg, bench.train_split, cfg, bench.eval_split);

  std::map<std::string, const GoldChain*> gold_by_id;
  for (const GoldChain& g : bench.gold) gold_by_id[g.query_id] = &g;

  int fail_at_hop[4] = {0, 0, 0, 0};
  int total_fail = 0, total = 0, len2_fail = 0, len3_fail = 0;
  for (const Query& q : bench.eval_split) {
    const GoldChain& gold = *gold_by_id.at(q.id);
    BoundQuery bq = bind_query(kg, q);
    QuerySubgraph sg = extract_subgraph(kg, bq, cfg.model.subgraph_hops);

    Tape tape(result.params);
    QueryForward fwd = run_forward(tape, kg, sg, q, cfg.model);
    std::map<EntityId, double> scores;
    for (const auto& [e, ps] : fwd.scores) scores.emplace(e, ps.score);

    // replay the beam and find the first hop where the gold prefix is dropped
    ++total;
    ExtractionConfig ext{.top_k = 3, .max_iters = 3};
    auto paths = beam_extract(sg, scores, ext);
    StoredPaths stored = stored_paths_from_json(paths_to_json(q.id, Strategy::kPriority, paths, kg));
    if (recovers_gold(stored, gold)) continue;
    ++total_fail;
    (gold.hops() == 2 ? len2_fail : len3_fail)++;

    // gold prefix presence among kept terminals per depth
    for (int hop = 1; hop <= gold.hops(); ++hop) {
      bool present = false;
      for (const auto& p : stored.paths) {
        if (int(p.length()) != hop) continue;
        bool match = true;
        for (int i = 0; i < hop; ++i)
          if (p.entities[size_t(i) + 1] != gold.entities[size_t(i) + 1] ||
              p.relations[size_t(i)] != gold.relations[size_t(i)] || p.directions[size_t(i)] != "fwd")
            match = false;
        if (match && p.entities[0] == gold.entities[0]) present = true;
      }
      if (!present) {
        ++fail_at_hop[hop];
        // dump candidate scores at that hop
        EntityId prev = *kg.find_entity(gold.entities[size_t(hop) - 1]);
        EntityId want = *kg.find_entity(gold.entities[size_t(hop)]);
        printf("q=%s len=%d lost at hop %d: gold-int %s score=%.4f (prev %s score=%.4f)\n",
               q.id.c_str(), gold.hops(), hop, gold.entities[size_t(hop)].c_str(),
               scores.count(want) ? scores.at(want) : -1.0, gold.entities[size_t(hop) - 1].c_str(),
               scores.count(prev) ? scores.at(prev) : -1.0);
        break;
      }
    }
  }
  printf("fails %d/%d (len2 %d, len3 %d); lost at hop1=%d hop2=%d hop3=%d\n", total_fail, total,
         len2_fail, len3_fail, fail_at_hop[1], fail_at_hop[2], fail_at_hop[3]);
  return 0;
}
