// scratch probe, not registered as a test
#include <cstdio>

#include "pathmind/trainer.hpp"

using namespace pathmind;

namespace {
struct MicroBench {
  KnowledgeGraph kg;
  std::vector<Query> train;
  std::vector<Query> holdout;

  static MicroBench make(uint64_t seed, int n_queries = 24, int n_nodes = 30) {
    Rng rng(seed);
    std::vector<std::array<std::string, 3>> triples;
    std::vector<Query> queries;
    const int n_rels = 3;
    std::set<std::pair<std::string, std::string>> used;
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
    for (int i = 0; i < n_nodes; ++i)
      triples.push_back({"n" + std::to_string(rng.next_below(uint64_t(n_nodes))), "noise",
                         "n" + std::to_string(rng.next_below(uint64_t(n_nodes)))});
    MicroBench mb{KnowledgeGraph::build(std::move(triples)), {}, {}};
    for (size_t i = 0; i < queries.size(); ++i)
      (i % 4 == 3 ? mb.holdout : mb.train).push_back(queries[i]);
    return mb;
  }
};
}  // namespace

int main(int argc, char** argv) {
  uint64_t seed = argc > 1 ? uint64_t(atoll(argv[1])) : 11;
  int epochs = argc > 2 ? atoi(argv[2]) : 25;
  size_t dim = argc > 3 ? size_t(atoi(argv[3])) : 8;
  double lr = argc > 4 ? atof(argv[4]) : 5e-3;

  int nq = argc > 5 ? atoi(argv[5]) : 24;
  MicroBench mb = MicroBench::make(seed, nq);
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 8;
  cfg.learning_rate = lr;
  cfg.seed = seed;
  cfg.model.encoder.dim = dim;
  cfg.model.encoder.layers = 1;
  cfg.model.encoder.seed = seed;
  cfg.model.subgraph_hops = 2;
  cfg.model.l_max = 2;
  cfg.negative_ratio = argc > 6 ? atoi(argv[6]) : 0;

  TrainResult train_eval = train_priority(mb.kg, mb.train, cfg);  // AUC on train split
  TrainResult held_eval = train_priority(mb.kg, mb.train, cfg, mb.holdout);
  printf("seed=%llu epochs=%d d=%zu lr=%g\n", (unsigned long long)seed, epochs, dim, lr);
  printf("  loss first=%.4f last=%.4f\n", train_eval.report.epoch_loss.front(),
         train_eval.report.epoch_loss.back());
  printf("  train AUC last=%.4f  holdout AUC last=%.4f\n", train_eval.report.epoch_auc.back(),
         held_eval.report.epoch_auc.back());
  return 0;
}
