#pragma once
// Evaluation: Hits@1 and macro F1 over normalized labels, a deterministic
// mock reasoner that answers with path terminals (no LLM anywhere), hop and
// answer-count breakdowns, and the seeded planted-chain benchmark generator.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pathmind/extractor.hpp"

namespace pathmind {

// --- metrics -----------------------------------------------------------------

inline std::set<std::string> normalized_set(const std::vector<std::string>& labels) {
  std::set<std::string> out;
  for (const std::string& l : labels) out.insert(normalize_label(l));
  return out;
}

// Top-1 correctness after normalization; empty predictions score 0.
inline double hits_at_1(const std::vector<std::vector<std::string>>& predictions,
                        const std::vector<std::vector<std::string>>& gold) {
  if (predictions.empty()) throw Error("hits_at_1: no queries");
  if (predictions.size() != gold.size())
    throw Error("hits_at_1: prediction/gold count mismatch");
  double hits = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].empty()) continue;
    if (normalized_set(gold[i]).count(normalize_label(predictions[i][0]))) hits += 1.0;
  }
  return hits / double(predictions.size());
}

struct F1Row {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline F1Row f1_single(const std::vector<std::string>& predicted,
                       const std::vector<std::string>& gold) {
  std::set<std::string> p = normalized_set(predicted);
  std::set<std::string> g = normalized_set(gold);
  F1Row row;
  if (p.empty() && g.empty()) return row;  // both empty: all zeros
  size_t overlap = 0;
  for (const std::string& x : p) overlap += g.count(x);
  row.precision = p.empty() ? 0.0 : double(overlap) / double(p.size());
  row.recall = g.empty() ? 0.0 : double(overlap) / double(g.size());
  row.f1 = (row.precision + row.recall) > 0.0
               ? 2.0 * row.precision * row.recall / (row.precision + row.recall)
               : 0.0;
  return row;
}

// Macro-averaged F1 over per-question set overlap.
inline double f1(const std::vector<std::vector<std::string>>& predictions,
                 const std::vector<std::vector<std::string>>& gold) {
  if (predictions.empty()) throw Error("f1: no queries");
  if (predictions.size() != gold.size()) throw Error("f1: prediction/gold count mismatch");
  double total = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i)
    total += f1_single(predictions[i], gold[i]).f1;
  return total / double(predictions.size());
}

// --- mock reasoner -------------------------------------------------------------

// Distinct path terminals as ranked answers: by terminal priority for the
// priority strategy, by terminal frequency (then label) for the baselines.
// This closes the loop of query -> paths -> answers with no language model.
inline std::vector<std::string> mock_reason(const StoredPaths& paths, bool gold_aware = false) {
  if (gold_aware) throw Error("mock_reason: gold-aware mode is not supported");
  struct TerminalInfo {
    double best_score = 0.0;
    size_t count = 0;
  };
  std::map<std::string, TerminalInfo> terminals;
  for (const auto& p : paths.paths) {
    if (p.entities.empty()) continue;
    TerminalInfo& info = terminals[p.terminal_label()];
    info.best_score = std::max(info.best_score, p.terminal_score);
    info.count += 1;
  }
  std::vector<std::pair<std::string, TerminalInfo>> ranked(terminals.begin(), terminals.end());
  if (paths.strategy == Strategy::kPriority) {
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second.best_score != b.second.best_score)
        return a.second.best_score > b.second.best_score;
      return a.first < b.first;
    });
  } else {
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second.count != b.second.count) return a.second.count > b.second.count;
      return a.first < b.first;
    });
  }
  std::vector<std::string> out;
  out.reserve(ranked.size());
  for (const auto& [label, info] : ranked) out.push_back(label);
  return out;
}

// --- report ---------------------------------------------------------------------

struct EvalRow {
  std::string query_id;
  std::vector<std::string> predicted;
  std::vector<std::string> gold;
  bool hit = false;
  F1Row f1;
  int hops = -1;  // -1 = unknown
};

struct Efficiency {
  double mean_tokens = 0.0;
  double mean_runtime_s = 0.0;  // logged live; persisted as zero for reproducibility
  double calls_per_query = 0.0;
};

struct EvalReport {
  double hits_at_1 = 0.0;
  double f1_macro = 0.0;
  std::vector<EvalRow> rows;
  Efficiency efficiency;

  json to_json() const {
    json rows_json = json::array();
    for (const EvalRow& r : rows)
      rows_json.push_back({{"query_id", r.query_id},
                           {"predicted", r.predicted},
                           {"gold", r.gold},
                           {"hit", r.hit},
                           {"precision", r.f1.precision},
                           {"recall", r.f1.recall},
                           {"f1", r.f1.f1},
                           {"hops", r.hops}});
    return json{{"hits_at_1", hits_at_1},
                {"f1_macro", f1_macro},
                {"rows", rows_json},
                {"efficiency",
                 {{"mean_tokens", efficiency.mean_tokens},
                  {"mean_runtime_s", efficiency.mean_runtime_s},
                  {"calls_per_query", efficiency.calls_per_query}}}};
  }
};

inline EvalReport evaluate(const std::vector<EvalRow>& rows) {
  if (rows.empty()) throw Error("evaluate: no queries");
  EvalReport report;
  report.rows = rows;
  for (EvalRow& r : report.rows) {
    r.f1 = f1_single(r.predicted, r.gold);
    r.hit = !r.predicted.empty() &&
            normalized_set(r.gold).count(normalize_label(r.predicted[0])) > 0;
    report.hits_at_1 += r.hit ? 1.0 : 0.0;
    report.f1_macro += r.f1.f1;
  }
  report.hits_at_1 /= double(rows.size());
  report.f1_macro /= double(rows.size());
  return report;
}

// --- breakdowns ------------------------------------------------------------------

struct BucketMetrics {
  size_t count = 0;
  double hits_at_1 = 0.0;
  double f1_macro = 0.0;
};

// Hop buckets {1, 2, >=3} and answer-count buckets {1, 2-4, 5-9, >=10};
// rows without hop metadata land in "unknown".
inline json breakdown(const EvalReport& report) {
  auto hop_bucket = [](int hops) -> std::string {
    if (hops < 0) return "unknown";
    if (hops <= 1) return "1";
    if (hops == 2) return "2";
    return ">=3";
  };
  auto answer_bucket = [](size_t n) -> std::string {
    if (n <= 1) return "1";
    if (n <= 4) return "2-4";
    if (n <= 9) return "5-9";
    return ">=10";
  };

  std::map<std::string, BucketMetrics> by_hop, by_answers;
  for (const EvalRow& r : report.rows) {
    BucketMetrics& h = by_hop[hop_bucket(r.hops)];
    h.count += 1;
    h.hits_at_1 += r.hit ? 1.0 : 0.0;
    h.f1_macro += r.f1.f1;
    BucketMetrics& a = by_answers[answer_bucket(r.gold.size())];
    a.count += 1;
    a.hits_at_1 += r.hit ? 1.0 : 0.0;
    a.f1_macro += r.f1.f1;
  }
  auto render = [](const std::map<std::string, BucketMetrics>& buckets) {
    json out = json::object();
    for (const auto& [name, m] : buckets)
      out[name] = {{"count", m.count},
                   {"hits_at_1", m.count ? m.hits_at_1 / double(m.count) : 0.0},
                   {"f1", m.count ? m.f1_macro / double(m.count) : 0.0}};
    return out;
  };
  return json{{"by_hops", render(by_hop)}, {"by_answer_count", render(by_answers)}};
}

// --- synthetic planted-chain benchmark ---------------------------------------------

// Every query plants one typed relation chain from its topic to an answer
// drawn from a per-family pool. Per-hop relation labels have out-degree at
// most one per node, so the planted chain is the unique typed walk from the
// topic. Questions name the family; answers are type-shared across queries,
// which is what lets held-out questions be answerable at this scale.
struct SyntheticBenchSpec {
  size_t n_queries = 200;
  size_t kg_size = 300;           // background entities
  int chain_len_min = 2;
  int chain_len_max = 3;
  double distractor_edge_ratio = 1.0;  // noise edges per background entity
  size_t families = 8;
  size_t answers_per_family = 6;
  uint64_t seed = 0;
  double holdout_fraction = 0.2;

  json to_json() const {
    return json{{"n_queries", n_queries},
                {"kg_size", kg_size},
                {"chain_len_min", chain_len_min},
                {"chain_len_max", chain_len_max},
                {"distractor_edge_ratio", distractor_edge_ratio},
                {"families", families},
                {"answers_per_family", answers_per_family},
                {"seed", seed},
                {"holdout_fraction", holdout_fraction}};
  }

  static SyntheticBenchSpec from_json(const json& j) {
    SyntheticBenchSpec s;
    s.n_queries = j.value("n_queries", s.n_queries);
    s.kg_size = j.value("kg_size", s.kg_size);
    s.chain_len_min = j.value("chain_len_min", s.chain_len_min);
    s.chain_len_max = j.value("chain_len_max", s.chain_len_max);
    s.distractor_edge_ratio = j.value("distractor_edge_ratio", s.distractor_edge_ratio);
    s.families = j.value("families", s.families);
    s.answers_per_family = j.value("answers_per_family", s.answers_per_family);
    s.seed = j.value("seed", s.seed);
    s.holdout_fraction = j.value("holdout_fraction", s.holdout_fraction);
    return s;
  }
};

struct GoldChain {
  std::string query_id;
  std::vector<std::string> entities;   // topic ... answer
  std::vector<std::string> relations;  // per hop
  int hops() const { return int(relations.size()); }
};

struct SyntheticBench {
  std::vector<std::array<std::string, 3>> triples;
  std::vector<Query> queries;       // all
  std::vector<Query> train_split;   // by holdout_fraction
  std::vector<Query> eval_split;
  std::vector<GoldChain> gold;
};

inline SyntheticBench generate_bench(const SyntheticBenchSpec& spec) {
  if (spec.chain_len_min < 1 || spec.chain_len_max < spec.chain_len_min)
    throw Error("gen-bench: invalid chain length range");
  if (size_t(spec.chain_len_max) + 1 > spec.kg_size)
    throw Error("gen-bench: chain length exceeds the graph size budget");
  if (spec.families == 0 || spec.answers_per_family == 0 || spec.n_queries == 0)
    throw Error("gen-bench: families, answers_per_family and n_queries must be positive");

  Rng rng = seeded_rng(spec.seed, "bench");
  SyntheticBench bench;

  auto background = [&](uint64_t i) { return "e" + std::to_string(i); };
  auto pool_entity = [&](size_t fam, uint64_t i) {
    return "a" + std::to_string(fam) + "_" + std::to_string(i);
  };
  auto hop_relation = [&](size_t fam, int hop) {
    return "r" + std::to_string(fam) + "h" + std::to_string(hop);
  };

  // chain length fixed per family so the question determines the depth
  std::vector<int> family_len(spec.families);
  for (size_t f = 0; f < spec.families; ++f)
    family_len[f] = spec.chain_len_min +
                    int(f % size_t(spec.chain_len_max - spec.chain_len_min + 1));

  // out-degree <= 1 per (node, hop relation): the typed chain stays unique
  std::set<std::pair<std::string, std::string>> typed_out;
  std::set<std::string> chain_nodes;  // intermediates, kept free of noise edges

  for (size_t qi = 0; qi < spec.n_queries; ++qi) {
    size_t fam = qi % spec.families;
    int len = family_len[fam];
    const int budget = 200;
    bool planted = false;
    for (int attempt = 0; attempt < budget && !planted; ++attempt) {
      std::vector<std::string> nodes;
      nodes.push_back(background(rng.next_below(spec.kg_size)));
      for (int hop = 1; hop < len; ++hop)
        nodes.push_back(background(rng.next_below(spec.kg_size)));
      nodes.push_back(pool_entity(fam, rng.next_below(spec.answers_per_family)));

      bool ok = true;
      std::set<std::string> distinct(nodes.begin(), nodes.end());
      if (distinct.size() != nodes.size()) ok = false;
      for (int hop = 0; ok && hop < len; ++hop)
        if (typed_out.count({nodes[size_t(hop)], hop_relation(fam, hop)})) ok = false;
      if (!ok) continue;

      GoldChain gold;
      gold.query_id = "q" + std::to_string(qi);
      gold.entities = nodes;
      for (int hop = 0; hop < len; ++hop) {
        gold.relations.push_back(hop_relation(fam, hop));
        bench.triples.push_back({nodes[size_t(hop)], hop_relation(fam, hop),
                                 nodes[size_t(hop) + 1]});
        typed_out.insert({nodes[size_t(hop)], hop_relation(fam, hop)});
      }
      for (int hop = 1; hop < len; ++hop) chain_nodes.insert(nodes[size_t(hop)]);

      Query q;
      q.id = gold.query_id;
      q.question = "what is the fam" + std::to_string(fam) + " value of the topic entity";
      q.topic_entities = {nodes.front()};
      q.answers = {nodes.back()};
      bench.queries.push_back(q);
      bench.gold.push_back(std::move(gold));
      planted = true;
    }
    if (!planted)
      throw Error("gen-bench: could not plant a fresh chain; spec too dense for its graph");
  }

  // distractor edges between background entities that carry no chain role;
  // chain intermediates keep degree 2 so typed walks stay clean
  size_t n_noise = size_t(spec.distractor_edge_ratio * double(spec.kg_size));
  const size_t noise_relations = 5;
  std::set<std::array<std::string, 3>> seen_noise;
  for (size_t i = 0; i < n_noise; ++i) {
    for (int attempt = 0; attempt < 50; ++attempt) {
      std::string h = background(rng.next_below(spec.kg_size));
      std::string t = background(rng.next_below(spec.kg_size));
      if (h == t || chain_nodes.count(h) || chain_nodes.count(t)) continue;
      std::array<std::string, 3> edge = {
          h, "noise" + std::to_string(rng.next_below(noise_relations)), t};
      if (!seen_noise.insert(edge).second) continue;
      bench.triples.push_back(edge);
      break;
    }
  }

  // deterministic split: every k-th query held out
  size_t stride = spec.holdout_fraction > 0.0
                      ? std::max<size_t>(2, size_t(1.0 / spec.holdout_fraction))
                      : 0;
  for (size_t i = 0; i < bench.queries.size(); ++i) {
    if (stride != 0 && i % stride == stride - 1)
      bench.eval_split.push_back(bench.queries[i]);
    else
      bench.train_split.push_back(bench.queries[i]);
  }
  return bench;
}

inline void save_bench(const SyntheticBench& bench, const std::string& dir) {
  {
    std::string kg_text;
    std::vector<std::string> lines;
    for (const auto& [h, r, t] : bench.triples) lines.push_back(h + "\t" + r + "\t" + t);
    std::sort(lines.begin(), lines.end());
    for (const auto& l : lines) kg_text += l + "\n";
    write_file(dir + "/kg.tsv", kg_text);
  }
  save_queries(bench.queries, dir + "/queries.jsonl");
  save_queries(bench.train_split, dir + "/queries_train.jsonl");
  save_queries(bench.eval_split, dir + "/queries_eval.jsonl");
  std::vector<json> gold_rows;
  for (const GoldChain& g : bench.gold)
    gold_rows.push_back(
        {{"query_id", g.query_id}, {"entities", g.entities}, {"relations", g.relations}});
  write_jsonl(dir + "/gold_paths.jsonl", gold_rows);
}

inline std::vector<GoldChain> load_gold_paths(const std::string& path) {
  std::vector<GoldChain> out;
  for (const json& row : read_jsonl(path)) {
    GoldChain g;
    g.query_id = row.at("query_id").get<std::string>();
    g.entities = row.at("entities").get<std::vector<std::string>>();
    g.relations = row.at("relations").get<std::vector<std::string>>();
    out.push_back(std::move(g));
  }
  return out;
}

// Does any stored path reproduce the gold chain exactly (all forward)?
inline bool recovers_gold(const StoredPaths& paths, const GoldChain& gold) {
  for (const auto& p : paths.paths) {
    if (p.entities != gold.entities || p.relations != gold.relations) continue;
    bool all_fwd = true;
    for (const std::string& d : p.directions)
      if (d != "fwd") all_fwd = false;
    if (all_fwd) return true;
  }
  return false;
}

}  // namespace pathmind
