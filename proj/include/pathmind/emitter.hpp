#pragma once
// Instruction-tuning and preference-alignment corpus emission, plus the
// standalone numeric preference objective.
//
// Prompt templates are fixed byte-for-byte; golden-file tests guard them.
// Token counting is a whitespace approximation behind a pluggable counter.

#include <cctype>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "pathmind/eval.hpp"

namespace pathmind {

constexpr const char* kSftInstruction =
    "Instruction: Based on the reasoning paths, please answer the given question. "
    "Please keep the answer as simple as possible and return all the possible answers "
    "as a list.";

constexpr const char* kDpoInstruction =
    "Instruction: Given the question, please generate coherent reasoning paths that can "
    "support answering it.";

using TokenCounter = std::function<size_t(const std::string&)>;

// Whitespace-split token count; the default, documented approximation.
inline size_t count_tokens(const std::string& text) {
  size_t count = 0;
  bool in_token = false;
  for (char ch : text) {
    bool ws = std::isspace(static_cast<unsigned char>(ch));
    if (!ws && !in_token) ++count;
    in_token = !ws;
  }
  return count;
}

inline std::string verbalize_stored(const StoredPaths::StoredPath& p) {
  if (p.entities.empty()) return "";
  std::string out = p.entities.front();
  for (size_t i = 0; i < p.relations.size(); ++i) {
    out += " -> " + p.relations[i];
    if (i < p.directions.size() && p.directions[i] == "rev") out += "^-1";
    out += " -> " + p.entities[i + 1];
  }
  return out;
}

// sorted JSON array of answer labels
inline std::string render_answer_list(std::vector<std::string> answers) {
  std::sort(answers.begin(), answers.end());
  return json(answers).dump();
}

inline std::string sft_prompt(const std::vector<std::string>& verbalized_paths,
                              const std::string& question) {
  std::string prompt = kSftInstruction;
  prompt += "\n\nReasoning Paths:\n";
  for (const std::string& p : verbalized_paths) {
    prompt += p;
    prompt += "\n";
  }
  prompt += "Question: " + question + "\nAnswer:";
  return prompt;
}

struct InstructionRecord {
  std::string query_id;
  std::string prompt;
  std::string completion;
  size_t token_count = 0;
  bool flagged = false;
  std::vector<std::string> flags;

  json to_json() const {
    return json{{"query_id", query_id},
                {"prompt", prompt},
                {"completion", completion},
                {"token_count", token_count},
                {"flagged", flagged},
                {"flags", flags}};
  }
};

// One record per query: template + newline-joined paths + question, answers
// as a sorted bracketed list. Paths are dropped lowest-score-first while the
// prompt exceeds the budget; a record that still cannot fit is flagged.
inline InstructionRecord emit_sft_record(const Query& query, const StoredPaths& paths,
                                         size_t budget,
                                         const TokenCounter& tokens = count_tokens) {
  // keep highest-scoring paths; drop from the back on overflow
  std::vector<const StoredPaths::StoredPath*> kept;
  for (const auto& p : paths.paths) kept.push_back(&p);
  std::stable_sort(kept.begin(), kept.end(),
                   [](const StoredPaths::StoredPath* a, const StoredPaths::StoredPath* b) {
                     return a->terminal_score > b->terminal_score;
                   });

  InstructionRecord record;
  record.query_id = query.id;
  if (kept.empty()) {
    record.flagged = true;
    record.flags.push_back("empty_paths");
  }

  auto build = [&]() {
    std::vector<std::string> lines;
    lines.reserve(kept.size());
    for (const auto* p : kept) lines.push_back(verbalize_stored(*p));
    return sft_prompt(lines, query.question);
  };
  record.prompt = build();
  record.token_count = tokens(record.prompt);
  size_t dropped = 0;
  while (record.token_count > budget && !kept.empty()) {
    kept.pop_back();
    ++dropped;
    record.prompt = build();
    record.token_count = tokens(record.prompt);
  }
  if (dropped > 0)
    log_info("query " + query.id + ": dropped " + std::to_string(dropped) +
             " path(s) to fit the token budget");
  if (record.token_count > budget) {
    record.flagged = true;
    record.flags.push_back("over_budget");
  }
  record.completion = render_answer_list(query.answers);
  return record;
}

inline std::vector<InstructionRecord> emit_sft(
    const std::vector<Query>& queries, const std::map<std::string, StoredPaths>& paths_by_query,
    size_t budget, const TokenCounter& tokens = count_tokens) {
  std::vector<InstructionRecord> records;
  records.reserve(queries.size());
  for (const Query& q : queries) {
    static const StoredPaths kEmpty{};
    auto it = paths_by_query.find(q.id);
    records.push_back(emit_sft_record(q, it != paths_by_query.end() ? it->second : kEmpty,
                                      budget, tokens));
  }
  return records;
}

// --- preference pairs -----------------------------------------------------------

struct PreferencePair {
  std::string query_id;
  std::string prompt;
  std::string chosen;    // newline-joined preferred paths
  std::string rejected;  // newline-joined less-preferred paths

  json to_json() const {
    return json{{"query_id", query_id},
                {"prompt", prompt},
                {"chosen", chosen},
                {"rejected", rejected}};
  }
};

namespace detail {

using PathKey = std::tuple<std::vector<std::string>, std::vector<std::string>,
                           std::vector<std::string>>;

inline PathKey key_of(const StoredPaths::StoredPath& p) {
  return {p.entities, p.relations, p.directions};
}

// one random walk of exactly the requested length; empty on dead end
inline StoredPaths::StoredPath sample_walk(const QuerySubgraph& sg, const KnowledgeGraph& kg,
                                           size_t length, Rng& rng) {
  StoredPaths::StoredPath walk;
  EntityId at = sg.topic_ids[size_t(rng.next_below(uint64_t(sg.topic_ids.size())))];
  walk.entities.push_back(kg.entity_label(at));
  for (size_t step = 0; step < length; ++step) {
    auto nbs = subgraph_neighbors(sg, at);
    if (nbs.empty()) return {};
    const Neighbor& nb = nbs[size_t(rng.next_below(uint64_t(nbs.size())))];
    walk.relations.push_back(kg.relation_label(nb.rel));
    walk.directions.push_back(direction_name(nb.dir));
    walk.entities.push_back(kg.entity_label(nb.entity));
    walk.scores.push_back(0.0);
    at = nb.entity;
  }
  return walk;
}

}  // namespace detail

// Pairs the preferred path set against `pairs_per_query` sampled sets of
// length-matched random walks, excluding any walk equal to a preferred path.
// Queries whose subgraph cannot produce enough distinct walks are skipped
// and counted.
inline std::vector<PreferencePair> emit_dpo(const std::vector<Query>& queries,
                                            const std::map<std::string, StoredPaths>& paths_by_query,
                                            const KnowledgeGraph& kg, int subgraph_hops,
                                            int pairs_per_query, uint64_t seed,
                                            size_t* skipped = nullptr) {
  if (pairs_per_query < 1) throw Error("emit_dpo: pairs_per_query must be >= 1");
  std::vector<PreferencePair> out;
  Rng rng = seeded_rng(seed, "dpo");
  for (const Query& q : queries) {
    auto it = paths_by_query.find(q.id);
    if (it == paths_by_query.end() || it->second.paths.empty()) {
      if (skipped) ++(*skipped);
      log_warn("query " + q.id + ": no preferred paths, preference pair skipped");
      continue;
    }
    const StoredPaths& preferred = it->second;

    std::set<detail::PathKey> forbidden;
    std::vector<std::string> preferred_lines;
    std::vector<size_t> lengths;
    for (const auto& p : preferred.paths) {
      forbidden.insert(detail::key_of(p));
      preferred_lines.push_back(verbalize_stored(p));
      lengths.push_back(p.length());
    }

    QuerySubgraph sg = extract_subgraph(kg, bind_query(kg, q), subgraph_hops);

    for (int pair_idx = 0; pair_idx < pairs_per_query; ++pair_idx) {
      std::vector<std::string> rejected_lines;
      std::set<detail::PathKey> used = forbidden;
      bool complete = true;
      for (size_t len : lengths) {
        bool found = false;
        for (int attempt = 0; attempt < 200 && !found; ++attempt) {
          auto walk = detail::sample_walk(sg, kg, len, rng);
          if (walk.entities.empty() || walk.length() != len) continue;
          if (!used.insert(detail::key_of(walk)).second) continue;
          rejected_lines.push_back(verbalize_stored(walk));
          found = true;
        }
        if (!found) {
          complete = false;
          break;
        }
      }
      if (!complete) {
        if (skipped) ++(*skipped);
        log_warn("query " + q.id + ": subgraph too small to sample distinct rejected paths");
        continue;
      }

      PreferencePair pair;
      pair.query_id = q.id;
      pair.prompt = std::string(kDpoInstruction) + "\n\nQuestion: " + q.question;
      std::string chosen;
      for (size_t i = 0; i < preferred_lines.size(); ++i)
        chosen += (i ? "\n" : "") + preferred_lines[i];
      std::string rejected;
      for (size_t i = 0; i < rejected_lines.size(); ++i)
        rejected += (i ? "\n" : "") + rejected_lines[i];
      pair.chosen = std::move(chosen);
      pair.rejected = std::move(rejected);
      out.push_back(std::move(pair));
    }
  }
  return out;
}

// -log sigmoid(beta * (logp_w - logp_l) - beta * (ref_logp_w - ref_logp_l))
inline double dpo_objective(double logp_w, double logp_l, double ref_logp_w, double ref_logp_l,
                            double beta) {
  if (beta <= 0.0) throw Error("dpo_objective: beta must be positive");
  double margin = beta * (logp_w - logp_l) - beta * (ref_logp_w - ref_logp_l);
  return softplus(-margin);  // -log(sigmoid(margin)), numerically stable
}

}  // namespace pathmind
