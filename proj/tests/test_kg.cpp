#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pathmind/kg.hpp"

using namespace pathmind;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("pathmind_kg_" + std::to_string(Catch::rngSeed()) + "_" +
            std::to_string(reinterpret_cast<uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& content) {
    std::string p = (path / name).string();
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
  }
};

}  // namespace

TEST_CASE("load_kg dedups exact duplicates and reports counts") {
  TempDir tmp;
  std::string p = tmp.file("kg.tsv", "A\tr1\tB\nB\tr2\tC\nA\tr1\tB\n");
  size_t dropped = 0;
  KnowledgeGraph kg = load_kg(p, &dropped);
  CHECK(kg.entity_count() == 3);
  CHECK(kg.relation_count() == 2);
  CHECK(kg.triple_count() == 2);
  CHECK(dropped == 1);
}

TEST_CASE("load_kg rejects empty and malformed input") {
  TempDir tmp;
  CHECK_THROWS_WITH(load_kg(tmp.file("empty.tsv", "")),
                    Catch::Matchers::ContainsSubstring("empty knowledge graph"));
  CHECK_THROWS_WITH(load_kg(tmp.file("only_comments.tsv", "# nothing here\n")),
                    Catch::Matchers::ContainsSubstring("empty knowledge graph"));
  CHECK_THROWS_WITH(load_kg(tmp.file("bad.tsv", "A\tr1\tB\tX\n")),
                    Catch::Matchers::ContainsSubstring("line 1"));
  CHECK_THROWS_WITH(load_kg(tmp.file("bad2.tsv", "A\tr1\tB\nA\tr1\n")),
                    Catch::Matchers::ContainsSubstring("line 2"));
}

TEST_CASE("comment lines and CRLF are tolerated") {
  TempDir tmp;
  KnowledgeGraph kg = load_kg(tmp.file("kg.tsv", "# header\nA\tr1\tB\r\nC\tr1\tA\n"));
  CHECK(kg.triple_count() == 2);
}

TEST_CASE("interning is independent of input line order") {
  TempDir tmp;
  KnowledgeGraph a = load_kg(tmp.file("a.tsv", "A\tr1\tB\nC\tr2\tA\n"));
  KnowledgeGraph b = load_kg(tmp.file("b.tsv", "C\tr2\tA\nA\tr1\tB\n"));
  REQUIRE(a.entity_count() == b.entity_count());
  for (EntityId e = 0; e < EntityId(a.entity_count()); ++e)
    CHECK(a.entity_label(e) == b.entity_label(e));
  CHECK(a.triples() == b.triples());
}

TEST_CASE("neighbors reads the indices in sorted order") {
  TempDir tmp;
  KnowledgeGraph kg = load_kg(tmp.file("kg.tsv", "A\tr1\tB\nC\tr2\tA\n"));
  EntityId a = *kg.find_entity("A");

  auto out = kg.neighbors(a, KnowledgeGraph::NeighborDirection::kOut);
  REQUIRE(out.size() == 1);
  CHECK(kg.relation_label(out[0].rel) == "r1");
  CHECK(kg.entity_label(out[0].entity) == "B");
  CHECK(out[0].dir == Direction::kFwd);

  auto both = kg.neighbors(a, KnowledgeGraph::NeighborDirection::kBoth);
  REQUIRE(both.size() == 2);
  CHECK(kg.relation_label(both[0].rel) == "r1");
  CHECK(kg.relation_label(both[1].rel) == "r2");
  CHECK(both[1].dir == Direction::kRev);

  CHECK_THROWS_AS(kg.neighbors(EntityId(999), KnowledgeGraph::NeighborDirection::kOut), Error);
}

TEST_CASE("neighbor counts split by direction") {
  // property: |both| = |out| + |in| for every entity
  TempDir tmp;
  std::string content;
  Rng rng(42);
  for (int i = 0; i < 60; ++i)
    content += "e" + std::to_string(rng.next_below(15)) + "\tr" +
               std::to_string(rng.next_below(4)) + "\te" + std::to_string(rng.next_below(15)) +
               "\n";
  KnowledgeGraph kg = load_kg(tmp.file("kg.tsv", content));
  for (EntityId e = 0; e < EntityId(kg.entity_count()); ++e) {
    size_t nout = kg.neighbors(e, KnowledgeGraph::NeighborDirection::kOut).size();
    size_t nin = kg.neighbors(e, KnowledgeGraph::NeighborDirection::kIn).size();
    size_t nboth = kg.neighbors(e, KnowledgeGraph::NeighborDirection::kBoth).size();
    CHECK(nboth == nout + nin);
  }
}

TEST_CASE("save then reload yields the same triple multiset") {
  TempDir tmp;
  std::string content;
  Rng rng(7);
  for (int i = 0; i < 40; ++i)
    content += "n" + std::to_string(rng.next_below(10)) + "\tr" +
               std::to_string(rng.next_below(3)) + "\tn" + std::to_string(rng.next_below(10)) +
               "\n";
  KnowledgeGraph kg = load_kg(tmp.file("kg.tsv", content));
  std::string saved = (tmp.path / "saved.tsv").string();
  save_kg(kg, saved);
  KnowledgeGraph reloaded = load_kg(saved);
  CHECK(kg.triples() == reloaded.triples());
  CHECK(kg.entity_count() == reloaded.entity_count());
}

TEST_CASE("bind_query resolves topics and records missing answers") {
  TempDir tmp;
  KnowledgeGraph kg = load_kg(tmp.file("kg.tsv", "A\tr1\tB\n"));

  Query ok{.id = "q1", .question = "?", .topic_entities = {"A"}, .answers = {"B", "Zz"}};
  BoundQuery bound = bind_query(kg, ok);
  CHECK(bound.topic_ids == std::vector<EntityId>{*kg.find_entity("A")});
  CHECK(bound.answer_ids == std::vector<EntityId>{*kg.find_entity("B")});
  CHECK(bound.unresolved_answers == std::vector<std::string>{"Zz"});

  Query bad{.id = "q2", .question = "?", .topic_entities = {"Zz"}, .answers = {}};
  CHECK_THROWS_WITH(bind_query(kg, bad), Catch::Matchers::ContainsSubstring("Zz"));
}

TEST_CASE("query files parse and reject empty topics") {
  TempDir tmp;
  std::string p = tmp.file(
      "q.jsonl",
      R"({"id":"q1","question":"who?","topic_entities":["A"],"answers":["B"]})"
      "\n"
      R"({"id":"q2","question":"what?","topic_entities":["B"]})"
      "\n");
  auto queries = load_queries(p);
  REQUIRE(queries.size() == 2);
  CHECK(queries[0].answers == std::vector<std::string>{"B"});
  CHECK(queries[1].answers.empty());

  std::string bad = tmp.file("bad.jsonl", R"({"id":"q","question":"?","topic_entities":[]})"
                                          "\n");
  CHECK_THROWS_AS(load_queries(bad), Error);
}
