#include <doctest.h>

#include "folk/error.hpp"
#include "folk/evaluation.hpp"
#include "folk/folksonomy.hpp"
#include "folk/pipeline.hpp"
#include "folk/stem.hpp"
#include "folk/synthetic.hpp"
#include "helpers.hpp"

using testing::N;

namespace {

// Labels from the root down to the first node labelled `label` in the popular tree.
std::vector<std::string> path_to(const folk::Folksonomy& f, const std::string& label) {
  for (int v : f.subtree(f.popular().root)) {
    if (f.nodes[static_cast<std::size_t>(v)].label != label) continue;
    std::vector<std::string> path;
    for (int x = v; x >= 0; x = f.nodes[static_cast<std::size_t>(x)].parent)
      path.insert(path.begin(), f.nodes[static_cast<std::size_t>(x)].label);
    return path;
  }
  return {};
}

folk::Corpus fixture() { return folk::ingest_saplings(testing::test_data("africa.jsonl")); }

}  // namespace

TEST_CASE("assembly merges roots breadth first") {
  auto c = testing::corpus({testing::raw("u", "s1", {{"africa", {}, {1}}, {"kenya", {}, {}}}),
                            testing::raw("v", "s2", {{"africa", {}, {1}}, {"egypt", {}, {}}})});
  auto sample = folk::sample_nodes(c, {0, 1}, {false, false});
  auto f = folk::assemble_folksonomy(c, sample, {0, 1, 0, 3});
  REQUIRE(f.trees.size() == 1);
  const auto& root = f.nodes[static_cast<std::size_t>(f.popular().root)];
  CHECK(root.label == "africa");
  CHECK(root.members.size() == 2);
  REQUIRE(root.children.size() == 2);
  CHECK(f.nodes[static_cast<std::size_t>(root.children[0])].label == "egypt");
  CHECK(f.nodes[static_cast<std::size_t>(root.children[1])].label == "kenya");
  CHECK(f.popular().sapling_count == 2);
}

TEST_CASE("a sapling root merged into a child extends the chain") {
  auto c = testing::corpus({testing::raw("u", "s1", {{"south africa", {}, {1}}, {"cape town", {}, {}}}),
                            testing::raw("v", "s2", {{"cape town", {}, {1}}, {"waterfront", {}, {}}})});
  auto sample = folk::sample_nodes(c, {0, 1}, {false, false});
  auto f = folk::assemble_folksonomy(c, sample, {0, 1, 1, 3});
  REQUIRE(f.trees.size() == 1);
  CHECK(f.depth(f.popular().root) == 3);
  CHECK(path_to(f, folk::stem("waterfront")) ==
        std::vector<std::string>{folk::stem("south africa"), folk::stem("cape town"), folk::stem("waterfront")});
}

TEST_CASE("singleton exemplars give back the saplings") {
  auto c = testing::corpus({testing::raw("u", "s1", {{"a", {}, {1}}, {"b", {}, {}}}),
                            testing::raw("v", "s2", {{"a", {}, {1, 2}}, {"c", {}, {}}, {"d", {}, {}}})});
  auto sample = folk::sample_nodes(c, {0, 1}, {false, false});
  auto f = folk::assemble_folksonomy(c, sample, {0, 1, 2, 3, 4});
  CHECK(f.trees.size() == 2);
  CHECK(f.nodes.size() == 5);
  CHECK(f.popular().sapling_count == 1);
  auto back = folk::Folksonomy::from_json(f.to_json());
  CHECK(back.to_json() == f.to_json());
  CHECK(back.to_text() == f.to_text());
}

TEST_CASE("snowball rounds") {
  auto c = testing::corpus({testing::raw("u", "s1", {{"africa", {}, {1}}, {"kenya", {}, {}}}),
                            testing::raw("v", "s2", {{"kenya", {}, {1}}, {"nairobi", {}, {}}}),
                            testing::raw("w", "s3", {{"asia", {}, {1}}, {"japan", {}, {}}})});
  auto s = folk::snowball(c, "africa");
  CHECK(s.rounds == 2);
  CHECK(s.saplings == std::vector<std::size_t>{0, 1});
  CHECK(s.round == std::vector<int>{1, 2});

  auto lone = folk::snowball(c, "asia");
  CHECK(lone.rounds == 1);
  CHECK(folk::snowball(c, "europ").saplings.empty());
  CHECK(folk::snowball(c, "africa", 1).saplings.size() == 1);
}

TEST_CASE("snowball terminates on cyclic name references") {
  auto c = testing::corpus({testing::raw("u", "s1", {{"africa", {}, {1}}, {"x", {}, {}}}),
                            testing::raw("v", "s2", {{"x", {}, {1}}, {"africa", {}, {}}}),
                            testing::raw("w", "s3", {{"africa", {}, {1}}, {"x", {}, {}}})});
  auto s = folk::snowball(c, "africa", 50);
  CHECK(s.saplings.size() == 3);
  std::set<std::size_t> unique(s.saplings.begin(), s.saplings.end());
  CHECK(unique.size() == 3);
}

TEST_CASE("snowball is monotone in the corpus") {
  folk::SyntheticSpec spec;
  auto syn = folk::generate_synthetic(spec);
  for (std::size_t keep : {20u, 60u, 120u}) {
    std::vector<folk::RawSapling> part(syn.saplings.begin(), syn.saplings.begin() + static_cast<long>(std::min(keep, syn.saplings.size())));
    std::vector<folk::RawSapling> more(syn.saplings.begin(), syn.saplings.begin() + static_cast<long>(std::min(keep + 40, syn.saplings.size())));
    auto small = testing::corpus(part), large = testing::corpus(more);
    auto a = folk::snowball(small, syn.seed_term), b = folk::snowball(large, syn.seed_term);
    std::set<std::string> ids_b;
    for (auto s : b.saplings) ids_b.insert(large.saplings[s].sapling_id);
    for (auto s : a.saplings) CHECK(ids_b.count(small.saplings[s].sapling_id) == 1);
  }
}

TEST_CASE("strategies without experts coincide") {
  auto c = fixture();
  std::vector<bool> none(c.users.size(), false);
  auto m1 = folk::run_strategy(c, "africa", folk::Strategy::m1, none);
  auto m2 = folk::run_strategy(c, "africa", folk::Strategy::m2, none);
  auto m3 = folk::run_strategy(c, "africa", folk::Strategy::m3, none);
  CHECK(m1.folksonomy.to_json() == m2.folksonomy.to_json());
  CHECK(m2.folksonomy.to_json() == m3.folksonomy.to_json());
  CHECK(m3.pct_expert == 0.0);
}

TEST_CASE("M2 and M3 share saplings and differ only in preferences") {
  auto c = fixture();
  auto mask = folk::expert_mask(c, {"eve"});
  auto m2 = folk::run_strategy(c, "africa", folk::Strategy::m2, mask);
  auto m3 = folk::run_strategy(c, "africa", folk::Strategy::m3, mask);
  CHECK(m2.saplings == m3.saplings);
  CHECK(m2.sample.nodes == m3.sample.nodes);
  CHECK(m2.matrix.dump() != m3.matrix.dump());
  auto m1 = folk::run_strategy(c, "africa", folk::Strategy::m1, mask);
  CHECK(m1.saplings.size() + 1 == m2.saplings.size());
  for (double p : {m1.pct_expert, m2.pct_expert, m3.pct_expert}) {
    CHECK(p >= 0.0);
    CHECK(p <= 100.0);
  }
}

TEST_CASE("expert weighting moves christmas away from africa") {
  auto c = fixture();
  auto mask = folk::expert_mask(c, {"eve"});
  auto christmas = folk::stem("christmas");
  auto m1 = folk::run_strategy(c, "africa", folk::Strategy::m1, mask);
  auto m2 = folk::run_strategy(c, "africa", folk::Strategy::m2, mask);
  auto m3 = folk::run_strategy(c, "africa", folk::Strategy::m3, mask);
  CHECK(path_to(m1.folksonomy, christmas) == std::vector<std::string>{"africa", "gift", christmas});
  CHECK(path_to(m2.folksonomy, christmas) == std::vector<std::string>{"africa", "gift", christmas});
  CHECK(path_to(m3.folksonomy, christmas).empty());
  bool under_holiday = false;
  for (const auto& t : m3.folksonomy.trees)
    for (int v : m3.folksonomy.subtree(t.root))
      if (m3.folksonomy.nodes[static_cast<std::size_t>(v)].label == christmas)
        under_holiday |= m3.folksonomy.nodes[static_cast<std::size_t>(t.root)].label == folk::stem("holiday");
  CHECK(under_holiday);
}

TEST_CASE("synthetic generator") {
  folk::SyntheticSpec spec;
  auto a = folk::generate_synthetic(spec), b = folk::generate_synthetic(spec);
  CHECK(folk::corpus_json(a.saplings) == folk::corpus_json(b.saplings));
  CHECK(a.labels_csv() == b.labels_csv());
  CHECK(a.truth.to_tsv() == b.truth.to_tsv());
  CHECK(a.truth.names().size() == static_cast<std::size_t>(spec.truth_nodes));
  CHECK(a.truth.roots() == std::set<std::string>{a.seed_term});

  spec.seed = 2;
  CHECK(folk::corpus_json(folk::generate_synthetic(spec).saplings) != folk::corpus_json(a.saplings));

  auto back = folk::SyntheticSpec::from_json(spec.to_json());
  CHECK(back.to_json() == spec.to_json());
  CHECK_THROWS_AS(folk::SyntheticSpec::from_json(R"({"num_expert": 3})"), folk::Error);
}

TEST_CASE("synthetic novices stay shallow and experts follow the truth") {
  folk::SyntheticSpec spec;
  spec.num_experts = 0;
  auto c = folk::ingest_synthetic(folk::generate_synthetic(spec));
  for (const auto& n : c.nodes) CHECK(n.depth_level <= 2);

  folk::SyntheticSpec with;
  auto syn = folk::generate_synthetic(with);
  auto corpus = folk::ingest_synthetic(syn);
  std::map<std::string, folk::UserLabel> label(syn.labels.begin(), syn.labels.end());
  for (const auto& n : corpus.nodes) {
    if (label.at(n.owner) != folk::UserLabel::expert || n.parent == folk::kNoNode) continue;
    CHECK(syn.truth.edges().count({corpus.node(n.parent).name, n.name}) == 1);
  }
}

TEST_CASE("synthetic spec validation") {
  folk::SyntheticSpec deep;
  deep.truth_depth = 3;
  deep.expert_depth_max = 5;
  CHECK_THROWS_AS(folk::generate_synthetic(deep), folk::Error);
  folk::SyntheticSpec shallow;
  shallow.expert_depth_min = 2;
  CHECK_THROWS_AS(folk::generate_synthetic(shallow), folk::Error);
  folk::SyntheticSpec rate;
  rate.noise = 1.5;
  CHECK_THROWS_AS(folk::generate_synthetic(rate), folk::Error);
}

TEST_CASE("given ground truth is planted") {
  folk::SyntheticSpec spec;
  spec.ground_truth = folk::ReferenceTaxonomy::parse(
      "animal\tbird\nanimal\tfish\nbird\towl\nbird\thawk\nowl\tbarn owl\nfish\ttrout\nhawk\tkestrel\n");
  spec.num_experts = 2;
  spec.num_novices = 3;
  auto syn = folk::generate_synthetic(spec);
  CHECK(syn.truth.edges() == spec.ground_truth->edges());
  CHECK(syn.seed_term == "anim");
}
