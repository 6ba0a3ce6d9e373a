#include <doctest.h>

#include "folk/similarity.hpp"
#include "helpers.hpp"

using doctest::Approx;
using testing::N;

TEST_CASE("top tags order and truncation") {
  auto c = testing::corpus({testing::raw("u", "s", {{"r", {{"nest", 5}, {"bird", 5}, {"egg", 2}}, {}}})});
  CHECK(folk::top_tags(c.nodes[0]) == std::vector<std::string>{"bird", "nest", "egg"});

  std::map<std::string, std::int64_t> many;
  for (int i = 0; i < 60; ++i) many["t" + std::to_string(100 + i)] = 1 + i % 3;
  auto big = testing::corpus({testing::raw("u", "s", {{"r", many, {}}})});
  CHECK(folk::top_tags(big.nodes[0]).size() == 40);
}

TEST_CASE("tag overlap similarity") {
  std::vector<std::string> a{"a", "b", "c", "d", "e"}, b{"d", "c", "b", "a"}, c{"a", "b", "x"}, d{"y"};
  CHECK(folk::tag_overlap_similarity(a, b) == 1.0);
  CHECK(folk::tag_overlap_similarity(a, c) == 0.5);
  CHECK(folk::tag_overlap_similarity(a, d) == 0.0);
}

TEST_CASE("merge candidates") {
  auto c = testing::corpus({testing::raw("u", "s1", {{"a", {}, {1}}, {"b", {}, {2}}, {"a", {}, {}}}),
                            testing::raw("v", "s2", {{"a", {}, {1}}, {"b", {}, {}}})});
  CHECK_FALSE(folk::merge_candidate(c, 0, 2));  // ancestor within one sapling
  CHECK(folk::merge_candidate(c, 0, 3));
  CHECK(folk::merge_candidate(c, 1, 4));
  CHECK_FALSE(folk::merge_candidate(c, 0, 1));
  CHECK_FALSE(folk::merge_candidate(c, 0, 0));
}

TEST_CASE("preferences") {
  auto m = folk::SimilarityMatrix::from_entries(4, {{0, 1, 0.5}, {2, 3, 1.0}});
  CHECK(m.mean_similarity() == Approx(0.75));
  folk::assign_preferences(m, {}, {false, false, false, false});
  for (double p : m.preferences()) CHECK(p == Approx(0.75));

  folk::PreferenceStrategy boost{folk::PreferenceMode::expert_boosted, 2.0};
  folk::assign_preferences(m, boost, {false, false, false, true});
  CHECK(m.preferences()[3] == Approx(1.5));
  CHECK(m.preferences()[0] == Approx(0.75));

  auto u = m, one = m;
  folk::assign_preferences(u, {}, {false, false, false, true});
  folk::assign_preferences(one, {folk::PreferenceMode::expert_boosted, 1.0}, {false, false, false, true});
  CHECK(u.preferences() == one.preferences());
}

TEST_CASE("similarity matrix holds candidates with shared tags") {
  auto c = testing::corpus({testing::raw("u", "s1", {{"a", {{"x", 1}, {"y", 1}}, {1}}, {"b", {{"z", 1}}, {}}}),
                            testing::raw("v", "s2", {{"a", {{"x", 1}}, {1}}, {"b", {{"q", 1}}, {}}}),
                            testing::raw("w", "s3", {{"a", {{"k", 1}}, {}}})});
  auto sample = folk::sample_nodes(c, {0, 1, 2}, std::vector<bool>(3, false));
  auto m = folk::build_similarity(c, sample);
  for (int i = 0; i < m.size(); ++i)
    for (int j = 0; j < m.size(); ++j) {
      if (i == j) continue;
      const auto& a = c.node(sample.nodes[static_cast<std::size_t>(i)]);
      const auto& b = c.node(sample.nodes[static_cast<std::size_t>(j)]);
      bool cand = folk::merge_candidate(c, a.id, b.id) && folk::node_similarity(a, b) > 0;
      CHECK(m.candidate(i, j) == cand);
    }
  // Propagated bags {x,y,z} and {x,q} share one tag; s3's root shares none.
  CHECK(*m.at(0, 2) == Approx(0.25));
  CHECK(m.at(0, 1) == std::nullopt);
  CHECK(m.at(0, 4) == std::nullopt);
}
