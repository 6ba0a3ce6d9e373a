#include <doctest.h>

#include <cmath>
#include <vector>

#include "folk/features.hpp"
#include "folk/synthetic.hpp"
#include "helpers.hpp"

using doctest::Approx;
using testing::N;

TEST_CASE("user balance") {
  std::vector<double> uniform{5, 5, 5, 5}, skewed{9, 1}, single{7};
  CHECK(folk::user_balance(uniform) == Approx(1.0).epsilon(1e-12));
  CHECK(folk::user_balance(skewed) == Approx(0.4690).epsilon(1e-4));
  double h = -(0.9 * std::log(0.9) + 0.1 * std::log(0.1)) / std::log(2.0);
  CHECK(std::abs(folk::user_balance(skewed) - h) < 1e-12);
  CHECK(folk::user_balance(single) == 0.0);
}

TEST_CASE("jensen shannon and disparity") {
  folk::TagBag p({{"spider", 2}, {"web", 1}}), q({{"moth", 3}}), r({{"moth", 1}, {"wing", 1}});
  CHECK(folk::jensen_shannon(p, p) == Approx(0.0));
  CHECK(std::abs(folk::jensen_shannon(p, q) - std::log(2.0)) < 1e-9);
  CHECK(folk::jensen_shannon(q, r) == Approx(folk::jensen_shannon(r, q)));
  CHECK(folk::jensen_shannon(q, r) > 0.0);
  CHECK(folk::jensen_shannon(q, r) < std::log(2.0));

  std::vector<folk::TagBag> three{p, p, q};
  auto d = folk::user_disparity(three, 6);
  CHECK(std::abs(d.disparity - 2 * std::log(2.0)) < 1e-9);
  CHECK(d.normalized == Approx(2 * std::log(2.0) / 6));
  std::vector<folk::TagBag> one{p};
  CHECK(folk::user_disparity(one, 2).disparity == 0.0);
}

TEST_CASE("sapling variety") {
  auto star = testing::corpus({testing::raw("u", "s", {{"r", {}, {1, 2, 3}}, {"a", {}, {}}, {"b", {}, {}}, {"c", {}, {}}})});
  CHECK(folk::sapling_variety(star, star.saplings[0]) == 7.0);
  auto single = testing::corpus({testing::raw("u", "s", {{"r", {}, {}}})});
  CHECK(folk::sapling_variety(single, single.saplings[0]) == 1.0);
  auto chain = testing::corpus({testing::raw("u", "s", {{"r", {}, {1}}, {"a", {}, {2}}, {"b", {}, {}}})});
  CHECK(folk::sapling_variety(chain, chain.saplings[0]) == 6.0);
}

TEST_CASE("level balance of children counts 3,3,1,2") {
  std::vector<int> counts{3, 3, 1, 2};
  double h = 0;
  for (int c : counts) h -= (c / 9.0) * std::log(c / 9.0);
  CHECK(std::abs(folk::level_balance(counts) - h / std::log(4.0)) < 1e-12);
  CHECK(std::abs(folk::level_balance(counts) - 0.9455) < 1e-4);
}

TEST_CASE("sapling balance conventions") {
  // root -> a, b; a -> c, d; b -> e, f
  auto binary = testing::corpus({testing::raw(
      "u", "s", {{"r", {}, {1, 2}}, {"a", {}, {3, 4}}, {"b", {}, {5, 6}}, {"c", {}, {}}, {"d", {}, {}}, {"e", {}, {}}, {"f", {}, {}}})});
  CHECK(folk::sapling_balance(binary, binary.saplings[0]) == Approx(1.0));
  auto star = testing::corpus({testing::raw("u", "s", {{"r", {}, {1, 2, 3}}, {"a", {}, {}}, {"b", {}, {}}, {"c", {}, {}}})});
  CHECK(folk::sapling_balance(star, star.saplings[0]) == Approx(1.0));
  auto lopsided = testing::corpus({testing::raw(
      "u", "s", {{"r", {}, {1, 2}}, {"a", {}, {3, 4, 5}}, {"b", {}, {}}, {"c", {}, {}}, {"d", {}, {}}, {"e", {}, {}}})});
  CHECK(folk::sapling_balance(lopsided, lopsided.saplings[0]) < 1.0);
}

TEST_CASE("conflicts count reversed name pairs once") {
  auto c = testing::corpus({testing::raw("u", "s1", {{"journey", {}, {1}}, {"los angeles", {}, {}}}),
                            testing::raw("u", "s2", {{"los angeles", {}, {1}}, {"journey", {}, {}}}),
                            testing::raw("u", "s3", {{"journey", {}, {1}}, {"los angeles", {}, {}}})});
  CHECK(folk::count_conflicts(c, c.users[0]) == 1);
  auto none = testing::corpus({testing::raw("u", "s1", {{"a", {}, {1}}, {"b", {}, {}}})});
  CHECK(folk::count_conflicts(none, none.users[0]) == 0);
}

TEST_CASE("twig agreement counts distinct users") {
  auto c = testing::corpus({testing::raw("u1", "s1", {{"a", {}, {1}}, {"b", {}, {}}}),
                            testing::raw("u1", "s2", {{"a", {}, {1}}, {"b", {}, {}}}),
                            testing::raw("u2", "s3", {{"a", {}, {1}}, {"b", {}, {}}}),
                            testing::raw("u3", "s4", {{"a", {}, {1}}, {"b", {}, {}}}),
                            testing::raw("u4", "s5", {{"x", {}, {1}}, {"y", {}, {}}})});
  auto support = folk::twig_agreement(c);
  CHECK(support.at({"a", "b"}) == 3);
  CHECK(support.at({"x", "y"}) == 1);
  const auto& owner = *c.find_user("u4");
  CHECK(folk::sapling_features(c, c.saplings[owner.saplings[0]], owner, support).agreement == 1.0);
}

TEST_CASE("coverage closed form on flat child distributions") {
  for (int k = 1; k <= 30; ++k) {
    std::vector<int> counts(static_cast<std::size_t>(k), 1);
    int m = (7 * k + 9) / 10;  // ceil(0.7 k)
    double expected = 100.0 * m / k;
    CHECK(folk::coverage_percent(counts, 70) == expected);
  }
  CHECK(folk::coverage_percent({8, 1, 1}, 70) == Approx(100.0 / 3));
}

TEST_CASE("degenerate user aggregates") {
  auto c = testing::corpus({testing::raw("u", "s", {{"r", {{"t", 1}}, {}}})});
  auto table = folk::extract_features(c);
  const auto& row = table.rows[0];
  CHECK(row[table.column("user_variety")] == 1.0);
  CHECK(row[table.column("user_num_twigs")] == 0.0);
  CHECK(row[table.column("user_balance")] == 0.0);
  CHECK(row[table.column("user_disparity")] == 0.0);
}

TEST_CASE("feature table round trip and column order") {
  folk::SyntheticSpec spec;
  spec.num_experts = 3;
  spec.num_novices = 6;
  auto c = folk::ingest_synthetic(folk::generate_synthetic(spec));
  auto table = folk::extract_features(c);
  CHECK(table.columns == folk::feature_columns());
  auto back = folk::FeatureTable::from_csv(table.to_csv());
  CHECK(back.to_csv() == table.to_csv());
}

TEST_CASE("planted experts have deeper saplings") {
  folk::SyntheticSpec spec;
  auto syn = folk::generate_synthetic(spec);
  auto c = folk::ingest_synthetic(syn);
  auto table = folk::extract_features(c);
  auto col = table.column("sapling_depth_mean");
  std::map<std::string, folk::UserLabel> label(syn.labels.begin(), syn.labels.end());
  double min_expert = 1e9, max_novice = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    double d = table.rows[r][col];
    if (label.at(table.user_ids[r]) == folk::UserLabel::expert)
      min_expert = std::min(min_expert, d);
    else
      max_novice = std::max(max_novice, d);
  }
  CHECK(min_expert > max_novice);
}

TEST_CASE("structural features ignore vocabulary") {
  auto a = testing::corpus({testing::raw("u1", "s1", {{"r", {{"t", 2}}, {1, 2}}, {"a", {{"x", 1}}, {}}, {"b", {{"y", 1}}, {}}}),
                            testing::raw("u2", "s2", {{"q", {{"m", 2}}, {1, 2}}, {"c", {{"n", 1}}, {}}, {"d", {{"o", 1}}, {}}})});
  auto table = folk::extract_features(a);
  CHECK(table.rows[0] == table.rows[1]);
}
