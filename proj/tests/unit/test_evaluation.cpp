#include <doctest.h>

#include <algorithm>
#include <random>

#include "folk/error.hpp"
#include "folk/evaluation.hpp"
#include "folk/synthetic.hpp"
#include "helpers.hpp"

using doctest::Approx;

namespace {

folk::LabeledTree tree(const std::vector<std::string>& labels, const std::vector<int>& parents) {
  folk::LabeledTree t;
  t.label = labels;
  t.parent = parents;
  t.children.assign(labels.size(), {});
  for (std::size_t v = 0; v < labels.size(); ++v)
    if (parents[v] >= 0) t.children[static_cast<std::size_t>(parents[v])].push_back(static_cast<int>(v));
  return t;
}

folk::LabeledTree random_tree(std::mt19937_64& rng, int n, int vocabulary) {
  std::vector<std::string> labels;
  std::vector<int> parents;
  for (int v = 0; v < n; ++v) {
    labels.push_back("w" + std::to_string(rng() % static_cast<std::uint64_t>(vocabulary)));
    parents.push_back(v == 0 ? -1 : static_cast<int>(rng() % static_cast<std::uint64_t>(v)));
  }
  return tree(labels, parents);
}

// Same tree with every child list reversed and node ids permuted.
folk::LabeledTree shuffled(const folk::LabeledTree& t, std::mt19937_64& rng) {
  std::vector<int> perm(t.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  std::shuffle(perm.begin() + 1, perm.end(), rng);
  folk::LabeledTree out;
  out.label.resize(t.size());
  out.parent.resize(t.size());
  out.children.assign(t.size(), {});
  for (std::size_t v = 0; v < t.size(); ++v) {
    auto pv = static_cast<std::size_t>(perm[v]);
    out.label[pv] = t.label[v];
    out.parent[pv] = t.parent[v] < 0 ? -1 : perm[static_cast<std::size_t>(t.parent[v])];
  }
  for (std::size_t v = 0; v < t.size(); ++v)
    for (auto it = t.children[v].rbegin(); it != t.children[v].rend(); ++it)
      out.children[static_cast<std::size_t>(perm[v])].push_back(perm[static_cast<std::size_t>(*it)]);
  return out;
}

}  // namespace

TEST_CASE("lexical precision") {
  auto ref = folk::ReferenceTaxonomy::from_stemmed_edges({{"a", "b"}, {"b", "x"}}, false);
  CHECK(folk::lexical_precision(tree({"a", "b", "c"}, {-1, 0, 0}), ref) == Approx(2.0 / 3));
  CHECK(folk::lexical_precision(tree({"a", "b"}, {-1, 0}), ref) == 1.0);
  CHECK(folk::lexical_precision(tree({"p", "q"}, {-1, 0}), ref) == 0.0);
  CHECK_THROWS_AS(folk::lexical_precision(folk::LabeledTree{}, ref), folk::Error);
}

TEST_CASE("taxonomic overlap hand cases") {
  auto chain = tree({"r", "a", "b", "c"}, {-1, 0, 1, 2});
  auto star = tree({"r", "a", "b", "c"}, {-1, 0, 0, 0});
  CHECK(folk::taxonomic_overlap(chain, folk::as_reference(chain)) == 1.0);
  // Star cotopies {r,a,b,c}, {a,r}, {b,r}, {c,r} against full chain cotopies.
  CHECK(folk::taxonomic_overlap(star, folk::as_reference(chain)) == Approx((1.0 + 0.5 + 0.5 + 0.5) / 4));

  auto abc = tree({"a", "b", "c"}, {-1, 0, 1});
  auto ac = folk::ReferenceTaxonomy::from_stemmed_edges({{"a", "c"}}, false);
  CHECK(folk::taxonomic_overlap(abc, ac) == 1.0);
  CHECK(folk::taxonomic_overlap(abc, ac, folk::OverlapMean::learned) == Approx(2.0 / 3));

  auto apart = folk::ReferenceTaxonomy::from_stemmed_edges({{"x", "y"}}, false);
  CHECK_THROWS_AS(folk::taxonomic_overlap(abc, apart), folk::Error);
}

TEST_CASE("metric identities on random trees") {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 100; ++k) {
    auto t = random_tree(rng, 2 + static_cast<int>(rng() % 15), 4 + static_cast<int>(rng() % 12));
    auto ref = folk::as_reference(t);
    CHECK(folk::taxonomic_overlap(t, ref) == 1.0);
    CHECK(folk::lexical_precision(t, ref) == 1.0);
    auto other = random_tree(rng, 12, 8);
    auto oref = folk::as_reference(other);
    auto s = shuffled(t, rng);
    bool shared = false;
    for (const auto& l : t.label) shared |= oref.contains(l);
    CHECK(folk::lexical_precision(s, oref) == folk::lexical_precision(t, oref));
    if (shared) CHECK(folk::taxonomic_overlap(s, oref) == folk::taxonomic_overlap(t, oref));
  }
}

TEST_CASE("tree reduction") {
  auto a = tree({"r", "x", "y", "z"}, {-1, 0, 1, 0});
  auto same = folk::reduce_tree_pair(a, a, "m1", "m3");
  CHECK(same.first.size() == 1);
  CHECK(same.second.size() == 1);
  CHECK(same.removed == 3);

  auto b = tree({"r", "p", "q"}, {-1, 0, 1});
  auto apart = folk::reduce_tree_pair(a, b, "m1", "m3");
  CHECK(apart.first.size() == a.size());
  CHECK(apart.second.size() == b.size());

  // Only the leaf r>z is shared; x keeps a different leaf in each tree.
  auto c = tree({"r", "x", "z", "w"}, {-1, 0, 0, 1});
  auto partial = folk::reduce_tree_pair(a, c, "m1", "m3");
  auto labels = [](const folk::LabeledTree& t) { return std::multiset<std::string>(t.label.begin(), t.label.end()); };
  CHECK(labels(partial.first) == std::multiset<std::string>{"r", "x", "y"});
  CHECK(labels(partial.second) == std::multiset<std::string>{"r", "x", "w"});
  CHECK(partial.removed == 1);
}

TEST_CASE("segmentation bounds children per node") {
  std::vector<std::string> labels{"root"};
  std::vector<int> parents{-1};
  for (int i = 0; i < 25; ++i) {
    labels.push_back("c" + std::to_string(i));
    parents.push_back(0);
  }
  auto wide = tree(labels, parents);
  auto segments = folk::segment_tree(wide, 10);
  CHECK(segments.size() == 3);
  for (const auto& s : segments) {
    CHECK(s.rfind("# root", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') <= 1 + 1 + 10);
  }
  auto pair = folk::reduce_tree_pair(wide, tree({"root"}, {-1}), "m1", "m3");
  CHECK(pair.review.size() == 4);
  auto j = pair.review_json();
  CHECK(j.find("\"question_id\": \"q1\"") != std::string::npos);
  CHECK(j.find("\"source\": \"m1\"") != std::string::npos);
}

TEST_CASE("paired t test") {
  auto r = folk::paired_t_test({2, 4, 6, 8, 10}, {1, 2, 3, 4, 5});
  CHECK(r.df == 4);
  CHECK(r.t == Approx(4.242640687119285).epsilon(1e-12));
  CHECK(r.p == Approx(0.013235599563682695).epsilon(1e-9));
  auto s = folk::paired_t_test({0.5, 0.6, 0.55, 0.7, 0.65, 0.52}, {0.45, 0.58, 0.5, 0.6, 0.66, 0.5});
  CHECK(s.t == Approx(2.4947002649145467).epsilon(1e-9));
  CHECK(s.p == Approx(0.05484459091434549).epsilon(1e-9));
  CHECK_THROWS_AS(folk::paired_t_test({1}, {2}), folk::Error);
}

TEST_CASE("sweep reductions and determinism") {
  folk::SyntheticSpec spec;
  spec.num_experts = 4;
  spec.num_novices = 12;
  auto syn = folk::generate_synthetic(spec);
  auto c = folk::ingest_synthetic(syn);
  std::vector<std::string> experts;
  for (const auto& [u, l] : syn.labels)
    if (l == folk::UserLabel::expert) experts.push_back(u);
  auto mask = folk::expert_mask(c, experts);

  auto m2 = folk::evaluate(folk::run_strategy(c, syn.seed_term, folk::Strategy::m2, mask).folksonomy, syn.truth);
  auto m3 = folk::evaluate(folk::run_strategy(c, syn.seed_term, folk::Strategy::m3, mask).folksonomy, syn.truth);
  auto one = folk::preference_sweep(c, syn.seed_term, mask, {1.0}, syn.truth);
  REQUIRE(one.points.size() == 1);
  CHECK(one.points[0].to == m2.to);

  auto swap = folk::swap_sweep(c, syn.seed_term, mask, {0, 50, 100}, 5, syn.truth);
  CHECK(swap.points[0].to == m3.to);
  auto again = folk::swap_sweep(c, syn.seed_term, mask, {0, 50, 100}, 5, syn.truth);
  CHECK(again.to_csv() == swap.to_csv());

  CHECK_THROWS_AS(folk::preference_sweep(c, syn.seed_term, mask, {2.0, 1.0}, syn.truth), folk::Error);
  CHECK_THROWS_AS(folk::swap_sweep(c, syn.seed_term, mask, {0, 150}, 5, syn.truth), folk::Error);
  std::vector<bool> none(c.users.size(), false);
  CHECK_THROWS_AS(folk::swap_sweep(c, syn.seed_term, none, {0, 100}, 5, syn.truth), folk::Error);
}

TEST_CASE("report csv and table") {
  folk::EvalReport r;
  r.seed = 3;
  r.strategy = "m3";
  r.depth = 4;
  r.lp = 1;
  r.to = 0.5;
  r.to_all = 0.25;
  r.node_count = 12;
  r.pct_expert = 8.5;
  CHECK(folk::EvalReport::csv_header() == "seed,strategy,depth,lp,to,to_all,node_count,pct_expert\n");
  CHECK(r.csv_row() == "3,m3,4,1.000000,0.500000,0.250000,12,8.500000\n");
  auto table = folk::table_csv({r});
  CHECK(table.find("3,") != std::string::npos);
}
