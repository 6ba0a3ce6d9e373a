#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "folk/annotation.hpp"

namespace folk {

struct UserFeatures {
  double variety = 0;         // number of saplings
  double num_twigs = 0;       // parent-child relations
  double balance = 0;         // normalized entropy of sapling sizes
  double disparity = 0;       // sum of pairwise JS divergences
  double disparity_normalized = 0;
  double num_conflicts = 0;
};

struct SaplingFeatures {
  double variety = 0;   // sum over levels of level * width
  double balance = 0;
  double depth = 0;
  double breadth = 0;
  double num_nodes = 0;
  double num_leaves = 0;
  double leaf_ratio = 0;
  double num_children_of_root = 0;
  double unique_twig_ratio = 0;
  double unique_term_ratio = 0;
  double num_conflicts = 0;
  double agreement = 0;
};

struct RootDiversity {
  std::string root_name;
  double num_creators = 0;
  double num_unique_children = 0;
  double coverage_30 = 0;
  double coverage_50 = 0;
  double coverage_70 = 0;
};

/// Normalized entropy of sapling sizes; 0 for a single sapling.
double user_balance(std::span<const double> sapling_sizes);

/// Jensen-Shannon divergence (natural log) between two tag distributions.
double jensen_shannon(const TagBag& p, const TagBag& q);

struct Disparity {
  double disparity = 0;
  double normalized = 0;
};
/// Sum of JS divergence over unordered sapling pairs; normalized divides by
/// the total node count. Fewer than two saplings yield zero.
Disparity user_disparity(std::span<const TagBag> tag_dists, double total_nodes);

double sapling_variety(const Corpus& corpus, const Sapling& sapling);

/// Per-level normalized entropy of the children-count distribution, averaged
/// over all levels. Levels with a single node or no children score 1.
double sapling_balance(const Corpus& corpus, const Sapling& sapling);

/// One level's contribution: entropy of children_counts / ln(n).
double level_balance(std::span<const int> children_counts);

/// Unordered name pairs {a, b} with a->b in one of the user's saplings and
/// b->a in another (or the same).
int count_conflicts(const Corpus& corpus, const UserProfile& user);

/// Twig (parent name, child name) -> number of distinct users creating it.
using TwigSupport = std::map<std::pair<std::string, std::string>, int>;
TwigSupport twig_agreement(const Corpus& corpus);

/// Index of child-name occurrence counts under each root name.
struct RootIndex {
  std::map<std::string, std::map<std::string, int>> children;
  std::map<std::string, std::set<std::string>> creators;
};
RootIndex build_root_index(const Corpus& corpus);

RootDiversity root_diversity(const RootIndex& index, const std::string& root_name);
RootDiversity root_diversity(const Corpus& corpus, const std::string& root_name);

/// Percentage of most-frequent distinct children needed to reach q percent of
/// all occurrences. `counts` need not be sorted.
double coverage_percent(std::vector<int> counts, int q);

SaplingFeatures sapling_features(const Corpus& corpus, const Sapling& sapling, const UserProfile& owner,
                                 const TwigSupport& support);

/// Rows are users in corpus order; columns are fixed (see feature_columns()).
struct FeatureTable {
  std::vector<std::string> columns;
  std::vector<std::string> user_ids;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;
  std::string to_csv() const;
  static FeatureTable from_csv(const std::string& text);
};

const std::vector<std::string>& feature_columns();

FeatureTable extract_features(const Corpus& corpus);

}  // namespace folk
