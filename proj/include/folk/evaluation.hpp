#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "folk/annotation.hpp"
#include "folk/folksonomy.hpp"
#include "folk/pipeline.hpp"

namespace folk {

/// Labels and parent links of one tree, detached from cluster membership.
struct LabeledTree {
  std::vector<std::string> label;
  std::vector<int> parent;
  std::vector<std::vector<int>> children;
  int root = 0;

  static LabeledTree from_folksonomy(const Folksonomy& f, int root);
  std::size_t size() const { return label.size(); }
  /// Label edges parent -> child, one per distinct pair, sorted.
  std::vector<std::pair<std::string, std::string>> label_edges() const;
};

/// Share of the tree's distinct labels that the reference contains.
double lexical_precision(const LabeledTree& learned, const ReferenceTaxonomy& ref);

enum class OverlapMean {
  shared,   // mean over labels in both vocabularies
  learned,  // same sum over all distinct learned labels
};

/// Mean Jaccard of semantic cotopies (the term, its ancestors and its
/// descendants) restricted to the shared vocabulary, read off the label
/// graph of label_edges(). A label that occurs more than once takes the
/// union of its occurrences, so the graph may contain cycles.
double taxonomic_overlap(const LabeledTree& learned, const ReferenceTaxonomy& ref,
                         OverlapMean mean = OverlapMean::shared);

/// The tree's label graph as a reference taxonomy, cycles included.
ReferenceTaxonomy as_reference(const LabeledTree& tree);

struct EvalReport {
  std::uint64_t seed = 0;
  std::string strategy;
  int depth = 0;
  double lp = 0;
  double to = 0;
  double to_all = 0;
  std::size_t node_count = 0;
  double pct_expert = 0;

  static std::string csv_header();
  std::string csv_row() const;
};

/// Metrics of the folksonomy's popular tree. A tree sharing no term with the
/// reference reports LP = TO = 0.
EvalReport evaluate(const Folksonomy& f, const ReferenceTaxonomy& ref);

/// Wide table: one row per seed, depth/LP/TO per strategy, then %EXP of the last.
std::string table_csv(const std::vector<EvalReport>& reports);

struct ReviewItem {
  std::string question_id;
  std::string subtree;  // indented text
  std::string source;   // strategy name
};

struct ReducedPair {
  LabeledTree first, second;
  std::size_t removed = 0;  // from each tree
  std::vector<ReviewItem> review;

  std::string review_json() const;
};

/// Removes, until nothing changes, leaves whose label path from the root
/// occurs as a leaf path in both trees; the roots stay. What remains is cut
/// into segments with at most max_children children per node.
ReducedPair reduce_tree_pair(const LabeledTree& first, const LabeledTree& second, const std::string& first_source,
                             const std::string& second_source, int max_children = 10);

/// Segments of a tree; each starts with the label path of its root.
std::vector<std::string> segment_tree(const LabeledTree& tree, int max_children);

enum class SweepAxis { preference_multiplier, swap_percent };

struct SweepPoint {
  double x = 0;
  double to = 0;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::preference_multiplier;
  std::vector<SweepPoint> points;

  std::string to_csv() const;
};

/// One M3-style run per multiplier: expert preferences are x times the mean.
SweepResult preference_sweep(const Corpus& corpus, const std::string& seed, const std::vector<bool>& expert_users,
                             const std::vector<double>& multipliers, const ReferenceTaxonomy& ref,
                             const LearnConfig& config = {});

/// M3 runs where n% of the expert nodes trade preferences with as many
/// novice nodes. Selections are prefixes of one shuffle, so they nest.
SweepResult swap_sweep(const Corpus& corpus, const std::string& seed, const std::vector<bool>& expert_users,
                       const std::vector<double>& percents, std::uint64_t rng_seed, const ReferenceTaxonomy& ref,
                       const LearnConfig& config = {});

struct TTest {
  double mean_difference = 0;
  double t = 0;
  int df = 0;
  double p = 1;  // two-sided
};

TTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace folk
