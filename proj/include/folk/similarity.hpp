#pragma once

#include <optional>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include "folk/annotation.hpp"

namespace folk {

struct SimilarityConfig {
  int top_k = 40;
  double divisor = 4.0;  // overlap count that saturates similarity at 1
};

/// Most frequent tags, count descending then name ascending.
std::vector<std::string> top_tags(const SaplingNode& node, int k = 40);

/// min(1, |a ∩ b| / divisor) for two sorted-or-unsorted tag lists.
double tag_overlap_similarity(const std::vector<std::string>& a, const std::vector<std::string>& b,
                              double divisor = 4.0);

double node_similarity(const SaplingNode& a, const SaplingNode& b, const SimilarityConfig& config = {});

/// Equal stemmed names, and not an ancestor/descendant pair of one sapling.
bool merge_candidate(const Corpus& corpus, NodeId a, NodeId b);

/// Local-index sparse similarity over a node sample. Off-diagonal entries are
/// exactly the candidate mask; the diagonal holds preferences.
class SimilarityMatrix {
 public:
  struct Entry {
    int col;
    double s;
  };

  SimilarityMatrix() = default;
  /// Entries are (i, j, s) with i != j; each unordered pair may be given once
  /// and is mirrored. Preferences default to zero.
  static SimilarityMatrix from_entries(int n, const std::vector<std::tuple<int, int, double>>& entries);

  int size() const { return n_; }
  const std::vector<Entry>& row(int i) const { return rows_[static_cast<std::size_t>(i)]; }
  std::optional<double> at(int i, int j) const;
  bool candidate(int i, int j) const { return at(i, j).has_value(); }
  std::size_t entry_count() const;  // off-diagonal, both directions

  double mean_similarity() const;

  std::vector<double>& preferences() { return preferences_; }
  const std::vector<double>& preferences() const { return preferences_; }

  /// `i j s` lines for every stored entry (i < j) then `pref j p` lines.
  std::string dump() const;

 private:
  int n_ = 0;
  std::vector<std::vector<Entry>> rows_;  // sorted by col
  std::vector<double> preferences_;
};

enum class PreferenceMode { uniform_mean, expert_boosted };

struct PreferenceStrategy {
  PreferenceMode mode = PreferenceMode::uniform_mean;
  double expert_multiplier = 2.0;
};

/// p_j = m, or multiplier * m on expert nodes, where m is the mean stored
/// off-diagonal similarity.
void assign_preferences(SimilarityMatrix& matrix, const PreferenceStrategy& strategy,
                        const std::vector<bool>& expert_nodes);

/// Node sample drawn from whole saplings, with local parent links.
struct NodeSample {
  std::vector<NodeId> nodes;   // local index -> corpus node id
  std::vector<int> parent;     // local parent index, -1 for sapling roots
  std::vector<bool> expert;    // owner is an expert
};

NodeSample sample_nodes(const Corpus& corpus, const std::vector<std::size_t>& saplings,
                        const std::vector<bool>& expert_users);

SimilarityMatrix build_similarity(const Corpus& corpus, const NodeSample& sample,
                                  const SimilarityConfig& config = {});

}  // namespace folk
