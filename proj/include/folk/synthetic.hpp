#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "folk/annotation.hpp"

namespace folk {

struct SyntheticSpec {
  /// Planted taxonomy; generated from truth_nodes/truth_depth when absent.
  /// Must be a single-rooted tree.
  std::optional<ReferenceTaxonomy> ground_truth;
  int truth_nodes = 30;
  int truth_depth = 5;  // levels, root = 1

  int num_experts = 10;
  int num_novices = 40;
  int expert_depth_min = 3;
  int expert_depth_max = 4;
  int novice_depth = 2;
  int expert_saplings_min = 1, expert_saplings_max = 2;
  int novice_saplings_min = 3, novice_saplings_max = 6;

  double vagueness = 0.3;  // vague root names and level skipping
  double noise = 0.1;      // misplaced children, stray tags
  double expert_root_rate = 0.2;  // expert saplings rooted at the truth root
  double novice_root_rate = 0.6;  // novice saplings rooted at the truth root
  double name_tag_rate = 0.5;     // nodes tagged with their own name
  double expert_keep = 0.4;     // chance an expert keeps an optional child
  int vocabulary = 10;          // tags per concept
  int core_tags = 4;            // leading vocabulary tags most photos carry
  double core_rate = 1.0;  // experts
  double novice_core_rate = 0.5;
  int tags_min = 1, tags_max = 3;  // further tags drawn from the rest
  std::uint64_t seed = 1;

  std::string to_json() const;
  static SyntheticSpec from_json(const std::string& text);
};

struct SyntheticCorpus {
  std::vector<RawSapling> saplings;
  std::vector<std::pair<std::string, UserLabel>> labels;
  ReferenceTaxonomy truth;
  std::string seed_term;  // stemmed truth root

  std::string labels_csv() const;
};

/// Deterministic given spec.seed. Experts emit name-faithful subtrees of the
/// truth; novices emit shallow saplings with level skipping, vague roots and
/// misplaced children.
SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

/// Corpus as the pipeline sees it: serialized, parsed, tag-propagated.
Corpus ingest_synthetic(const SyntheticCorpus& synthetic);

}  // namespace folk
