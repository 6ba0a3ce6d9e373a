#pragma once

#include <functional>
#include <string>
#include <vector>

#include "folk/annotation.hpp"
#include "folk/folksonomy.hpp"
#include "folk/rap.hpp"
#include "folk/similarity.hpp"

namespace folk {

struct SnowballSample {
  std::string seed;
  std::vector<std::size_t> saplings;  // acquisition order
  std::vector<int> round;             // parallel to saplings, from 1
  int rounds = 0;
};

/// Round 1 takes saplings rooted at the seed; round r + 1 takes saplings
/// rooted at a direct child name of round r. Each sapling enters once.
SnowballSample snowball(const Corpus& corpus, const std::string& seed, int max_rounds = 5);

enum class Strategy { m1, m2, m3 };
const char* to_string(Strategy s);
Strategy parse_strategy(const std::string& text);

struct LearnConfig {
  SimilarityConfig similarity;
  RapConfig rap;
  double expert_multiplier = 2.0;
  int max_rounds = 5;
};

struct LearnResult {
  std::vector<std::size_t> saplings;
  NodeSample sample;
  SimilarityMatrix matrix;
  RapResult rap;
  Folksonomy folksonomy;
  double pct_expert = 0;
};

/// Sets matrix preferences given the node sample.
using PreferenceFn = std::function<void(SimilarityMatrix&, const NodeSample&)>;

LearnResult learn(const Corpus& corpus, const std::vector<std::size_t>& saplings,
                  const std::vector<bool>& expert_users, const PreferenceFn& preferences, const LearnConfig& config);

/// Saplings used by a strategy: the snowball, plus for M2/M3 every sapling
/// of an expert who owns one in the snowball.
std::vector<std::size_t> strategy_saplings(const Corpus& corpus, const SnowballSample& sample, Strategy strategy,
                                           const std::vector<bool>& expert_users);

LearnResult run_strategy(const Corpus& corpus, const std::string& seed, Strategy strategy,
                         const std::vector<bool>& expert_users, const LearnConfig& config = {});

/// Percentage of the popular tree's nodes whose exemplar is an expert's node.
double pct_expert(const Folksonomy& f);

/// Expert flags per corpus user from a name list.
std::vector<bool> expert_mask(const Corpus& corpus, const std::vector<std::string>& experts);

}  // namespace folk
