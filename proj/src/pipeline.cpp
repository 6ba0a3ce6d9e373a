#include "folk/pipeline.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "folk/error.hpp"

namespace folk {

SnowballSample snowball(const Corpus& corpus, const std::string& seed, int max_rounds) {
  if (max_rounds < 1) input_error("snowball: max_rounds must be positive");
  std::map<std::string, std::vector<std::size_t>> by_root;
  for (std::size_t s = 0; s < corpus.saplings.size(); ++s)
    by_root[corpus.node(corpus.saplings[s].root).name].push_back(s);

  SnowballSample out;
  out.seed = seed;
  std::set<std::size_t> taken;
  std::set<std::string> asked;
  std::vector<std::string> frontier{seed};
  for (int r = 1; r <= max_rounds && !frontier.empty(); ++r) {
    std::vector<std::size_t> got;
    for (const auto& name : frontier) {
      if (!asked.insert(name).second) continue;
      auto it = by_root.find(name);
      if (it == by_root.end()) continue;
      for (std::size_t s : it->second)
        if (taken.insert(s).second) got.push_back(s);
    }
    if (got.empty()) break;
    std::sort(got.begin(), got.end());
    out.rounds = r;
    std::set<std::string> next;
    for (std::size_t s : got) {
      out.saplings.push_back(s);
      out.round.push_back(r);
      for (NodeId c : corpus.node(corpus.saplings[s].root).children) next.insert(corpus.node(c).name);
    }
    frontier.assign(next.begin(), next.end());
  }
  return out;
}

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::m1: return "m1";
    case Strategy::m2: return "m2";
    case Strategy::m3: return "m3";
  }
  return "?";
}

Strategy parse_strategy(const std::string& text) {
  if (text == "m1" || text == "M1") return Strategy::m1;
  if (text == "m2" || text == "M2") return Strategy::m2;
  if (text == "m3" || text == "M3") return Strategy::m3;
  input_error("unknown strategy '" + text + "' (expected m1, m2 or m3)");
}

std::vector<std::size_t> strategy_saplings(const Corpus& corpus, const SnowballSample& sample, Strategy strategy,
                                           const std::vector<bool>& expert_users) {
  std::vector<std::size_t> out = sample.saplings;
  if (strategy == Strategy::m1) return out;
  std::set<std::size_t> have(out.begin(), out.end());
  std::set<std::size_t> experts;
  for (std::size_t s : sample.saplings) {
    auto ui = corpus.user_index(corpus.saplings[s].owner);
    if (ui && *ui < expert_users.size() && expert_users[*ui]) experts.insert(*ui);
  }
  for (std::size_t u : experts)
    for (std::size_t s : corpus.users[u].saplings)
      if (have.insert(s).second) out.push_back(s);
  return out;
}

double pct_expert(const Folksonomy& f) {
  if (f.trees.empty()) return 0.0;
  auto nodes = f.subtree(f.popular().root);
  std::size_t expert = 0;
  for (int v : nodes)
    if (f.nodes[static_cast<std::size_t>(v)].expert) ++expert;
  return 100.0 * static_cast<double>(expert) / static_cast<double>(nodes.size());
}

LearnResult learn(const Corpus& corpus, const std::vector<std::size_t>& saplings,
                  const std::vector<bool>& expert_users, const PreferenceFn& preferences, const LearnConfig& config) {
  LearnResult r;
  r.saplings = saplings;
  if (saplings.empty()) input_error("no saplings to learn from");
  r.sample = sample_nodes(corpus, saplings, expert_users);
  r.matrix = build_similarity(corpus, r.sample, config.similarity);
  RapStructure structure{r.sample.parent};
  if (r.matrix.entry_count() == 0) {
    // Nothing can merge: every node is its own exemplar.
    r.rap.assignment.resize(r.sample.nodes.size());
    for (std::size_t i = 0; i < r.rap.assignment.size(); ++i) r.rap.assignment[i] = static_cast<int>(i);
    r.rap.diagnostics.converged = true;
  } else {
    preferences(r.matrix, r.sample);
    r.rap = run(r.matrix, structure, config.rap);
  }
  r.folksonomy = assemble_folksonomy(corpus, r.sample, r.rap.assignment);
  r.pct_expert = pct_expert(r.folksonomy);
  return r;
}

LearnResult run_strategy(const Corpus& corpus, const std::string& seed, Strategy strategy,
                         const std::vector<bool>& expert_users, const LearnConfig& config) {
  auto sample = snowball(corpus, seed, config.max_rounds);
  auto saplings = strategy_saplings(corpus, sample, strategy, expert_users);
  PreferenceStrategy ps;
  ps.expert_multiplier = config.expert_multiplier;
  ps.mode = strategy == Strategy::m3 ? PreferenceMode::expert_boosted : PreferenceMode::uniform_mean;
  return learn(
      corpus, saplings, expert_users,
      [&](SimilarityMatrix& m, const NodeSample& s) { assign_preferences(m, ps, s.expert); }, config);
}

std::vector<bool> expert_mask(const Corpus& corpus, const std::vector<std::string>& experts) {
  std::vector<bool> mask(corpus.users.size(), false);
  for (const auto& e : experts)
    if (auto ui = corpus.user_index(e)) mask[*ui] = true;
  return mask;
}

}  // namespace folk
