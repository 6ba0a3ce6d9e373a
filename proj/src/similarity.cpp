#include "folk/similarity.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

#include "folk/error.hpp"

namespace folk {

std::vector<std::string> top_tags(const SaplingNode& node, int k) {
  std::vector<std::pair<std::string, std::int64_t>> all(node.tags.entries().begin(), node.tags.entries().end());
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < all.size() && static_cast<int>(i) < k; ++i) out.push_back(all[i].first);
  return out;
}

double tag_overlap_similarity(const std::vector<std::string>& a, const std::vector<std::string>& b, double divisor) {
  std::vector<std::string> sa(a), sb(b);
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::size_t common = 0;
  for (auto x = sa.begin(), y = sb.begin(); x != sa.end() && y != sb.end();) {
    if (*x < *y)
      ++x;
    else if (*y < *x)
      ++y;
    else {
      ++common;
      ++x;
      ++y;
    }
  }
  return std::min(1.0, static_cast<double>(common) / divisor);
}

double node_similarity(const SaplingNode& a, const SaplingNode& b, const SimilarityConfig& config) {
  return tag_overlap_similarity(top_tags(a, config.top_k), top_tags(b, config.top_k), config.divisor);
}

bool merge_candidate(const Corpus& corpus, NodeId a, NodeId b) {
  if (a == b) return false;
  const auto& na = corpus.node(a);
  const auto& nb = corpus.node(b);
  if (na.name != nb.name) return false;
  if (na.sapling != nb.sapling) return true;
  auto is_ancestor = [&](NodeId anc, NodeId x) {
    for (NodeId p = corpus.node(x).parent; p != kNoNode; p = corpus.node(p).parent)
      if (p == anc) return true;
    return false;
  };
  return !is_ancestor(a, b) && !is_ancestor(b, a);
}

SimilarityMatrix SimilarityMatrix::from_entries(int n, const std::vector<std::tuple<int, int, double>>& entries) {
  SimilarityMatrix m;
  m.n_ = n;
  m.rows_.assign(static_cast<std::size_t>(n), {});
  m.preferences_.assign(static_cast<std::size_t>(n), 0.0);
  for (const auto& [i, j, s] : entries) {
    if (i < 0 || j < 0 || i >= n || j >= n) input_error("similarity entry index out of range");
    if (i == j) input_error("similarity entry on the diagonal");
    if (!(s > 0 && s <= 1)) input_error("similarity must lie in (0,1]");
    m.rows_[static_cast<std::size_t>(i)].push_back({j, s});
    m.rows_[static_cast<std::size_t>(j)].push_back({i, s});
  }
  for (auto& r : m.rows_) {
    std::sort(r.begin(), r.end(), [](const Entry& a, const Entry& b) { return a.col < b.col; });
    for (std::size_t k = 1; k < r.size(); ++k)
      if (r[k].col == r[k - 1].col) input_error("duplicate similarity entry");
  }
  return m;
}

std::optional<double> SimilarityMatrix::at(int i, int j) const {
  const auto& r = rows_.at(static_cast<std::size_t>(i));
  auto it = std::lower_bound(r.begin(), r.end(), j, [](const Entry& e, int c) { return e.col < c; });
  if (it == r.end() || it->col != j) return std::nullopt;
  return it->s;
}

std::size_t SimilarityMatrix::entry_count() const {
  std::size_t c = 0;
  for (const auto& r : rows_) c += r.size();
  return c;
}

double SimilarityMatrix::mean_similarity() const {
  double sum = 0;
  std::size_t c = 0;
  for (const auto& r : rows_)
    for (const auto& e : r) {
      sum += e.s;
      ++c;
    }
  if (c == 0) input_error("similarity matrix has no entries");
  return sum / static_cast<double>(c);
}

std::string SimilarityMatrix::dump() const {
  std::ostringstream out;
  char buf[64];
  for (int i = 0; i < n_; ++i)
    for (const auto& e : row(i))
      if (i < e.col) {
        std::snprintf(buf, sizeof buf, "%.17g", e.s);
        out << i << ' ' << e.col << ' ' << buf << '\n';
      }
  for (int j = 0; j < n_; ++j) {
    std::snprintf(buf, sizeof buf, "%.17g", preferences_[static_cast<std::size_t>(j)]);
    out << "pref " << j << ' ' << buf << '\n';
  }
  return out.str();
}

void assign_preferences(SimilarityMatrix& matrix, const PreferenceStrategy& strategy,
                        const std::vector<bool>& expert_nodes) {
  if (!(strategy.expert_multiplier >= 0)) input_error("expert multiplier must be non-negative");
  if (static_cast<int>(expert_nodes.size()) != matrix.size())
    input_error("expert node mask does not match matrix size");
  const double m = matrix.mean_similarity();
  auto& p = matrix.preferences();
  for (std::size_t j = 0; j < p.size(); ++j)
    p[j] = (strategy.mode == PreferenceMode::expert_boosted && expert_nodes[j]) ? strategy.expert_multiplier * m : m;
}

NodeSample sample_nodes(const Corpus& corpus, const std::vector<std::size_t>& saplings,
                        const std::vector<bool>& expert_users) {
  NodeSample out;
  for (std::size_t si : saplings) {
    const Sapling& sp = corpus.sapling(si);
    auto ui = corpus.user_index(sp.owner);
    bool expert = ui && *ui < expert_users.size() && expert_users[*ui];
    std::map<NodeId, int> local;
    for (NodeId id : sp.nodes) {
      int li = static_cast<int>(out.nodes.size());
      local[id] = li;
      out.nodes.push_back(id);
      NodeId p = corpus.node(id).parent;
      out.parent.push_back(p == kNoNode ? -1 : local.at(p));
      out.expert.push_back(expert);
    }
  }
  return out;
}

SimilarityMatrix build_similarity(const Corpus& corpus, const NodeSample& sample, const SimilarityConfig& config) {
  const int n = static_cast<int>(sample.nodes.size());
  std::vector<std::vector<std::string>> tops(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    auto t = top_tags(corpus.node(sample.nodes[static_cast<std::size_t>(i)]), config.top_k);
    std::sort(t.begin(), t.end());
    tops[static_cast<std::size_t>(i)] = std::move(t);
  }
  std::map<std::string, std::vector<int>> by_name;
  for (int i = 0; i < n; ++i) by_name[corpus.node(sample.nodes[static_cast<std::size_t>(i)]).name].push_back(i);
  std::vector<std::pair<int, int>> pairs;
  for (const auto& [name, members] : by_name)
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = a + 1; b < members.size(); ++b) pairs.emplace_back(members[a], members[b]);

  std::vector<double> sims(pairs.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    auto [i, j] = pairs[k];
    if (!merge_candidate(corpus, sample.nodes[static_cast<std::size_t>(i)], sample.nodes[static_cast<std::size_t>(j)]))
      continue;
    sims[k] = tag_overlap_similarity(tops[static_cast<std::size_t>(i)], tops[static_cast<std::size_t>(j)],
                                     config.divisor);
  }
  std::vector<std::tuple<int, int, double>> entries;
  for (std::size_t k = 0; k < pairs.size(); ++k)
    if (sims[k] > 0) entries.emplace_back(pairs[k].first, pairs[k].second, sims[k]);
  return SimilarityMatrix::from_entries(n, entries);
}

}  // namespace folk
