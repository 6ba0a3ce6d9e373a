#include "folk/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "folk/error.hpp"

namespace folk {

LabeledTree LabeledTree::from_folksonomy(const Folksonomy& f, int root) {
  LabeledTree t;
  auto order = f.subtree(root);
  std::map<int, int> index;
  for (int v : order) {
    index[v] = static_cast<int>(t.label.size());
    t.label.push_back(f.nodes[static_cast<std::size_t>(v)].label);
    int p = f.nodes[static_cast<std::size_t>(v)].parent;
    t.parent.push_back(v == root || p < 0 ? -1 : index.at(p));
  }
  t.children.assign(t.label.size(), {});
  for (std::size_t v = 0; v < t.size(); ++v)
    if (t.parent[v] >= 0) t.children[static_cast<std::size_t>(t.parent[v])].push_back(static_cast<int>(v));
  t.root = 0;
  return t;
}

std::vector<std::pair<std::string, std::string>> LabeledTree::label_edges() const {
  std::set<std::pair<std::string, std::string>> edges;
  for (std::size_t v = 0; v < size(); ++v)
    if (parent[v] >= 0 && label[static_cast<std::size_t>(parent[v])] != label[v])
      edges.emplace(label[static_cast<std::size_t>(parent[v])], label[v]);
  return {edges.begin(), edges.end()};
}

namespace {

std::set<std::string> distinct_labels(const LabeledTree& t) {
  if (t.size() == 0) input_error("learned tree is empty");
  return {t.label.begin(), t.label.end()};
}

class LabelGraph {
 public:
  explicit LabelGraph(const LabeledTree& t) {
    for (const auto& [p, c] : t.label_edges()) {
      down_[p].insert(c);
      up_[c].insert(p);
    }
  }
  std::set<std::string> ancestors(const std::string& x) const { return reach(up_, x); }
  std::set<std::string> descendants(const std::string& x) const { return reach(down_, x); }

 private:
  using Adjacency = std::map<std::string, std::set<std::string>>;
  static std::set<std::string> reach(const Adjacency& adj, const std::string& from) {
    std::set<std::string> seen;
    std::vector<std::string> stack{from};
    while (!stack.empty()) {
      auto x = stack.back();
      stack.pop_back();
      auto it = adj.find(x);
      if (it == adj.end()) continue;
      for (const auto& y : it->second)
        if (seen.insert(y).second) stack.push_back(y);
    }
    seen.erase(from);
    return seen;
  }
  Adjacency down_, up_;
};

std::set<std::string> cotopy(const std::string& t, std::set<std::string> anc, const std::set<std::string>& desc,
                             const std::set<std::string>& shared) {
  anc.insert(desc.begin(), desc.end());
  anc.insert(t);
  std::set<std::string> out;
  for (const auto& x : anc)
    if (shared.count(x)) out.insert(x);
  return out;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

}  // namespace

double lexical_precision(const LabeledTree& learned, const ReferenceTaxonomy& ref) {
  auto labels = distinct_labels(learned);
  std::size_t hit = 0;
  for (const auto& l : labels) hit += ref.contains(l) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

double taxonomic_overlap(const LabeledTree& learned, const ReferenceTaxonomy& ref, OverlapMean mean) {
  auto labels = distinct_labels(learned);
  std::set<std::string> shared;
  for (const auto& l : labels)
    if (ref.contains(l)) shared.insert(l);
  if (shared.empty()) input_error("learned tree and reference share no term");
  LabelGraph g(learned);
  double sum = 0;
  for (const auto& t : shared)
    sum += jaccard(cotopy(t, g.ancestors(t), g.descendants(t), shared),
                   cotopy(t, ref.ancestors(t), ref.descendants(t), shared));
  double count = static_cast<double>(mean == OverlapMean::shared ? shared.size() : labels.size());
  return sum / count;
}

ReferenceTaxonomy as_reference(const LabeledTree& tree) {
  return ReferenceTaxonomy::from_stemmed_edges(tree.label_edges(), true, tree.label);
}

std::string EvalReport::csv_header() { return "seed,strategy,depth,lp,to,to_all,node_count,pct_expert\n"; }

std::string EvalReport::csv_row() const {
  return std::to_string(seed) + "," + strategy + "," + std::to_string(depth) + "," + fmt(lp) + "," + fmt(to) + "," +
         fmt(to_all) + "," + std::to_string(node_count) + "," + fmt(pct_expert) + "\n";
}

EvalReport evaluate(const Folksonomy& f, const ReferenceTaxonomy& ref) {
  EvalReport r;
  if (f.trees.empty()) input_error("folksonomy is empty");
  int root = f.popular().root;
  auto tree = LabeledTree::from_folksonomy(f, root);
  r.depth = f.depth(root);
  r.node_count = tree.size();
  r.pct_expert = pct_expert(f);
  r.lp = lexical_precision(tree, ref);
  if (r.lp > 0) {
    r.to = taxonomic_overlap(tree, ref, OverlapMean::shared);
    r.to_all = taxonomic_overlap(tree, ref, OverlapMean::learned);
  }
  return r;
}

std::string table_csv(const std::vector<EvalReport>& reports) {
  std::vector<std::string> strategies;
  std::map<std::uint64_t, std::map<std::string, const EvalReport*>> rows;
  for (const auto& r : reports) {
    if (std::find(strategies.begin(), strategies.end(), r.strategy) == strategies.end()) strategies.push_back(r.strategy);
    rows[r.seed][r.strategy] = &r;
  }
  std::string out = "seed";
  for (const auto& s : strategies) out += ",dp_" + s + ",lp_" + s + ",to_" + s;
  out += strategies.empty() ? "\n" : ",pct_expert_" + strategies.back() + "\n";
  for (const auto& [seed, by] : rows) {
    out += std::to_string(seed);
    for (const auto& s : strategies) {
      auto it = by.find(s);
      if (it == by.end()) {
        out += ",,,";
        continue;
      }
      out += "," + std::to_string(it->second->depth) + "," + fmt(it->second->lp) + "," + fmt(it->second->to);
    }
    if (!strategies.empty()) {
      auto it = by.find(strategies.back());
      out += "," + (it == by.end() ? std::string() : fmt(it->second->pct_expert));
    }
    out += "\n";
  }
  return out;
}

namespace {

std::string label_path(const LabeledTree& t, int v) {
  std::vector<std::string> parts;
  for (int x = v; x >= 0; x = t.parent[static_cast<std::size_t>(x)]) parts.push_back(t.label[static_cast<std::size_t>(x)]);
  std::string out;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (!out.empty()) out += '\n';
    out += *it;
  }
  return out;
}

std::vector<int> preorder(const LabeledTree& t, const std::vector<bool>& alive) {
  std::vector<int> out;
  std::vector<int> stack{t.root};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    out.push_back(v);
    const auto& ch = t.children[static_cast<std::size_t>(v)];
    for (auto it = ch.rbegin(); it != ch.rend(); ++it)
      if (alive[static_cast<std::size_t>(*it)]) stack.push_back(*it);
  }
  return out;
}

std::map<std::string, std::vector<int>> leaf_paths(const LabeledTree& t, const std::vector<bool>& alive) {
  std::map<std::string, std::vector<int>> out;
  for (int v : preorder(t, alive)) {
    if (v == t.root) continue;
    bool leaf = true;
    for (int c : t.children[static_cast<std::size_t>(v)]) leaf = leaf && !alive[static_cast<std::size_t>(c)];
    if (leaf) out[label_path(t, v)].push_back(v);
  }
  return out;
}

LabeledTree compact(const LabeledTree& t, const std::vector<bool>& alive) {
  LabeledTree out;
  std::map<int, int> index;
  for (int v : preorder(t, alive)) {
    index[v] = static_cast<int>(out.label.size());
    out.label.push_back(t.label[static_cast<std::size_t>(v)]);
    int p = t.parent[static_cast<std::size_t>(v)];
    out.parent.push_back(v == t.root ? -1 : index.at(p));
  }
  out.children.assign(out.label.size(), {});
  for (std::size_t v = 0; v < out.size(); ++v)
    if (out.parent[v] >= 0) out.children[static_cast<std::size_t>(out.parent[v])].push_back(static_cast<int>(v));
  return out;
}

}  // namespace

std::vector<std::string> segment_tree(const LabeledTree& tree, int max_children) {
  if (max_children < 1) input_error("max_children must be positive");
  if (tree.size() == 0) return {};
  struct Job {
    int root;
    std::vector<int> kids;
  };
  auto chunks = [&](int v, std::vector<Job>& into) {
    const auto& ch = tree.children[static_cast<std::size_t>(v)];
    for (std::size_t k = 0; k < ch.size(); k += static_cast<std::size_t>(max_children))
      into.push_back({v, {ch.begin() + static_cast<std::ptrdiff_t>(k),
                          ch.begin() + static_cast<std::ptrdiff_t>(std::min(ch.size(), k + static_cast<std::size_t>(max_children)))}});
  };
  std::vector<Job> jobs;
  if (static_cast<int>(tree.children[static_cast<std::size_t>(tree.root)].size()) > max_children)
    chunks(tree.root, jobs);
  else
    jobs.push_back({tree.root, tree.children[static_cast<std::size_t>(tree.root)]});

  std::vector<std::string> out;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    Job job = jobs[j];
    std::string path = label_path(tree, job.root);
    std::replace(path.begin(), path.end(), '\n', '>');
    std::ostringstream text;
    text << "# " << path << '\n' << tree.label[static_cast<std::size_t>(job.root)] << '\n';
    std::vector<std::pair<int, int>> stack;
    for (auto it = job.kids.rbegin(); it != job.kids.rend(); ++it) stack.emplace_back(*it, 1);
    while (!stack.empty()) {
      auto [v, d] = stack.back();
      stack.pop_back();
      text << std::string(static_cast<std::size_t>(2 * d), ' ') << tree.label[static_cast<std::size_t>(v)];
      const auto& ch = tree.children[static_cast<std::size_t>(v)];
      if (static_cast<int>(ch.size()) > max_children) {
        text << " ...";
        chunks(v, jobs);
      } else {
        for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.emplace_back(*it, d + 1);
      }
      text << '\n';
    }
    out.push_back(text.str());
  }
  return out;
}

ReducedPair reduce_tree_pair(const LabeledTree& first, const LabeledTree& second, const std::string& first_source,
                             const std::string& second_source, int max_children) {
  if (first.size() == 0 || second.size() == 0) input_error("reduce_tree_pair: empty tree");
  std::vector<bool> a(first.size(), true), b(second.size(), true);
  ReducedPair out;
  for (;;) {
    auto la = leaf_paths(first, a), lb = leaf_paths(second, b);
    std::size_t removed = 0;
    for (const auto& [path, va] : la) {
      auto it = lb.find(path);
      if (it == lb.end()) continue;
      std::size_t k = std::min(va.size(), it->second.size());
      for (std::size_t i = 0; i < k; ++i) {
        a[static_cast<std::size_t>(va[i])] = false;
        b[static_cast<std::size_t>(it->second[i])] = false;
      }
      removed += k;
    }
    if (removed == 0) break;
    out.removed += removed;
  }
  out.first = compact(first, a);
  out.second = compact(second, b);
  int q = 0;
  for (const auto& [tree, source] : {std::pair{&out.first, &first_source}, std::pair{&out.second, &second_source}})
    for (auto& text : segment_tree(*tree, max_children))
      out.review.push_back({"q" + std::to_string(++q), std::move(text), *source});
  return out;
}

std::string ReducedPair::review_json() const {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : review) arr.push_back({{"question_id", r.question_id}, {"subtree", r.subtree}, {"source", r.source}});
  return arr.dump(2) + "\n";
}

std::string SweepResult::to_csv() const {
  std::string out = axis == SweepAxis::preference_multiplier ? "multiplier,to\n" : "swap_percent,to\n";
  for (const auto& p : points) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g,%.6f\n", p.x, p.to);
    out += buf;
  }
  return out;
}

namespace {

void require_increasing(const std::vector<double>& xs, const char* what) {
  if (xs.empty()) input_error(std::string(what) + " list is empty");
  for (std::size_t k = 1; k < xs.size(); ++k)
    if (!(xs[k] > xs[k - 1])) input_error(std::string(what) + " values must be strictly increasing");
}

/// Runs fn(k) for every point in parallel and rethrows the first failure by index.
template <class Fn>
void parallel_points(std::size_t count, Fn fn) {
  std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < count; ++k) {
    try {
      fn(k);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double tree_overlap(const Folksonomy& f, const ReferenceTaxonomy& ref) { return evaluate(f, ref).to; }

}  // namespace

SweepResult preference_sweep(const Corpus& corpus, const std::string& seed, const std::vector<bool>& expert_users,
                             const std::vector<double>& multipliers, const ReferenceTaxonomy& ref,
                             const LearnConfig& config) {
  require_increasing(multipliers, "multiplier");
  auto saplings = strategy_saplings(corpus, snowball(corpus, seed, config.max_rounds), Strategy::m3, expert_users);
  SweepResult out;
  out.axis = SweepAxis::preference_multiplier;
  out.points.resize(multipliers.size());
  parallel_points(multipliers.size(), [&](std::size_t k) {
    PreferenceStrategy ps{PreferenceMode::expert_boosted, multipliers[k]};
    auto r = learn(
        corpus, saplings, expert_users,
        [&](SimilarityMatrix& m, const NodeSample& s) { assign_preferences(m, ps, s.expert); }, config);
    out.points[k] = {multipliers[k], tree_overlap(r.folksonomy, ref)};
  });
  return out;
}

SweepResult swap_sweep(const Corpus& corpus, const std::string& seed, const std::vector<bool>& expert_users,
                       const std::vector<double>& percents, std::uint64_t rng_seed, const ReferenceTaxonomy& ref,
                       const LearnConfig& config) {
  require_increasing(percents, "percent");
  if (percents.front() < 0 || percents.back() > 100) input_error("swap percents must lie in [0, 100]");
  if (std::find(expert_users.begin(), expert_users.end(), true) == expert_users.end())
    input_error("swap sweep needs at least one expert");
  auto saplings = strategy_saplings(corpus, snowball(corpus, seed, config.max_rounds), Strategy::m3, expert_users);
  SweepResult out;
  out.axis = SweepAxis::swap_percent;
  out.points.resize(percents.size());
  parallel_points(percents.size(), [&](std::size_t k) {
    auto prefs = [&](SimilarityMatrix& m, const NodeSample& s) {
      assign_preferences(m, {PreferenceMode::expert_boosted, config.expert_multiplier}, s.expert);
      std::vector<int> experts, novices;
      for (std::size_t i = 0; i < s.expert.size(); ++i) (s.expert[i] ? experts : novices).push_back(static_cast<int>(i));
      std::mt19937_64 rng(rng_seed);
      std::shuffle(experts.begin(), experts.end(), rng);
      std::shuffle(novices.begin(), novices.end(), rng);
      auto n = static_cast<std::size_t>(std::llround(percents[k] / 100.0 * static_cast<double>(experts.size())));
      n = std::min(n, novices.size());
      auto& p = m.preferences();
      for (std::size_t i = 0; i < n; ++i)
        std::swap(p[static_cast<std::size_t>(experts[i])], p[static_cast<std::size_t>(novices[i])]);
    };
    auto r = learn(corpus, saplings, expert_users, prefs, config);
    out.points[k] = {percents[k], tree_overlap(r.folksonomy, ref)};
  });
  return out;
}

TTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) input_error("paired t-test needs samples of equal size");
  if (a.size() < 2) input_error("paired t-test needs at least two pairs");
  const double n = static_cast<double>(a.size());
  double mean = 0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
  TTest r;
  r.mean_difference = mean;
  r.df = static_cast<int>(a.size()) - 1;
  double se = std::sqrt(ss / (n - 1) / n);
  if (se == 0) {
    r.t = mean == 0 ? 0 : std::copysign(INFINITY, mean);
    r.p = mean == 0 ? 1 : 0;
    return r;
  }
  r.t = mean / se;
  boost::math::students_t dist(r.df);
  r.p = 2 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t)));
  return r;
}

}  // namespace folk
