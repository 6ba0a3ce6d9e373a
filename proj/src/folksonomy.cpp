#include "folk/folksonomy.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "folk/error.hpp"

namespace folk {

using nlohmann::json;
using nlohmann::ordered_json;

const FolkTree& Folksonomy::popular() const {
  if (trees.empty()) invariant_error("folksonomy has no trees");
  return trees.front();
}

std::vector<int> Folksonomy::subtree(int root) const {
  std::vector<int> out;
  std::vector<int> stack{root};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    out.push_back(v);
    const auto& ch = nodes.at(static_cast<std::size_t>(v)).children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

int Folksonomy::depth(int root) const {
  int best = 0;
  std::vector<std::pair<int, int>> stack{{root, 1}};
  while (!stack.empty()) {
    auto [v, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    for (int c : nodes.at(static_cast<std::size_t>(v)).children) stack.emplace_back(c, d + 1);
  }
  return best;
}

namespace {

void order_forest(Folksonomy& f) {
  for (auto& n : f.nodes)
    std::stable_sort(n.children.begin(), n.children.end(), [&](int a, int b) {
      return f.nodes[static_cast<std::size_t>(a)].label < f.nodes[static_cast<std::size_t>(b)].label;
    });
  f.trees.clear();
  for (std::size_t i = 0; i < f.nodes.size(); ++i) {
    if (f.nodes[i].parent >= 0) continue;
    FolkTree t;
    t.root = static_cast<int>(i);
    std::set<std::pair<std::string, std::string>> saplings;
    for (int v : f.subtree(t.root))
      for (const auto& m : f.nodes[static_cast<std::size_t>(v)].members) saplings.emplace(m.user, m.sapling);
    t.sapling_count = saplings.size();
    f.trees.push_back(t);
  }
  std::stable_sort(f.trees.begin(), f.trees.end(), [&](const FolkTree& a, const FolkTree& b) {
    if (a.sapling_count != b.sapling_count) return a.sapling_count > b.sapling_count;
    return f.nodes[static_cast<std::size_t>(a.root)].label < f.nodes[static_cast<std::size_t>(b.root)].label;
  });
  if (!f.trees.empty()) f.trees.front().popular = true;
}

}  // namespace

Folksonomy assemble_folksonomy(const Corpus& corpus, const NodeSample& sample, const AssignmentMatrix& a) {
  const std::size_t n = sample.nodes.size();
  if (a.size() != n) invariant_error("assignment size does not match node sample");
  Folksonomy f;
  std::vector<int> folk_index(n, -1);
  for (std::size_t j = 0; j < n; ++j) {
    if (a[j] < 0 || static_cast<std::size_t>(a[j]) >= n || a[static_cast<std::size_t>(a[j])] != a[j])
      invariant_error("assignment is not idempotent at node " + std::to_string(j));
    if (a[j] != static_cast<int>(j)) continue;
    folk_index[j] = static_cast<int>(f.nodes.size());
    FolkNode node;
    node.label = corpus.node(sample.nodes[j]).name;
    node.expert = sample.expert[j];
    f.nodes.push_back(std::move(node));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const SaplingNode& sn = corpus.node(sample.nodes[i]);
    FolkNode& target = f.nodes[static_cast<std::size_t>(folk_index[static_cast<std::size_t>(a[i])])];
    if (sn.name != target.label) invariant_error("cluster mixes labels '" + sn.name + "' and '" + target.label + "'");
    target.members.push_back({sn.owner, corpus.sapling(sn.sapling).sapling_id, sn.local_id});
    int p = sample.parent[i];
    if (p < 0) continue;
    int pf = folk_index[static_cast<std::size_t>(a[static_cast<std::size_t>(p)])];
    if (target.parent >= 0 && target.parent != pf)
      invariant_error("cluster '" + target.label + "' has members under different parent clusters");
    target.parent = pf;
  }
  for (std::size_t v = 0; v < f.nodes.size(); ++v) {
    int x = f.nodes[v].parent;
    for (std::size_t steps = 0; x >= 0; ++steps) {
      if (x == static_cast<int>(v) || steps > f.nodes.size()) invariant_error("folksonomy contains a cycle");
      x = f.nodes[static_cast<std::size_t>(x)].parent;
    }
    if (f.nodes[v].parent >= 0) f.nodes[static_cast<std::size_t>(f.nodes[v].parent)].children.push_back(static_cast<int>(v));
  }
  order_forest(f);
  return f;
}

namespace {

ordered_json node_json(const Folksonomy& f, int v) {
  const FolkNode& n = f.nodes[static_cast<std::size_t>(v)];
  ordered_json j;
  j["label"] = n.label;
  j["expert"] = n.expert;
  ordered_json members = ordered_json::array();
  for (const auto& m : n.members) members.push_back({{"user", m.user}, {"sapling", m.sapling}, {"node", m.node}});
  j["members"] = std::move(members);
  ordered_json children = ordered_json::array();
  for (int c : n.children) children.push_back(node_json(f, c));
  j["children"] = std::move(children);
  return j;
}

int read_node(Folksonomy& f, const json& j, int parent) {
  int v = static_cast<int>(f.nodes.size());
  f.nodes.emplace_back();
  f.nodes.back().label = j.at("label").get<std::string>();
  f.nodes.back().expert = j.value("expert", false);
  f.nodes.back().parent = parent;
  if (j.contains("members"))
    for (const auto& m : j.at("members"))
      f.nodes[static_cast<std::size_t>(v)].members.push_back(
          {m.at("user").get<std::string>(), m.at("sapling").get<std::string>(), m.at("node").get<int>()});
  if (j.contains("children"))
    for (const auto& c : j.at("children")) {
      int cv = read_node(f, c, v);
      f.nodes[static_cast<std::size_t>(v)].children.push_back(cv);
    }
  return v;
}

}  // namespace

std::string Folksonomy::to_json() const {
  ordered_json out;
  ordered_json arr = ordered_json::array();
  for (const auto& t : trees) {
    ordered_json tj;
    tj["saplings"] = t.sapling_count;
    tj["popular"] = t.popular;
    tj["depth"] = depth(t.root);
    tj["root"] = node_json(*this, t.root);
    arr.push_back(std::move(tj));
  }
  out["trees"] = std::move(arr);
  return out.dump(2) + "\n";
}

Folksonomy Folksonomy::from_json(const std::string& text) {
  Folksonomy f;
  try {
    json j = json::parse(text);
    for (const auto& t : j.at("trees")) {
      FolkTree tree;
      tree.root = read_node(f, t.at("root"), -1);
      tree.sapling_count = t.value("saplings", std::size_t{0});
      tree.popular = t.value("popular", false);
      f.trees.push_back(tree);
    }
  } catch (const json::exception& e) {
    input_error(std::string("folksonomy JSON: ") + e.what());
  }
  return f;
}

std::string render_subtree(const Folksonomy& f, int root) {
  std::ostringstream out;
  std::vector<std::pair<int, int>> stack{{root, 0}};
  while (!stack.empty()) {
    auto [v, d] = stack.back();
    stack.pop_back();
    const FolkNode& n = f.nodes[static_cast<std::size_t>(v)];
    out << std::string(static_cast<std::size_t>(2 * d), ' ') << n.label;
    if (!n.members.empty()) out << " (" << n.members.size() << (n.expert ? ", expert" : "") << ")";
    out << '\n';
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) stack.emplace_back(*it, d + 1);
  }
  return out.str();
}

std::string Folksonomy::to_text() const {
  std::ostringstream out;
  for (std::size_t k = 0; k < trees.size(); ++k) {
    const auto& t = trees[k];
    out << "# tree " << k + 1 << " saplings=" << t.sapling_count << " depth=" << depth(t.root)
        << (t.popular ? " popular" : "") << '\n';
    out << render_subtree(*this, t.root);
  }
  return out.str();
}

}  // namespace folk
