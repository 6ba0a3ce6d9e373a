#include "folk/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "folk/error.hpp"

namespace folk {

double user_balance(std::span<const double> sapling_sizes) {
  if (sapling_sizes.empty()) input_error("user_balance: no saplings");
  double total = 0;
  for (double s : sapling_sizes) {
    if (!(s > 0)) input_error("user_balance: sapling size must be positive");
    total += s;
  }
  if (sapling_sizes.size() == 1) return 0.0;
  double h = 0;
  for (double s : sapling_sizes) {
    double p = s / total;
    h -= p * std::log(p);
  }
  return std::clamp(h / std::log(static_cast<double>(sapling_sizes.size())), 0.0, 1.0);
}

double jensen_shannon(const TagBag& p, const TagBag& q) {
  if (p.empty() || q.empty()) input_error("jensen_shannon: empty tag distribution");
  const double tp = static_cast<double>(p.total());
  const double tq = static_cast<double>(q.total());
  double js = 0;
  // Walk the union of both ordered key sets.
  auto a = p.entries().begin(), ae = p.entries().end();
  auto b = q.entries().begin(), be = q.entries().end();
  auto term = [](double x, double m) { return x > 0 ? x * std::log(x / m) : 0.0; };
  while (a != ae || b != be) {
    double pa = 0, qb = 0;
    if (b == be || (a != ae && a->first < b->first)) {
      pa = static_cast<double>(a->second) / tp;
      ++a;
    } else if (a == ae || b->first < a->first) {
      qb = static_cast<double>(b->second) / tq;
      ++b;
    } else {
      pa = static_cast<double>(a->second) / tp;
      qb = static_cast<double>(b->second) / tq;
      ++a;
      ++b;
    }
    double m = 0.5 * (pa + qb);
    js += 0.5 * term(pa, m) + 0.5 * term(qb, m);
  }
  return std::max(js, 0.0);
}

Disparity user_disparity(std::span<const TagBag> tag_dists, double total_nodes) {
  Disparity d;
  if (tag_dists.size() < 2) return d;
  for (std::size_t i = 0; i < tag_dists.size(); ++i)
    for (std::size_t j = i + 1; j < tag_dists.size(); ++j) d.disparity += jensen_shannon(tag_dists[i], tag_dists[j]);
  d.normalized = total_nodes > 0 ? d.disparity / total_nodes : 0.0;
  return d;
}

namespace {

// Nodes per level; index 0 is level 1.
std::vector<std::vector<NodeId>> levels_of(const Corpus& corpus, const Sapling& sapling) {
  std::vector<std::vector<NodeId>> levels;
  for (NodeId id : sapling.nodes) {
    auto lvl = static_cast<std::size_t>(corpus.node(id).depth_level);
    if (levels.size() < lvl) levels.resize(lvl);
    levels[lvl - 1].push_back(id);
  }
  return levels;
}

}  // namespace

double sapling_variety(const Corpus& corpus, const Sapling& sapling) {
  auto levels = levels_of(corpus, sapling);
  double v = 0;
  for (std::size_t i = 0; i < levels.size(); ++i) v += static_cast<double>(i + 1) * static_cast<double>(levels[i].size());
  return v;
}

double level_balance(std::span<const int> children_counts) {
  int total = 0;
  for (int c : children_counts) total += c;
  if (children_counts.size() < 2 || total == 0) return 1.0;
  double h = 0;
  for (int c : children_counts) {
    if (c == 0) continue;
    double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return std::clamp(h / std::log(static_cast<double>(children_counts.size())), 0.0, 1.0);
}

double sapling_balance(const Corpus& corpus, const Sapling& sapling) {
  auto levels = levels_of(corpus, sapling);
  double sum = 0;
  for (const auto& level : levels) {
    std::vector<int> counts;
    counts.reserve(level.size());
    for (NodeId id : level) counts.push_back(static_cast<int>(corpus.node(id).children.size()));
    sum += level_balance(counts);
  }
  return sum / static_cast<double>(levels.size());
}

namespace {

using Twig = std::pair<std::string, std::string>;

std::vector<Twig> twigs_of(const Corpus& corpus, const Sapling& sapling) {
  std::vector<Twig> out;
  for (NodeId id : sapling.nodes) {
    const auto& n = corpus.node(id);
    if (n.parent != kNoNode) out.emplace_back(corpus.node(n.parent).name, n.name);
  }
  return out;
}

std::set<Twig> user_twigs(const Corpus& corpus, const UserProfile& user) {
  std::set<Twig> out;
  for (std::size_t s : user.saplings)
    for (auto& t : twigs_of(corpus, corpus.sapling(s))) out.insert(std::move(t));
  return out;
}

}  // namespace

int count_conflicts(const Corpus& corpus, const UserProfile& user) {
  auto twigs = user_twigs(corpus, user);
  int conflicts = 0;
  for (const auto& [a, b] : twigs)
    if (a < b && twigs.count({b, a})) ++conflicts;
  return conflicts;
}

TwigSupport twig_agreement(const Corpus& corpus) {
  std::map<Twig, std::set<std::string>> users;
  for (const auto& s : corpus.saplings)
    for (auto& t : twigs_of(corpus, s)) users[t].insert(s.owner);
  TwigSupport support;
  for (const auto& [t, u] : users) support[t] = static_cast<int>(u.size());
  return support;
}

RootIndex build_root_index(const Corpus& corpus) {
  RootIndex index;
  for (const auto& s : corpus.saplings) {
    const auto& root = corpus.node(s.root);
    index.creators[root.name].insert(s.owner);
    auto& kids = index.children[root.name];
    for (NodeId c : root.children) ++kids[corpus.node(c).name];
  }
  return index;
}

double coverage_percent(std::vector<int> counts, int q) {
  if (counts.empty()) return 0.0;
  std::sort(counts.begin(), counts.end(), std::greater<>());
  long long total = 0;
  for (int c : counts) total += c;
  long long cum = 0;
  std::size_t needed = counts.size();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    cum += counts[i];
    if (cum * 100 >= static_cast<long long>(q) * total) {
      needed = i + 1;
      break;
    }
  }
  return 100.0 * static_cast<double>(needed) / static_cast<double>(counts.size());
}

RootDiversity root_diversity(const RootIndex& index, const std::string& root_name) {
  auto it = index.children.find(root_name);
  if (it == index.children.end()) input_error("root_diversity: no sapling has root '" + root_name + "'");
  RootDiversity rd;
  rd.root_name = root_name;
  rd.num_creators = static_cast<double>(index.creators.at(root_name).size());
  rd.num_unique_children = static_cast<double>(it->second.size());
  // Ties in frequency are broken by name; the map is already name-ordered and
  // std::sort on counts alone does not change the covered count.
  std::vector<int> counts;
  for (const auto& [name, c] : it->second) counts.push_back(c);
  rd.coverage_30 = coverage_percent(counts, 30);
  rd.coverage_50 = coverage_percent(counts, 50);
  rd.coverage_70 = coverage_percent(counts, 70);
  return rd;
}

RootDiversity root_diversity(const Corpus& corpus, const std::string& root_name) {
  return root_diversity(build_root_index(corpus), root_name);
}

SaplingFeatures sapling_features(const Corpus& corpus, const Sapling& sapling, const UserProfile& owner,
                                 const TwigSupport& support) {
  SaplingFeatures f;
  auto levels = levels_of(corpus, sapling);
  f.variety = sapling_variety(corpus, sapling);
  f.balance = sapling_balance(corpus, sapling);
  f.depth = static_cast<double>(levels.size());
  for (const auto& l : levels) f.breadth = std::max(f.breadth, static_cast<double>(l.size()));
  f.num_nodes = static_cast<double>(sapling.nodes.size());
  std::set<std::string> names;
  for (NodeId id : sapling.nodes) {
    const auto& n = corpus.node(id);
    if (n.children.empty()) f.num_leaves += 1;
    names.insert(n.name);
  }
  f.leaf_ratio = f.num_leaves / f.num_nodes;
  f.num_children_of_root = static_cast<double>(corpus.node(sapling.root).children.size());
  f.unique_term_ratio = static_cast<double>(names.size()) / f.num_nodes;

  auto twigs = twigs_of(corpus, sapling);
  std::set<Twig> distinct(twigs.begin(), twigs.end());
  f.unique_twig_ratio = twigs.empty() ? 1.0 : static_cast<double>(distinct.size()) / static_cast<double>(twigs.size());
  auto all = user_twigs(corpus, owner);
  std::set<Twig> conflicting;
  for (const auto& [a, b] : distinct)
    if (all.count({b, a})) conflicting.insert(std::minmax(a, b));
  f.num_conflicts = static_cast<double>(conflicting.size());
  if (!twigs.empty()) {
    double s = 0;
    for (const auto& t : twigs) {
      auto it = support.find(t);
      s += it == support.end() ? 0.0 : it->second;
    }
    f.agreement = s / static_cast<double>(twigs.size());
  }
  return f;
}

const std::vector<std::string>& feature_columns() {
  static const std::vector<std::string> columns = [] {
    std::vector<std::string> c = {"user_variety",   "user_num_twigs",           "user_balance",
                                  "user_disparity", "user_disparity_normalized", "user_num_conflicts"};
    for (const char* s : {"depth", "num_leaves", "balance", "variety", "num_children_of_root", "breadth",
                          "num_nodes", "leaf_ratio", "unique_twig_ratio", "unique_term_ratio", "num_conflicts",
                          "agreement"}) {
      c.push_back(std::string("sapling_") + s + "_mean");
      c.push_back(std::string("sapling_") + s + "_max");
    }
    for (const char* s : {"num_creators", "num_unique_children", "coverage_30", "coverage_50", "coverage_70"}) {
      c.push_back(std::string("root_") + s + "_mean");
      c.push_back(std::string("root_") + s + "_max");
    }
    return c;
  }();
  return columns;
}

std::size_t FeatureTable::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) input_error("feature table has no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

namespace {

void push_mean_max(std::vector<double>& row, const std::vector<double>& values) {
  double sum = 0, mx = 0;
  for (double v : values) {
    sum += v;
    mx = std::max(mx, v);
  }
  row.push_back(values.empty() ? 0.0 : sum / static_cast<double>(values.size()));
  row.push_back(mx);
}

std::vector<double> user_row(const Corpus& corpus, const UserProfile& user, const TwigSupport& support,
                             const RootIndex& roots) {
  std::vector<double> row;
  std::vector<double> sizes;
  std::vector<TagBag> dists;
  double twigs = 0, nodes = 0;
  for (std::size_t s : user.saplings) {
    const auto& sp = corpus.sapling(s);
    sizes.push_back(static_cast<double>(sp.nodes.size()));
    dists.push_back(corpus.node(sp.root).tags);
    twigs += static_cast<double>(sp.nodes.size() - 1);
    nodes += static_cast<double>(sp.nodes.size());
  }
  row.push_back(static_cast<double>(user.saplings.size()));
  row.push_back(twigs);
  row.push_back(sizes.empty() ? 0.0 : user_balance(sizes));
  // Saplings without any tags carry no distribution; they are left out.
  std::vector<TagBag> tagged;
  for (auto& d : dists)
    if (!d.empty()) tagged.push_back(std::move(d));
  Disparity disp = user_disparity(tagged, nodes);
  row.push_back(disp.disparity);
  row.push_back(disp.normalized);
  row.push_back(static_cast<double>(count_conflicts(corpus, user)));

  std::vector<SaplingFeatures> sf;
  for (std::size_t s : user.saplings) sf.push_back(sapling_features(corpus, corpus.sapling(s), user, support));
  auto collect = [&](double SaplingFeatures::*m) {
    std::vector<double> v;
    for (const auto& f : sf) v.push_back(f.*m);
    push_mean_max(row, v);
  };
  collect(&SaplingFeatures::depth);
  collect(&SaplingFeatures::num_leaves);
  collect(&SaplingFeatures::balance);
  collect(&SaplingFeatures::variety);
  collect(&SaplingFeatures::num_children_of_root);
  collect(&SaplingFeatures::breadth);
  collect(&SaplingFeatures::num_nodes);
  collect(&SaplingFeatures::leaf_ratio);
  collect(&SaplingFeatures::unique_twig_ratio);
  collect(&SaplingFeatures::unique_term_ratio);
  collect(&SaplingFeatures::num_conflicts);
  collect(&SaplingFeatures::agreement);

  std::vector<RootDiversity> rd;
  for (std::size_t s : user.saplings) rd.push_back(root_diversity(roots, corpus.node(corpus.sapling(s).root).name));
  auto collect_rd = [&](double RootDiversity::*m) {
    std::vector<double> v;
    for (const auto& r : rd) v.push_back(r.*m);
    push_mean_max(row, v);
  };
  collect_rd(&RootDiversity::num_creators);
  collect_rd(&RootDiversity::num_unique_children);
  collect_rd(&RootDiversity::coverage_30);
  collect_rd(&RootDiversity::coverage_50);
  collect_rd(&RootDiversity::coverage_70);
  return row;
}

}  // namespace

FeatureTable extract_features(const Corpus& corpus) {
  FeatureTable table;
  table.columns = feature_columns();
  const TwigSupport support = twig_agreement(corpus);
  const RootIndex roots = build_root_index(corpus);
  const auto n = static_cast<std::ptrdiff_t>(corpus.users.size());
  table.user_ids.resize(corpus.users.size());
  table.rows.resize(corpus.users.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& u = corpus.users[static_cast<std::size_t>(i)];
    table.user_ids[static_cast<std::size_t>(i)] = u.user_id;
    table.rows[static_cast<std::size_t>(i)] = u.saplings.empty() ? std::vector<double>(table.columns.size(), 0.0)
                                                                 : user_row(corpus, u, support, roots);
  }
  return table;
}

std::string FeatureTable::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "user_id";
  for (const auto& c : columns) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << user_ids[i];
    for (double v : rows[i]) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

FeatureTable FeatureTable::from_csv(const std::string& text) {
  FeatureTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(s);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    return out;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (t.columns.empty()) {
      if (cells.empty() || cells[0] != "user_id") input_error("feature CSV: header must start with user_id");
      t.columns.assign(cells.begin() + 1, cells.end());
      continue;
    }
    if (cells.size() != t.columns.size() + 1)
      input_error("feature CSV line " + std::to_string(line_no) + ": expected " + std::to_string(t.columns.size() + 1) +
                  " cells");
    t.user_ids.push_back(cells[0]);
    std::vector<double> row;
    for (std::size_t i = 1; i < cells.size(); ++i) {
      try {
        row.push_back(cells[i].empty() ? std::nan("") : std::stod(cells[i]));
      } catch (const std::exception&) {
        input_error("feature CSV line " + std::to_string(line_no) + ": bad number '" + cells[i] + "'");
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace folk
