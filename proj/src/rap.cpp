#include "folk/rap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "folk/error.hpp"

namespace folk {

const double kInvalidNetSimilarity = -std::numeric_limits<double>::infinity();

namespace {
constexpr double kTieBreak = 1e-4;
}

RapGraph RapGraph::build(const SimilarityMatrix& matrix, const RapStructure& structure) {
  RapGraph g;
  g.n = matrix.size();
  if (static_cast<int>(structure.parent.size()) != g.n) invariant_error("structure size does not match matrix");
  g.parent = structure.parent;
  g.row_ptr.assign(static_cast<std::size_t>(g.n) + 1, 0);
  g.diag.assign(static_cast<std::size_t>(g.n), -1);
  double scale = 0;
  for (int i = 0; i < g.n; ++i) {
    int p = g.parent[static_cast<std::size_t>(i)];
    if (p >= g.n || p == i || p < -1) invariant_error("parent index out of range for node " + std::to_string(i));
    bool diag_done = false;
    auto put_diag = [&] {
      g.diag[static_cast<std::size_t>(i)] = static_cast<int>(g.col.size());
      g.col.push_back(i);
      g.row.push_back(i);
      g.s.push_back(matrix.preferences()[static_cast<std::size_t>(i)]);
      diag_done = true;
    };
    for (const auto& e : matrix.row(i)) {
      if (!diag_done && e.col > i) put_diag();
      g.col.push_back(e.col);
      g.row.push_back(i);
      g.s.push_back(e.s);
    }
    if (!diag_done) put_diag();
    g.row_ptr[static_cast<std::size_t>(i) + 1] = static_cast<int>(g.col.size());
  }
  for (double v : g.s) scale = std::max(scale, std::abs(v));
  g.penalty = 2.0 * std::max(scale, 1e-12);
  // Symmetric instances sit exactly on the exemplar decision boundary; a
  // tiny id-ordered tilt of the preferences lets the lower id win the tie.
  for (int i = 0; i < g.n; ++i)
    g.s[static_cast<std::size_t>(g.diag[static_cast<std::size_t>(i)])] -=
        kTieBreak * scale * static_cast<double>(i + 1) / static_cast<double>(g.n);

  g.col_ptr.assign(static_cast<std::size_t>(g.n) + 1, 0);
  for (int c : g.col) ++g.col_ptr[static_cast<std::size_t>(c) + 1];
  for (int j = 0; j < g.n; ++j) g.col_ptr[static_cast<std::size_t>(j) + 1] += g.col_ptr[static_cast<std::size_t>(j)];
  g.col_entry.assign(g.col.size(), 0);
  std::vector<int> fill(g.col_ptr.begin(), g.col_ptr.end() - 1);
  for (std::size_t e = 0; e < g.col.size(); ++e)
    g.col_entry[static_cast<std::size_t>(fill[static_cast<std::size_t>(g.col[e])]++)] = static_cast<int>(e);
  return g;
}

MessageState::MessageState(std::size_t entries)
    : beta(entries, 0.0), eta(entries, 0.0), alpha(entries, 0.0), rho(entries, 0.0), tau(entries, 0.0),
      sigma(entries, 0.0) {}

void check_finite(const RapGraph& graph, const MessageState& state) {
  const std::pair<const char*, const std::vector<double>*> all[] = {
      {"beta", &state.beta}, {"eta", &state.eta},   {"alpha", &state.alpha},
      {"rho", &state.rho},   {"tau", &state.tau},   {"sigma", &state.sigma}};
  for (const auto& [name, values] : all)
    for (std::size_t e = 0; e < values->size(); ++e)
      if (!std::isfinite((*values)[e]))
        invariant_error(std::string("non-finite ") + name + " message at (" + std::to_string(graph.row[e]) + "," +
                        std::to_string(graph.col[e]) + ")");
}

std::vector<int> cluster_parents(const std::vector<int>& parent, const AssignmentMatrix& a) {
  std::vector<int> cp(a.size(), -1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    int p = parent[i];
    if (p < 0) continue;
    int c = a[i];
    if (cp[static_cast<std::size_t>(c)] < 0) cp[static_cast<std::size_t>(c)] = a[static_cast<std::size_t>(p)];
  }
  return cp;
}

namespace {

// Clusters on a cycle of the cluster-parent graph, or empty.
std::vector<int> find_cycle(const std::vector<int>& cp) {
  const std::size_t n = cp.size();
  std::vector<int> color(n, 0);  // 0 new, 1 on current walk, 2 done
  for (std::size_t start = 0; start < n; ++start) {
    if (color[start]) continue;
    std::vector<int> walk;
    int c = static_cast<int>(start);
    while (c >= 0 && color[static_cast<std::size_t>(c)] == 0) {
      color[static_cast<std::size_t>(c)] = 1;
      walk.push_back(c);
      c = cp[static_cast<std::size_t>(c)];
    }
    if (c >= 0 && color[static_cast<std::size_t>(c)] == 1) {
      auto it = std::find(walk.begin(), walk.end(), c);
      return std::vector<int>(it, walk.end());
    }
    for (int w : walk) color[static_cast<std::size_t>(w)] = 2;
  }
  return {};
}

template <class IsCandidate>
void repair_impl(const std::vector<int>& parent, const IsCandidate& is_candidate, AssignmentMatrix& a) {
  const int n = static_cast<int>(parent.size());
  if (static_cast<int>(a.size()) != n) invariant_error("assignment size does not match structure");
  for (int i = 0; i < n; ++i) {
    int j = a[static_cast<std::size_t>(i)];
    if (j < 0 || j >= n || (j != i && !is_candidate(i, j))) a[static_cast<std::size_t>(i)] = i;
  }
  for (int i = 0; i < n; ++i) {
    int j = a[static_cast<std::size_t>(i)];
    if (a[static_cast<std::size_t>(j)] != j) a[static_cast<std::size_t>(i)] = i;
  }

  for (;;) {
    bool changed = true;
    while (changed) {
      changed = false;
      std::vector<std::vector<int>> members(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) members[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])].push_back(i);
      auto reference_parent = [&](int c) {
        int pc = parent[static_cast<std::size_t>(c)];
        if (pc >= 0) return a[static_cast<std::size_t>(pc)];
        for (int m : members[static_cast<std::size_t>(c)])
          if (a[static_cast<std::size_t>(m)] == c && parent[static_cast<std::size_t>(m)] >= 0)
            return a[static_cast<std::size_t>(parent[static_cast<std::size_t>(m)])];
        return -1;
      };
      for (int i = 0; i < n; ++i) {
        int c = a[static_cast<std::size_t>(i)];
        int p = parent[static_cast<std::size_t>(i)];
        if (c == i || p < 0) continue;
        if (a[static_cast<std::size_t>(p)] != reference_parent(c)) {
          a[static_cast<std::size_t>(i)] = i;
          changed = true;
        }
      }
    }
    auto cycle = find_cycle(cluster_parents(parent, a));
    if (cycle.empty()) return;
    std::vector<int> size(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) ++size[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])];
    int victim = -1;
    for (int c : cycle)
      if (size[static_cast<std::size_t>(c)] > 1 && (victim < 0 || c < victim)) victim = c;
    if (victim < 0) invariant_error("cluster cycle made of singletons: structure is not a forest");
    for (int i = 0; i < n; ++i)
      if (a[static_cast<std::size_t>(i)] == victim) a[static_cast<std::size_t>(i)] = i;
  }
}

const double* g_similarity(const RapGraph& g, int i, int j) {
  auto b = g.col.begin() + g.row_ptr[static_cast<std::size_t>(i)];
  auto e = g.col.begin() + g.row_ptr[static_cast<std::size_t>(i) + 1];
  auto it = std::lower_bound(b, e, j);
  return it != e && *it == j ? &g.s[static_cast<std::size_t>(it - g.col.begin())] : nullptr;
}

bool graph_candidate(const RapGraph& g, int i, int j) {
  auto b = g.col.begin() + g.row_ptr[static_cast<std::size_t>(i)];
  auto e = g.col.begin() + g.row_ptr[static_cast<std::size_t>(i) + 1];
  return std::binary_search(b, e, j);
}

}  // namespace

void repair_assignment(const SimilarityMatrix& matrix, const RapStructure& structure, AssignmentMatrix& a) {
  repair_impl(structure.parent, [&](int i, int j) { return matrix.candidate(i, j); }, a);
}

void repair_assignment(const RapGraph& graph, AssignmentMatrix& a) {
  repair_impl(graph.parent, [&](int i, int j) { return graph_candidate(graph, i, j); }, a);
}

namespace {

// Valid partial assignment grown one member at a time. Every node starts as
// its own cluster; a move is accepted only if it keeps single parents and an
// acyclic cluster-parent graph.
class ClusterBuilder {
 public:
  explicit ClusterBuilder(const RapGraph& g) : g_(g), a_(static_cast<std::size_t>(g.n)), up_(a_.size(), -1),
                                                children_(a_.size()) {
    for (int i = 0; i < g.n; ++i) {
      a_[static_cast<std::size_t>(i)] = i;
      int p = g.parent[static_cast<std::size_t>(i)];
      if (p >= 0) {
        up_[static_cast<std::size_t>(i)] = p;
        children_[static_cast<std::size_t>(p)].push_back(i);
      }
    }
  }

  // Moves singleton i into cluster c when that keeps the configuration valid.
  bool try_join(int i, int c) {
    const auto ui = static_cast<std::size_t>(i), uc = static_cast<std::size_t>(c);
    int p = g_.parent[ui];
    int new_up = up_[uc];
    if (p >= 0) {
      int pc = a_[static_cast<std::size_t>(p)];
      if (new_up >= 0 && new_up != pc) return false;
      new_up = pc;
    }
    // Clusters holding i's children will hang under c; c must not be above
    // any of them already, and c's new parent must not lie below c.
    for (int k : children_[ui]) {
      int d = a_[static_cast<std::size_t>(k)];
      if (d == c || reaches(c, d, i, c, new_up)) return false;
    }
    if (new_up >= 0 && (new_up == c || reaches(new_up, c, i, c, new_up))) return false;
    a_[ui] = c;
    up_[uc] = new_up;
    for (int k : children_[ui]) up_[static_cast<std::size_t>(a_[static_cast<std::size_t>(k)])] = c;
    return true;
  }

  AssignmentMatrix take() { return std::move(a_); }

 private:
  // Whether walking parents from `from` reaches `target`, as if i had joined c
  // (so i's cluster reads as c and c's parent is c_up).
  bool reaches(int from, int target, int i, int c, int c_up) const {
    int x = from;
    for (int steps = 0; steps <= g_.n && x >= 0; ++steps) {
      if (x == i) x = c;
      if (x == target) return true;
      x = x == c ? c_up : up_[static_cast<std::size_t>(x)];
    }
    return false;
  }

  const RapGraph& g_;
  AssignmentMatrix a_;
  std::vector<int> up_;  // parent cluster of each cluster, -1 for none
  std::vector<std::vector<int>> children_;
};

}  // namespace

std::vector<int> exemplar_decisions(const RapGraph& g, const MessageState& st) {
  std::vector<int> out;
  for (int j = 0; j < g.n; ++j) {
    int d = g.diag[static_cast<std::size_t>(j)];
    if (st.rho[d] + st.alpha[d] + st.tau[d] > 0) out.push_back(j);
  }
  return out;
}

AssignmentMatrix extract_assignment(const RapGraph& g, const MessageState& st) {
  const int n = g.n;
  std::vector<char> is_exemplar(static_cast<std::size_t>(n), 0);
  auto decided = exemplar_decisions(g, st);
  bool any = !decided.empty();
  for (int j : decided) is_exemplar[static_cast<std::size_t>(j)] = 1;
  ClusterBuilder builder(g);
  if (!any) return builder.take();

  // Members in order of their best score, each taking its best exemplar that
  // keeps the configuration valid.
  struct Choice {
    double score;
    int col;
  };
  std::vector<std::vector<Choice>> options(static_cast<std::size_t>(n));
  std::vector<int> order;
  for (int i = 0; i < n; ++i) {
    if (is_exemplar[static_cast<std::size_t>(i)]) continue;
    auto& opt = options[static_cast<std::size_t>(i)];
    for (int e = g.row_ptr[static_cast<std::size_t>(i)]; e < g.row_ptr[static_cast<std::size_t>(i) + 1]; ++e) {
      int j = g.col[static_cast<std::size_t>(e)];
      if (j != i && is_exemplar[static_cast<std::size_t>(j)])
        opt.push_back({g.s[static_cast<std::size_t>(e)] + st.tau[static_cast<std::size_t>(e)], j});
    }
    if (opt.empty()) continue;
    // Ties go to the exemplar with the larger preference, as availabilities do.
    std::stable_sort(opt.begin(), opt.end(), [&](const Choice& a, const Choice& b) {
      if (a.score != b.score) return a.score > b.score;
      return g.s[static_cast<std::size_t>(g.diag[static_cast<std::size_t>(a.col)])] >
             g.s[static_cast<std::size_t>(g.diag[static_cast<std::size_t>(b.col)])];
    });
    order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return options[static_cast<std::size_t>(a)].front().score > options[static_cast<std::size_t>(b)].front().score;
  });
  for (int i : order) {
    const double self = g.s[static_cast<std::size_t>(g.diag[static_cast<std::size_t>(i)])];
    for (const auto& c : options[static_cast<std::size_t>(i)]) {
      if (*g_similarity(g, i, c.col) < self) break;
      if (builder.try_join(i, c.col)) break;
    }
  }
  AssignmentMatrix a = builder.take();
  repair_assignment(g, a);
  return a;
}

std::string Validity::describe() const {
  std::string out;
  auto add = [&](bool ok, const char* what) {
    if (ok) return;
    if (!out.empty()) out += ",";
    out += what;
  };
  add(row, "row");
  add(column, "column");
  add(candidate, "candidate");
  add(parent, "parent");
  add(acyclic, "acyclic");
  return out.empty() ? "valid" : out;
}

Validity check_assignment(const SimilarityMatrix& matrix, const RapStructure& structure, const AssignmentMatrix& a) {
  Validity v;
  const int n = matrix.size();
  if (static_cast<int>(a.size()) != n || static_cast<int>(structure.parent.size()) != n) {
    v.row = false;
    return v;
  }
  for (int i = 0; i < n; ++i) {
    int j = a[static_cast<std::size_t>(i)];
    if (j < 0 || j >= n) {
      v.row = false;
      return v;
    }
  }
  for (int i = 0; i < n; ++i) {
    int j = a[static_cast<std::size_t>(i)];
    if (a[static_cast<std::size_t>(j)] != j) v.column = false;
    if (j != i && !matrix.candidate(i, j)) v.candidate = false;
  }
  std::vector<int> cp(static_cast<std::size_t>(n), -2);
  for (int i = 0; i < n; ++i) {
    int p = structure.parent[static_cast<std::size_t>(i)];
    if (p < 0) continue;
    int c = a[static_cast<std::size_t>(i)];
    int pe = a[static_cast<std::size_t>(p)];
    if (cp[static_cast<std::size_t>(c)] == -2)
      cp[static_cast<std::size_t>(c)] = pe;
    else if (cp[static_cast<std::size_t>(c)] != pe)
      v.parent = false;
  }
  if (v.column && v.parent) v.acyclic = find_cycle(cluster_parents(structure.parent, a)).empty();
  else if (v.column) v.acyclic = true;
  return v;
}

double net_similarity(const SimilarityMatrix& matrix, const RapStructure& structure, const AssignmentMatrix& a) {
  if (!check_assignment(matrix, structure, a).ok()) return kInvalidNetSimilarity;
  double total = 0;
  for (int i = 0; i < matrix.size(); ++i) {
    int j = a[static_cast<std::size_t>(i)];
    total += j == i ? matrix.preferences()[static_cast<std::size_t>(i)] : *matrix.at(i, j);
  }
  return total;
}

std::vector<int> exemplars_of(const AssignmentMatrix& a) {
  std::vector<int> out;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] == static_cast<int>(i)) out.push_back(static_cast<int>(i));
  return out;
}

namespace {

struct Polisher {
  const SimilarityMatrix& m;
  const RapStructure& st;
  std::vector<std::vector<int>> children;

  Polisher(const SimilarityMatrix& matrix, const RapStructure& structure) : m(matrix), st(structure) {
    children.resize(static_cast<std::size_t>(m.size()));
    for (int i = 0; i < m.size(); ++i) {
      int p = st.parent[static_cast<std::size_t>(i)];
      if (p >= 0) children[static_cast<std::size_t>(p)].push_back(i);
    }
  }

  double value(const AssignmentMatrix& a) const { return net_similarity(m, st, a); }

  bool has_members(const AssignmentMatrix& a, int i) const {
    for (std::size_t k = 0; k < a.size(); ++k)
      if (a[k] == i && static_cast<int>(k) != i) return true;
    return false;
  }

  // Targets node i may join: itself or an exemplar it is a candidate of.
  std::vector<int> targets(const AssignmentMatrix& a, int i) const {
    std::vector<int> out{i};
    for (const auto& e : m.row(i))
      if (a[static_cast<std::size_t>(e.col)] == e.col) out.push_back(e.col);
    return out;
  }

  // Best valid seat for a memberless node given everything else.
  void reseat(AssignmentMatrix& a, int k) const {
    if (has_members(a, k)) return;
    int best_t = a[static_cast<std::size_t>(k)];
    double best_v = value(a);
    for (int t : targets(a, k)) {
      if (t == a[static_cast<std::size_t>(k)]) continue;
      int old = a[static_cast<std::size_t>(k)];
      a[static_cast<std::size_t>(k)] = t;
      double v = value(a);
      if (v > best_v + 1e-12) {
        best_v = v;
        best_t = t;
      }
      a[static_cast<std::size_t>(k)] = old;
    }
    a[static_cast<std::size_t>(k)] = best_t;
  }

  // Moves i to t, then lets i's children pick their best seats. Returns the
  // resulting configuration (possibly invalid).
  AssignmentMatrix cascade(const AssignmentMatrix& a, int i, int t) const {
    AssignmentMatrix b = a;
    b[static_cast<std::size_t>(i)] = t;
    for (int k : children[static_cast<std::size_t>(i)]) {
      if (b[static_cast<std::size_t>(k)] != k && !has_members(b, k)) b[static_cast<std::size_t>(k)] = k;
      reseat(b, k);
    }
    return b;
  }

  // Re-centres a cluster on another member when all members accept it.
  bool recentre(AssignmentMatrix& a, double& current) const {
    const int n = m.size();
    for (int e = 0; e < n; ++e) {
      if (a[static_cast<std::size_t>(e)] != e) continue;
      std::vector<int> members;
      for (int k = 0; k < n; ++k)
        if (a[static_cast<std::size_t>(k)] == e) members.push_back(k);
      if (members.size() < 2) continue;
      for (int c : members) {
        if (c == e) continue;
        AssignmentMatrix b = a;
        bool ok = true;
        for (int k : members) {
          if (k != c && !m.candidate(k, c)) ok = false;
          b[static_cast<std::size_t>(k)] = c;
        }
        if (!ok) continue;
        double v = value(b);
        if (v > current + 1e-12) {
          a = std::move(b);
          current = v;
          return true;
        }
      }
    }
    return false;
  }

  void run(AssignmentMatrix& a, int max_passes) const {
    double current = value(a);
    for (int pass = 0; pass < max_passes; ++pass) {
      bool improved = false;
      for (int i = 0; i < m.size(); ++i) {
        if (has_members(a, i)) continue;
        for (int t : targets(a, i)) {
          if (t == a[static_cast<std::size_t>(i)]) continue;
          AssignmentMatrix b = cascade(a, i, t);
          double v = value(b);
          if (v > current + 1e-12) {
            a = std::move(b);
            current = v;
            improved = true;
            break;
          }
        }
      }
      if (recentre(a, current)) improved = true;
      if (!improved) break;
    }
  }
};

}  // namespace

void polish_assignment(const SimilarityMatrix& matrix, const RapStructure& structure, AssignmentMatrix& a,
                       int max_passes) {
  if (!check_assignment(matrix, structure, a).ok()) invariant_error("polish requires a valid assignment");
  Polisher(matrix, structure).run(a, max_passes);
}

std::string RapDiagnostics::to_csv() const {
  std::ostringstream out;
  out << "sweep,exemplar_count,net_similarity,lambda\n";
  char buf[64];
  for (const auto& r : sweeps) {
    std::snprintf(buf, sizeof buf, "%.17g", r.net_similarity);
    out << r.sweep << ',' << r.exemplar_count << ',' << buf << ',';
    std::snprintf(buf, sizeof buf, "%.2f", r.damping);
    out << buf << '\n';
  }
  return out.str();
}

RapResult run(const SimilarityMatrix& matrix, const RapStructure& structure, const RapConfig& config) {
  if (!(config.damping >= 0 && config.damping < 1)) input_error("damping must lie in [0,1)");
  if (config.max_sweeps < 1) input_error("max_sweeps must be positive");
  if (config.stable_window < 1) input_error("stable_window must be positive");
  RapGraph graph = RapGraph::build(matrix, structure);
  MessageState state(graph.entries());
  RapResult result;
  AssignmentMatrix current(static_cast<std::size_t>(graph.n));
  for (int i = 0; i < graph.n; ++i) current[static_cast<std::size_t>(i)] = i;

  double lambda = config.damping;
  std::vector<int> prev_set, prev2_set;
  int stable = 0, oscillating = 0;
  double prev_net = 0;
  AssignmentMatrix best = current;
  double best_net = net_similarity(matrix, structure, current);
  for (int t = 1; t <= config.max_sweeps; ++t) {
    sweep(graph, state, current, lambda, config.f_mode, config.kernel);
    check_finite(graph, state);
    current = extract_assignment(graph, state);
    double net = net_similarity(matrix, structure, current);
    if (net == kInvalidNetSimilarity) invariant_error("repaired assignment is invalid at sweep " + std::to_string(t));
    if (net > best_net) {
      best_net = net;
      best = current;
    }
    auto set = exemplar_decisions(graph, state);
    result.diagnostics.sweeps.push_back({t, static_cast<int>(exemplars_of(current).size()), net, lambda});

    stable = (t > 1 && set == prev_set) ? stable + 1 : 0;
    if (t > 2 && set == prev2_set && set != prev_set)
      ++oscillating;
    else
      oscillating = 0;
    if (oscillating > config.stable_window && lambda < 0.9 - 1e-12) {
      lambda = std::min(0.9, lambda + 0.1);
      result.diagnostics.damping_raised_at.push_back(t);
      oscillating = 0;
    }
    if (stable >= config.stable_window && std::abs(net - prev_net) < config.net_tolerance) {
      result.diagnostics.converged = true;
      break;
    }
    prev2_set = std::move(prev_set);
    prev_set = std::move(set);
    prev_net = net;
  }
  // Message passing can settle on a worse fixed point than one it visited.
  result.assignment = std::move(best);
  if (config.polish) polish_assignment(matrix, structure, result.assignment, config.polish_passes);
  result.net_similarity = net_similarity(matrix, structure, result.assignment);
  return result;
}

}  // namespace folk
