// Message updates for one sweep. The parallel kernel uses top-two row maxima
// and subtract-one column sums; the reference kernel evaluates every
// exclusion sum and max literally and runs on one thread.
#include <algorithm>
#include <vector>

#include "folk/rap.hpp"

namespace folk {

namespace {

inline double damp(double old_value, double computed, double lambda) {
  return lambda * old_value + (1.0 - lambda) * computed;
}

// Exemplar of each node's parent under the previous assignment.
std::vector<int> parent_clusters(const RapGraph& g, const AssignmentMatrix& prev) {
  std::vector<int> pc(static_cast<std::size_t>(g.n), -1);
  for (int k = 0; k < g.n; ++k) {
    int p = g.parent[static_cast<std::size_t>(k)];
    if (p >= 0) pc[static_cast<std::size_t>(k)] = prev[static_cast<std::size_t>(p)];
  }
  return pc;
}

// Whether row k contributes to the neighbor sum of child column j.
inline bool in_neighbor_set(const RapGraph& g, const std::vector<int>& pc, int k, int j, FConstraint mode) {
  if (g.parent[static_cast<std::size_t>(k)] < 0) return false;
  if (mode == FConstraint::original) return true;
  return pc[static_cast<std::size_t>(k)] == pc[static_cast<std::size_t>(j)];
}

void sweep_parallel(const RapGraph& g, MessageState& st, const std::vector<int>& pc, double lambda,
                    FConstraint mode) {
  const int n = g.n;
  const auto m = static_cast<std::ptrdiff_t>(g.entries());

#pragma omp parallel
  {
#pragma omp for schedule(static)
    for (std::ptrdiff_t e = 0; e < m; ++e) st.beta[e] = g.s[e] + st.alpha[e] + st.tau[e];

#pragma omp for schedule(static)
    for (int i = 0; i < n; ++i) {
      double top1 = -kMessageBound, top2 = -kMessageBound;
      int arg1 = -1;
      for (int e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e) {
        double b = st.beta[e];
        if (b > top1) {
          top2 = top1;
          top1 = b;
          arg1 = e;
        } else if (b > top2) {
          top2 = b;
        }
      }
      for (int e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e)
        st.eta[e] = damp(st.eta[e], -(e == arg1 ? top2 : top1), lambda);
    }

#pragma omp for schedule(static)
    for (std::ptrdiff_t e = 0; e < m; ++e) st.rho[e] = g.s[e] + st.eta[e] + st.tau[e];

#pragma omp for schedule(static)
    for (int j = 0; j < n; ++j) {
      const int d = g.diag[j];
      double sum = 0;
      for (int q = g.col_ptr[j]; q < g.col_ptr[j + 1]; ++q) {
        int e = g.col_entry[q];
        if (e != d) sum += std::max(st.rho[e], 0.0);
      }
      const double rho_jj = st.rho[d];
      for (int q = g.col_ptr[j]; q < g.col_ptr[j + 1]; ++q) {
        int e = g.col_entry[q];
        double v = e == d ? sum : std::min(0.0, rho_jj + sum - std::max(st.rho[e], 0.0));
        st.alpha[e] = damp(st.alpha[e], v, lambda);
      }
    }

#pragma omp for schedule(static)
    for (std::ptrdiff_t e = 0; e < m; ++e)
      st.sigma[e] = g.s[e] + st.eta[e] + st.alpha[e];

#pragma omp for schedule(static)
    for (int j = 0; j < n; ++j) {
      const int d = g.diag[j];
      if (g.parent[j] < 0) {
        for (int q = g.col_ptr[j]; q < g.col_ptr[j + 1]; ++q) {
          int e = g.col_entry[q];
          st.tau[e] = damp(st.tau[e], 0.0, lambda);
        }
        continue;
      }
      double sum = 0;
      for (int q = g.col_ptr[j]; q < g.col_ptr[j + 1]; ++q) {
        int e = g.col_entry[q];
        if (e != d && in_neighbor_set(g, pc, g.row[e], j, mode)) sum += std::max(st.sigma[e], 0.0);
      }
      const double rho_jj = st.rho[d];
      for (int q = g.col_ptr[j]; q < g.col_ptr[j + 1]; ++q) {
        int e = g.col_entry[q];
        int i = g.row[e];
        double v;
        if (e == d)
          v = sum;
        else if (g.parent[i] < 0)
          v = 0.0;
        else if (pc[i] != pc[j])
          v = -g.penalty;
        else
          v = std::min(0.0, rho_jj + sum - (in_neighbor_set(g, pc, i, j, mode) ? std::max(st.sigma[e], 0.0) : 0.0));
        st.tau[e] = damp(st.tau[e], v, lambda);
      }
    }
  }
}

void sweep_reference(const RapGraph& g, MessageState& st, const std::vector<int>& pc, double lambda,
                     FConstraint mode) {
  const int n = g.n;
  const std::size_t m = g.entries();
  for (std::size_t e = 0; e < m; ++e) st.beta[e] = g.s[e] + st.alpha[e] + st.tau[e];

  std::vector<double> computed(m);
  for (int i = 0; i < n; ++i)
    for (int e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e) {
      double best = -kMessageBound;
      for (int k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k)
        if (k != e) best = std::max(best, st.beta[k]);
      computed[e] = -best;
    }
  for (std::size_t e = 0; e < m; ++e) st.eta[e] = damp(st.eta[e], computed[e], lambda);

  for (std::size_t e = 0; e < m; ++e) st.rho[e] = g.s[e] + st.eta[e] + st.tau[e];

  for (int j = 0; j < n; ++j) {
    const int d = g.diag[j];
    for (int q = g.col_ptr[j]; q < g.col_ptr[j + 1]; ++q) {
      int e = g.col_entry[q];
      double sum = 0;
      for (int r = g.col_ptr[j]; r < g.col_ptr[j + 1]; ++r) {
        int k = g.col_entry[r];
        if (k != d && k != e) sum += std::max(st.rho[k], 0.0);
      }
      computed[e] = e == d ? sum : std::min(0.0, st.rho[d] + sum);
    }
  }
  for (std::size_t e = 0; e < m; ++e) st.alpha[e] = damp(st.alpha[e], computed[e], lambda);

  for (std::size_t e = 0; e < m; ++e) st.sigma[e] = g.s[e] + st.eta[e] + st.alpha[e];

  for (int j = 0; j < n; ++j) {
    const int d = g.diag[j];
    for (int q = g.col_ptr[j]; q < g.col_ptr[j + 1]; ++q) {
      int e = g.col_entry[q];
      int i = g.row[e];
      if (g.parent[j] < 0 || (e != d && g.parent[i] < 0)) {
        computed[e] = 0.0;
        continue;
      }
      if (e != d && pc[i] != pc[j]) {
        computed[e] = -g.penalty;
        continue;
      }
      double sum = 0;
      for (int r = g.col_ptr[j]; r < g.col_ptr[j + 1]; ++r) {
        int k = g.col_entry[r];
        if (k != d && k != e && in_neighbor_set(g, pc, g.row[k], j, mode)) sum += std::max(st.sigma[k], 0.0);
      }
      computed[e] = e == d ? sum : std::min(0.0, st.rho[d] + sum);
    }
  }
  for (std::size_t e = 0; e < m; ++e) st.tau[e] = damp(st.tau[e], computed[e], lambda);
}

}  // namespace

void sweep(const RapGraph& graph, MessageState& state, const AssignmentMatrix& previous, double damping,
           FConstraint mode, SweepKernel kernel) {
  auto pc = parent_clusters(graph, previous);
  if (kernel == SweepKernel::parallel)
    sweep_parallel(graph, state, pc, damping, mode);
  else
    sweep_reference(graph, state, pc, damping, mode);
  ++state.iteration;
}

}  // namespace folk
