#pragma once

#include <string>
#include <vector>

#include "folk/similarity.hpp"

namespace folk {

/// Returned by net_similarity for configurations violating a constraint.
extern const double kInvalidNetSimilarity;

/// Stand-in for an infinite message (max over an empty set).
inline constexpr double kMessageBound = 1e9;

/// Parent link of every matrix node (local index, -1 for sapling roots).
struct RapStructure {
  std::vector<int> parent;
};

enum class FConstraint {
  modified,  // every child member of a cluster shares one parent cluster
  original,  // neighbor sums over all children of the column
};

/// Sparsity pattern shared by all six message matrices: the candidate
/// entries plus the diagonal, row-major, with a column index.
struct RapGraph {
  int n = 0;
  std::vector<int> row_ptr;    // n + 1
  std::vector<int> col;        // entry -> column
  std::vector<int> row;        // entry -> row
  std::vector<double> s;       // similarity; preference on the diagonal
  std::vector<int> diag;       // row -> diagonal entry
  std::vector<int> col_ptr;    // n + 1
  std::vector<int> col_entry;  // entries of each column, by row
  std::vector<int> parent;
  double penalty = 0;          // message sent to a child that may not join

  static RapGraph build(const SimilarityMatrix& matrix, const RapStructure& structure);
  std::size_t entries() const { return col.size(); }
};

struct MessageState {
  std::vector<double> beta, eta, alpha, rho, tau, sigma;
  int iteration = 0;

  explicit MessageState(std::size_t entries = 0);
};

/// exemplar[i] = j means c_ij = 1.
using AssignmentMatrix = std::vector<int>;

enum class SweepKernel { parallel, reference };

/// One synchronous sweep. `previous` is the assignment extracted after the
/// prior sweep, used for the parent-cluster neighbor sets.
void sweep(const RapGraph& graph, MessageState& state, const AssignmentMatrix& previous, double damping,
           FConstraint mode = FConstraint::modified, SweepKernel kernel = SweepKernel::parallel);

/// Throws an invariant error naming (i, j, message) on the first non-finite entry.
void check_finite(const RapGraph& graph, const MessageState& state);

/// Nodes whose diagonal belief rho + alpha + tau is positive.
std::vector<int> exemplar_decisions(const RapGraph& graph, const MessageState& state);

/// Exemplars from the diagonal beliefs, members by best s + tau, then repair.
AssignmentMatrix extract_assignment(const RapGraph& graph, const MessageState& state);

/// Makes an assignment valid: unknown exemplars and non-candidate choices
/// fall back to self, F-failing children (increasing id) become their own
/// exemplar, and parent-cluster cycles are broken, until nothing changes.
void repair_assignment(const SimilarityMatrix& matrix, const RapStructure& structure, AssignmentMatrix& a);
void repair_assignment(const RapGraph& graph, AssignmentMatrix& a);

/// Parent cluster (exemplar id) of each cluster, -1 when it has no child member.
std::vector<int> cluster_parents(const std::vector<int>& parent, const AssignmentMatrix& a);

struct Validity {
  bool row = true;        // every node has one in-range exemplar
  bool column = true;     // exemplars choose themselves
  bool candidate = true;  // choices are stored entries
  bool parent = true;     // modified F
  bool acyclic = true;    // cluster parent graph has no cycle
  bool ok() const { return row && column && candidate && parent && acyclic; }
  std::string describe() const;
};

Validity check_assignment(const SimilarityMatrix& matrix, const RapStructure& structure, const AssignmentMatrix& a);

double net_similarity(const SimilarityMatrix& matrix, const RapStructure& structure, const AssignmentMatrix& a);

std::vector<int> exemplars_of(const AssignmentMatrix& a);

/// Hill climbing on net similarity over valid configurations: a memberless
/// node changes cluster and its children re-seat, or a cluster re-centres on
/// another member. Stops when no move improves or after max_passes.
void polish_assignment(const SimilarityMatrix& matrix, const RapStructure& structure, AssignmentMatrix& a,
                       int max_passes = 50);

struct RapConfig {
  double damping = 0.5;
  int max_sweeps = 2000;
  int stable_window = 10;
  double net_tolerance = 1e-6;
  FConstraint f_mode = FConstraint::modified;
  SweepKernel kernel = SweepKernel::parallel;
  bool polish = true;
  int polish_passes = 50;
};

struct SweepRecord {
  int sweep = 0;
  int exemplar_count = 0;
  double net_similarity = 0;
  double damping = 0;
};

struct RapDiagnostics {
  std::vector<SweepRecord> sweeps;
  std::vector<int> damping_raised_at;  // sweep numbers
  bool converged = false;

  std::string to_csv() const;
};

struct RapResult {
  AssignmentMatrix assignment;
  RapDiagnostics diagnostics;
  double net_similarity = 0;
};

RapResult run(const SimilarityMatrix& matrix, const RapStructure& structure, const RapConfig& config = {});

}  // namespace folk
