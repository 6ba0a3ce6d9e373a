#pragma once

#include <string>
#include <vector>

#include "folk/annotation.hpp"
#include "folk/rap.hpp"
#include "folk/similarity.hpp"

namespace folk {

struct FolkMember {
  std::string user;
  std::string sapling;
  int node = 0;  // id within the input sapling
};

struct FolkNode {
  std::string label;
  std::vector<FolkMember> members;
  int parent = -1;
  std::vector<int> children;
  bool expert = false;  // exemplar node owned by an expert
};

struct FolkTree {
  int root = -1;
  std::size_t sapling_count = 0;  // distinct contributing saplings
  bool popular = false;
};

/// Merged forest. Trees are ordered by sapling count (descending), then by
/// the root's label; trees[0] is the most popular one.
struct Folksonomy {
  std::vector<FolkNode> nodes;
  std::vector<FolkTree> trees;

  const FolkTree& popular() const;
  /// Levels of the tree rooted at `root` (a lone root has depth 1).
  int depth(int root) const;
  std::vector<int> subtree(int root) const;  // preorder

  std::string to_json() const;
  std::string to_text() const;
  static Folksonomy from_json(const std::string& text);
};

/// One folksonomy node per exemplar; parents follow the members' parents.
/// Children are ordered by label then exemplar position.
Folksonomy assemble_folksonomy(const Corpus& corpus, const NodeSample& sample, const AssignmentMatrix& assignment);

/// Indented rendering of one subtree, two spaces per level.
std::string render_subtree(const Folksonomy& f, int root);

}  // namespace folk
